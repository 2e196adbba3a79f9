#include "nmatch/image.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace nmatch {

namespace {

int next_token(std::istream& is) {
  // skips whitespace and '#' comments per the PGM grammar
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {}
    } else if (!std::isspace(c)) {
      is.unget();
      int v;
      if (!(is >> v)) throw std::runtime_error("PGM: malformed header");
      return v;
    }
  }
  throw std::runtime_error("PGM: unexpected end of header");
}

}  // namespace

Image load_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (m0 != 'P' || m1 != '5')
    throw std::runtime_error("unsupported image format (want binary PGM): " +
                             path);
  int w = next_token(is);
  int h = next_token(is);
  int maxval = next_token(is);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("PGM: unsupported geometry or maxval in " + path);
  is.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  is.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (!is) throw std::runtime_error("PGM: truncated pixel data in " + path);
  Image img(w, h);
  for (size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void save_pgm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    double v = std::min(1.0, std::max(0.0, img.pixels[i]));
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace nmatch
