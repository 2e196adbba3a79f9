#pragma once

#include <string>
#include <vector>

namespace nmatch {

// Single-channel raster with values in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, height*width

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0.0) {}

  double& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Binary 8-bit PGM (P5), values mapped linearly between [0,255] and [0,1].
Image load_pgm(const std::string& path);
void save_pgm(const std::string& path, const Image& img);

}  // namespace nmatch
