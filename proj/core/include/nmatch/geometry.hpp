#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace nmatch {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

// Row-major 3x3 matrix; used for homographies, essential matrices and
// intrinsics.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity() {
    Mat3 r;
    r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return r;
  }

  double& operator()(int r, int c) { return m[r * 3 + c]; }
  double operator()(int r, int c) const { return m[r * 3 + c]; }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  Mat3 inverse() const {
    double d = det();
    if (std::abs(d) < 1e-15)
      throw std::domain_error("Mat3: singular matrix, cannot invert");
    Mat3 r;
    r.m = {(m[4] * m[8] - m[5] * m[7]), -(m[1] * m[8] - m[2] * m[7]),
           (m[1] * m[5] - m[2] * m[4]), -(m[3] * m[8] - m[5] * m[6]),
           (m[0] * m[8] - m[2] * m[6]), -(m[0] * m[5] - m[2] * m[3]),
           (m[3] * m[7] - m[4] * m[6]), -(m[0] * m[7] - m[1] * m[6]),
           (m[0] * m[4] - m[1] * m[3])};
    for (auto& v : r.m) v /= d;
    return r;
  }

  double frobenius() const {
    double s = 0.0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
  }

  // projective application to a 2-D point
  Vec2 apply(const Vec2& p) const {
    double w = m[6] * p.x + m[7] * p.y + m[8];
    if (std::abs(w) < 1e-15)
      throw std::domain_error("Mat3: point maps to infinity");
    return {(m[0] * p.x + m[1] * p.y + m[2]) / w,
            (m[3] * p.x + m[4] * p.y + m[5]) / w};
  }
};

}  // namespace nmatch
