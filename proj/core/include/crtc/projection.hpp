#pragma once

#include <crtc/matrix.hpp>

namespace crtc {

struct Projection {
  Matrix coords;        // N x 2
  RowVector mean;       // 1 x D
  Matrix components;    // 2 x D, orthonormal rows, largest |entry| positive
  Eigen::Vector2d variance;  // explained variance, descending
};

// Principal component projection onto two axes. Inputs narrower than two
// columns get zero-padded components.
Projection pca2(const Matrix& x);

}  // namespace crtc
