#include "roiquant/dct.hpp"

#include <cmath>

namespace roiquant {

const Block8& dct_matrix() {
  static const Block8 c = [] {
    Block8 m;
    constexpr double pi = 3.14159265358979323846;
    for (int k = 0; k < 8; ++k)
      for (int j = 0; j < 8; ++j)
        m(k, j) = k == 0 ? 1.0 / (2.0 * std::sqrt(2.0))
                         : 0.5 * std::cos((2 * j + 1) * k * pi / 16.0);
    return m;
  }();
  return c;
}

Block8 forward_dct(const Block8& spatial) {
  const Block8& c = dct_matrix();
  return c * spatial * c.transpose();
}

Block8 inverse_dct(const Block8& freq) {
  const Block8& c = dct_matrix();
  return c.transpose() * freq * c;
}

BlockGrid split_blocks(const RealPlane& plane, PadMode pad) {
  if (plane.rows() == 0 || plane.cols() == 0)
    throw UsageError("cannot split an empty plane");

  BlockGrid grid;
  grid.orig_width = static_cast<int>(plane.cols());
  grid.orig_height = static_cast<int>(plane.rows());
  grid.blocks_x = (grid.orig_width + 7) / 8;
  grid.blocks_y = (grid.orig_height + 7) / 8;

  const int pw = 8 * grid.blocks_x;
  const int ph = 8 * grid.blocks_y;
  grid.padded = RealPlane::Zero(ph, pw);
  grid.padded.topLeftCorner(plane.rows(), plane.cols()) = plane;

  if (pad == PadMode::ReplicateEdge) {
    for (int x = grid.orig_width; x < pw; ++x)
      grid.padded.col(x).head(grid.orig_height) = plane.col(grid.orig_width - 1);
    for (int y = grid.orig_height; y < ph; ++y)
      grid.padded.row(y) = grid.padded.row(grid.orig_height - 1);
  }
  return grid;
}

RealPlane merge_blocks(const BlockGrid& grid) {
  return grid.padded.topLeftCorner(grid.orig_height, grid.orig_width);
}

}  // namespace roiquant
