#pragma once

#include "roiquant/types.hpp"

namespace roiquant {

enum class PadMode { ReplicateEdge, ZeroFill };

/// The orthonormal 8x8 DCT-II matrix: row 0 is 1/(2*sqrt(2)), row k entry j is
/// cos((2j+1) k pi / 16) / 2. C * C^T = I.
const Block8& dct_matrix();

/// 2-D DCT of a spatial block: C * f * C^T. DC lands at (0,0) and equals
/// 8 times the block mean.
Block8 forward_dct(const Block8& spatial);

/// Inverse transform: C^T * F * C.
Block8 inverse_dct(const Block8& freq);

/// A plane chopped into 8x8 tiles. The padded backing plane keeps whole
/// blocks; the original dimensions are kept so merging can crop the padding
/// back off.
struct BlockGrid {
  RealPlane padded;  // (8 * blocks_y) x (8 * blocks_x)
  int blocks_x = 0;
  int blocks_y = 0;
  int orig_width = 0;
  int orig_height = 0;

  auto block(int by, int bx) { return padded.block<8, 8>(8 * by, 8 * bx); }
  auto block(int by, int bx) const { return padded.block<8, 8>(8 * by, 8 * bx); }
};

BlockGrid split_blocks(const RealPlane& plane, PadMode pad);
RealPlane merge_blocks(const BlockGrid& grid);

}  // namespace roiquant
