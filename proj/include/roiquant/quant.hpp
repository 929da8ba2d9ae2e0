#pragma once

#include <array>
#include <string>

#include "roiquant/types.hpp"

namespace roiquant {

/// The standard JPEG luminance divisor table (entry (0,0) = 16).
const QuantTable& jpeg_luma_base();

/// The standard JPEG chrominance divisor table (entry (0,0) = 17, high
/// frequencies pinned at 99).
const QuantTable& jpeg_chroma_base();

/// JPEG-style quality scaling: s = quality < 50 ? 5000/quality : 200-2*quality,
/// out = clamp(floor((base*s + 50)/100), 1, 255). quality in [1, 100].
QuantTable scale_matrix(const QuantTable& base, int quality);

/// The eight divisor tables: luma[k] is gentler as k grows, chroma[k] is
/// generated at a strictly lower quality than luma[k].
struct MatrixBank {
  std::array<QuantTable, 4> luma;
  std::array<QuantTable, 4> chroma;

  static MatrixBank standard();
  /// Line-oriented bank file, '#' comments. Each of L0..L3 C0..C3 is either
  ///   <name> quality <luma|chroma> <1..100>
  /// or
  ///   <name> table
  /// followed by 8 lines of 8 integers. See docs/bank-format.md.
  static MatrixBank from_file(const std::string& path);
};

/// Level from the background share of the frame: m = round(3 (S - A) / S),
/// ties away from zero. S = frame area, A = non-overlapping object area.
/// 0 is the most aggressive table, 3 the gentlest; chroma uses the same level.
int select_level(long frame_area, long object_area);

/// Entrywise divide and round, ties away from zero.
CoeffBlock quantize(const Block8& freq, const QuantTable& q);

/// Entrywise multiply back.
Block8 dequantize(const CoeffBlock& coeffs, const QuantTable& q);

/// Share of zero entries, in [0, 1].
double zero_fraction(const CoeffBlock& coeffs);

}  // namespace roiquant
