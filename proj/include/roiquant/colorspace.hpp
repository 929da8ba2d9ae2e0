#pragma once

#include "roiquant/types.hpp"

namespace roiquant {

/// Full-range BT.601 conversion, rounded to nearest (ties away from zero) and
/// clipped to [0, 255]. When integer_compat is set, uses the fixed-point
/// studio-swing form Y=((66R+129G+25B+128)>>8)+16 etc. instead; that path is
/// not invertible and exists for comparison runs only.
Frame rgb_to_yuv(const Frame& frame, bool integer_compat = false);

/// Inverse of the full-range conversion: R=Y+1.402(V-128), rounded, clipped.
Frame yuv_to_rgb(const Frame& frame);

/// Subtracts the DC constant from every sample; no clipping. 8-bit input with
/// the default shift lands in [-127, 128].
RealPlane dc_shift(const BytePlane& plane, int shift = 127);

/// Round to nearest (ties away from zero), add the DC constant back, clamp to
/// [0, 255].
BytePlane dc_unshift_clip(const RealPlane& plane, int shift = 127);

}  // namespace roiquant
