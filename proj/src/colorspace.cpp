#include "roiquant/colorspace.hpp"

namespace roiquant {

Frame rgb_to_yuv(const Frame& frame, bool integer_compat) {
  if (frame.colorspace != Colorspace::Rgb || frame.planes.size() != 3)
    throw UsageError("rgb_to_yuv requires an RGB frame");

  Frame out = make_frame(frame.width, frame.height, Colorspace::Yuv, Subsampling::S444);
  const auto& rp = frame.planes[0];
  const auto& gp = frame.planes[1];
  const auto& bp = frame.planes[2];
  const Eigen::Index n = rp.size();

  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = rp.data()[i], g = gp.data()[i], b = bp.data()[i];
    long y, u, v;
    if (integer_compat) {
      y = ((66 * r + 129 * g + 25 * b + 128) >> 8) + 16;
      u = ((-38 * r - 74 * g + 112 * b + 128) >> 8) + 128;
      v = ((112 * r - 94 * g - 18 * b + 128) >> 8) + 128;
    } else {
      y = round_away(0.299 * r + 0.587 * g + 0.114 * b);
      u = round_away(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0);
      v = round_away(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0);
    }
    out.planes[0].data()[i] = clamp_u8(y);
    out.planes[1].data()[i] = clamp_u8(u);
    out.planes[2].data()[i] = clamp_u8(v);
  }
  return out;
}

Frame yuv_to_rgb(const Frame& frame) {
  if (frame.colorspace != Colorspace::Yuv || frame.planes.size() != 3)
    throw UsageError("yuv_to_rgb requires a YUV frame");
  if (frame.subsampling != Subsampling::S444)
    throw UsageError("yuv_to_rgb requires 4:4:4 planes");

  Frame out = make_frame(frame.width, frame.height, Colorspace::Rgb, Subsampling::S444);
  const auto& yp = frame.planes[0];
  const auto& up = frame.planes[1];
  const auto& vp = frame.planes[2];
  const Eigen::Index n = yp.size();

  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = yp.data()[i];
    const double u = up.data()[i] - 128.0;
    const double v = vp.data()[i] - 128.0;
    out.planes[0].data()[i] = clamp_u8(round_away(y + 1.402 * v));
    out.planes[1].data()[i] = clamp_u8(round_away(y - 0.344136 * u - 0.714136 * v));
    out.planes[2].data()[i] = clamp_u8(round_away(y + 1.772 * u));
  }
  return out;
}

RealPlane dc_shift(const BytePlane& plane, int shift) {
  return plane.cast<double>() - static_cast<double>(shift);
}

BytePlane dc_unshift_clip(const RealPlane& plane, int shift) {
  BytePlane out(plane.rows(), plane.cols());
  const Eigen::Index n = plane.size();
  for (Eigen::Index i = 0; i < n; ++i)
    out.data()[i] = clamp_u8(round_away(plane.data()[i]) + shift);
  return out;
}

}  // namespace roiquant
