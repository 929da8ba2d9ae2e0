#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "roiquant/detections.hpp"
#include "roiquant/types.hpp"

namespace roiquant {

/// Standard single/multi-scale SSIM parameters: 11x11 Gaussian window with
/// sigma 1.5, k1 = 0.01, k2 = 0.03 over an 8-bit dynamic range, and the usual
/// five-scale weights.
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
  int scales = 5;
  std::array<double, 5> scale_weights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
};

/// 10*log10(255^2 / MSE); +infinity when the planes are identical.
double psnr(const BytePlane& a, const BytePlane& b);
double psnr(const RealPlane& a, const RealPlane& b);

/// Per-pixel SSIM with Gaussian-weighted local statistics. Same-size map;
/// boundaries handled by symmetric reflection. Planes must be at least
/// window x window.
RealPlane ssim_map(const RealPlane& a, const RealPlane& b, const SsimParams& p = {});

/// 2x2 mean-pool downsampling; odd trailing rows/columns average what is
/// left.
RealPlane mean_pool_2x2(const RealPlane& plane);

struct MsSsimResult {
  double value = 0.0;
  int scales_used = 0;  // < p.scales means the fallback renormalized weights
};

/// Product of per-scale contrast-structure means (luminance at the coarsest
/// scale), weighted per the parameters. Inputs smaller than window * 2^(n-1)
/// fall back to fewer scales with renormalized weights.
MsSsimResult ms_ssim(const RealPlane& a, const RealPlane& b, const SsimParams& p = {});

/// Luma-plane SSIM map averaged down each pixel column; one value per column.
std::vector<double> column_profile(const Frame& a, const Frame& b, const SsimParams& p = {});

struct RoiMetrics {
  double psnr = 0.0;
  double ms_ssim = 0.0;
  int scales_used = 0;
};

/// Metrics over the tight bounding rectangle of the box union, luma plane.
RoiMetrics roi_metrics(const Frame& a, const Frame& b, const std::vector<BoundingBox>& boxes,
                       const SsimParams& p = {});

/// 8 * stream_bytes / (width * height * frames).
double bpp(std::uintmax_t stream_bytes, long width, long height, long frames);

/// Frame-level helpers: luma only by default, or 6:1:1 YUV weighting.
/// RGB frames are converted to YUV first.
double frame_psnr(const Frame& a, const Frame& b, bool yuv_weighted = false);
MsSsimResult frame_ms_ssim(const Frame& a, const Frame& b, const SsimParams& p = {},
                           bool yuv_weighted = false);

}  // namespace roiquant
