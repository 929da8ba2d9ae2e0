#include "roiquant/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "roiquant/colorspace.hpp"

namespace roiquant {
namespace {

RealPlane to_real(const BytePlane& p) { return p.cast<double>(); }

void check_same_shape(const RealPlane& a, const RealPlane& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw UsageError("metric inputs differ in size");
  if (a.size() == 0) throw UsageError("metric inputs are empty");
}

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(window));
  const double c = (window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - c;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Symmetric reflection without edge repeat: -1 -> 0, n -> n-1.
inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - i - 1;
  return i;
}

// Separable Gaussian filter, symmetric-reflection boundary.
RealPlane gaussian_filter(const RealPlane& src, const std::vector<double>& kernel) {
  const Eigen::Index rows = src.rows(), cols = src.cols();
  const Eigen::Index half = static_cast<Eigen::Index>(kernel.size()) / 2;
  RealPlane tmp(rows, cols), out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < kernel.size(); ++t) {
        const Eigen::Index cc = reflect(c + static_cast<Eigen::Index>(t) - half, cols);
        acc += kernel[t] * src(r, cc);
      }
      tmp(r, c) = acc;
    }
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t t = 0; t < kernel.size(); ++t) {
        const Eigen::Index rr = reflect(r + static_cast<Eigen::Index>(t) - half, rows);
        acc += kernel[t] * tmp(rr, c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

struct SsimMaps {
  RealPlane luminance;          // l(x, y)
  RealPlane contrast_structure; // cs(x, y)
};

SsimMaps ssim_components(const RealPlane& a, const RealPlane& b, const SsimParams& p) {
  check_same_shape(a, b);
  if (a.rows() < p.window || a.cols() < p.window)
    throw UsageError("plane smaller than the filter window");
  const auto kernel = gaussian_kernel(p.window, p.sigma);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  RealPlane mu_a = gaussian_filter(a, kernel);
  RealPlane mu_b = gaussian_filter(b, kernel);
  RealPlane var_a = gaussian_filter(a * a, kernel) - mu_a * mu_a;
  RealPlane var_b = gaussian_filter(b * b, kernel) - mu_b * mu_b;
  RealPlane cov = gaussian_filter(a * b, kernel) - mu_a * mu_b;

  SsimMaps maps;
  maps.luminance =
      (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
  maps.contrast_structure = (2.0 * cov + c2) / (var_a + var_b + c2);
  return maps;
}

double weighted_channel_mean(const Frame& a, const Frame& b,
                             double (*metric)(const RealPlane&, const RealPlane&)) {
  double y = metric(to_real(a.planes[0]), to_real(b.planes[0]));
  if (a.planes.size() < 3) return y;
  double u = metric(to_real(a.planes[1]), to_real(b.planes[1]));
  double v = metric(to_real(a.planes[2]), to_real(b.planes[2]));
  return (6.0 * y + u + v) / 8.0;
}

Frame ensure_yuv(const Frame& f) {
  return f.colorspace == Colorspace::Rgb ? rgb_to_yuv(f) : f;
}

}  // namespace

double psnr(const RealPlane& a, const RealPlane& b) {
  check_same_shape(a, b);
  const double mse = (a - b).square().sum() / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const BytePlane& a, const BytePlane& b) {
  return psnr(to_real(a), to_real(b));
}

RealPlane ssim_map(const RealPlane& a, const RealPlane& b, const SsimParams& p) {
  SsimMaps maps = ssim_components(a, b, p);
  return maps.luminance * maps.contrast_structure;
}

RealPlane mean_pool_2x2(const RealPlane& plane) {
  const Eigen::Index rows = plane.rows(), cols = plane.cols();
  const Eigen::Index out_rows = (rows + 1) / 2, out_cols = (cols + 1) / 2;
  RealPlane out(out_rows, out_cols);
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    for (Eigen::Index c = 0; c < out_cols; ++c) {
      const Eigen::Index r1 = std::min(2 * r + 1, rows - 1);
      const Eigen::Index c1 = std::min(2 * c + 1, cols - 1);
      double acc = 0.0;
      int count = 0;
      for (Eigen::Index rr = 2 * r; rr <= r1; ++rr)
        for (Eigen::Index cc = 2 * c; cc <= c1; ++cc) {
          acc += plane(rr, cc);
          ++count;
        }
      out(r, c) = acc / count;
    }
  }
  return out;
}

MsSsimResult ms_ssim(const RealPlane& a, const RealPlane& b, const SsimParams& p) {
  check_same_shape(a, b);
  // Each scale halves the plane; every scale needs at least window pixels per
  // dimension.
  int feasible = 0;
  Eigen::Index dim = std::min(a.rows(), a.cols());
  while (feasible < p.scales && dim >= p.window) {
    ++feasible;
    dim = (dim + 1) / 2;
  }
  if (feasible == 0) throw UsageError("plane smaller than the filter window");

  double weight_sum = 0.0;
  for (int s = 0; s < feasible; ++s) weight_sum += p.scale_weights[static_cast<std::size_t>(s)];

  RealPlane cur_a = a, cur_b = b;
  double value = 1.0;
  for (int s = 0; s < feasible; ++s) {
    SsimMaps maps = ssim_components(cur_a, cur_b, p);
    const double w = p.scale_weights[static_cast<std::size_t>(s)] / weight_sum;
    double cs = maps.contrast_structure.mean();
    if (s == feasible - 1) cs *= maps.luminance.mean();
    // Negative local means are possible in principle; clamp to keep the
    // weighted product defined.
    cs = std::max(cs, 0.0);
    value *= std::pow(cs, w);
    if (s + 1 < feasible) {
      cur_a = mean_pool_2x2(cur_a);
      cur_b = mean_pool_2x2(cur_b);
    }
  }
  return {value, feasible};
}

std::vector<double> column_profile(const Frame& a, const Frame& b, const SsimParams& p) {
  Frame ya = ensure_yuv(a), yb = ensure_yuv(b);
  RealPlane map = ssim_map(to_real(ya.planes[0]), to_real(yb.planes[0]), p);
  std::vector<double> profile(static_cast<std::size_t>(map.cols()));
  for (Eigen::Index c = 0; c < map.cols(); ++c)
    profile[static_cast<std::size_t>(c)] = map.col(c).mean();
  return profile;
}

RoiMetrics roi_metrics(const Frame& a, const Frame& b, const std::vector<BoundingBox>& boxes,
                       const SsimParams& p) {
  if (boxes.empty()) throw UsageError("no boxes for region metrics");
  int x0 = std::numeric_limits<int>::max(), y0 = std::numeric_limits<int>::max();
  int x1 = std::numeric_limits<int>::min(), y1 = std::numeric_limits<int>::min();
  for (const BoundingBox& box : boxes) {
    x0 = std::min(x0, box.x);
    y0 = std::min(y0, box.y);
    x1 = std::max(x1, box.x + box.w);
    y1 = std::max(y1, box.y + box.h);
  }
  x0 = std::clamp(x0, 0, a.width);
  y0 = std::clamp(y0, 0, a.height);
  x1 = std::clamp(x1, 0, a.width);
  y1 = std::clamp(y1, 0, a.height);
  if (x1 <= x0 || y1 <= y0) throw UsageError("region rectangle is empty");

  Frame ya = ensure_yuv(a), yb = ensure_yuv(b);
  RealPlane ra = to_real(ya.planes[0]).block(y0, x0, y1 - y0, x1 - x0);
  RealPlane rb = to_real(yb.planes[0]).block(y0, x0, y1 - y0, x1 - x0);

  RoiMetrics m;
  m.psnr = psnr(ra, rb);
  MsSsimResult ms = ms_ssim(ra, rb, p);
  m.ms_ssim = ms.value;
  m.scales_used = ms.scales_used;
  return m;
}

double bpp(std::uintmax_t stream_bytes, long width, long height, long frames) {
  if (width <= 0 || height <= 0 || frames <= 0)
    throw UsageError("bits-per-pixel needs positive dimensions and frame count");
  return 8.0 * static_cast<double>(stream_bytes) /
         (static_cast<double>(width) * static_cast<double>(height) *
          static_cast<double>(frames));
}

double frame_psnr(const Frame& a, const Frame& b, bool yuv_weighted) {
  if (!a.same_geometry(b)) throw UsageError("frames differ in geometry");
  Frame ya = ensure_yuv(a), yb = ensure_yuv(b);
  if (!yuv_weighted) return psnr(ya.planes[0], yb.planes[0]);
  return weighted_channel_mean(ya, yb, [](const RealPlane& x, const RealPlane& y) {
    return psnr(x, y);
  });
}

MsSsimResult frame_ms_ssim(const Frame& a, const Frame& b, const SsimParams& p,
                           bool yuv_weighted) {
  if (!a.same_geometry(b)) throw UsageError("frames differ in geometry");
  Frame ya = ensure_yuv(a), yb = ensure_yuv(b);
  MsSsimResult y = ms_ssim(to_real(ya.planes[0]), to_real(yb.planes[0]), p);
  if (!yuv_weighted || ya.planes.size() < 3) return y;
  MsSsimResult u = ms_ssim(to_real(ya.planes[1]), to_real(yb.planes[1]), p);
  MsSsimResult v = ms_ssim(to_real(ya.planes[2]), to_real(yb.planes[2]), p);
  return {(6.0 * y.value + u.value + v.value) / 8.0,
          std::min(y.scales_used, std::min(u.scales_used, v.scales_used))};
}

}  // namespace roiquant
