#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "roiquant/detections.hpp"
#include "roiquant/image_io.hpp"
#include "roiquant/metrics.hpp"
#include "roiquant/types.hpp"

namespace testsupport {

using namespace roiquant;

// Slow reference transform straight from the cosine-summation definition, for
// cross-checking the matrix form.
inline Block8 naive_dct(const Block8& f) {
  constexpr double pi = 3.14159265358979323846;
  auto a = [](int k) { return k == 0 ? 1.0 / (2.0 * std::sqrt(2.0)) : 0.5; };
  Block8 out;
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y)
          acc += f(x, y) * std::cos((2 * x + 1) * u * pi / 16.0) *
                 std::cos((2 * y + 1) * v * pi / 16.0);
      out(u, v) = a(u) * a(v) * acc;
    }
  }
  return out;
}

// Brute-force union area by painting boxes into a bitmask.
inline long raster_union_area(const std::vector<BoundingBox>& boxes, int width, int height) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
  for (const BoundingBox& b : boxes) {
    for (int y = std::max(b.y, 0); y < std::min(b.y + b.h, height); ++y)
      for (int x = std::max(b.x, 0); x < std::min(b.x + b.w, width); ++x)
        mask[static_cast<std::size_t>(y) * width + x] = 1;
  }
  long area = 0;
  for (std::uint8_t m : mask) area += m;
  return area;
}

// Direct (non-separable) windowed-statistics reference for the structural
// similarity pyramid. Same boundary rule: symmetric reflection.
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - i - 1;
  return i;
}

struct DirectSsimMeans {
  double luminance = 0.0;
  double contrast_structure = 0.0;
};

inline DirectSsimMeans direct_ssim_means(const RealPlane& a, const RealPlane& b,
                                         const SsimParams& p = {}) {
  const int w = p.window;
  std::vector<double> k(static_cast<std::size_t>(w));
  const double c = (w - 1) / 2.0;
  double ksum = 0.0;
  for (int i = 0; i < w; ++i) {
    k[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * p.sigma * p.sigma));
    ksum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= ksum;

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  const Eigen::Index rows = a.rows(), cols = a.cols();
  const int half = w / 2;

  double l_sum = 0.0, cs_sum = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index cidx = 0; cidx < cols; ++cidx) {
      double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
      for (int i = 0; i < w; ++i) {
        const Eigen::Index rr = reflect_index(r + i - half, rows);
        for (int j = 0; j < w; ++j) {
          const Eigen::Index cc = reflect_index(cidx + j - half, cols);
          const double wt = k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)];
          const double va = a(rr, cc), vb = b(rr, cc);
          ma += wt * va;
          mb += wt * vb;
          aa += wt * va * va;
          bb += wt * vb * vb;
          ab += wt * va * vb;
        }
      }
      const double var_a = aa - ma * ma, var_b = bb - mb * mb, cov = ab - ma * mb;
      l_sum += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      cs_sum += (2 * cov + c2) / (var_a + var_b + c2);
    }
  }
  const double n = static_cast<double>(rows * cols);
  return {l_sum / n, cs_sum / n};
}

inline RealPlane direct_pool_2x2(const RealPlane& p) {
  const Eigen::Index rows = p.rows(), cols = p.cols();
  RealPlane out((rows + 1) / 2, (cols + 1) / 2);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      double acc = 0.0;
      int count = 0;
      for (Eigen::Index rr = 2 * r; rr < std::min(2 * r + 2, rows); ++rr)
        for (Eigen::Index cc = 2 * c; cc < std::min(2 * c + 2, cols); ++cc) {
          acc += p(rr, cc);
          ++count;
        }
      out(r, c) = acc / count;
    }
  }
  return out;
}

inline double direct_ms_ssim(RealPlane a, RealPlane b, const SsimParams& p = {}) {
  int feasible = 0;
  Eigen::Index dim = std::min(a.rows(), a.cols());
  while (feasible < p.scales && dim >= p.window) {
    ++feasible;
    dim = (dim + 1) / 2;
  }
  double wsum = 0.0;
  for (int s = 0; s < feasible; ++s) wsum += p.scale_weights[static_cast<std::size_t>(s)];
  double value = 1.0;
  for (int s = 0; s < feasible; ++s) {
    DirectSsimMeans m = direct_ssim_means(a, b, p);
    double cs = m.contrast_structure;
    if (s == feasible - 1) cs *= m.luminance;
    cs = std::max(cs, 0.0);
    value *= std::pow(cs, p.scale_weights[static_cast<std::size_t>(s)] / wsum);
    if (s + 1 < feasible) {
      a = direct_pool_2x2(a);
      b = direct_pool_2x2(b);
    }
  }
  return value;
}

// Deterministic content generators.

inline BytePlane noise_plane(int width, int height, std::uint32_t seed) {
  std::mt19937 rng(seed);
  BytePlane p(height, width);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    p.data()[i] = static_cast<std::uint8_t>(rng() % 256);
  return p;
}

// Smooth gradients plus sinusoids plus mild noise: compressible content with
// structure, unlike pure noise.
inline BytePlane textured_plane(int width, int height, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.28318);
  const double px = phase(rng), py = phase(rng);
  const double fx = 0.02 + 0.07 * (rng() % 100) / 100.0;
  const double fy = 0.02 + 0.07 * (rng() % 100) / 100.0;
  BytePlane p(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double g = 96.0 + 64.0 * x / std::max(width - 1, 1) +
                       32.0 * y / std::max(height - 1, 1);
      const double s = 28.0 * std::sin(fx * x + px) * std::cos(fy * y + py);
      const double n = static_cast<double>(rng() % 9) - 4.0;
      const long v = std::lround(g + s + n);
      p(y, x) = clamp_u8(v);
    }
  }
  return p;
}

inline Frame noise_frame(int width, int height, Colorspace cs, Subsampling sub,
                         std::uint32_t seed) {
  Frame f = make_frame(width, height, cs, sub);
  for (std::size_t i = 0; i < f.planes.size(); ++i)
    f.planes[i] = noise_plane(f.plane_width(i), f.plane_height(i),
                              seed + static_cast<std::uint32_t>(i) * 977u);
  return f;
}

inline Frame textured_frame(int width, int height, Colorspace cs, Subsampling sub,
                            std::uint32_t seed) {
  Frame f = make_frame(width, height, cs, sub);
  for (std::size_t i = 0; i < f.planes.size(); ++i)
    f.planes[i] = textured_plane(f.plane_width(i), f.plane_height(i),
                                 seed + static_cast<std::uint32_t>(i) * 977u);
  return f;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / ("roiquant-test-" + std::to_string(rng()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline void write_raw_frames(const std::string& path, const std::vector<Frame>& frames,
                             PixelFormat format) {
  SequenceWriter writer(path, frames.at(0).width, frames.at(0).height, format);
  for (const Frame& f : frames) writer.write(f);
  writer.finish();
}

}  // namespace testsupport
