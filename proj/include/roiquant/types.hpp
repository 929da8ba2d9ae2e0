#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace roiquant {

// Row-major so plane(y, x) walks memory the same way the file formats do.
template <typename Scalar>
using PlaneGrid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using BytePlane = PlaneGrid<std::uint8_t>;
using RealPlane = PlaneGrid<double>;

// 8x8 blocks, spatial or frequency domain. Matrix (not Array) because the
// transform is two matrix products.
using Block8 = Eigen::Matrix<double, 8, 8>;

// Entrywise divisor table; valid entries are in [1, 255].
using QuantTable = Eigen::Matrix<int, 8, 8>;

// Integer coefficients after quantization.
using CoeffBlock = Eigen::Matrix<int, 8, 8>;

enum class Colorspace { Rgb, Yuv };
enum class Subsampling { S444, S420 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Module-wide rounding rule: nearest integer, ties away from zero.
inline long round_away(double v) { return std::lround(v); }

inline std::uint8_t clamp_u8(long v) {
  return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

inline int chroma_extent(int luma_extent) { return (luma_extent + 1) / 2; }

/// Planar image: 1 plane (grayscale / single channel) or 3 planes.
/// width/height are luma dimensions; S420 chroma planes are ceil(w/2) x ceil(h/2).
struct Frame {
  std::vector<BytePlane> planes;
  Colorspace colorspace = Colorspace::Rgb;
  Subsampling subsampling = Subsampling::S444;
  int width = 0;
  int height = 0;

  int plane_width(std::size_t i) const {
    return (i > 0 && subsampling == Subsampling::S420) ? chroma_extent(width) : width;
  }
  int plane_height(std::size_t i) const {
    return (i > 0 && subsampling == Subsampling::S420) ? chroma_extent(height) : height;
  }

  bool same_geometry(const Frame& other) const {
    return planes.size() == other.planes.size() && width == other.width &&
           height == other.height && subsampling == other.subsampling;
  }

  bool sample_equal(const Frame& other) const {
    if (!same_geometry(other)) return false;
    for (std::size_t i = 0; i < planes.size(); ++i)
      if (!(planes[i] == other.planes[i]).all()) return false;
    return true;
  }
};

inline Frame make_frame(int width, int height, Colorspace cs, Subsampling sub) {
  if (width <= 0 || height <= 0)
    throw UsageError("frame dimensions must be positive");
  if (cs == Colorspace::Rgb && sub != Subsampling::S444)
    throw UsageError("RGB frames must be 4:4:4");
  Frame f;
  f.colorspace = cs;
  f.subsampling = sub;
  f.width = width;
  f.height = height;
  int nplanes = 3;
  f.planes.reserve(nplanes);
  for (int i = 0; i < nplanes; ++i)
    f.planes.push_back(BytePlane::Zero(f.plane_height(i), f.plane_width(i)));
  return f;
}

inline Frame make_gray_frame(int width, int height) {
  if (width <= 0 || height <= 0)
    throw UsageError("frame dimensions must be positive");
  Frame f;
  f.colorspace = Colorspace::Yuv;  // single plane treated as luma
  f.subsampling = Subsampling::S444;
  f.width = width;
  f.height = height;
  f.planes.push_back(BytePlane::Zero(height, width));
  return f;
}

}  // namespace roiquant
