#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace alphaveil {

using Scalar = double;

// Row-major to match raster scanline order.
template <typename T>
using GridT = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-channel raster with values in [0,1]; used for luminance rasters and
// alpha layers alike.
using Grid = GridT<Scalar>;

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Three co-dimensioned channels. Grayscale-origin rasters keep r == g == b.
struct RgbRaster {
  Grid r, g, b;

  Eigen::Index rows() const { return r.rows(); }
  Eigen::Index cols() const { return r.cols(); }
};

struct Provenance {
  std::string target_path;
  std::string background_path;
  std::string config_digest;
};

// Packaged RGBA composite: rgb carries the scaled hidden background, alpha the
// optimized transparency layer.
struct AttackImage {
  RgbRaster rgb;
  Grid alpha;
  std::optional<Provenance> provenance;

  Eigen::Index rows() const { return alpha.rows(); }
  Eigen::Index cols() const { return alpha.cols(); }
};

// 8-bit storage map: round(v * 255) / 255, half away from zero.
inline Scalar quantize8(Scalar v) { return std::round(v * 255.0) / 255.0; }

inline Grid quantize8(const Grid& g) { return (g * 255.0).round() / 255.0; }

namespace detail {

inline void require_same_dims(const Grid& a, const Grid& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace detail

}  // namespace alphaveil
