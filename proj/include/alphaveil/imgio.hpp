#pragma once

#include "alphaveil/types.hpp"

#include <filesystem>
#include <utility>

namespace alphaveil {

// Decoded file contents, normalized so that stored sample s maps to s / 255.
struct DecodedImage {
  RgbRaster rgb;
  std::optional<Grid> alpha;

  bool has_alpha() const { return alpha.has_value(); }
};

// Decode a PNG or JPEG file (sniffed by signature) into normalized rasters.
DecodedImage decode_image(const std::filesystem::path& path);

// BT.601 luma (0.299, 0.587, 0.114). Channel passthrough when r == g == b so
// grayscale-origin rasters survive bit-exactly.
Grid luminance(const RgbRaster& rgb);

RgbRaster gray_to_rgb(const Grid& g);

// Half-pixel-center bilinear resampling, clamped to [0,1]. Identity when the
// requested size matches the source.
Grid resize_bilinear(const Grid& src, Eigen::Index width, Eigen::Index height);

Grid load_grayscale(const std::filesystem::path& path, Eigen::Index width,
                    Eigen::Index height);

// Writes an 8-bit RGBA PNG (color type 6, no interlacing). Stored sample is
// round(v * 255).
void encode_attack_png(const RgbRaster& rgb, const Grid& alpha,
                       const std::filesystem::path& path);

// Inverse of encode_attack_png. Throws format_error when the file carries no
// alpha channel (a flattened / non-attack image).
std::pair<RgbRaster, Grid> decode_attack_png(const std::filesystem::path& path);

// 8-bit grayscale PNG (color type 0), same quantization map as the RGBA path.
void write_gray_png(const Grid& g, const std::filesystem::path& path);

}  // namespace alphaveil
