#pragma once

#include "alphaveil/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

// Test-only helpers: fixture writers, deterministic generators, and oracles
// that stay independent of the library code paths they are used to check.
namespace testsupport {

using alphaveil::Grid;
using alphaveil::Scalar;

std::filesystem::path make_temp_dir(const std::string& hint);

// Fixture writers (libpng/libjpeg directly, bypassing alphaveil::imgio).
void write_rgb_png(const std::filesystem::path& path, const Grid& r, const Grid& g,
                   const Grid& b);
void write_gray_jpeg(const std::filesystem::path& path, const Grid& g, int quality = 95);

// Hand-assembled 1x1 RGBA PNG with the given stored samples.
void write_png_1x1_rgba(const std::filesystem::path& path, unsigned char r,
                        unsigned char g, unsigned char b, unsigned char a);

// Concatenated, zlib-inflated IDAT payload: one filter byte then raw samples
// per scanline. Parses the container independently of the library decoder.
std::vector<unsigned char> png_raw_scanlines(const std::filesystem::path& path);

std::vector<unsigned char> read_file(const std::filesystem::path& path);

Grid random_grid(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

// Target with T >= bg_scaled everywhere, so a residual-free alpha exists.
Grid feasible_target(const Grid& bg_scaled, std::mt19937_64& rng);

// Brute-force 1-D search over alpha in [0,1] minimizing the per-pixel squared
// blend error, step 1e-4.
Scalar grid_search_alpha(Scalar target, Scalar bg_scaled, Scalar step = 1e-4);

// Central finite differences of the blend MSE, computed with plain loops.
Grid fd_gradient(const Grid& alpha, const Grid& bg_scaled, const Grid& target,
                 Scalar h = 1e-5);

}  // namespace testsupport
