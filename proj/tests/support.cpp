#include "support.hpp"

#include <jpeglib.h>
#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unistd.h>

namespace testsupport {

namespace fs = std::filesystem;

std::filesystem::path make_temp_dir(const std::string& hint) {
  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("alphaveil_test_" + hint + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

namespace {

unsigned char to_byte(Scalar v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(v * 255.0));
}

}  // namespace

void write_rgb_png(const fs::path& path, const Grid& r, const Grid& g, const Grid& b) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw std::runtime_error("fixture: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  const Eigen::Index h = r.rows(), w = r.cols();
  std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw std::runtime_error("fixture: png write failed");
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      row[3 * x + 0] = to_byte(r(y, x));
      row[3 * x + 1] = to_byte(g(y, x));
      row[3 * x + 2] = to_byte(b(y, x));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void write_gray_jpeg(const fs::path& path, const Grid& g, int quality) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw std::runtime_error("fixture: cannot open " + path.string());
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = static_cast<JDIMENSION>(g.cols());
  cinfo.image_height = static_cast<JDIMENSION>(g.rows());
  cinfo.input_components = 1;
  cinfo.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<unsigned char> row(g.cols());
  while (cinfo.next_scanline < cinfo.image_height) {
    for (Eigen::Index x = 0; x < g.cols(); ++x) {
      row[x] = to_byte(g(static_cast<Eigen::Index>(cinfo.next_scanline), x));
    }
    unsigned char* rp = row.data();
    jpeg_write_scanlines(&cinfo, &rp, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(f);
}

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const std::vector<unsigned char>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png_1x1_rgba(const fs::path& path, unsigned char r, unsigned char g,
                        unsigned char b, unsigned char a) {
  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

  std::vector<unsigned char> ihdr;
  put_u32(ihdr, 1);  // width
  put_u32(ihdr, 1);  // height
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(6);  // color type RGBA
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  put_chunk(out, "IHDR", ihdr);

  const unsigned char scanline[5] = {0, r, g, b, a};  // filter byte + samples
  uLongf comp_len = compressBound(sizeof(scanline));
  std::vector<unsigned char> idat(comp_len);
  if (compress2(idat.data(), &comp_len, scanline, sizeof(scanline), 9) != Z_OK) {
    throw std::runtime_error("fixture: zlib compress failed");
  }
  idat.resize(comp_len);
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("fixture: cannot write " + path.string());
}

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<unsigned char> png_raw_scanlines(const fs::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) != 0) {
    throw std::runtime_error("not a PNG: " + path.string());
  }

  std::uint32_t width = 0, height = 0;
  int channels = 0;
  std::vector<unsigned char> compressed;
  size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = (bytes[pos] << 24) | (bytes[pos + 1] << 16) |
                              (bytes[pos + 2] << 8) | bytes[pos + 3];
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const size_t data_at = pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      width = (bytes[data_at] << 24) | (bytes[data_at + 1] << 16) |
              (bytes[data_at + 2] << 8) | bytes[data_at + 3];
      height = (bytes[data_at + 4] << 24) | (bytes[data_at + 5] << 16) |
               (bytes[data_at + 6] << 8) | bytes[data_at + 7];
      const int color_type = bytes[data_at + 9];
      channels = color_type == 6 ? 4 : color_type == 2 ? 3 : color_type == 4 ? 2 : 1;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      compressed.insert(compressed.end(), bytes.begin() + data_at,
                        bytes.begin() + data_at + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos = data_at + len + 4;  // skip data + crc
  }

  uLongf raw_len = static_cast<uLongf>(height) * (1 + static_cast<uLongf>(width) * channels);
  std::vector<unsigned char> raw(raw_len);
  if (uncompress(raw.data(), &raw_len, compressed.data(),
                 static_cast<uLong>(compressed.size())) != Z_OK) {
    throw std::runtime_error("zlib inflate failed for " + path.string());
  }
  raw.resize(raw_len);
  return raw;
}

Grid random_grid(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<Scalar> dist(0.0, 1.0);
  Grid g(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      g(y, x) = dist(rng);
    }
  }
  return g;
}

Grid feasible_target(const Grid& bg_scaled, std::mt19937_64& rng) {
  std::uniform_real_distribution<Scalar> dist(0.0, 1.0);
  Grid t(bg_scaled.rows(), bg_scaled.cols());
  for (Eigen::Index y = 0; y < t.rows(); ++y) {
    for (Eigen::Index x = 0; x < t.cols(); ++x) {
      t(y, x) = bg_scaled(y, x) + dist(rng) * (1.0 - bg_scaled(y, x));
    }
  }
  return t;
}

Scalar grid_search_alpha(Scalar target, Scalar bg_scaled, Scalar step) {
  Scalar best_alpha = 0, best_err = std::numeric_limits<Scalar>::infinity();
  for (Scalar a = 0.0; a <= 1.0 + step / 2; a += step) {
    const Scalar alpha = std::min(a, 1.0);
    const Scalar blended = alpha * bg_scaled + (1.0 - alpha);
    const Scalar err = (blended - target) * (blended - target);
    if (err < best_err) {
      best_err = err;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

Grid fd_gradient(const Grid& alpha, const Grid& bg_scaled, const Grid& target, Scalar h) {
  const Eigen::Index rows = alpha.rows(), cols = alpha.cols();
  const auto loss_at = [&](const Grid& a) {
    Scalar sum = 0;
    for (Eigen::Index y = 0; y < rows; ++y) {
      for (Eigen::Index x = 0; x < cols; ++x) {
        const Scalar blended = a(y, x) * bg_scaled(y, x) + (1.0 - a(y, x));
        const Scalar d = blended - target(y, x);
        sum += d * d;
      }
    }
    return sum / static_cast<Scalar>(rows * cols);
  };

  Grid grad(rows, cols);
  Grid probe = alpha;
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      const Scalar orig = probe(y, x);
      probe(y, x) = orig + h;
      const Scalar up = loss_at(probe);
      probe(y, x) = orig - h;
      const Scalar down = loss_at(probe);
      probe(y, x) = orig;
      grad(y, x) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace testsupport
