#include "alphaveil/imgio.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <csetjmp>
#include <memory>
#include <vector>

namespace alphaveil {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) {
    throw io_error("cannot open '" + path.string() + "'");
  }
  return f;
}

enum class FileKind { Png, Jpeg, Unknown };

FileKind sniff(std::FILE* f) {
  unsigned char magic[8] = {0};
  size_t n = std::fread(magic, 1, sizeof(magic), f);
  std::rewind(f);
  if (n >= 8 && png_sig_cmp(magic, 0, 8) == 0) return FileKind::Png;
  if (n >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) return FileKind::Jpeg;
  return FileKind::Unknown;
}

// Interleaved 8-bit samples, `channels` per pixel.
struct RawImage {
  Eigen::Index width = 0, height = 0;
  int channels = 0;  // 3 = RGB, 4 = RGBA
  std::vector<unsigned char> data;
};

void png_error_to_jmp(png_structp png, png_const_charp) {
  std::longjmp(png_jmpbuf(png), 1);
}

void png_swallow_warning(png_structp, png_const_charp) {}

RawImage read_png(std::FILE* f, const std::filesystem::path& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_to_jmp, png_swallow_warning);
  if (!png) throw std::bad_alloc();
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::bad_alloc();
  }

  RawImage out;
  std::vector<png_bytep> rows;
  // No C++ objects may be constructed past this point while libpng can longjmp.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error("undecodable PNG '" + path.string() + "'");
  }

  png_init_io(png, f);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  if (channels != 3 && channels != 4) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error("unsupported PNG layout in '" + path.string() + "'");
  }

  out.width = static_cast<Eigen::Index>(w);
  out.height = static_cast<Eigen::Index>(h);
  out.channels = channels;
  out.data.resize(static_cast<size_t>(w) * h * channels);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y] = out.data.data() + static_cast<size_t>(y) * w * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::jmp_buf jmp;
};

void jpeg_error_to_jmp(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jmp, 1);
}

RawImage read_jpeg(std::FILE* f, const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_to_jmp;
  err.base.output_message = [](j_common_ptr) {};

  RawImage out;
  if (setjmp(err.jmp)) {
    jpeg_destroy_decompress(&cinfo);
    throw format_error("undecodable JPEG '" + path.string() + "'");
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  out.width = cinfo.output_width;
  out.height = cinfo.output_height;
  out.channels = 3;
  out.data.resize(static_cast<size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = out.data.data() +
                         static_cast<size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

DecodedImage normalize(const RawImage& raw) {
  DecodedImage img;
  img.rgb.r.resize(raw.height, raw.width);
  img.rgb.g.resize(raw.height, raw.width);
  img.rgb.b.resize(raw.height, raw.width);
  if (raw.channels == 4) img.alpha = Grid(raw.height, raw.width);

  const unsigned char* p = raw.data.data();
  for (Eigen::Index y = 0; y < raw.height; ++y) {
    for (Eigen::Index x = 0; x < raw.width; ++x) {
      img.rgb.r(y, x) = p[0] / 255.0;
      img.rgb.g(y, x) = p[1] / 255.0;
      img.rgb.b(y, x) = p[2] / 255.0;
      if (raw.channels == 4) (*img.alpha)(y, x) = p[3] / 255.0;
      p += raw.channels;
    }
  }
  return img;
}

inline unsigned char to_byte(Scalar v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(v * 255.0));
}

void write_png_rows(const std::filesystem::path& path, Eigen::Index width,
                    Eigen::Index height, int color_type, int channels,
                    std::vector<unsigned char>& data) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_jmp, png_swallow_warning);
  if (!png) throw std::bad_alloc();
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::bad_alloc();
  }

  std::vector<png_bytep> rows(height);
  for (Eigen::Index y = 0; y < height; ++y) {
    rows[y] = data.data() + static_cast<size_t>(y) * width * channels;
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("PNG write failed for '" + path.string() + "'");
  }

  png_init_io(png, f.get());
  png_set_filter(png, 0, PNG_FILTER_NONE);  // predictable scanline bytes
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

DecodedImage decode_image(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  switch (sniff(f.get())) {
    case FileKind::Png:
      return normalize(read_png(f.get(), path));
    case FileKind::Jpeg:
      return normalize(read_jpeg(f.get(), path));
    default:
      throw format_error("unrecognized image format in '" + path.string() + "'");
  }
}

Grid luminance(const RgbRaster& rgb) {
  detail::require_same_dims(rgb.r, rgb.g, "luminance");
  detail::require_same_dims(rgb.r, rgb.b, "luminance");
  if ((rgb.r == rgb.g).all() && (rgb.r == rgb.b).all()) {
    return rgb.r;
  }
  Grid y = 0.299 * rgb.r + 0.587 * rgb.g + 0.114 * rgb.b;
  return y.min(1.0).max(0.0);
}

RgbRaster gray_to_rgb(const Grid& g) { return RgbRaster{g, g, g}; }

Grid resize_bilinear(const Grid& src, Eigen::Index width, Eigen::Index height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("resize_bilinear: requested size must be >= 1x1");
  }
  if (src.size() == 0) {
    throw std::invalid_argument("resize_bilinear: empty source");
  }
  if (width == src.cols() && height == src.rows()) {
    return src;
  }

  Grid dst(height, width);
  const Scalar sx = static_cast<Scalar>(src.cols()) / static_cast<Scalar>(width);
  const Scalar sy = static_cast<Scalar>(src.rows()) / static_cast<Scalar>(height);
  for (Eigen::Index y = 0; y < height; ++y) {
    Scalar fy = (static_cast<Scalar>(y) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<Scalar>(src.rows() - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(fy);
    const Eigen::Index y1 = std::min(y0 + 1, src.rows() - 1);
    const Scalar wy = fy - static_cast<Scalar>(y0);
    for (Eigen::Index x = 0; x < width; ++x) {
      Scalar fx = (static_cast<Scalar>(x) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<Scalar>(src.cols() - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(fx);
      const Eigen::Index x1 = std::min(x0 + 1, src.cols() - 1);
      const Scalar wx = fx - static_cast<Scalar>(x0);
      const Scalar top = src(y0, x0) * (1.0 - wx) + src(y0, x1) * wx;
      const Scalar bot = src(y1, x0) * (1.0 - wx) + src(y1, x1) * wx;
      dst(y, x) = top * (1.0 - wy) + bot * wy;
    }
  }
  return dst.min(1.0).max(0.0);
}

Grid load_grayscale(const std::filesystem::path& path, Eigen::Index width,
                    Eigen::Index height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("load_grayscale: requested size must be >= 1x1");
  }
  DecodedImage img = decode_image(path);
  return resize_bilinear(luminance(img.rgb), width, height);
}

void encode_attack_png(const RgbRaster& rgb, const Grid& alpha,
                       const std::filesystem::path& path) {
  detail::require_same_dims(rgb.r, rgb.g, "encode_attack_png");
  detail::require_same_dims(rgb.r, rgb.b, "encode_attack_png");
  detail::require_same_dims(rgb.r, alpha, "encode_attack_png");
  if (rgb.r.size() == 0) {
    throw std::invalid_argument("encode_attack_png: empty image");
  }

  const Eigen::Index h = rgb.rows(), w = rgb.cols();
  std::vector<unsigned char> data(static_cast<size_t>(w) * h * 4);
  unsigned char* p = data.data();
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      p[0] = to_byte(rgb.r(y, x));
      p[1] = to_byte(rgb.g(y, x));
      p[2] = to_byte(rgb.b(y, x));
      p[3] = to_byte(alpha(y, x));
      p += 4;
    }
  }
  write_png_rows(path, w, h, PNG_COLOR_TYPE_RGB_ALPHA, 4, data);
}

std::pair<RgbRaster, Grid> decode_attack_png(const std::filesystem::path& path) {
  DecodedImage img = decode_image(path);
  if (!img.alpha) {
    throw format_error("no alpha channel in '" + path.string() + "' (flattened or non-attack image)");
  }
  return {std::move(img.rgb), std::move(*img.alpha)};
}

void write_gray_png(const Grid& g, const std::filesystem::path& path) {
  if (g.size() == 0) {
    throw std::invalid_argument("write_gray_png: empty image");
  }
  const Eigen::Index h = g.rows(), w = g.cols();
  std::vector<unsigned char> data(static_cast<size_t>(w) * h);
  unsigned char* p = data.data();
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      *p++ = to_byte(g(y, x));
    }
  }
  write_png_rows(path, w, h, PNG_COLOR_TYPE_GRAY, 1, data);
}

}  // namespace alphaveil
