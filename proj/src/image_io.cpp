#include "racegan/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

#include <jpeglib.h>

namespace racegan {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& file, const char* mode) {
  FilePtr f(std::fopen(file.string().c_str(), mode));
  if (!f) throw std::runtime_error("cannot open file: " + file.string());
  return f;
}

// Decodes any color type to 8-bit RGB rows.
std::vector<std::vector<png_byte>> read_png_rows(const std::filesystem::path& file,
                                                 png_uint_32* out_h,
                                                 png_uint_32* out_w) {
  FilePtr f = open_file(file, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw std::runtime_error("not a PNG file: " + file.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng error while reading " + file.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const png_uint_32 h = png_get_image_height(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  std::vector<std::vector<png_byte>> rows(h);
  std::vector<png_bytep> row_ptrs(h);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y].resize(rowbytes);
    row_ptrs[y] = rows[y].data();
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  *out_h = h;
  *out_w = w;
  return rows;
}

void write_png_bytes(const std::filesystem::path& file, int h, int w,
                     int channels, const std::vector<png_byte>& data) {
  FilePtr f = open_file(file, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng error while writing " + file.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> row_ptrs(h);
  for (int y = 0; y < h; ++y)
    row_ptrs[y] = const_cast<png_bytep>(&data[static_cast<std::size_t>(y) * w *
                                              channels]);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr c) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(c->err);
  (*c->err->format_message)(c, err->message);
  longjmp(err->jump, 1);
}

RasterImage<float> load_jpeg(const std::filesystem::path& file) {
  FilePtr f = open_file(file, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("libjpeg: " + std::string(jerr.message) + " (" +
                             file.string() + ")");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int h = static_cast<int>(cinfo.output_height);
  const int w = static_cast<int>(cinfo.output_width);
  RasterImage<float> img;
  img.mode = PixelMode::bytes;
  img.r.resize(h, w);
  img.g.resize(h, w);
  img.b.resize(h, w);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(w) * 3);
  JSAMPROW rp = row.data();
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    jpeg_read_scanlines(&cinfo, &rp, 1);
    for (int x = 0; x < w; ++x) {
      img.r(y, x) = static_cast<float>(row[x * 3 + 0]);
      img.g(y, x) = static_cast<float>(row[x * 3 + 1]);
      img.b(y, x) = static_cast<float>(row[x * 3 + 2]);
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

bool has_extension(const std::filesystem::path& file, const char* a,
                   const char* b = nullptr) {
  std::string ext = file.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  return ext == a || (b && ext == b);
}

}  // namespace

RasterImage<float> load_image(const std::filesystem::path& file) {
  if (has_extension(file, ".jpg", ".jpeg")) return load_jpeg(file);
  png_uint_32 h = 0, w = 0;
  const auto rows = read_png_rows(file, &h, &w);
  RasterImage<float> img;
  img.mode = PixelMode::bytes;
  img.r.resize(h, w);
  img.g.resize(h, w);
  img.b.resize(h, w);
  for (png_uint_32 y = 0; y < h; ++y)
    for (png_uint_32 x = 0; x < w; ++x) {
      img.r(y, x) = static_cast<float>(rows[y][x * 3 + 0]);
      img.g(y, x) = static_cast<float>(rows[y][x * 3 + 1]);
      img.b(y, x) = static_cast<float>(rows[y][x * 3 + 2]);
    }
  return img;
}

void save_png(const std::filesystem::path& file, const RasterImage<float>& img) {
  const int h = static_cast<int>(img.height());
  const int w = static_cast<int>(img.width());
  const float s = img.mode == PixelMode::bytes ? 1.0f : 255.0f;
  std::vector<png_byte> data(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto clamp8 = [](float v) {
        const long r = std::lround(v);
        return static_cast<png_byte>(r < 0 ? 0 : (r > 255 ? 255 : r));
      };
      data[(static_cast<std::size_t>(y) * w + x) * 3 + 0] = clamp8(img.r(y, x) * s);
      data[(static_cast<std::size_t>(y) * w + x) * 3 + 1] = clamp8(img.g(y, x) * s);
      data[(static_cast<std::size_t>(y) * w + x) * 3 + 2] = clamp8(img.b(y, x) * s);
    }
  write_png_bytes(file, h, w, 3, data);
}

BinaryMask load_mask_png(const std::filesystem::path& file) {
  const Planef gray = load_gray_png(file);
  return (gray >= 128.0f / 255.0f).cast<std::uint8_t>();
}

void save_mask_png(const std::filesystem::path& file, const BinaryMask& mask) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  std::vector<png_byte> data(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      data[static_cast<std::size_t>(y) * w + x] = mask(y, x) ? 255 : 0;
  write_png_bytes(file, h, w, 1, data);
}

void save_gray_png(const std::filesystem::path& file, const Planef& plane) {
  const int h = static_cast<int>(plane.rows());
  const int w = static_cast<int>(plane.cols());
  std::vector<png_byte> data(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const long v = std::lround(plane(y, x) * 255.0f);
      data[static_cast<std::size_t>(y) * w + x] =
          static_cast<png_byte>(v < 0 ? 0 : (v > 255 ? 255 : v));
    }
  write_png_bytes(file, h, w, 1, data);
}

Planef load_gray_png(const std::filesystem::path& file) {
  png_uint_32 h = 0, w = 0;
  const auto rows = read_png_rows(file, &h, &w);
  Planef plane(h, w);
  // rows are expanded to RGB; use the luma-free green==red==blue convention
  // for masks and take the first channel.
  for (png_uint_32 y = 0; y < h; ++y)
    for (png_uint_32 x = 0; x < w; ++x)
      plane(y, x) = static_cast<float>(rows[y][x * 3]) / 255.0f;
  return plane;
}

}  // namespace racegan
