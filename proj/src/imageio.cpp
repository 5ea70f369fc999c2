#include "ubacf/imageio.hpp"

#include <png.h>

#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <memory>
#include <vector>

namespace ubacf {

namespace {

using FilePtr = std::unique_ptr<FILE, int (*)(FILE*)>;

FilePtr openFile(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
  if (!f)
    throw ImageError("cannot open " + path);
  return f;
}

double luminance(const unsigned char* px, int components) {
  if (components >= 3)
    return (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
  return px[0] / 255.0;
}

GrayImage readPng(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw ImageError(path + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ImageError(path + ": " + image.message);
  }
  GrayImage out(image.height, image.width);
  for (Index r = 0; r < out.rows(); ++r)
    for (Index c = 0; c < out.cols(); ++c)
      out(r, c) = buffer[std::size_t(r * out.cols() + c)] / 255.0;
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

GrayImage readJpeg(const std::string& path) {
  FilePtr file = openFile(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpegErrorExit;
  std::vector<unsigned char> pixels;
  int width = 0, height = 0, components = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageError(path + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  width = int(cinfo.output_width);
  height = int(cinfo.output_height);
  components = cinfo.output_components;
  pixels.resize(std::size_t(width) * std::size_t(height) * std::size_t(components));
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row =
        pixels.data() + std::size_t(cinfo.output_scanline) * std::size_t(width * components);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  GrayImage out(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      out(r, c) = luminance(&pixels[(std::size_t(r) * width + c) * components], components);
  return out;
}

} // namespace

GrayImage read_image(const std::string& path) {
  unsigned char sig[8] = {};
  {
    FilePtr f = openFile(path, "rb");
    if (std::fread(sig, 1, sizeof sig, f.get()) < 3)
      throw ImageError(path + ": file too short to be an image");
  }
  if (png_sig_cmp(sig, 0, 8) == 0)
    return readPng(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF)
    return readJpeg(path);
  throw ImageError(path + ": not a PNG or JPEG file");
}

GrayImage quantize8(const GrayImage& image) {
  return image.unaryExpr([](double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; });
}

void write_jpeg(const std::string& path, const GrayImage& image, int quality) {
  if (image.size() == 0)
    throw ImageError("write_jpeg: empty image");
  FilePtr file = openFile(path, "wb");
  std::vector<unsigned char> row(std::size_t(image.cols()));
  jpeg_compress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpegErrorExit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw ImageError(path + ": " + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file.get());
  cinfo.image_width = JDIMENSION(image.cols());
  cinfo.image_height = JDIMENSION(image.rows());
  cinfo.input_components = 1;
  cinfo.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, std::clamp(quality, 1, 100), TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    const Index r = Index(cinfo.next_scanline);
    for (Index c = 0; c < image.cols(); ++c)
      row[std::size_t(c)] =
          static_cast<unsigned char>(std::lround(std::clamp(image(r, c), 0.0, 1.0) * 255.0));
    unsigned char* ptr = row.data();
    jpeg_write_scanlines(&cinfo, &ptr, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

void write_png(const std::string& path, const GrayImage& image) {
  if (image.size() == 0)
    throw ImageError("write_png: empty image");
  std::vector<unsigned char> buffer(std::size_t(image.size()));
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c)
      buffer[std::size_t(r * image.cols() + c)] =
          static_cast<unsigned char>(std::lround(std::clamp(image(r, c), 0.0, 1.0) * 255.0));
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = png_uint_32(image.cols());
  out.height = png_uint_32(image.rows());
  out.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr))
    throw ImageError(path + ": " + out.message);
}

} // namespace ubacf
