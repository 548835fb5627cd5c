// Copyright 2026 The advdet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "advdet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

namespace advdet {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

ImageBuffer from_interleaved(const unsigned char* rgb, int height, int width) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  std::vector<double> px(3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) px[c * plane + p] = rgb[3 * p + c] / 255.0;
  }
  return ImageBuffer(height, width, std::move(px));
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

ImageBuffer read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    throw Error(Errc::parse, "cannot decode PNG '" + path.string() + "': " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, rgb.data(), 0, nullptr) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(Errc::parse, "cannot decode PNG '" + path.string() + "': " + msg);
  }
  return from_interleaved(rgb.data(), static_cast<int>(img.height), static_cast<int>(img.width));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

// Only trivially destructible locals live in this frame, so longjmp out of
// libjpeg is safe. Returns a malloc'd RGB buffer or null with `message` set.
unsigned char* decode_jpeg(const unsigned char* data, unsigned long size, int* height, int* width,
                           char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  unsigned char* out = nullptr;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump) != 0) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    std::free(out);
    return nullptr;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, size);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *height = static_cast<int>(cinfo.output_height);
  *width = static_cast<int>(cinfo.output_width);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  out = static_cast<unsigned char*>(std::malloc(stride * cinfo.output_height));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

ImageBuffer read_jpeg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  int height = 0;
  int width = 0;
  char message[JMSG_LENGTH_MAX] = {};
  unsigned char* rgb = decode_jpeg(bytes.data(), bytes.size(), &height, &width, message);
  if (rgb == nullptr) {
    throw Error(Errc::parse, "cannot decode JPEG '" + path.string() + "': " + message);
  }
  try {
    auto image = from_interleaved(rgb, height, width);
    std::free(rgb);
    return image;
  } catch (...) {
    std::free(rgb);
    throw;
  }
}

}  // namespace

ImageBuffer read_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(Errc::io, "image not found: '" + path.string() + "'");
  }
  const auto ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".jpg" || ext == ".jpeg") return read_jpeg(path);
  throw Error(Errc::invalid_argument,
              "unsupported image format '" + ext + "' for '" + path.string() + "'");
}

void write_image(const ImageBuffer& image, const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext != ".png") {
    throw Error(Errc::invalid_argument, "refusing to write '" + path.string() +
                                            "': adversarial images are only stored as lossless "
                                            "PNG, got '" + ext + "'");
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::io, "cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  const std::size_t plane = image.plane_size();
  std::vector<unsigned char> rgb(3 * plane);
  const auto px = image.pixels();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) rgb[3 * p + c] = to_byte(px[c * plane + p]);
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&img, path.c_str(), 0, rgb.data(), 0, nullptr) == 0) {
    throw Error(Errc::io, "cannot write PNG '" + path.string() + "': " + img.message);
  }
}

ImageBuffer quantize_8bit(const ImageBuffer& image) {
  std::vector<double> px(image.pixels().begin(), image.pixels().end());
  for (auto& v : px) v = to_byte(v) / 255.0;
  return ImageBuffer(image.height(), image.width(), std::move(px));
}

}  // namespace advdet
