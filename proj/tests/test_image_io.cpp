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

#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "advdet/image_io.hpp"
#include "test_util.hpp"

namespace advdet {
namespace {

TEST(ImageIo, PngRoundTripWithinOneQuantum) {
  test::TempDir dir("io");
  const auto img = test::random_image(1, 13, 17);
  write_image(img, dir.path() / "nested/x.png");
  const auto back = read_image(dir.path() / "nested/x.png");
  ASSERT_EQ(back.height(), 13);
  ASSERT_EQ(back.width(), 17);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_LE(std::abs(back.pixels()[i] - img.pixels()[i]), 0.5 / 255.0 + 1e-12);
  }
  EXPECT_EQ(back, quantize_8bit(img));
}

TEST(ImageIo, QuantizedImagesRoundTripExactly) {
  test::TempDir dir("io");
  const auto q = quantize_8bit(test::random_image(2, 8, 8));
  write_image(q, dir.path() / "q.png");
  EXPECT_EQ(read_image(dir.path() / "q.png"), q);
  EXPECT_EQ(quantize_8bit(q), q);
}

TEST(ImageIo, RefusesLossyAndUnknownFormats) {
  test::TempDir dir("io");
  const ImageBuffer img(2, 2, 0.5);
  EXPECT_THROW_CODE(write_image(img, dir.path() / "x.jpg"), Errc::invalid_argument);
  EXPECT_THROW_CODE(write_image(img, dir.path() / "x.bmp"), Errc::invalid_argument);
  std::ofstream(dir.path() / "x.bmp") << "BM";
  EXPECT_THROW_CODE(read_image(dir.path() / "x.bmp"), Errc::invalid_argument);
}

TEST(ImageIo, MissingAndCorruptFiles) {
  test::TempDir dir("io");
  EXPECT_THROW_CODE(read_image(dir.path() / "none.png"), Errc::io);
  std::ofstream(dir.path() / "bad.png") << "not a png";
  EXPECT_THROW_CODE(read_image(dir.path() / "bad.png"), Errc::parse);
  std::ofstream(dir.path() / "bad.jpg") << "not a jpeg";
  EXPECT_THROW_CODE(read_image(dir.path() / "bad.jpg"), Errc::parse);
}

TEST(ImageIo, ReadsGrayAlphaSixteenBitPng) {
  test::TempDir dir("io");
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = 2;
  img.height = 1;
  img.format = PNG_FORMAT_LINEAR_Y_ALPHA;
  // Linear 16-bit gray: black and white, both opaque.
  const std::vector<png_uint_16> px{0, 65535, 65535, 65535};
  const auto path = (dir.path() / "ga16.png").string();
  ASSERT_NE(png_image_write_to_file(&img, path.c_str(), 0, px.data(), 0, nullptr), 0);
  const auto back = read_image(path);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(back.at(c, 0, 0), 0.0);
    EXPECT_EQ(back.at(c, 0, 1), 1.0);
  }
}

TEST(ImageIo, ReadsJpeg) {
  test::TempDir dir("io");
  const auto path = (dir.path() / "flat.jpeg").string();
  // A flat colour survives JPEG coding to within a couple of levels.
  const int w = 16, h = 8;
  std::vector<unsigned char> rgb(static_cast<std::size_t>(3) * w * h);
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = 200;
    rgb[i + 1] = 100;
    rgb[i + 2] = 50;
  }
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  FILE* f = std::fopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  jpeg_stdio_dest(&cinfo, f);
  cinfo.image_width = w;
  cinfo.image_height = h;
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 95, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = &rgb[static_cast<std::size_t>(cinfo.next_scanline) * 3 * w];
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::fclose(f);
  jpeg_destroy_compress(&cinfo);

  const auto img = read_image(path);
  ASSERT_EQ(img.height(), h);
  ASSERT_EQ(img.width(), w);
  const double expect[] = {200 / 255.0, 100 / 255.0, 50 / 255.0};
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) EXPECT_NEAR(img.at(c, y, x), expect[c], 3.0 / 255.0);
    }
  }
}

}  // namespace
}  // namespace advdet
