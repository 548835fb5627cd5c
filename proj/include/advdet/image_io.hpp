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

#pragma once

#include <filesystem>

#include "advdet/core.hpp"

namespace advdet {

/// Reads PNG (any bit depth or colour type; alpha is dropped) or JPEG.
/// Errc::io when the file is missing or unreadable, Errc::parse when the
/// contents are corrupt, Errc::invalid_argument for other formats.
ImageBuffer read_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG. Any other extension is refused with
/// Errc::invalid_argument so perturbations are never run through a lossy
/// codec. Parent directories are created as needed.
void write_image(const ImageBuffer& image, const std::filesystem::path& path);

/// The image exactly as it will read back after write_image: every value
/// rounded to the nearest multiple of 1/255.
ImageBuffer quantize_8bit(const ImageBuffer& image);

}  // namespace advdet
