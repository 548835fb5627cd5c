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


// Trains the toy detectors the tests share into the model cache and writes
// the blank image the CLI tests attack.

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "advdet/image_io.hpp"
#include "advdet/synthetic.hpp"
#include "advdet/toy_detector.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: prepare_fixtures <output dir>\n");
    return 2;
  }
  const std::filesystem::path out = argv[1];
  advdet::write_image(advdet::generate_blank(0), out / "blank.png");
  for (std::uint64_t seed : {1, 2}) {
    auto det = advdet::toy_detector_build(seed);
    std::printf("toy seed %llu: holdout recall %.3f\n", static_cast<unsigned long long>(seed),
                advdet::detection_recall(*det, advdet::toy_holdout_batch_seed(), 50));
  }
  return 0;
}
