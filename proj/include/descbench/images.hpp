// Copyright 2026 The descbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DESCBENCH_IMAGES_HPP_
#define DESCBENCH_IMAGES_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "json.hpp"

namespace descbench {

bool is_decodable_image(const std::filesystem::path& path);

/// Decodes to 8-bit BGR. Throws ValidationError when the file is missing or
/// not a raster image.
cv::Mat read_image(const std::filesystem::path& path);

/// Lossless, deterministic PNG encoding.
std::vector<std::uint8_t> encode_png(const cv::Mat& image);
void write_png(const cv::Mat& image, const std::filesystem::path& path);

/// A cut-out object: 8-bit BGRA, alpha = 0 outside the object.
struct ObjectCutout {
  std::string id;
  cv::Mat bgra;
};

class ObjectLibrary {
 public:
  ObjectLibrary() = default;
  explicit ObjectLibrary(std::vector<ObjectCutout> objects);

  /// Ten procedurally drawn objects, golden_crown first.
  static ObjectLibrary builtin();
  /// Loads every *.png with an alpha channel in `dir`, ordered by file name.
  static ObjectLibrary load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  std::size_t size() const { return objects_.size(); }
  bool empty() const { return objects_.empty(); }
  const ObjectCutout& operator[](std::size_t i) const { return objects_[i]; }
  const std::vector<ObjectCutout>& objects() const { return objects_; }

 private:
  std::vector<ObjectCutout> objects_;
};

struct Placement {
  std::string object_id;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const Placement&) const = default;
};

nlohmann::ordered_json to_json(const Placement& p);
Placement placement_from_json(const nlohmann::json& j);

struct CompositeOptions {
  // Longer side of the pasted object, as a fraction of the shorter image side.
  double min_scale = 0.10;
  double max_scale = 0.25;
};

struct Composite {
  cv::Mat image;
  Placement placement;
};

/// Pastes one uniformly drawn object at a uniformly drawn position fully
/// inside the image. The output has the input's size and type.
Composite frankenstein_image(const cv::Mat& image, const ObjectLibrary& library,
                             std::uint64_t seed,
                             const CompositeOptions& options = {});

}  // namespace descbench

#endif  // DESCBENCH_IMAGES_HPP_
