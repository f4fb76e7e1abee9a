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

#include "descbench/images.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "descbench/error.hpp"
#include "descbench/rng.hpp"

namespace descbench {
namespace {

constexpr int kCanvas = 128;

cv::Mat blank_canvas(int width = kCanvas, int height = kCanvas) {
  return cv::Mat(height, width, CV_8UC4, cv::Scalar(0, 0, 0, 0));
}

// Colors are BGRA.
const cv::Scalar kGold(55, 175, 212, 255);
const cv::Scalar kRuby(40, 20, 200, 255);
const cv::Scalar kRed(30, 30, 220, 255);
const cv::Scalar kBrown(30, 70, 110, 255);
const cv::Scalar kLeaf(40, 160, 40, 255);
const cv::Scalar kBlue(200, 90, 30, 255);
const cv::Scalar kDark(40, 40, 40, 255);
const cv::Scalar kWhite(245, 245, 245, 255);
const cv::Scalar kYellow(20, 220, 250, 255);
const cv::Scalar kPurple(160, 40, 130, 255);
const cv::Scalar kOrange(0, 120, 250, 255);

void poly(cv::Mat& m, std::vector<cv::Point> pts, const cv::Scalar& c) {
  std::vector<std::vector<cv::Point>> polys{std::move(pts)};
  cv::fillPoly(m, polys, c, cv::LINE_8);
}

cv::Mat draw_golden_crown() {
  cv::Mat m = blank_canvas(kCanvas, 96);
  poly(m, {{8, 88}, {8, 30}, {34, 58}, {64, 12}, {94, 58}, {120, 30}, {120, 88}},
       kGold);
  cv::rectangle(m, {8, 76}, {120, 88}, cv::Scalar(30, 140, 180, 255), cv::FILLED);
  for (int x : {28, 64, 100}) cv::circle(m, {x, 66}, 6, kRuby, cv::FILLED);
  for (cv::Point p : {cv::Point(8, 28), cv::Point(64, 10), cv::Point(120, 28)}) {
    cv::circle(m, p, 6, kGold, cv::FILLED);
  }
  return m;
}

cv::Mat draw_red_apple() {
  cv::Mat m = blank_canvas();
  cv::circle(m, {64, 74}, 48, kRed, cv::FILLED);
  cv::rectangle(m, {61, 10}, {67, 34}, kBrown, cv::FILLED);
  cv::ellipse(m, {82, 22}, {16, 8}, -20, 0, 360, kLeaf, cv::FILLED);
  return m;
}

cv::Mat draw_blue_umbrella() {
  cv::Mat m = blank_canvas();
  cv::ellipse(m, {64, 60}, {58, 46}, 0, 180, 360, kBlue, cv::FILLED);
  cv::rectangle(m, {61, 60}, {67, 112}, kDark, cv::FILLED);
  cv::ellipse(m, {54, 112}, {10, 10}, 0, 0, 180, kDark, 6);
  return m;
}

cv::Mat draw_green_cactus() {
  cv::Mat m = blank_canvas();
  cv::rectangle(m, {50, 10}, {78, 124}, kLeaf, cv::FILLED);
  cv::rectangle(m, {18, 50}, {50, 64}, kLeaf, cv::FILLED);
  cv::rectangle(m, {18, 24}, {32, 64}, kLeaf, cv::FILLED);
  cv::rectangle(m, {78, 70}, {110, 84}, kLeaf, cv::FILLED);
  cv::rectangle(m, {96, 36}, {110, 84}, kLeaf, cv::FILLED);
  return m;
}

cv::Mat draw_yellow_star() {
  cv::Mat m = blank_canvas();
  std::vector<cv::Point> pts;
  for (int k = 0; k < 10; ++k) {
    const double radius = (k % 2 == 0) ? 60.0 : 24.0;
    const double angle = -M_PI / 2 + k * M_PI / 5;
    pts.emplace_back(static_cast<int>(std::lround(64 + radius * std::cos(angle))),
                     static_cast<int>(std::lround(66 + radius * std::sin(angle))));
  }
  poly(m, pts, kYellow);
  return m;
}

cv::Mat draw_purple_balloon() {
  cv::Mat m = blank_canvas();
  cv::ellipse(m, {64, 48}, {38, 46}, 0, 0, 360, kPurple, cv::FILLED);
  poly(m, {{58, 94}, {70, 94}, {64, 102}}, kPurple);
  cv::line(m, {64, 102}, {70, 126}, kDark, 2);
  return m;
}

cv::Mat draw_traffic_cone() {
  cv::Mat m = blank_canvas();
  poly(m, {{64, 6}, {100, 112}, {28, 112}}, kOrange);
  poly(m, {{52, 42}, {76, 42}, {82, 60}, {46, 60}}, kWhite);
  cv::rectangle(m, {14, 110}, {114, 122}, kOrange, cv::FILLED);
  return m;
}

cv::Mat draw_top_hat() {
  cv::Mat m = blank_canvas(kCanvas, 112);
  cv::rectangle(m, {32, 8}, {96, 88}, kDark, cv::FILLED);
  cv::rectangle(m, {32, 70}, {96, 82}, kRed, cv::FILLED);
  cv::ellipse(m, {64, 92}, {60, 14}, 0, 0, 360, kDark, cv::FILLED);
  return m;
}

cv::Mat draw_rubber_duck() {
  cv::Mat m = blank_canvas();
  cv::ellipse(m, {60, 88}, {50, 32}, 0, 0, 360, kYellow, cv::FILLED);
  cv::circle(m, {86, 44}, 26, kYellow, cv::FILLED);
  poly(m, {{108, 40}, {126, 48}, {108, 56}}, kOrange);
  cv::circle(m, {92, 38}, 4, kDark, cv::FILLED);
  return m;
}

cv::Mat draw_stop_sign() {
  cv::Mat m = blank_canvas();
  std::vector<cv::Point> pts;
  for (int k = 0; k < 8; ++k) {
    const double angle = M_PI / 8 + k * M_PI / 4;
    pts.emplace_back(static_cast<int>(std::lround(64 + 60 * std::cos(angle))),
                     static_cast<int>(std::lround(64 + 60 * std::sin(angle))));
  }
  poly(m, pts, kRed);
  cv::rectangle(m, {30, 56}, {98, 72}, kWhite, cv::FILLED);
  return m;
}

}  // namespace

bool is_decodable_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return false;
  return !cv::imread(path.string(), cv::IMREAD_UNCHANGED).empty();
}

cv::Mat read_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw ValidationError("image not found: " + path.string());
  }
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw ValidationError("undecodable image: " + path.string());
  return m;
}

std::vector<std::uint8_t> encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", image, buf)) {
    throw IoError("PNG encoding failed");
  }
  return buf;
}

void write_png(const cv::Mat& image, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), image)) {
    throw IoError("cannot write image " + path.string());
  }
}

ObjectLibrary::ObjectLibrary(std::vector<ObjectCutout> objects)
    : objects_(std::move(objects)) {
  for (const auto& o : objects_) {
    if (o.bgra.empty() || o.bgra.type() != CV_8UC4) {
      throw ValidationError("object '" + o.id + "' is not an 8-bit image with alpha");
    }
  }
}

ObjectLibrary ObjectLibrary::builtin() {
  return ObjectLibrary({
      {"golden_crown", draw_golden_crown()},
      {"red_apple", draw_red_apple()},
      {"blue_umbrella", draw_blue_umbrella()},
      {"green_cactus", draw_green_cactus()},
      {"yellow_star", draw_yellow_star()},
      {"purple_balloon", draw_purple_balloon()},
      {"traffic_cone", draw_traffic_cone()},
      {"top_hat", draw_top_hat()},
      {"rubber_duck", draw_rubber_duck()},
      {"stop_sign", draw_stop_sign()},
  });
}

ObjectLibrary ObjectLibrary::load(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw IoError("cannot read object library " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<ObjectCutout> objects;
  for (const auto& f : files) {
    cv::Mat m = cv::imread(f.string(), cv::IMREAD_UNCHANGED);
    if (m.empty() || m.channels() != 4 || m.depth() != CV_8U) {
      throw ValidationError("object image lacks a transparency mask: " + f.string());
    }
    objects.push_back({f.stem().string(), m});
  }
  if (objects.empty()) {
    throw ValidationError("object library is empty: " + dir.string());
  }
  return ObjectLibrary(std::move(objects));
}

void ObjectLibrary::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& o : objects_) write_png(o.bgra, dir / (o.id + ".png"));
}

nlohmann::ordered_json to_json(const Placement& p) {
  return {{"object_id", p.object_id}, {"x", p.x},           {"y", p.y},
          {"width", p.width},         {"height", p.height}};
}

Placement placement_from_json(const nlohmann::json& j) {
  return {j.at("object_id").get<std::string>(), j.at("x").get<int>(),
          j.at("y").get<int>(), j.at("width").get<int>(),
          j.at("height").get<int>()};
}

Composite frankenstein_image(const cv::Mat& image, const ObjectLibrary& library,
                             std::uint64_t seed, const CompositeOptions& options) {
  if (library.empty()) throw ValidationError("object library is empty");
  if (image.empty() || image.type() != CV_8UC3) {
    throw ValidationError("frankenstein_image expects an 8-bit BGR image");
  }
  Rng rng(derive_seed(seed, "frankenstein_image"));
  const ObjectCutout& object = library[uniform_index(rng, library.size())];
  const double scale =
      options.min_scale + (options.max_scale - options.min_scale) * uniform01(rng);

  const int short_side = std::min(image.cols, image.rows);
  const int long_target =
      std::max(1, static_cast<int>(std::lround(scale * short_side)));
  const double k = static_cast<double>(long_target) /
                   std::max(object.bgra.cols, object.bgra.rows);
  const int w = std::clamp(static_cast<int>(std::lround(object.bgra.cols * k)), 1,
                           image.cols);
  const int h = std::clamp(static_cast<int>(std::lround(object.bgra.rows * k)), 1,
                           image.rows);

  cv::Mat sprite;
  cv::resize(object.bgra, sprite, cv::Size(w, h), 0, 0, cv::INTER_AREA);

  const int x = static_cast<int>(uniform_index(rng, image.cols - w + 1));
  const int y = static_cast<int>(uniform_index(rng, image.rows - h + 1));

  Composite out{image.clone(), {object.id, x, y, w, h}};
  for (int r = 0; r < h; ++r) {
    const auto* src = sprite.ptr<cv::Vec4b>(r);
    auto* dst = out.image.ptr<cv::Vec3b>(y + r) + x;
    for (int c = 0; c < w; ++c) {
      const int a = src[c][3];
      for (int ch = 0; ch < 3; ++ch) {
        dst[c][ch] = static_cast<std::uint8_t>(
            (a * src[c][ch] + (255 - a) * dst[c][ch] + 127) / 255);
      }
    }
  }
  return out;
}

}  // namespace descbench
