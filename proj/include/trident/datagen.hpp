// Copyright 2026 Trident Contributors
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
// limitations under the license.

#ifndef TRIDENT_DATAGEN_HPP
#define TRIDENT_DATAGEN_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trident/rng.hpp"
#include "trident/tensor.hpp"

namespace trident::datagen {

inline constexpr int kIgnoreIndex = 255;

// ---------------------------------------------------------------------------
// Scene and style types.
// ---------------------------------------------------------------------------
enum class ShapeKind { Circle, Rectangle, Triangle, Stripe };

struct Shape {
  int class_id = 1;
  ShapeKind kind = ShapeKind::Circle;
  // Normalized [0,1] scene coordinates; meaning depends on kind.
  std::array<double, 8> p{};

  bool operator==(const Shape&) const = default;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int height = 64, width = 64;
  int num_classes = 5;
  std::vector<Shape> shapes;

  bool operator==(const SceneSpec&) const = default;
};

enum class DomainTag { Source, Target };

enum class TransformKind { Identity, HueRotate, BrightnessInvert, SinusoidalGrating };

struct PhotometricTransform {
  TransformKind kind = TransformKind::Identity;
  double theta_deg = 0;  // HueRotate
  double freq = 0;       // SinusoidalGrating
  double amp = 0;

  std::string describe() const;
  bool operator==(const PhotometricTransform&) const = default;
};

struct DomainStyle {
  DomainTag tag = DomainTag::Source;
  std::vector<std::array<double, 3>> palette;  // class -> RGB in [0,1]
  double noise_sigma = 0;
  // Applied in order; identity entries allowed.
  std::vector<PhotometricTransform> transforms;

  std::string describe() const;
};

struct Sample {
  Tensor<float> image;               // (3, H, W) in [-1, 1]
  std::optional<Tensor<int>> label;  // (H, W), values < num_classes or 255
};

// ---------------------------------------------------------------------------
// Generation.
// ---------------------------------------------------------------------------
SceneSpec generate_scene(std::uint64_t seed, int height, int width, int num_classes);

// Labels depend on the scene only; the style affects pixels, never classes.
Sample render(const SceneSpec& scene, const DomainStyle& style, std::uint64_t rng_seed);

// Label raster alone (used by tests and by render).
Tensor<int> rasterize_labels(const SceneSpec& scene);

DomainStyle default_style(DomainTag tag, int num_classes);

Sample random_crop(const Sample& s, int crop_h, int crop_w, Rng& rng);
void hflip_inplace(Sample& s);

// ---------------------------------------------------------------------------
// Persistence: binary PPM (P6) images, binary PGM (P5) labels.
// ---------------------------------------------------------------------------
class PnmError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, BadHeader, BadDims, BadMaxval, Truncated, Io };
  PnmError(Kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

void write_image_ppm(const std::filesystem::path& path, const Tensor<float>& image);
Tensor<float> read_image_ppm(const std::filesystem::path& path);
void write_label_pgm(const std::filesystem::path& path, const Tensor<int>& label);
Tensor<int> read_label_pgm(const std::filesystem::path& path);

void write_sample(const std::filesystem::path& image_path, const Sample& s,
                  const std::optional<std::filesystem::path>& label_path);
Sample read_sample(const std::filesystem::path& image_path,
                   const std::optional<std::filesystem::path>& label_path);

// ---------------------------------------------------------------------------
// Dataset build + manifest.
// ---------------------------------------------------------------------------
struct GenConfig {
  std::uint64_t seed = 1;
  int canvas_h = 64, canvas_w = 64;
  int num_classes = 5;
  int source_count = 2000;
  int target_count = 2000;
  int eval_count = 200;

  DomainStyle source_style_or_default() const { return default_style(DomainTag::Source, num_classes); }
  DomainStyle target_style_or_default() const { return default_style(DomainTag::Target, num_classes); }
};

struct DatasetManifest {
  std::filesystem::path root;
  GenConfig config;
  std::string source_style, target_style;
  std::vector<std::pair<std::string, std::uint64_t>> files;  // relpath, fnv1a digest
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes source/, target/, eval/ and manifest.txt last; a failed build leaves
// no manifest behind.
DatasetManifest build_dataset(const GenConfig& cfg, const std::filesystem::path& root);

DatasetManifest load_manifest(const std::filesystem::path& root);
void verify_manifest(const DatasetManifest& m);

// In-memory dataset for training/eval. Images are kept in their 8-bit disk
// encoding and decoded per batch.
struct StoredSample {
  int h = 0, w = 0;
  std::vector<std::uint8_t> image;   // 3*h*w, RGB interleaved as on disk
  std::vector<std::uint8_t> label;   // h*w, empty when unlabeled
};

struct Dataset {
  GenConfig config;
  std::filesystem::path root;
  std::vector<StoredSample> source, target, eval;

  Sample decode(const StoredSample& s) const;
};

// labels_dir overrides where target labels are read from (pseudo-labels).
Dataset load_dataset(const std::filesystem::path& root, bool with_eval = true,
                     const std::optional<std::filesystem::path>& target_labels_dir = {});

}  // namespace trident::datagen

#endif  // TRIDENT_DATAGEN_HPP
