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

#ifndef TRIDENT_EVAL_HPP
#define TRIDENT_EVAL_HPP

#include <filesystem>
#include <functional>
#include <vector>

#include "trident/config.hpp"
#include "trident/datagen.hpp"
#include "trident/nets.hpp"

namespace trident::eval {

// Rows are ground truth, columns prediction; ignore pixels never counted.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int c = 0) : num_classes(c), counts(static_cast<std::size_t>(c) * c, 0) {}
  std::int64_t& at(int gt, int pred) { return counts[static_cast<std::size_t>(gt) * num_classes + pred]; }
  std::int64_t at(int gt, int pred) const { return counts[static_cast<std::size_t>(gt) * num_classes + pred]; }
  std::int64_t total() const;
};

void accumulate_confusion(ConfusionMatrix& cm, const Tensor<int>& pred, const Tensor<int>& gt,
                          int ignore_index = datagen::kIgnoreIndex);

struct IouResult {
  std::vector<double> per_class;  // NaN for classes with zero union
  std::vector<bool> valid;
  double miou = 0;
};

IouResult miou(const ConfusionMatrix& cm);

// Segmentation quality of a bundle over labeled samples (whole frames).
struct EvalOutcome {
  ConfusionMatrix cm;
  IouResult iou;
};
EvalOutcome evaluate_segmenter(ModelBundle<float>& bundle, const datagen::Dataset& data,
                               const std::vector<datagen::StoredSample>& samples, int batch_size);

// ---------------------------------------------------------------------------
// Feature-space domain gap.
// ---------------------------------------------------------------------------
struct ProjPoint {
  double x = 0, y = 0;
  int class_id = 0;
  int domain = 0;  // 0 source, 1 target
};

struct ClassStats {
  int num_classes = 0;
  int feat_dim = 0;
  std::vector<std::vector<double>> centroid_source, centroid_target;
  std::vector<bool> present_source, present_target;
  std::vector<double> ccd;  // valid where present in both domains
  std::vector<ProjPoint> points;
};

// Pools per-pixel mid features by nearest-neighbour-downsampled ground-truth
// class for both domains; centroids and CCD live in the full feature space,
// the 2-D view is a PCA projection of the pooled vectors.
ClassStats domain_gap_stats(ModelBundle<float>& bundle, const datagen::Dataset& data,
                            const std::vector<datagen::StoredSample>& source_samples,
                            const std::vector<datagen::StoredSample>& target_samples,
                            int batch_size, int max_points_per_pool = 2000);

// ---------------------------------------------------------------------------
// Translation assay.
// ---------------------------------------------------------------------------
struct TranslationAssay {
  double miou_source_only_raw = 0;   // source-only segmenter on raw target eval
  double miou_t2s = 0;               // same segmenter on t2s translations
  double miou_s2t_trained = 0;       // fresh segmenter trained on s2t source
  double delta_t2s = 0;              // miou_t2s - miou_source_only_raw
  double delta_s2t_trained = 0;      // miou_s2t_trained - miou_source_only_raw
};

using TranslateFn = std::function<Tensor<float>(const Tensor<float>& images)>;

// translate_t2s / translate_s2t map image batches across domains; injectable
// so the protocol can be tested with an identity translator.
TranslationAssay translation_assay(const TranslateFn& translate_t2s, const TranslateFn& translate_s2t,
                                   ModelBundle<float>& source_only, const datagen::Dataset& data,
                                   const TrainConfig& cfg);

// Production wrapper using the adapted bundle's generators.
TranslationAssay translation_assay(ModelBundle<float>& adapted, ModelBundle<float>& source_only,
                                   const datagen::Dataset& data, const TrainConfig& cfg);

// Batch translation through E then a generator, values in [-1, 1].
Tensor<float> translate_batch(ModelBundle<float>& bundle, const Tensor<float>& images, bool to_source);

// ---------------------------------------------------------------------------
// Report files.
// ---------------------------------------------------------------------------
void emit_iou_csv(const std::filesystem::path& path, const IouResult& iou);
void emit_ccd_csv(const std::filesystem::path& path, const ClassStats& stats);
void emit_projection_csv(const std::filesystem::path& path, const ClassStats& stats);
void emit_projection_svg(const std::filesystem::path& path, const ClassStats& stats);
void emit_translation_csv(const std::filesystem::path& path, const TranslationAssay& assay);

}  // namespace trident::eval

#endif  // TRIDENT_EVAL_HPP
