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

#ifndef TRIDENT_CONFIG_HPP
#define TRIDENT_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "trident/losses.hpp"

namespace trident {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` configuration covering the whole pipeline. Unknown keys
// are rejected; serialize() emits a file that parses back identically.
struct TrainConfig {
  // Staging.
  int stage = 1;
  int max_iters = 4000;
  int batch_size = 8;
  int crop_h = 64, crop_w = 64;
  int detach_until_iter = 300;
  int aug_enable_iter = 500;

  losses::LossWeights weights;

  // Optimizers.
  double sgd_lr = 2.5e-4;
  double sgd_momentum = 0.9;
  double adam_lr_g = 1e-3;
  double adam_lr_d = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  double poly_power = 0.9;

  // Loss shaping.
  double eta_edge = 0.5;
  double tau_edge = 0.5;

  std::uint64_t seed = 1;
  int checkpoint_every = 1000;
  bool hflip = true;
  int threads = 0;  // 0 = auto

  // Paths (may also arrive via CLI flags).
  std::string data_dir;
  std::string pseudo_dir;
  std::string init_checkpoint;  // parameters only, fresh optimizers
  std::string resume;           // full training state

  // Dataset generation.
  std::uint64_t data_seed = 1;
  int canvas_h = 64, canvas_w = 64;
  int num_classes = 5;
  int source_count = 2000;
  int target_count = 2000;
  int eval_count = 200;

  // Evaluation / translation assay.
  int eval_batch = 16;
  int assay_iters = 600;
  int assay_batch = 8;

  void validate() const;
};

TrainConfig parse_config_text(const std::string& text);
TrainConfig parse_config_file(const std::string& path);
void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string serialize_config(const TrainConfig& cfg);
std::vector<std::string> config_keys();

// Ablation presets named after the ablation-table rows; each returns the
// config with loss weights (and stage) adjusted.
//   row1  source-only segmentation
//   row2  + adversarial translation
//   row3  + reconstruction duty for both generators
//   row4  + perceptual terms
//   row5  + semantic-consistency terms
//   row6  + s2t segmentation (full stage 1)
//   row7  + pseudo-label segmentation on target
//   row8  + pseudo-label segmentation on the t2s view (full stage 2)
//   row9  stage 2 without the back-fed terms (no SC, no s2t/t2s seg)
void apply_preset(TrainConfig& cfg, const std::string& preset);
std::vector<std::string> preset_names();

}  // namespace trident

#endif  // TRIDENT_CONFIG_HPP
