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

#ifndef TRIDENT_PSEUDOLABEL_HPP
#define TRIDENT_PSEUDOLABEL_HPP

#include <filesystem>
#include <vector>

#include "trident/datagen.hpp"
#include "trident/nets.hpp"

namespace trident::pseudolabel {

struct PseudoLabelSet {
  std::vector<Tensor<int>> labels;   // per image, IGNORE where rejected
  std::vector<double> thresholds;    // per class, in [0, 1]
  std::vector<double> coverage;      // accepted / argmax-predicted, per class
  std::string checkpoint_id;         // parameter digest of the producing model
};

// Class-wise thresholds: for every class, the lower median of the max-prob
// values over all pixels argmax-assigned to it, capped at 0.9. Classes never
// predicted get 1.0 (nothing accepted).
std::vector<double> compute_thresholds(const std::vector<Tensor<float>>& probmaps, int num_classes,
                                       double cap = 0.9);

// argmax label where confidence clears the class threshold, IGNORE elsewhere.
Tensor<int> apply_thresholds(const Tensor<float>& probmap, const std::vector<double>& thresholds);

// Full offline pass over the target training split (whole frames).
PseudoLabelSet generate(ModelBundle<float>& bundle, const datagen::Dataset& data, int batch_size);

void write_pseudo_labels(const PseudoLabelSet& set, const std::filesystem::path& dir);
PseudoLabelSet load_pseudo_labels(const std::filesystem::path& dir);

}  // namespace trident::pseudolabel

#endif  // TRIDENT_PSEUDOLABEL_HPP
