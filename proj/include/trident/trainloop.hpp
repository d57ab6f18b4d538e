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

#ifndef TRIDENT_TRAINLOOP_HPP
#define TRIDENT_TRAINLOOP_HPP

#include <filesystem>
#include <optional>

#include "trident/checkpoint.hpp"
#include "trident/config.hpp"
#include "trident/datagen.hpp"
#include "trident/losses.hpp"
#include "trident/nets.hpp"
#include "trident/optim.hpp"

namespace trident::train {

// Abort signal for non-finite losses; carries the offending term name.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kFeatNetSeed = 0x9e3779b9;  // frozen perceptual net

using Batch = Tensor<float>;      // (B, 3, H, W)
using LabelBatch = Tensor<int>;   // (B, H, W)

struct FlowOutput {
  // Graph sinks by loss name, in report order.
  std::vector<std::pair<std::string, Var<float>>> terms;
  // Cross-domain view from this flow: G^t(E(x^s)) resp. G^s(E(x^t)).
  Var<float> aug_view;
  losses::LossReport report;
  bool all_ignored_warning = false;

  bool has(const std::string& name) const { return report.has(name); }
};

// Role dispatch: which generator reconstructs, which translates, and which
// discriminator judges the translation, per input domain.
struct Roles {
  const char* reconstructor;  // "gen_s" or "gen_t"
  const char* translator;
  const char* adv_discriminator;  // scores the translated view
};
Roles roles_for(datagen::DomainTag domain);

// Source flow (Eq. 1-4 side): reconstruction via G^s, translation via G^t
// judged by D^t, supervised segmentation, and — once augmentation is enabled
// — the self-induced s2t view fed back through the encoder for the SC and
// augmented segmentation terms. During the detach window the feature map is
// detached before both generators.
FlowOutput forward_source(ModelBundle<float>& bundle, const nets::FeatNet<float>& featnet,
                          const Batch& x_s, const LabelBatch& y_s, const TrainConfig& cfg,
                          int iter);

// Target flow, roles switched; pseudo labels required exactly in stage 2.
FlowOutput forward_target(ModelBundle<float>& bundle, const nets::FeatNet<float>& featnet,
                          const Batch& x_t, const LabelBatch* pseudo, const TrainConfig& cfg,
                          int iter);

struct DiscReport {
  double d_s = 0, d_t = 0;
  bool stepped = false;
};

// One Adam step on each discriminator against the current detached fakes.
DiscReport discriminator_step(ModelBundle<float>& bundle, optim::Adam<float>& adam_d,
                              const Batch& real_s, const Batch& real_t, const Var<float>& fake_t2s,
                              const Var<float>& fake_s2t, const TrainConfig& cfg, double lr_d);

struct TrainResult {
  std::uint64_t final_param_digest = 0;
  int iterations_run = 0;
  std::filesystem::path metrics_path;
  std::filesystem::path final_checkpoint;
  std::vector<std::pair<std::string, double>> running_averages;
};

// Full training run: both flows every iteration sharing one optimizer step,
// then the discriminator step; polynomial decay on all learning rates;
// checkpoints at the configured cadence plus a final one.
TrainResult train(const TrainConfig& cfg, const datagen::Dataset& data,
                  const std::filesystem::path& out_dir);

// Inference helper shared by evaluation and pseudo-labelling: probability
// maps for a batch of already-decoded images.
Tensor<float> predict_probs(ModelBundle<float>& bundle, const Batch& images);

// Bundle construction / checkpoint plumbing shared by the pipeline stages.
std::unique_ptr<ModelBundle<float>> make_bundle(const TrainConfig& cfg);
void load_params_into(ModelBundle<float>& bundle, const CheckpointData& ckpt);
CheckpointData snapshot_params(const ModelBundle<float>& bundle);

}  // namespace trident::train

#endif  // TRIDENT_TRAINLOOP_HPP
