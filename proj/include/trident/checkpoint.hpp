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

#ifndef TRIDENT_CHECKPOINT_HPP
#define TRIDENT_CHECKPOINT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trident/tensor.hpp"

namespace trident {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary checkpoint: embeds the parameter layout manifest (ordered names and
// shapes) followed by raw float32 payloads, optimizer-state tensors, the data
// RNG state and named scalars. save(load(x)) reproduces x byte for byte.
struct CheckpointData {
  std::uint64_t iteration = 0;
  std::array<std::uint64_t, 4> rng_state{};
  std::vector<std::pair<std::string, Tensor<float>>> params;
  std::vector<std::pair<std::string, Tensor<float>>> opt_state;
  std::vector<std::pair<std::string, double>> scalars;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::filesystem::path& path);

}  // namespace trident

#endif  // TRIDENT_CHECKPOINT_HPP
