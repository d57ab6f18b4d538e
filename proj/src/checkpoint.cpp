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

#include "trident/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace trident {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'D', 'C', 'K', 'P', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CheckpointError("checkpoint truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint16_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw CheckpointError("checkpoint truncated in string");
  return s;
}

void put_tensor_section(std::ostream& out, const std::vector<std::pair<std::string, Tensor<float>>>& ts) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ts.size()));
  for (const auto& [name, t] : ts) {
    put_string(out, name);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) put<std::int32_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
}

std::vector<std::pair<std::string, Tensor<float>>> get_tensor_section(std::istream& in) {
  const auto count = get<std::uint32_t>(in);
  std::vector<std::pair<std::string, Tensor<float>>> ts;
  ts.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(in);
    const auto nd = get<std::uint8_t>(in);
    std::vector<int> shape(nd);
    for (auto& d : shape) d = get<std::int32_t>(in);
    Tensor<float> t(shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw CheckpointError("checkpoint truncated in tensor " + name);
    ts.emplace_back(std::move(name), std::move(t));
  }
  return ts;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for write: " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, 1u);
  put<std::uint64_t>(out, data.iteration);
  for (auto w : data.rng_state) put<std::uint64_t>(out, w);
  put_tensor_section(out, data.params);
  put_tensor_section(out, data.opt_state);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.scalars.size()));
  for (const auto& [name, v] : data.scalars) {
    put_string(out, name);
    put<double>(out, v);
  }
  if (!out.flush()) throw CheckpointError("checkpoint write failed: " + path.string());
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw CheckpointError("not a checkpoint file: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != 1) throw CheckpointError("unsupported checkpoint version");
  CheckpointData data;
  data.iteration = get<std::uint64_t>(in);
  for (auto& w : data.rng_state) w = get<std::uint64_t>(in);
  data.params = get_tensor_section(in);
  data.opt_state = get_tensor_section(in);
  const auto count = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(in);
    const double v = get<double>(in);
    data.scalars.emplace_back(std::move(name), v);
  }
  return data;
}

}  // namespace trident
