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

#include "trident/pseudolabel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "trident/trainloop.hpp"

namespace trident::pseudolabel {

namespace fs = std::filesystem;

namespace {

// (argmax, max) per pixel of a (C, H, W) probability map.
void argmax_conf(const Tensor<float>& probmap, Tensor<int>& amax, Tensor<float>& conf) {
  const int C = probmap.shape[0];
  const std::size_t HW = probmap.numel() / static_cast<std::size_t>(C);
  for (std::size_t p = 0; p < HW; ++p) {
    int best = 0;
    float bv = probmap.data[p];
    for (int c = 1; c < C; ++c) {
      const float v = probmap.data[static_cast<std::size_t>(c) * HW + p];
      if (v > bv) {
        bv = v;
        best = c;
      }
    }
    amax.data[p] = best;
    conf.data[p] = bv;
  }
}

}  // namespace

std::vector<double> compute_thresholds(const std::vector<Tensor<float>>& probmaps, int num_classes,
                                       double cap) {
  if (probmaps.empty()) throw datagen::DataError("compute_thresholds: empty split");
  std::vector<std::vector<float>> pools(static_cast<std::size_t>(num_classes));
  for (const auto& pm : probmaps) {
    const int C = pm.shape[0];
    if (C != num_classes) throw std::invalid_argument("compute_thresholds: class count mismatch");
    const std::size_t HW = pm.numel() / static_cast<std::size_t>(C);
    Tensor<int> amax({static_cast<int>(HW)});
    Tensor<float> conf({static_cast<int>(HW)});
    argmax_conf(pm, amax, conf);
    for (std::size_t p = 0; p < HW; ++p)
      pools[static_cast<std::size_t>(amax.data[p])].push_back(conf.data[p]);
  }
  std::vector<double> thresholds(static_cast<std::size_t>(num_classes), 1.0);
  for (int c = 0; c < num_classes; ++c) {
    auto& pool = pools[static_cast<std::size_t>(c)];
    if (pool.empty()) continue;  // never predicted: threshold stays 1.0
    const std::size_t mid = (pool.size() - 1) / 2;  // lower median
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(mid), pool.end());
    thresholds[static_cast<std::size_t>(c)] = std::min(static_cast<double>(pool[mid]), cap);
  }
  return thresholds;
}

Tensor<int> apply_thresholds(const Tensor<float>& probmap, const std::vector<double>& thresholds) {
  const int C = probmap.shape[0];
  const int H = probmap.shape[1], W = probmap.shape[2];
  if (thresholds.size() != static_cast<std::size_t>(C))
    throw std::invalid_argument("apply_thresholds: threshold count mismatch");
  Tensor<int> amax({H, W});
  Tensor<float> conf({H, W});
  argmax_conf(probmap, amax, conf);
  Tensor<int> out({H, W});
  for (std::size_t p = 0; p < out.numel(); ++p) {
    const int c = amax.data[p];
    out.data[p] = (static_cast<double>(conf.data[p]) >= thresholds[static_cast<std::size_t>(c)])
                      ? c
                      : datagen::kIgnoreIndex;
  }
  return out;
}

PseudoLabelSet generate(ModelBundle<float>& bundle, const datagen::Dataset& data, int batch_size) {
  if (data.target.empty()) throw datagen::DataError("pseudo-label: empty target split");
  const int C = bundle.arch.num_classes;
  const int n = static_cast<int>(data.target.size());
  std::vector<Tensor<float>> probmaps(static_cast<std::size_t>(n));

  for (int base = 0; base < n; base += batch_size) {
    const int B = std::min(batch_size, n - base);
    const auto& first = data.target[static_cast<std::size_t>(base)];
    Tensor<float> batch({B, 3, first.h, first.w});
    for (int b = 0; b < B; ++b) {
      datagen::Sample s = data.decode(data.target[static_cast<std::size_t>(base + b)]);
      std::copy(s.image.data.begin(), s.image.data.end(),
                batch.data.begin() + static_cast<std::size_t>(b) * s.image.numel());
    }
    Tensor<float> probs = train::predict_probs(bundle, batch);
    const std::size_t plane = static_cast<std::size_t>(C) * first.h * first.w;
    for (int b = 0; b < B; ++b) {
      Tensor<float> pm({C, first.h, first.w});
      std::copy(probs.data.begin() + static_cast<std::size_t>(b) * plane,
                probs.data.begin() + static_cast<std::size_t>(b + 1) * plane, pm.data.begin());
      probmaps[static_cast<std::size_t>(base + b)] = std::move(pm);
    }
  }

  PseudoLabelSet set;
  set.thresholds = compute_thresholds(probmaps, C);
  set.checkpoint_id = hex64(bundle.param_digest());
  set.labels.reserve(probmaps.size());

  std::vector<std::int64_t> predicted(static_cast<std::size_t>(C), 0),
      accepted(static_cast<std::size_t>(C), 0);
  for (const auto& pm : probmaps) {
    Tensor<int> lbl = apply_thresholds(pm, set.thresholds);
    const std::size_t HW = lbl.numel();
    Tensor<int> amax({static_cast<int>(HW)});
    Tensor<float> conf({static_cast<int>(HW)});
    argmax_conf(pm, amax, conf);
    for (std::size_t p = 0; p < HW; ++p) {
      ++predicted[static_cast<std::size_t>(amax.data[p])];
      if (lbl.data[p] != datagen::kIgnoreIndex) ++accepted[static_cast<std::size_t>(lbl.data[p])];
    }
    set.labels.push_back(std::move(lbl));
  }
  set.coverage.resize(static_cast<std::size_t>(C), 0.0);
  for (int c = 0; c < C; ++c)
    if (predicted[static_cast<std::size_t>(c)] > 0)
      set.coverage[static_cast<std::size_t>(c)] =
          static_cast<double>(accepted[static_cast<std::size_t>(c)]) / predicted[static_cast<std::size_t>(c)];
  return set;
}

void write_pseudo_labels(const PseudoLabelSet& set, const fs::path& dir) {
  fs::create_directories(dir);
  char buf[32];
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    std::snprintf(buf, sizeof buf, "lbl_%05d.pgm", static_cast<int>(i));
    datagen::write_label_pgm(dir / buf, set.labels[i]);
  }
  std::ofstream stats(dir / "stats.txt", std::ios::trunc);
  if (!stats) throw datagen::DataError("cannot write pseudo-label stats");
  stats << "# checkpoint " << set.checkpoint_id << "\n";
  for (std::size_t c = 0; c < set.thresholds.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%.17g", set.thresholds[c]);
    stats << c << "," << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", set.coverage[c]);
    stats << buf << "\n";
  }
}

PseudoLabelSet load_pseudo_labels(const fs::path& dir) {
  PseudoLabelSet set;
  std::ifstream stats(dir / "stats.txt");
  if (!stats) throw datagen::DataError("no pseudo-label stats at " + dir.string());
  std::string line;
  while (std::getline(stats, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("checkpoint ");
      if (pos != std::string::npos) set.checkpoint_id = line.substr(pos + 11);
      continue;
    }
    const auto c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1) throw datagen::DataError("bad stats line: " + line);
    set.thresholds.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    set.coverage.push_back(std::stod(line.substr(c2 + 1)));
  }
  char buf[32];
  for (int i = 0;; ++i) {
    std::snprintf(buf, sizeof buf, "lbl_%05d.pgm", i);
    if (!fs::exists(dir / buf)) break;
    set.labels.push_back(datagen::read_label_pgm(dir / buf));
  }
  return set;
}

}  // namespace trident::pseudolabel
