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

#ifndef TRIDENT_LOSSES_HPP
#define TRIDENT_LOSSES_HPP

#include <string>
#include <vector>

#include "trident/nets.hpp"
#include "trident/ops.hpp"

namespace trident::losses {

// λ defaults; the staging thresholds live in the train config.
struct LossWeights {
  double rec_s = 1.0;
  double rec_t = 1.0;
  double adv_s2t = 0.1;
  double adv_t2s = 0.1;
  double sc_s = 0.1;
  double sc_t = 0.1;
  double seg_s = 1.0;
  double seg_s2t = 1.0;
  double seg_t_hat = 0.75;
  double seg_t2s_hat = 0.75;
  double percep_rec = 0.5;
  double percep_trans = 0.25;

  double weight_for(const std::string& name) const {
    if (name == "rec_s") return rec_s;
    if (name == "rec_t") return rec_t;
    if (name == "adv_s2t") return adv_s2t;
    if (name == "adv_t2s") return adv_t2s;
    if (name == "sc_s") return sc_s;
    if (name == "sc_t") return sc_t;
    if (name == "seg_s") return seg_s;
    if (name == "seg_s2t") return seg_s2t;
    if (name == "seg_t_hat") return seg_t_hat;
    if (name == "seg_t2s_hat") return seg_t2s_hat;
    if (name == "percep_rec_s" || name == "percep_rec_t") return percep_rec;
    if (name == "percep_trans_s" || name == "percep_trans_t") return percep_trans;
    throw std::invalid_argument("no loss weight for term: " + name);
  }
};

// All loss names in metrics-column order.
inline const std::vector<std::string>& loss_names() {
  static const std::vector<std::string> names = {
      "rec_s",        "adv_s2t",        "seg_s",        "sc_s",        "seg_s2t",
      "percep_rec_s", "percep_trans_s", "rec_t",        "adv_t2s",     "sc_t",
      "seg_t_hat",    "seg_t2s_hat",    "percep_rec_t", "percep_trans_t"};
  return names;
}

struct LossReport {
  std::vector<std::pair<std::string, double>> entries;
  double total = 0;

  void put(const std::string& name, double v) { entries.emplace_back(name, v); }
  bool has(const std::string& name) const {
    for (const auto& [n, v] : entries)
      if (n == name) return true;
    return false;
  }
  double get(const std::string& name) const {
    for (const auto& [n, v] : entries)
      if (n == name) return v;
    throw std::out_of_range("no loss entry: " + name);
  }
};

using EdgeMask = Tensor<std::uint8_t>;  // (H, W), 1 where edge

// Sobel edge detector on the channel-mean grayscale (mapped to [0,1]),
// replicate padding, magnitude thresholded at tau.
template <class T>
EdgeMask sobel_edges(const Tensor<T>& image, double tau = 0.5) {
  const int C = image.shape[image.ndim() - 3];
  const int H = image.shape[image.ndim() - 2];
  const int W = image.shape[image.ndim() - 1];
  std::vector<double> gray(static_cast<std::size_t>(H) * W, 0.0);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j)
        gray[static_cast<std::size_t>(i) * W + j] += static_cast<double>(image.at3(c, i, j));
  for (auto& g : gray) g = (g / C + 1.0) / 2.0;

  auto at = [&](int i, int j) {
    i = std::clamp(i, 0, H - 1);
    j = std::clamp(j, 0, W - 1);
    return gray[static_cast<std::size_t>(i) * W + j];
  };
  EdgeMask mask({H, W});
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      const double gx = -at(i - 1, j - 1) + at(i - 1, j + 1) - 2 * at(i, j - 1) + 2 * at(i, j + 1) -
                        at(i + 1, j - 1) + at(i + 1, j + 1);
      const double gy = -at(i - 1, j - 1) - 2 * at(i - 1, j) - at(i - 1, j + 1) + at(i + 1, j - 1) +
                        2 * at(i + 1, j) + at(i + 1, j + 1);
      mask.data[static_cast<std::size_t>(i) * W + j] = std::sqrt(gx * gx + gy * gy) > tau ? 1 : 0;
    }
  return mask;
}

// Ω: 1+eta on edge pixels (broadcast over channels), 1 elsewhere.
template <class T>
Tensor<T> edge_weight_matrix(const EdgeMask& mask, double eta, int channels = 3) {
  if (eta < 0) throw std::invalid_argument("edge_weight_matrix: eta must be >= 0");
  const int H = mask.shape[0], W = mask.shape[1];
  Tensor<T> wm({channels, H, W});
  for (int c = 0; c < channels; ++c)
    for (std::size_t p = 0; p < mask.numel(); ++p)
      wm.data[static_cast<std::size_t>(c) * mask.numel() + p] =
          mask.data[p] ? static_cast<T>(1.0 + eta) : T(1);
  return wm;
}

// Batched Ω for a (N, C, H, W) image batch; one mask per sample.
template <class T>
Tensor<T> edge_weight_batch(const Tensor<T>& images, double tau, double eta) {
  const int N = images.shape[0], C = images.shape[1], H = images.shape[2], W = images.shape[3];
  Tensor<T> wm(images.shape);
  for (int n = 0; n < N; ++n) {
    Tensor<T> img({C, H, W});
    std::copy(images.data.begin() + static_cast<std::size_t>(n) * C * H * W,
              images.data.begin() + static_cast<std::size_t>(n + 1) * C * H * W, img.data.begin());
    EdgeMask m = sobel_edges(img, tau);
    Tensor<T> w1 = edge_weight_matrix<T>(m, eta, C);
    std::copy(w1.data.begin(), w1.data.end(), wm.data.begin() + static_cast<std::size_t>(n) * C * H * W);
  }
  return wm;
}

// Eq. 1 structure: mean(Ω ⊙ |output − input|).
template <class T>
Var<T> weighted_recon_loss(const Var<T>& output, const Var<T>& input, const Tensor<T>& weights) {
  return ops::weighted_l1_mean(output, input, weights);
}

// LSGAN, standard label convention (real→1, fake→0 for D; fake→1 for G),
// averaged over discriminator scales. The fake is detached before the
// discriminator sees it so no gradient reaches the generator or encoder.
template <class T>
Var<T> lsgan_d_loss(const nets::Discriminator<T>& d, const Var<T>& real_img, const Var<T>& fake_img) {
  auto real_scores = d(real_img, false);
  auto fake_scores = d(fake_img.detach(), false);
  Var<T> acc;
  for (std::size_t s = 0; s < real_scores.size(); ++s) {
    Var<T> term = ops::add(ops::mse_to_const(real_scores[s], T(1)), ops::mse_to_const(fake_scores[s], T(0)));
    acc = acc.valid() ? ops::add(acc, term) : term;
  }
  return ops::mul_const(acc, T(1) / static_cast<T>(real_scores.size()));
}

// Generator side: the discriminator runs frozen, gradients flow only into the
// fake image (and whatever produced it).
template <class T>
Var<T> lsgan_g_loss(const nets::Discriminator<T>& d, const Var<T>& fake_img) {
  auto scores = d(fake_img, true);
  Var<T> acc;
  for (auto& sc : scores) {
    Var<T> term = ops::mse_to_const(sc, T(1));
    acc = acc.valid() ? ops::add(acc, term) : term;
  }
  return ops::mul_const(acc, T(1) / static_cast<T>(scores.size()));
}

// Eq. 3 / Eq. 6: cross entropy over non-ignored pixels of a probability map.
template <class T>
Var<T> seg_ce_loss(const Var<T>& probs, const Tensor<int>& labels, int ignore_index = 255,
                   bool* all_ignored = nullptr) {
  return ops::ce_ignore(probs, labels, ignore_index, all_ignored);
}

// Eq. 4-5: L1 distance between mid-feature maps; gradients reach both sides.
template <class T>
Var<T> semantic_consistency_loss(const Var<T>& f_a, const Var<T>& f_b) {
  return ops::l1_mean(f_a, f_b);
}

// Perceptual distance through the frozen feature net: sum over tap layers of
// the mean L1 feature difference.
template <class T>
Var<T> perceptual_loss(const nets::FeatNet<T>& net, const Var<T>& a, const Var<T>& b) {
  auto ta = net.taps(a);
  auto tb = net.taps(b);
  Var<T> acc;
  for (std::size_t l = 0; l < ta.size(); ++l) {
    Var<T> term = ops::l1_mean(ta[l], tb[l]);
    acc = acc.valid() ? ops::add(acc, term) : term;
  }
  return acc;
}

// Eq. 7: Σ λ_i · L_i over the named terms present.
template <class T>
Var<T> total_loss(const std::vector<std::pair<std::string, Var<T>>>& terms, const LossWeights& w) {
  Var<T> acc = Var<T>::leaf(Tensor<T>::scalar(T(0)));
  for (const auto& [name, term] : terms) {
    const double lambda = w.weight_for(name);  // throws on unknown names
    if (lambda == 0.0) continue;
    acc = ops::add(acc, ops::mul_const(term, static_cast<T>(lambda)));
  }
  return acc;
}

inline double total_loss_value(const LossReport& report, const LossWeights& w) {
  double acc = 0;
  for (const auto& [name, v] : report.entries) acc += w.weight_for(name) * v;
  return acc;
}

}  // namespace trident::losses

#endif  // TRIDENT_LOSSES_HPP
