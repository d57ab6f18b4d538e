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

#ifndef TRIDENT_NETS_HPP
#define TRIDENT_NETS_HPP

#include <map>
#include <string>
#include <utility>

#include "trident/ops.hpp"
#include "trident/rng.hpp"

namespace trident {

// Ordered parameter registry. The layout manifest (names + shapes in
// registration order) is fixed for a given architecture config; checkpoints
// embed it and refuse to load into a different layout.
template <class T>
class ParamStore {
 public:
  Var<T> add(const std::string& name, std::vector<int> shape) {
    if (index_.count(name)) throw std::logic_error("duplicate parameter: " + name);
    Var<T> v = Var<T>::leaf(Tensor<T>(std::move(shape)), true);
    index_[name] = params_.size();
    params_.emplace_back(name, v);
    return v;
  }

  std::size_t size() const { return params_.size(); }
  const std::pair<std::string, Var<T>>& at(std::size_t i) const { return params_[i]; }

  Var<T> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter: " + name);
    return params_[it->second].second;
  }

  std::vector<std::pair<std::string, std::vector<int>>> manifest() const {
    std::vector<std::pair<std::string, std::vector<int>>> m;
    m.reserve(params_.size());
    for (const auto& [name, v] : params_) m.emplace_back(name, v.value().shape);
    return m;
  }

  std::vector<Var<T>> group(const std::string& prefix) const {
    std::vector<Var<T>> out;
    for (const auto& [name, v] : params_)
      if (name.rfind(prefix, 0) == 0) out.push_back(v);
    return out;
  }

  void zero_grads() const {
    for (const auto& [name, v] : params_) v.zero_grad();
  }

  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [name, v] : params_) {
      h = fnv1a(name.data(), name.size(), h);
      h = tensor_digest(v.value(), h);
    }
    return h;
  }

 private:
  std::vector<std::pair<std::string, Var<T>>> params_;
  std::map<std::string, std::size_t> index_;
};

namespace nets {

using ops::ConvGeom;

template <class T>
struct Conv2d {
  Var<T> w, b;
  ConvGeom geom;

  Conv2d() = default;
  Conv2d(ParamStore<T>& store, const std::string& name, int cin, int cout, int k, int stride,
         int dil, bool bias) {
    geom.cin = cin;
    geom.cout = cout;
    geom.kh = geom.kw = k;
    geom.stride = stride;
    geom.dil = dil;
    geom.pad = dil * (k - 1) / 2;
    w = store.add(name + ".w", {cout, cin, k, k});
    if (bias) b = store.add(name + ".b", {cout});
  }

  // frozen: run with detached copies so no gradient reaches the parameters.
  Var<T> operator()(const Var<T>& x, bool frozen = false) const {
    if (frozen) return ops::conv2d(x, w.detach(), b.valid() ? b.detach() : Var<T>(), geom);
    return ops::conv2d(x, w, b, geom);
  }
};

// He fan-in init for conv kernels, zeros for biases. Each parameter draws
// from a stream derived from (seed, name) so the values do not depend on
// registration order.
template <class T>
void init_he(ParamStore<T>& store, std::uint64_t seed) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& [name, v] = store.at(i);
    Tensor<T>& t = const_cast<Var<T>&>(v).value();
    if (t.shape.size() == 4) {
      const int fan_in = t.shape[1] * t.shape[2] * t.shape[3];
      const double std = std::sqrt(2.0 / fan_in);
      Rng rng = Rng::derive(seed, fnv1a(name.data(), name.size()));
      for (auto& x : t.data) x = static_cast<T>(rng.normal() * std);
    } else {
      t.fill(T(0));
    }
  }
}

struct ArchConfig {
  int in_channels = 3;
  int enc_c1 = 16, enc_c2 = 32, enc_c3 = 64, enc_c4 = 64;  // feature channels C_f = enc_c4
  int mid_channels = 64;                                   // C_m
  int gen_up1 = 32;
  int disc_c1 = 16, disc_c2 = 32, disc_c3 = 64;
  int num_classes = 5;

  void validate() const {
    if (num_classes < 2 || num_classes > 32)
      throw std::invalid_argument("arch: num_classes must be in [2, 32]");
    for (int c : {in_channels, enc_c1, enc_c2, enc_c3, enc_c4, mid_channels, gen_up1, disc_c1,
                  disc_c2, disc_c3})
      if (c <= 0) throw std::invalid_argument("arch: channel counts must be positive");
  }
};

// Shared encoder: 4 conv blocks, two stride-2 downsamples, instance norm,
// leaky ReLU. Output is (enc_c4, H/4, W/4).
template <class T>
struct Encoder {
  Conv2d<T> c1, c2, c3, c4;

  Encoder() = default;
  Encoder(ParamStore<T>& s, const std::string& p, const ArchConfig& a)
      : c1(s, p + ".c1", a.in_channels, a.enc_c1, 3, 1, 1, false),
        c2(s, p + ".c2", a.enc_c1, a.enc_c2, 3, 2, 1, false),
        c3(s, p + ".c3", a.enc_c2, a.enc_c3, 3, 2, 1, false),
        c4(s, p + ".c4", a.enc_c3, a.enc_c4, 3, 1, 1, false) {}

  Var<T> operator()(const Var<T>& x) const {
    const auto& sh = x.value().shape;
    if (sh.size() != 4 || sh[2] % 4 != 0 || sh[3] % 4 != 0)
      throw std::invalid_argument("encode: spatial dims must be divisible by 4, got " + shape_str(sh));
    auto h = ops::leaky_relu(ops::instance_norm(c1(x)));
    h = ops::leaky_relu(ops::instance_norm(c2(h)));
    h = ops::leaky_relu(ops::instance_norm(c3(h)));
    return ops::leaky_relu(ops::instance_norm(c4(h)));
  }
};

// Image decoder: 2 residual blocks on the feature map, then two
// nearest-neighbour upsample+conv blocks ending in tanh.
template <class T>
struct Generator {
  Conv2d<T> r1a, r1b, r2a, r2b, up1, up2;

  Generator() = default;
  Generator(ParamStore<T>& s, const std::string& p, const ArchConfig& a)
      : r1a(s, p + ".r1a", a.enc_c4, a.enc_c4, 3, 1, 1, false),
        r1b(s, p + ".r1b", a.enc_c4, a.enc_c4, 3, 1, 1, false),
        r2a(s, p + ".r2a", a.enc_c4, a.enc_c4, 3, 1, 1, false),
        r2b(s, p + ".r2b", a.enc_c4, a.enc_c4, 3, 1, 1, false),
        up1(s, p + ".up1", a.enc_c4, a.gen_up1, 3, 1, 1, false),
        up2(s, p + ".up2", a.gen_up1, a.in_channels, 3, 1, 1, true) {}

  Var<T> operator()(const Var<T>& f) const {
    const auto& sh = f.value().shape;
    if (sh.size() != 4 || sh[1] != r1a.geom.cin)
      throw std::invalid_argument("generate: feature shape mismatch " + shape_str(sh));
    auto h = ops::add(f, ops::instance_norm(r1b(ops::leaky_relu(ops::instance_norm(r1a(f))))));
    h = ops::add(h, ops::instance_norm(r2b(ops::leaky_relu(ops::instance_norm(r2a(h))))));
    h = ops::leaky_relu(ops::instance_norm(up1(ops::upsample_nearest2(h))));
    return ops::tanh_op(up2(ops::upsample_nearest2(h)));
  }
};

// Segmentation head split into a feature block and a scoring block. The
// scoring conv is dilated for a wider context window; logits are upsampled
// bilinearly to the requested resolution before the softmax.
template <class T>
struct SegHead {
  Conv2d<T> f1, f2, score;

  SegHead() = default;
  SegHead(ParamStore<T>& s, const std::string& p, const ArchConfig& a)
      : f1(s, p + ".f1", a.enc_c4, a.mid_channels, 3, 1, 1, false),
        f2(s, p + ".f2", a.mid_channels, a.mid_channels, 3, 1, 1, false),
        score(s, p + ".score", a.mid_channels, a.num_classes, 3, 1, 2, true) {}

  Var<T> features(const Var<T>& f) const {
    auto h = ops::leaky_relu(ops::instance_norm(f1(f)));
    return ops::leaky_relu(ops::instance_norm(f2(h)));
  }

  // Returns (mid features, probability map at out_h x out_w).
  std::pair<Var<T>, Var<T>> operator()(const Var<T>& f, int out_h, int out_w) const {
    Var<T> mid = features(f);
    Var<T> logits = score(mid);
    Var<T> up = ops::upsample_bilinear(logits, out_h, out_w);
    return {mid, ops::softmax_channels(up)};
  }

  std::pair<Var<T>, Var<T>> from_mid(const Var<T>& mid, int out_h, int out_w) const {
    Var<T> logits = score(mid);
    return {mid, ops::softmax_channels(ops::upsample_bilinear(logits, out_h, out_w))};
  }
};

// Two-scale patch discriminator; each scale is 3 stride-2 convs followed by a
// 1-channel score conv. No normalization.
template <class T>
struct Discriminator {
  struct Scale {
    Conv2d<T> c1, c2, c3, out;
    Scale() = default;
    Scale(ParamStore<T>& s, const std::string& p, const ArchConfig& a)
        : c1(s, p + ".c1", a.in_channels, a.disc_c1, 4, 2, 1, true),
          c2(s, p + ".c2", a.disc_c1, a.disc_c2, 4, 2, 1, true),
          c3(s, p + ".c3", a.disc_c2, a.disc_c3, 4, 2, 1, true),
          out(s, p + ".out", a.disc_c3, 1, 3, 1, 1, true) {}
    Var<T> operator()(const Var<T>& x, bool frozen) const {
      auto h = ops::leaky_relu(c1(x, frozen));
      h = ops::leaky_relu(c2(h, frozen));
      h = ops::leaky_relu(c3(h, frozen));
      return out(h, frozen);
    }
  };

  Scale full, half;

  Discriminator() = default;
  Discriminator(ParamStore<T>& s, const std::string& p, const ArchConfig& a)
      : full(s, p + ".s0", a), half(s, p + ".s1", a) {}

  std::vector<Var<T>> operator()(const Var<T>& x, bool frozen = false) const {
    return {full(x, frozen), half(ops::avg_pool2(x), frozen)};
  }
};

// Frozen random-feature net for the perceptual distance: two stride-2 convs
// with a tap after each block. Parameters never require gradients.
template <class T>
struct FeatNet {
  Tensor<T> w1, b1, w2, b2;
  ConvGeom g1, g2;

  explicit FeatNet(std::uint64_t seed, int cin = 3, int c1 = 16, int c2 = 32) {
    g1 = ConvGeom{cin, c1, 3, 3, 2, 1, 1};
    g2 = ConvGeom{c1, c2, 3, 3, 2, 1, 1};
    w1 = Tensor<T>({c1, cin, 3, 3});
    b1 = Tensor<T>({c1});
    w2 = Tensor<T>({c2, c1, 3, 3});
    b2 = Tensor<T>({c2});
    Rng r1 = Rng::derive(seed, 0xfea1);
    Rng r2 = Rng::derive(seed, 0xfea2);
    const double s1 = std::sqrt(2.0 / (cin * 9)), s2 = std::sqrt(2.0 / (c1 * 9));
    for (auto& v : w1.data) v = static_cast<T>(r1.normal() * s1);
    for (auto& v : w2.data) v = static_cast<T>(r2.normal() * s2);
  }

  std::vector<Var<T>> taps(const Var<T>& x) const {
    Var<T> wa = Var<T>::leaf(w1), ba = Var<T>::leaf(b1);
    Var<T> wb = Var<T>::leaf(w2), bb = Var<T>::leaf(b2);
    Var<T> t1 = ops::leaky_relu(ops::conv2d(x, wa, ba, g1));
    Var<T> t2 = ops::leaky_relu(ops::conv2d(t1, wb, bb, g2));
    return {t1, t2};
  }
};

}  // namespace nets

// The five trainable networks plus the two discriminators, over one shared
// parameter store.
template <class T>
struct ModelBundle {
  nets::ArchConfig arch;
  ParamStore<T> store;
  nets::Encoder<T> enc;
  nets::Generator<T> gen_s, gen_t;
  nets::SegHead<T> seg;
  nets::Discriminator<T> d_s, d_t;

  explicit ModelBundle(const nets::ArchConfig& a) : arch(a) {
    arch.validate();
    enc = nets::Encoder<T>(store, "enc", arch);
    gen_s = nets::Generator<T>(store, "gen_s", arch);
    gen_t = nets::Generator<T>(store, "gen_t", arch);
    seg = nets::SegHead<T>(store, "seg", arch);
    d_s = nets::Discriminator<T>(store, "d_s", arch);
    d_t = nets::Discriminator<T>(store, "d_t", arch);
  }

  ModelBundle(const ModelBundle&) = delete;
  ModelBundle& operator=(const ModelBundle&) = delete;

  std::uint64_t param_digest() const { return store.digest(); }
};

template <class T>
std::unique_ptr<ModelBundle<T>> init_bundle(const nets::ArchConfig& arch, std::uint64_t seed) {
  auto b = std::make_unique<ModelBundle<T>>(arch);
  nets::init_he(b->store, seed);
  return b;
}

}  // namespace trident

#endif  // TRIDENT_NETS_HPP
