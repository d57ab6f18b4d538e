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

#ifndef TRIDENT_OPTIM_HPP
#define TRIDENT_OPTIM_HPP

#include <cmath>
#include <string>
#include <vector>

#include "trident/autodiff.hpp"

namespace trident::optim {

// lr(iter) = base * (1 - iter/max_iter)^power
inline double poly_decay(double base_lr, int iter, int max_iter, double power) {
  if (iter < 0 || iter > max_iter) throw std::invalid_argument("poly_decay: iter out of range");
  return base_lr * std::pow(1.0 - static_cast<double>(iter) / max_iter, power);
}

template <class T>
struct SgdMomentum {
  std::vector<std::pair<std::string, Var<T>>> params;
  std::vector<Tensor<T>> velocity;
  double momentum = 0.9;

  SgdMomentum() = default;
  SgdMomentum(std::vector<std::pair<std::string, Var<T>>> ps, double mu)
      : params(std::move(ps)), momentum(mu) {
    velocity.reserve(params.size());
    for (auto& [name, p] : params) velocity.emplace_back(p.value().shape);
  }

  void step(double lr) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].second;
      if (p.grad().data.empty()) continue;
      T* v = velocity[i].ptr();
      T* w = p.value().ptr();
      const T* g = p.grad().ptr();
      const T mu = static_cast<T>(momentum);
      const T eta = static_cast<T>(lr);
      for (std::size_t k = 0; k < p.value().numel(); ++k) {
        v[k] = mu * v[k] + g[k];
        w[k] -= eta * v[k];
      }
    }
  }

  std::vector<std::pair<std::string, Tensor<T>>> state(const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    for (std::size_t i = 0; i < params.size(); ++i)
      out.emplace_back(prefix + ".v." + params[i].first, velocity[i]);
    return out;
  }
};

template <class T>
struct Adam {
  std::vector<std::pair<std::string, Var<T>>> params;
  std::vector<Tensor<T>> m, v;
  double beta1 = 0.9, beta2 = 0.99, eps = 1e-8;
  std::int64_t t = 0;

  Adam() = default;
  Adam(std::vector<std::pair<std::string, Var<T>>> ps, double b1, double b2)
      : params(std::move(ps)), beta1(b1), beta2(b2) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (auto& [name, p] : params) {
      m.emplace_back(p.value().shape);
      v.emplace_back(p.value().shape);
    }
  }

  void step(double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].second;
      if (p.grad().data.empty()) continue;
      T* mi = m[i].ptr();
      T* vi = v[i].ptr();
      T* w = p.value().ptr();
      const T* g = p.grad().ptr();
      for (std::size_t k = 0; k < p.value().numel(); ++k) {
        mi[k] = static_cast<T>(beta1 * mi[k] + (1.0 - beta1) * g[k]);
        vi[k] = static_cast<T>(beta2 * vi[k] + (1.0 - beta2) * static_cast<double>(g[k]) * g[k]);
        const double mhat = mi[k] / bc1;
        const double vhat = vi[k] / bc2;
        w[k] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }

  std::vector<std::pair<std::string, Tensor<T>>> state(const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.emplace_back(prefix + ".m." + params[i].first, m[i]);
      out.emplace_back(prefix + ".v." + params[i].first, v[i]);
    }
    return out;
  }
};

}  // namespace trident::optim

#endif  // TRIDENT_OPTIM_HPP
