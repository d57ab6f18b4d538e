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

#ifndef TRIDENT_TENSOR_HPP
#define TRIDENT_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace trident {

// Dense row-major tensor. Layout for images/features is NCHW.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
  Tensor(std::vector<int> s, T fill) : shape(std::move(s)), data(numel_of(shape), fill) {}

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("tensor: negative dim");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
  int ndim() const { return static_cast<int>(shape.size()); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  // 4-d accessors (n, c, h, w); lower-rank tensors use the trailing dims.
  T& at4(int n, int c, int h, int w) {
    return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  const T& at4(int n, int c, int h, int w) const {
    return data[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  T& at3(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * shape[ndim() - 2] + h) * shape[ndim() - 1] + w];
  }
  const T& at3(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * shape[ndim() - 2] + h) * shape[ndim() - 1] + w];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  static Tensor scalar(T v) {
    Tensor t(std::vector<int>{1});
    t.data[0] = v;
    return t;
  }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// FNV-1a over raw bytes; used for content digests of files and parameters.
inline std::uint64_t fnv1a(const void* bytes, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

template <class T>
std::uint64_t tensor_digest(const Tensor<T>& t, std::uint64_t h = 0xcbf29ce484222325ull) {
  h = fnv1a(t.shape.data(), t.shape.size() * sizeof(int), h);
  return fnv1a(t.data.data(), t.data.size() * sizeof(T), h);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace trident

#endif  // TRIDENT_TENSOR_HPP
