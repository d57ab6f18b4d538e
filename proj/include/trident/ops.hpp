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

#ifndef TRIDENT_OPS_HPP
#define TRIDENT_OPS_HPP

#include <cmath>
#include <cstdint>

#include "trident/autodiff.hpp"
#include "trident/kernels.hpp"
#include "trident/parallel.hpp"

namespace trident::ops {

using kernels::ConvGeom;

namespace detail {
template <class T>
void check_shape(const Var<T>& a, const Var<T>& b, const char* what) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.value().shape) +
                                " vs " + shape_str(b.value().shape));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution (NCHW). Weight layout (cout, cin, kh, kw); bias optional (cout).
// ---------------------------------------------------------------------------
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const ConvGeom& g) {
  const auto& xs = x.value().shape;
  if (xs.size() != 4) throw std::invalid_argument("conv2d: input must be NCHW");
  const int N = xs[0], H = xs[2], W = xs[3];
  if (xs[1] != g.cin) throw std::invalid_argument("conv2d: channel mismatch");
  const int OH = g.out_dim(H), OW = g.out_dim(W);
  const int K = g.cin * g.kh * g.kw;
  const std::size_t P = static_cast<std::size_t>(OH) * OW;

  Tensor<T> y({N, g.cout, OH, OW});
  const T* xd = x.value().ptr();
  const T* wd = w.value().ptr();
  const T* bd = b.valid() ? b.value().ptr() : nullptr;
  T* yd = y.ptr();
  const std::size_t xstride = static_cast<std::size_t>(g.cin) * H * W;
  const std::size_t ystride = static_cast<std::size_t>(g.cout) * P;

  parallel_for(N, [&](int n) {
    auto& col = kernels::scratch<T>(0);
    col.resize(static_cast<std::size_t>(K) * P);
    kernels::im2col(xd + n * xstride, g.cin, H, W, g, col.data());
    T* yn = yd + n * ystride;
    if (bd) {
      for (int c = 0; c < g.cout; ++c)
        for (std::size_t p = 0; p < P; ++p) yn[c * P + p] = bd[c];
    } else {
      std::fill(yn, yn + ystride, T(0));
    }
    kernels::gemm_acc(wd, col.data(), yn, g.cout, K, static_cast<int>(P));
  });

  std::vector<std::shared_ptr<Node<T>>> parents{x.handle(), w.handle()};
  if (b.valid()) parents.push_back(b.handle());
  ConvGeom geom = g;
  return make_result<T>(std::move(y), std::move(parents), [geom, N, H, W, OH, OW](Node<T>& self) {
    const int K = geom.cin * geom.kh * geom.kw;
    const std::size_t P = static_cast<std::size_t>(OH) * OW;
    Node<T>* xn = self.parents[0].get();
    Node<T>* wn = self.parents[1].get();
    Node<T>* bn = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
    const T* dyd = self.grad.ptr();
    const std::size_t xstride = static_cast<std::size_t>(geom.cin) * H * W;
    const std::size_t ystride = static_cast<std::size_t>(geom.cout) * P;

    if (xn->requires_grad) {
      xn->ensure_grad();
      T* dxd = xn->grad.ptr();
      const T* wd = wn->value.ptr();
      parallel_for(N, [&](int n) {
        auto& dcol = kernels::scratch<T>(0);
        dcol.assign(static_cast<std::size_t>(K) * P, T(0));
        kernels::gemm_acc_at(wd, dyd + n * ystride, dcol.data(), K, geom.cout, static_cast<int>(P));
        kernels::col2im_acc(dcol.data(), geom.cin, H, W, geom, dxd + n * xstride);
      });
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      // Per-sample partials summed in index order keeps the result
      // independent of the worker count.
      std::vector<Tensor<T>> dw_parts(static_cast<std::size_t>(N));
      const T* xd = xn->value.ptr();
      parallel_for(N, [&](int n) {
        auto& colpm = kernels::scratch<T>(1);
        colpm.resize(P * static_cast<std::size_t>(K));
        kernels::im2col_pm(xd + n * xstride, geom.cin, H, W, geom, colpm.data());
        dw_parts[n] = Tensor<T>({geom.cout, K});
        kernels::gemm_acc(dyd + n * ystride, colpm.data(), dw_parts[n].ptr(), geom.cout,
                          static_cast<int>(P), K);
      });
      T* dwd = wn->grad.ptr();
      for (int n = 0; n < N; ++n) {
        const T* part = dw_parts[n].ptr();
        for (std::size_t i = 0; i < wn->grad.numel(); ++i) dwd[i] += part[i];
      }
    }
    if (bn && bn->requires_grad) {
      bn->ensure_grad();
      T* dbd = bn->grad.ptr();
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < geom.cout; ++c) {
          const T* row = dyd + n * ystride + c * P;
          T acc = T(0);
          for (std::size_t p = 0; p < P; ++p) acc += row[p];
          dbd[c] += acc;
        }
    }
  });
}

// ---------------------------------------------------------------------------
// Instance normalization over (H, W) per sample and channel; no affine terms.
// ---------------------------------------------------------------------------
template <class T>
Var<T> instance_norm(const Var<T>& x, T eps = T(1e-5)) {
  const auto& s = x.value().shape;
  if (s.size() != 4) throw std::invalid_argument("instance_norm: input must be NCHW");
  const int N = s[0], C = s[1];
  const std::size_t HW = static_cast<std::size_t>(s[2]) * s[3];
  Tensor<T> y(s);
  Tensor<T> inv_std({N, C});
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T* xp = xd + (static_cast<std::size_t>(n) * C + c) * HW;
      T* yp = yd + (static_cast<std::size_t>(n) * C + c) * HW;
      T mean = T(0);
      for (std::size_t i = 0; i < HW; ++i) mean += xp[i];
      mean /= static_cast<T>(HW);
      T var = T(0);
      for (std::size_t i = 0; i < HW; ++i) {
        const T d = xp[i] - mean;
        var += d * d;
      }
      var /= static_cast<T>(HW);
      const T is = T(1) / std::sqrt(var + eps);
      inv_std.data[static_cast<std::size_t>(n) * C + c] = is;
      for (std::size_t i = 0; i < HW; ++i) yp[i] = (xp[i] - mean) * is;
    }

  return make_result<T>(std::move(y), {x.handle()}, [N, C, HW, inv_std](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* dyd = self.grad.ptr();
    const T* yd = self.value.ptr();  // y == xhat
    T* dxd = xn->grad.ptr();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
        const T is = inv_std.data[static_cast<std::size_t>(n) * C + c];
        T mean_dy = T(0), mean_dyy = T(0);
        for (std::size_t i = 0; i < HW; ++i) {
          mean_dy += dyd[off + i];
          mean_dyy += dyd[off + i] * yd[off + i];
        }
        mean_dy /= static_cast<T>(HW);
        mean_dyy /= static_cast<T>(HW);
        for (std::size_t i = 0; i < HW; ++i)
          dxd[off + i] += is * (dyd[off + i] - mean_dy - yd[off + i] * mean_dyy);
      }
  });
}

// ---------------------------------------------------------------------------
// Pointwise activations.
// ---------------------------------------------------------------------------
template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope = T(0.2)) {
  Tensor<T> y(x.value().shape);
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (std::size_t i = 0; i < y.numel(); ++i) yd[i] = xd[i] > T(0) ? xd[i] : slope * xd[i];
  return make_result<T>(std::move(y), {x.handle()}, [slope](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* xd = xn->value.ptr();
    const T* g = self.grad.ptr();
    T* dx = xn->grad.ptr();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) dx[i] += xd[i] > T(0) ? g[i] : slope * g[i];
  });
}

template <class T>
Var<T> tanh_op(const Var<T>& x) {
  Tensor<T> y(x.value().shape);
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (std::size_t i = 0; i < y.numel(); ++i) yd[i] = std::tanh(xd[i]);
  return make_result<T>(std::move(y), {x.handle()}, [](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* yd = self.value.ptr();
    const T* g = self.grad.ptr();
    T* dx = xn->grad.ptr();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) dx[i] += g[i] * (T(1) - yd[i] * yd[i]);
  });
}

// ---------------------------------------------------------------------------
// Resampling.
// ---------------------------------------------------------------------------
template <class T>
Var<T> upsample_nearest2(const Var<T>& x) {
  const auto& s = x.value().shape;
  const int N = s[0], C = s[1], H = s[2], W = s[3];
  Tensor<T> y({N, C, H * 2, W * 2});
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc) {
    const T* xp = xd + nc * H * W;
    T* yp = yd + nc * H * W * 4;
    for (int i = 0; i < H * 2; ++i)
      for (int j = 0; j < W * 2; ++j) yp[static_cast<std::size_t>(i) * W * 2 + j] = xp[static_cast<std::size_t>(i / 2) * W + j / 2];
  }
  return make_result<T>(std::move(y), {x.handle()}, [N, C, H, W](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* g = self.grad.ptr();
    T* dx = xn->grad.ptr();
    for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc) {
      const T* gp = g + nc * H * W * 4;
      T* dp = dx + nc * H * W;
      for (int i = 0; i < H * 2; ++i)
        for (int j = 0; j < W * 2; ++j) dp[static_cast<std::size_t>(i / 2) * W + j / 2] += gp[static_cast<std::size_t>(i) * W * 2 + j];
    }
  });
}

// Bilinear resize to (OH, OW), half-pixel centers, edges clamped.
template <class T>
Var<T> upsample_bilinear(const Var<T>& x, int OH, int OW) {
  const auto& s = x.value().shape;
  const int N = s[0], C = s[1], H = s[2], W = s[3];
  struct Taps {
    std::vector<int> i0, i1;
    std::vector<T> f;
  };
  auto make_taps = [](int in, int out) {
    Taps t;
    t.i0.resize(static_cast<std::size_t>(out));
    t.i1.resize(static_cast<std::size_t>(out));
    t.f.resize(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double pos = (o + 0.5) * scale - 0.5;
      if (pos < 0) pos = 0;
      int lo = static_cast<int>(pos);
      if (lo > in - 1) lo = in - 1;
      int hi = std::min(lo + 1, in - 1);
      t.i0[static_cast<std::size_t>(o)] = lo;
      t.i1[static_cast<std::size_t>(o)] = hi;
      t.f[static_cast<std::size_t>(o)] = static_cast<T>(pos - lo);
    }
    return t;
  };
  Taps ty = make_taps(H, OH), tx = make_taps(W, OW);

  Tensor<T> y({N, C, OH, OW});
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc) {
    const T* xp = xd + nc * H * W;
    T* yp = yd + nc * static_cast<std::size_t>(OH) * OW;
    for (int i = 0; i < OH; ++i) {
      const int y0 = ty.i0[static_cast<std::size_t>(i)], y1 = ty.i1[static_cast<std::size_t>(i)];
      const T fy = ty.f[static_cast<std::size_t>(i)];
      for (int j = 0; j < OW; ++j) {
        const int x0 = tx.i0[static_cast<std::size_t>(j)], x1 = tx.i1[static_cast<std::size_t>(j)];
        const T fx = tx.f[static_cast<std::size_t>(j)];
        const T a = xp[static_cast<std::size_t>(y0) * W + x0], bb = xp[static_cast<std::size_t>(y0) * W + x1];
        const T c = xp[static_cast<std::size_t>(y1) * W + x0], d = xp[static_cast<std::size_t>(y1) * W + x1];
        yp[static_cast<std::size_t>(i) * OW + j] =
            (T(1) - fy) * ((T(1) - fx) * a + fx * bb) + fy * ((T(1) - fx) * c + fx * d);
      }
    }
  }
  return make_result<T>(std::move(y), {x.handle()}, [N, C, H, W, OH, OW, ty, tx](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* g = self.grad.ptr();
    T* dx = xn->grad.ptr();
    for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc) {
      const T* gp = g + nc * static_cast<std::size_t>(OH) * OW;
      T* dp = dx + nc * H * W;
      for (int i = 0; i < OH; ++i) {
        const int y0 = ty.i0[static_cast<std::size_t>(i)], y1 = ty.i1[static_cast<std::size_t>(i)];
        const T fy = ty.f[static_cast<std::size_t>(i)];
        for (int j = 0; j < OW; ++j) {
          const int x0 = tx.i0[static_cast<std::size_t>(j)], x1 = tx.i1[static_cast<std::size_t>(j)];
          const T fx = tx.f[static_cast<std::size_t>(j)];
          const T gv = gp[static_cast<std::size_t>(i) * OW + j];
          dp[static_cast<std::size_t>(y0) * W + x0] += (T(1) - fy) * (T(1) - fx) * gv;
          dp[static_cast<std::size_t>(y0) * W + x1] += (T(1) - fy) * fx * gv;
          dp[static_cast<std::size_t>(y1) * W + x0] += fy * (T(1) - fx) * gv;
          dp[static_cast<std::size_t>(y1) * W + x1] += fy * fx * gv;
        }
      }
    }
  });
}

template <class T>
Var<T> avg_pool2(const Var<T>& x) {
  const auto& s = x.value().shape;
  const int N = s[0], C = s[1], H = s[2], W = s[3];
  if (H % 2 || W % 2) throw std::invalid_argument("avg_pool2: odd input dims");
  Tensor<T> y({N, C, H / 2, W / 2});
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc) {
    const T* xp = xd + nc * H * W;
    T* yp = yd + nc * H * W / 4;
    for (int i = 0; i < H / 2; ++i)
      for (int j = 0; j < W / 2; ++j)
        yp[static_cast<std::size_t>(i) * (W / 2) + j] =
            (xp[static_cast<std::size_t>(2 * i) * W + 2 * j] + xp[static_cast<std::size_t>(2 * i) * W + 2 * j + 1] +
             xp[static_cast<std::size_t>(2 * i + 1) * W + 2 * j] + xp[static_cast<std::size_t>(2 * i + 1) * W + 2 * j + 1]) /
            T(4);
  }
  return make_result<T>(std::move(y), {x.handle()}, [N, C, H, W](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* g = self.grad.ptr();
    T* dx = xn->grad.ptr();
    for (std::size_t nc = 0; nc < static_cast<std::size_t>(N) * C; ++nc) {
      const T* gp = g + nc * H * W / 4;
      T* dp = dx + nc * H * W;
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
          dp[static_cast<std::size_t>(i) * W + j] += gp[static_cast<std::size_t>(i / 2) * (W / 2) + j / 2] / T(4);
    }
  });
}

// ---------------------------------------------------------------------------
// Softmax over the channel dimension at every pixel.
// ---------------------------------------------------------------------------
template <class T>
Var<T> softmax_channels(const Var<T>& x) {
  const auto& s = x.value().shape;
  const int N = s[0], C = s[1];
  const std::size_t HW = static_cast<std::size_t>(s[2]) * s[3];
  Tensor<T> y(s);
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (int n = 0; n < N; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * C * HW;
    for (std::size_t p = 0; p < HW; ++p) {
      T mx = xd[base + p];
      for (int c = 1; c < C; ++c) mx = std::max(mx, xd[base + c * HW + p]);
      T sum = T(0);
      for (int c = 0; c < C; ++c) {
        const T e = std::exp(xd[base + c * HW + p] - mx);
        yd[base + c * HW + p] = e;
        sum += e;
      }
      for (int c = 0; c < C; ++c) yd[base + c * HW + p] /= sum;
    }
  }
  return make_result<T>(std::move(y), {x.handle()}, [N, C, HW](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* g = self.grad.ptr();
    const T* yd = self.value.ptr();
    T* dx = xn->grad.ptr();
    for (int n = 0; n < N; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * C * HW;
      for (std::size_t p = 0; p < HW; ++p) {
        T dot = T(0);
        for (int c = 0; c < C; ++c) dot += g[base + c * HW + p] * yd[base + c * HW + p];
        for (int c = 0; c < C; ++c)
          dx[base + c * HW + p] += yd[base + c * HW + p] * (g[base + c * HW + p] - dot);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Arithmetic and reductions.
// ---------------------------------------------------------------------------
template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::check_shape(a, b, "add");
  Tensor<T> y(a.value().shape);
  const T* ad = a.value().ptr();
  const T* bd = b.value().ptr();
  T* yd = y.ptr();
  for (std::size_t i = 0; i < y.numel(); ++i) yd[i] = ad[i] + bd[i];
  return make_result<T>(std::move(y), {a.handle(), b.handle()}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->accumulate(self.grad);
    }
  });
}

template <class T>
Var<T> mul_const(const Var<T>& x, T c) {
  Tensor<T> y(x.value().shape);
  const T* xd = x.value().ptr();
  T* yd = y.ptr();
  for (std::size_t i = 0; i < y.numel(); ++i) yd[i] = xd[i] * c;
  return make_result<T>(std::move(y), {x.handle()}, [c](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T* g = self.grad.ptr();
    T* dx = xn->grad.ptr();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) dx[i] += c * g[i];
  });
}

template <class T>
Var<T> mean_all(const Var<T>& x) {
  const std::size_t n = x.value().numel();
  T acc = T(0);
  const T* xd = x.value().ptr();
  for (std::size_t i = 0; i < n; ++i) acc += xd[i];
  return make_result<T>(Tensor<T>::scalar(acc / static_cast<T>(n)), {x.handle()}, [n](Node<T>& self) {
    Node<T>* xn = self.parents[0].get();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T g = self.grad.data[0] / static_cast<T>(n);
    T* dx = xn->grad.ptr();
    for (std::size_t i = 0; i < n; ++i) dx[i] += g;
  });
}

// mean((x - target)^2); the LSGAN building block.
template <class T>
Var<T> mse_to_const(const Var<T>& x, T target) {
  const std::size_t n = x.value().numel();
  const T* xd = x.value().ptr();
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T d = xd[i] - target;
    acc += d * d;
  }
  return make_result<T>(Tensor<T>::scalar(acc / static_cast<T>(n)), {x.handle()},
                        [n, target](Node<T>& self) {
                          Node<T>* xn = self.parents[0].get();
                          if (!xn->requires_grad) return;
                          xn->ensure_grad();
                          const T g = self.grad.data[0];
                          const T* xd = xn->value.ptr();
                          T* dx = xn->grad.ptr();
                          for (std::size_t i = 0; i < n; ++i)
                            dx[i] += g * T(2) * (xd[i] - target) / static_cast<T>(n);
                        });
}

// mean |a - b|; gradients flow into both arguments. sign(0) taken as 0.
template <class T>
Var<T> l1_mean(const Var<T>& a, const Var<T>& b) {
  detail::check_shape(a, b, "l1_mean");
  const std::size_t n = a.value().numel();
  const T* ad = a.value().ptr();
  const T* bd = b.value().ptr();
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(ad[i] - bd[i]);
  return make_result<T>(Tensor<T>::scalar(acc / static_cast<T>(n)), {a.handle(), b.handle()},
                        [n](Node<T>& self) {
                          Node<T>* an = self.parents[0].get();
                          Node<T>* bn = self.parents[1].get();
                          const T g = self.grad.data[0] / static_cast<T>(n);
                          const T* ad = an->value.ptr();
                          const T* bd = bn->value.ptr();
                          if (an->requires_grad) an->ensure_grad();
                          if (bn->requires_grad) bn->ensure_grad();
                          for (std::size_t i = 0; i < n; ++i) {
                            const T d = ad[i] - bd[i];
                            const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                            if (an->requires_grad) an->grad.data[i] += g * s;
                            if (bn->requires_grad) bn->grad.data[i] -= g * s;
                          }
                        });
}

// mean(weights ⊙ |a - b|) with a constant weight tensor.
template <class T>
Var<T> weighted_l1_mean(const Var<T>& a, const Var<T>& b, const Tensor<T>& weights) {
  detail::check_shape(a, b, "weighted_l1_mean");
  if (!a.value().same_shape(weights))
    throw std::invalid_argument("weighted_l1_mean: weight shape mismatch");
  const std::size_t n = a.value().numel();
  const T* ad = a.value().ptr();
  const T* bd = b.value().ptr();
  const T* wd = weights.ptr();
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += wd[i] * std::abs(ad[i] - bd[i]);
  auto w = std::make_shared<Tensor<T>>(weights);
  return make_result<T>(Tensor<T>::scalar(acc / static_cast<T>(n)), {a.handle(), b.handle()},
                        [n, w](Node<T>& self) {
                          Node<T>* an = self.parents[0].get();
                          Node<T>* bn = self.parents[1].get();
                          const T g = self.grad.data[0] / static_cast<T>(n);
                          const T* ad = an->value.ptr();
                          const T* bd = bn->value.ptr();
                          const T* wd = w->ptr();
                          if (an->requires_grad) an->ensure_grad();
                          if (bn->requires_grad) bn->ensure_grad();
                          for (std::size_t i = 0; i < n; ++i) {
                            const T d = ad[i] - bd[i];
                            const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                            if (an->requires_grad) an->grad.data[i] += g * wd[i] * s;
                            if (bn->requires_grad) bn->grad.data[i] -= g * wd[i] * s;
                          }
                        });
}

// Cross entropy on an already-softmaxed probability map with an ignore index.
// probs (N, C, H, W); labels (N, H, W). Probabilities are clamped below at
// `clamp` before the log. If every pixel is ignored the loss is 0 and
// *all_ignored is set.
template <class T>
Var<T> ce_ignore(const Var<T>& probs, const Tensor<int>& labels, int ignore_index,
                 bool* all_ignored = nullptr, T clamp = T(1e-8)) {
  const auto& s = probs.value().shape;
  const int N = s[0], C = s[1];
  const std::size_t HW = static_cast<std::size_t>(s[2]) * s[3];
  if (labels.numel() != static_cast<std::size_t>(N) * HW)
    throw std::invalid_argument("ce_ignore: label shape mismatch");
  const T* pd = probs.value().ptr();
  const int* ld = labels.ptr();
  double acc = 0;
  std::size_t valid = 0;
  for (int n = 0; n < N; ++n) {
    const std::size_t pbase = static_cast<std::size_t>(n) * C * HW;
    const std::size_t lbase = static_cast<std::size_t>(n) * HW;
    for (std::size_t p = 0; p < HW; ++p) {
      const int lab = ld[lbase + p];
      if (lab == ignore_index) continue;
      if (lab < 0 || lab >= C) throw std::invalid_argument("ce_ignore: label out of range");
      const T pr = std::max(pd[pbase + static_cast<std::size_t>(lab) * HW + p], clamp);
      acc -= std::log(static_cast<double>(pr));
      ++valid;
    }
  }
  if (all_ignored) *all_ignored = (valid == 0);
  const T loss = valid ? static_cast<T>(acc / static_cast<double>(valid)) : T(0);
  auto lab_copy = std::make_shared<Tensor<int>>(labels);
  return make_result<T>(Tensor<T>::scalar(loss), {probs.handle()},
                        [N, C, HW, ignore_index, clamp, valid, lab_copy](Node<T>& self) {
                          if (!valid) return;
                          Node<T>* pn = self.parents[0].get();
                          if (!pn->requires_grad) return;
                          pn->ensure_grad();
                          const T g = self.grad.data[0] / static_cast<T>(valid);
                          const T* pd = pn->value.ptr();
                          T* dp = pn->grad.ptr();
                          const int* ld = lab_copy->ptr();
                          for (int n = 0; n < N; ++n) {
                            const std::size_t pbase = static_cast<std::size_t>(n) * C * HW;
                            const std::size_t lbase = static_cast<std::size_t>(n) * HW;
                            for (std::size_t p = 0; p < HW; ++p) {
                              const int lab = ld[lbase + p];
                              if (lab == ignore_index) continue;
                              const std::size_t idx = pbase + static_cast<std::size_t>(lab) * HW + p;
                              if (pd[idx] > clamp) dp[idx] -= g / pd[idx];
                            }
                          }
                        });
}

}  // namespace trident::ops

#endif  // TRIDENT_OPS_HPP
