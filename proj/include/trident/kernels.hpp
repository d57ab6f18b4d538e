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

#ifndef TRIDENT_KERNELS_HPP
#define TRIDENT_KERNELS_HPP

#include <algorithm>
#include <cstring>
#include <vector>

namespace trident::kernels {

// Register-blocked GEMM accumulate: C (M x N) += A * B, row-major. The
// microkernel holds an MR x NR accumulator tile across the whole k loop, so
// each C element is written once per (m,n) block and accumulated in ascending
// k order by a single caller thread — results are bit-stable for any block
// constants and any worker count.
namespace detail {

inline constexpr int kMR = 6;
inline constexpr int kNR = 64;

// a_rowmajor: A element (m, k) is A[m*K + k]; otherwise A[k*M + m].
template <class T, bool a_rowmajor>
void gemm_block(const T* A, const T* B, T* C, int M, int K, int N, int m0, int m1, int n0, int n1) {
  T acc[kMR][kNR];
  const int nw = n1 - n0;
  const int mw = m1 - m0;
  for (int r = 0; r < mw; ++r)
    for (int c = 0; c < nw; ++c) acc[r][c] = T(0);
  for (int k = 0; k < K; ++k) {
    const T* b = B + static_cast<std::size_t>(k) * N + n0;
    for (int r = 0; r < mw; ++r) {
      const T av = a_rowmajor ? A[static_cast<std::size_t>(m0 + r) * K + k]
                              : A[static_cast<std::size_t>(k) * M + (m0 + r)];
      for (int c = 0; c < nw; ++c) acc[r][c] += av * b[c];
    }
  }
  for (int r = 0; r < mw; ++r) {
    T* crow = C + static_cast<std::size_t>(m0 + r) * N + n0;
    for (int c = 0; c < nw; ++c) crow[c] += acc[r][c];
  }
}

// Full-tile specialization with compile-time bounds; the hot path.
template <class T, bool a_rowmajor>
void gemm_block_full(const T* A, const T* B, T* C, int M, int K, int N, int m0, int n0) {
  T acc[kMR][kNR] = {};
  for (int k = 0; k < K; ++k) {
    const T* b = B + static_cast<std::size_t>(k) * N + n0;
    T a[kMR];
    if constexpr (a_rowmajor) {
      for (int r = 0; r < kMR; ++r) a[r] = A[static_cast<std::size_t>(m0 + r) * K + k];
    } else {
      const T* ak = A + static_cast<std::size_t>(k) * M + m0;
      for (int r = 0; r < kMR; ++r) a[r] = ak[r];
    }
    for (int r = 0; r < kMR; ++r)
      for (int c = 0; c < kNR; ++c) acc[r][c] += a[r] * b[c];
  }
  for (int r = 0; r < kMR; ++r) {
    T* crow = C + static_cast<std::size_t>(m0 + r) * N + n0;
    for (int c = 0; c < kNR; ++c) crow[c] += acc[r][c];
  }
}

template <class T, bool a_rowmajor>
void gemm_dispatch(const T* A, const T* B, T* C, int M, int K, int N) {
  const int mfull = M - M % kMR;
  const int nfull = N - N % kNR;
  for (int n0 = 0; n0 < nfull; n0 += kNR) {
    for (int m0 = 0; m0 < mfull; m0 += kMR) gemm_block_full<T, a_rowmajor>(A, B, C, M, K, N, m0, n0);
    if (mfull < M) gemm_block<T, a_rowmajor>(A, B, C, M, K, N, mfull, M, n0, n0 + kNR);
  }
  if (nfull < N)
    for (int m0 = 0; m0 < M; m0 += kMR)
      gemm_block<T, a_rowmajor>(A, B, C, M, K, N, m0, std::min(M, m0 + kMR), nfull, N);
}

}  // namespace detail

// C (M x N) += A (M x K) * B (K x N)
template <class T>
void gemm_acc(const T* A, const T* B, T* C, int M, int K, int N) {
  detail::gemm_dispatch<T, true>(A, B, C, M, K, N);
}

// C (M x N) += A^T * B where A is stored (K x M) row-major.
template <class T>
void gemm_acc_at(const T* A, const T* B, T* C, int M, int K, int N) {
  detail::gemm_dispatch<T, false>(A, B, C, M, K, N);
}

struct ConvGeom {
  int cin = 0, cout = 0, kh = 3, kw = 3;
  int stride = 1, pad = 1, dil = 1;
  int out_dim(int in) const { return (in + 2 * pad - dil * (kh - 1) - 1) / stride + 1; }
};

// Column matrix layout: rows are the K = cin*kh*kw kernel taps, columns the
// P = oh*ow output positions. Zero padding. Fills every slot.
template <class T>
void im2col(const T* x, int cin, int h, int w, const ConvGeom& g, T* col) {
  const int oh = g.out_dim(h), ow = g.out_dim(w);
  const std::size_t P = static_cast<std::size_t>(oh) * ow;
  std::size_t row = 0;
  for (int c = 0; c < cin; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx, ++row) {
        T* dst = col + row * P;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dil;
          T* d = dst + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= h) {
            std::memset(d, 0, sizeof(T) * static_cast<std::size_t>(ow));
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(iy) * w;
          if (g.stride == 1 && g.dil == 1) {
            // contiguous middle, padded edges
            const int shift = kx - g.pad;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox + shift;
              d[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          } else {
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * g.stride - g.pad + kx * g.dil;
              d[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// Patch-major variant: rows are output positions, columns the kernel taps.
template <class T>
void im2col_pm(const T* x, int cin, int h, int w, const ConvGeom& g, T* col) {
  const int oh = g.out_dim(h), ow = g.out_dim(w);
  const int K = cin * g.kh * g.kw;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* dst = col + (static_cast<std::size_t>(oy) * ow + ox) * K;
      std::size_t t = 0;
      for (int c = 0; c < cin; ++c) {
        const T* xc = x + static_cast<std::size_t>(c) * h * w;
        for (int ky = 0; ky < g.kh; ++ky) {
          const int iy = oy * g.stride - g.pad + ky * g.dil;
          if (iy < 0 || iy >= h) {
            for (int kx = 0; kx < g.kw; ++kx, ++t) dst[t] = T(0);
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(iy) * w;
          for (int kx = 0; kx < g.kw; ++kx, ++t) {
            const int ix = ox * g.stride - g.pad + kx * g.dil;
            dst[t] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add of a (K x P) column-gradient matrix back into the input image.
template <class T>
void col2im_acc(const T* col, int cin, int h, int w, const ConvGeom& g, T* dx) {
  const int oh = g.out_dim(h), ow = g.out_dim(w);
  const std::size_t P = static_cast<std::size_t>(oh) * ow;
  std::size_t row = 0;
  for (int c = 0; c < cin; ++c) {
    T* xc = dx + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx, ++row) {
        const T* src = col + row * P;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dil;
          if (iy < 0 || iy >= h) continue;
          T* xr = xc + static_cast<std::size_t>(iy) * w;
          const T* s = src + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx * g.dil;
            if (ix >= 0 && ix < w) xr[ix] += s[ox];
          }
        }
      }
    }
  }
}

// Per-thread scratch panels. resize() is a no-op after first growth; callers
// that need zeroed memory must clear explicitly.
template <class T>
std::vector<T>& scratch(int which) {
  thread_local std::vector<T> bufs[3];
  return bufs[which];
}

}  // namespace trident::kernels

#endif  // TRIDENT_KERNELS_HPP
