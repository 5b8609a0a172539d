// Copyright 2026 The simulst Authors
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
// limitations under the License.

#pragma once

// Forward/backward kernels shared by the tape ops. All accumulations are in
// float and follow a fixed order so that results are bit-reproducible:
//   matmul: per output element, k ascending.
//   conv2d: per output element, input channel, then kernel row, then kernel
//           column ascending, bias added last.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>

#include "simulst/autodiff/tensor.hpp"

namespace simulst::ad::kernels {

enum class Padding { kValid, kSame };

inline void matmul(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  std::fill(c, c + m * n, 0.0f);
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * n;
    const float* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// c[m×n] += aᵀ b where a is [k×m] and b is [k×n].
inline void matmul_at_b_acc(const float* a, const float* b, float* c, std::size_t k,
                            std::size_t m, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const float* arow = a + p * m;
    const float* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const float av = arow[i];
      if (av == 0.0f) continue;
      float* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// c[m×k] += a bᵀ where a is [m×n] and b is [k×n].
inline void matmul_a_bt_acc(const float* a, const float* b, float* c, std::size_t m,
                            std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * n;
    float* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float* brow = b + p * n;
      float acc = 0.0f;
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

struct ConvGeometry {
  std::size_t c_in, h, w, c_out, kh, kw, stride, pad, h_out, w_out;
};

inline ConvGeometry conv_geometry(const Shape& input, const Shape& kernels, std::size_t stride,
                                  Padding padding) {
  if (input.size() != 3 || kernels.size() != 4)
    throw ShapeError("conv2d expects input CxHxW and kernels OxCxKhxKw, got " + shape_str(input) +
                     " and " + shape_str(kernels));
  if (kernels[1] != input[0])
    throw ShapeError("conv2d channel mismatch: input " + shape_str(input) + ", kernels " +
                     shape_str(kernels));
  if (kernels[2] % 2 == 0 || kernels[3] % 2 == 0)
    throw ShapeError("conv2d kernel extent must be odd, got " + shape_str(kernels));
  if (stride == 0) throw ShapeError("conv2d stride must be positive");
  ConvGeometry g{input[0], input[1], input[2], kernels[0], kernels[2], kernels[3], stride, 0, 0, 0};
  // Same padding assumes square kernels in practice; pad from the row extent.
  g.pad = padding == Padding::kSame ? g.kh / 2 : 0;
  const std::size_t ph = g.h + 2 * g.pad;
  const std::size_t pw = g.w + 2 * (padding == Padding::kSame ? g.kw / 2 : 0);
  if (g.kh > ph || g.kw > pw)
    throw ShapeError("conv2d kernel " + shape_str(kernels) + " larger than padded input " +
                     shape_str(input));
  g.h_out = (ph - g.kh) / stride + 1;
  g.w_out = (pw - g.kw) / stride + 1;
  return g;
}

inline std::size_t pad_w(const ConvGeometry& g) { return g.pad == 0 ? 0 : g.kw / 2; }

inline void conv2d_forward(const ConvGeometry& g, const float* in, const float* k,
                           const float* bias, float* out) {
  const std::size_t pw = pad_w(g);
  std::fill(out, out + g.c_out * g.h_out * g.w_out, 0.0f);
  for (std::size_t co = 0; co < g.c_out; ++co) {
    float* oplane = out + co * g.h_out * g.w_out;
    for (std::size_t ci = 0; ci < g.c_in; ++ci) {
      const float* iplane = in + ci * g.h * g.w;
      const float* kplane = k + (co * g.c_in + ci) * g.kh * g.kw;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const float wv = kplane[ky * g.kw + kx];
          for (std::size_t oy = 0; oy < g.h_out; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                      static_cast<std::ptrdiff_t>(g.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
            const float* irow = iplane + static_cast<std::size_t>(iy) * g.w;
            float* orow = oplane + oy * g.w_out;
            if (g.stride == 1) {
              // ix = ox + kx - pw must lie in [0, w).
              const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) -
                                           static_cast<std::ptrdiff_t>(pw);
              const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
              const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
                  static_cast<std::ptrdiff_t>(g.w_out), static_cast<std::ptrdiff_t>(g.w) - shift);
              for (std::ptrdiff_t ox = lo; ox < hi; ++ox) orow[ox] += wv * irow[ox + shift];
            } else {
              for (std::size_t ox = 0; ox < g.w_out; ++ox) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                          static_cast<std::ptrdiff_t>(pw);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                orow[ox] += wv * irow[ix];
              }
            }
          }
        }
      }
    }
    if (bias != nullptr) {
      const float bv = bias[co];
      for (std::size_t i = 0; i < g.h_out * g.w_out; ++i) oplane[i] += bv;
    }
  }
}

inline void conv2d_backward(const ConvGeometry& g, const float* in, const float* k,
                            const float* dout, float* din, float* dk, float* dbias) {
  const std::size_t pw = pad_w(g);
  for (std::size_t co = 0; co < g.c_out; ++co) {
    const float* dplane = dout + co * g.h_out * g.w_out;
    if (dbias != nullptr) {
      float acc = 0.0f;
      for (std::size_t i = 0; i < g.h_out * g.w_out; ++i) acc += dplane[i];
      dbias[co] += acc;
    }
    for (std::size_t ci = 0; ci < g.c_in; ++ci) {
      const float* iplane = in + ci * g.h * g.w;
      float* diplane = din != nullptr ? din + ci * g.h * g.w : nullptr;
      const float* kplane = k + (co * g.c_in + ci) * g.kh * g.kw;
      float* dkplane = dk != nullptr ? dk + (co * g.c_in + ci) * g.kh * g.kw : nullptr;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const float wv = kplane[ky * g.kw + kx];
          float dw = 0.0f;
          for (std::size_t oy = 0; oy < g.h_out; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                      static_cast<std::ptrdiff_t>(g.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
            const std::size_t roff = static_cast<std::size_t>(iy) * g.w;
            const float* drow = dplane + oy * g.w_out;
            for (std::size_t ox = 0; ox < g.w_out; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                        static_cast<std::ptrdiff_t>(pw);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
              const float d = drow[ox];
              dw += d * iplane[roff + static_cast<std::size_t>(ix)];
              if (diplane != nullptr) diplane[roff + static_cast<std::size_t>(ix)] += d * wv;
            }
          }
          if (dkplane != nullptr) dkplane[ky * g.kw + kx] += dw;
        }
      }
    }
  }
}

/// 2×2 window, stride 2. Writes the flat input index of each window's maximum
/// (first in row-major order on ties) to argmax.
inline void maxpool2x2_forward(std::size_t c, std::size_t h, std::size_t w, const float* in,
                               float* out, std::size_t* argmax) {
  const std::size_t ho = h / 2, wo = w / 2;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = ch * h * w + (2 * oy) * w + 2 * ox;
        float best_v = in[best];
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = ch * h * w + (2 * oy + dy) * w + 2 * ox + dx;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = ch * ho * wo + oy * wo + ox;
        out[o] = best_v;
        argmax[o] = best;
      }
    }
  }
}

}  // namespace simulst::ad::kernels
