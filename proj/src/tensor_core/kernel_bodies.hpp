#pragma once

// Per-slice loop bodies shared by the reference and OpenMP kernels.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "simcount/kernels.hpp"

namespace simcount::kernels::detail {

inline void matmul_row(std::size_t i, std::size_t k, std::size_t n, std::span<const double> a,
                       std::span<const double> b, std::span<double> out) {
  double* row = out.data() + i * n;
  std::fill(row, row + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[i * k + p];
    const double* brow = b.data() + p * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
  }
}

// Output columns ox for which ox*stride + kx - padding lies in [0, w).
struct ColumnRange {
  std::size_t lo = 0, hi = 0;
};

inline ColumnRange valid_outputs(std::size_t kx, std::size_t stride, std::size_t padding,
                                 std::size_t in_len, std::size_t out_len) {
  ColumnRange r;
  if (kx < padding) r.lo = (padding - kx + stride - 1) / stride;
  // ox*stride + kx - padding <= in_len - 1
  const std::size_t limit = in_len - 1 + padding;
  if (limit < kx) return {0, 0};
  r.hi = std::min(out_len, (limit - kx) / stride + 1);
  if (r.lo > r.hi) r.lo = r.hi;
  return r;
}

inline void conv_forward_channel(const ConvGeometry& g, std::size_t co, std::span<const double> input,
                                 std::span<const double> kernel, std::span<const double> bias,
                                 std::span<double> out) {
  const std::size_t plane = g.h_out * g.w_out;
  double* dst = out.data() + co * plane;
  std::fill(dst, dst + plane, bias.empty() ? 0.0 : bias[co]);
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    const double* src = input.data() + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      const ColumnRange rows = valid_outputs(ky, g.stride, g.padding, g.h, g.h_out);
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double kv = kernel[((co * g.c_in + ci) * g.k + ky) * g.k + kx];
        const ColumnRange cols = valid_outputs(kx, g.stride, g.padding, g.w, g.w_out);
        for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
          const double* in_row = src + (oy * g.stride + ky - g.padding) * g.w;
          double* out_row = dst + oy * g.w_out;
          const std::size_t shift = kx - g.padding;  // modular; valid for ox in cols
          if (g.stride == 1) {
            for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) out_row[ox] += kv * in_row[ox + shift];
          } else {
            for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) out_row[ox] += kv * in_row[ox * g.stride + shift];
          }
        }
      }
    }
  }
}

inline void conv_backward_input_channel(const ConvGeometry& g, std::size_t ci,
                                        std::span<const double> grad_out,
                                        std::span<const double> kernel,
                                        std::span<double> grad_input) {
  double* dst = grad_input.data() + ci * g.h * g.w;
  for (std::size_t co = 0; co < g.c_out; ++co) {
    const double* src = grad_out.data() + co * g.h_out * g.w_out;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      const ColumnRange rows = valid_outputs(ky, g.stride, g.padding, g.h, g.h_out);
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double kv = kernel[((co * g.c_in + ci) * g.k + ky) * g.k + kx];
        const ColumnRange cols = valid_outputs(kx, g.stride, g.padding, g.w, g.w_out);
        for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
          double* in_row = dst + (oy * g.stride + ky - g.padding) * g.w;
          const double* go_row = src + oy * g.w_out;
          const std::size_t shift = kx - g.padding;
          for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) in_row[ox * g.stride + shift] += kv * go_row[ox];
        }
      }
    }
  }
}

inline void conv_backward_kernel_channel(const ConvGeometry& g, std::size_t co,
                                         std::span<const double> grad_out,
                                         std::span<const double> input,
                                         std::span<double> grad_kernel) {
  const double* go = grad_out.data() + co * g.h_out * g.w_out;
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    const double* src = input.data() + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      const ColumnRange rows = valid_outputs(ky, g.stride, g.padding, g.h, g.h_out);
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const ColumnRange cols = valid_outputs(kx, g.stride, g.padding, g.w, g.w_out);
        double acc = 0.0;
        for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
          const double* in_row = src + (oy * g.stride + ky - g.padding) * g.w;
          const double* go_row = go + oy * g.w_out;
          const std::size_t shift = kx - g.padding;
          for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) acc += go_row[ox] * in_row[ox * g.stride + shift];
        }
        grad_kernel[((co * g.c_in + ci) * g.k + ky) * g.k + kx] += acc;
      }
    }
  }
}

// Source index pair and blend weight for one output coordinate.
struct Tap {
  std::size_t i0 = 0, i1 = 0;
  double t = 0.0;
};

inline std::vector<Tap> corner_aligned_taps(std::size_t in_len, std::size_t out_len) {
  std::vector<Tap> taps(out_len);
  for (std::size_t o = 0; o < out_len; ++o) {
    if (out_len == 1 || in_len == 1) {
      taps[o] = {0, 0, 0.0};
      continue;
    }
    const double pos = static_cast<double>(o) * static_cast<double>(in_len - 1) /
                       static_cast<double>(out_len - 1);
    std::size_t i0 = std::min(static_cast<std::size_t>(pos), in_len - 1);
    const std::size_t i1 = std::min(i0 + 1, in_len - 1);
    taps[o] = {i0, i1, pos - static_cast<double>(i0)};
  }
  return taps;
}

inline void upsample_forward_channel(std::size_t ch, std::size_t h, std::size_t w, std::size_t factor,
                                     std::span<const double> input, std::span<double> out) {
  const std::size_t ho = h * factor, wo = w * factor;
  const auto ty = corner_aligned_taps(h, ho);
  const auto tx = corner_aligned_taps(w, wo);
  const double* src = input.data() + ch * h * w;
  double* dst = out.data() + ch * ho * wo;
  for (std::size_t y = 0; y < ho; ++y) {
    const Tap& a = ty[y];
    const double* r0 = src + a.i0 * w;
    const double* r1 = src + a.i1 * w;
    for (std::size_t x = 0; x < wo; ++x) {
      const Tap& b = tx[x];
      const double top = r0[b.i0] + b.t * (r0[b.i1] - r0[b.i0]);
      const double bottom = r1[b.i0] + b.t * (r1[b.i1] - r1[b.i0]);
      dst[y * wo + x] = top + a.t * (bottom - top);
    }
  }
}

inline void upsample_backward_channel(std::size_t ch, std::size_t h, std::size_t w, std::size_t factor,
                                      std::span<const double> grad_out, std::span<double> grad_input) {
  const std::size_t ho = h * factor, wo = w * factor;
  const auto ty = corner_aligned_taps(h, ho);
  const auto tx = corner_aligned_taps(w, wo);
  const double* src = grad_out.data() + ch * ho * wo;
  double* dst = grad_input.data() + ch * h * w;
  for (std::size_t y = 0; y < ho; ++y) {
    const Tap& a = ty[y];
    for (std::size_t x = 0; x < wo; ++x) {
      const Tap& b = tx[x];
      const double g = src[y * wo + x];
      dst[a.i0 * w + b.i0] += g * (1.0 - a.t) * (1.0 - b.t);
      dst[a.i0 * w + b.i1] += g * (1.0 - a.t) * b.t;
      dst[a.i1 * w + b.i0] += g * a.t * (1.0 - b.t);
      dst[a.i1 * w + b.i1] += g * a.t * b.t;
    }
  }
}

}  // namespace simcount::kernels::detail
