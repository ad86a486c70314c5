#pragma once

#include <cstddef>
#include <span>

// Raw compute kernels behind the differentiable ops. `reference` is the
// plain serial implementation; `parallel` splits the same loops across
// OpenMP threads by output slice, so both produce bit-identical results.
namespace simcount::kernels {

struct ConvGeometry {
  std::size_t c_in = 0, h = 0, w = 0;
  std::size_t c_out = 0, k = 0;
  std::size_t stride = 1, padding = 0;
  std::size_t h_out = 0, w_out = 0;
};

#define SIMCOUNT_KERNEL_DECLS                                                 \
  void matmul(std::size_t m, std::size_t k, std::size_t n,                    \
              std::span<const double> a, std::span<const double> b,           \
              std::span<double> out);                                         \
  void conv2d_forward(const ConvGeometry& g, std::span<const double> input,   \
                      std::span<const double> kernel,                         \
                      std::span<const double> bias, std::span<double> out);   \
  void conv2d_backward_input(const ConvGeometry& g,                           \
                             std::span<const double> grad_out,                \
                             std::span<const double> kernel,                  \
                             std::span<double> grad_input);                   \
  void conv2d_backward_kernel(const ConvGeometry& g,                          \
                              std::span<const double> grad_out,               \
                              std::span<const double> input,                  \
                              std::span<double> grad_kernel);                 \
  void upsample_forward(std::size_t c, std::size_t h, std::size_t w,          \
                        std::size_t factor, std::span<const double> input,    \
                        std::span<double> out);                               \
  void upsample_backward(std::size_t c, std::size_t h, std::size_t w,         \
                         std::size_t factor, std::span<const double> grad_out,\
                         std::span<double> grad_input);

// matmul: out = a * b (overwrites). conv2d_forward overwrites out; the
// backward kernels accumulate into their destinations. upsample_forward
// overwrites, upsample_backward accumulates.
namespace reference {
SIMCOUNT_KERNEL_DECLS
}

namespace parallel {
SIMCOUNT_KERNEL_DECLS
}

#undef SIMCOUNT_KERNEL_DECLS

}  // namespace simcount::kernels
