#include <omp.h>

#include "simcount/kernels.hpp"

#include "kernel_bodies.hpp"

namespace simcount::kernels::parallel {

// Each iteration owns a disjoint output slice and keeps the reference
// summation order, so results do not depend on the thread count.

void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
            std::span<const double> b, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    detail::matmul_row(static_cast<std::size_t>(i), k, n, a, b, out);
  }
}

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<const double> bias,
                    std::span<double> out) {
  const auto channels = static_cast<std::ptrdiff_t>(g.c_out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < channels; ++co) {
    detail::conv_forward_channel(g, static_cast<std::size_t>(co), input, kernel, bias, out);
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out,
                           std::span<const double> kernel, std::span<double> grad_input) {
  const auto channels = static_cast<std::ptrdiff_t>(g.c_in);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < channels; ++ci) {
    detail::conv_backward_input_channel(g, static_cast<std::size_t>(ci), grad_out, kernel, grad_input);
  }
}

void conv2d_backward_kernel(const ConvGeometry& g, std::span<const double> grad_out,
                            std::span<const double> input, std::span<double> grad_kernel) {
  const auto channels = static_cast<std::ptrdiff_t>(g.c_out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < channels; ++co) {
    detail::conv_backward_kernel_channel(g, static_cast<std::size_t>(co), grad_out, input, grad_kernel);
  }
}

void upsample_forward(std::size_t c, std::size_t h, std::size_t w, std::size_t factor,
                      std::span<const double> input, std::span<double> out) {
  const auto channels = static_cast<std::ptrdiff_t>(c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ch = 0; ch < channels; ++ch) {
    detail::upsample_forward_channel(static_cast<std::size_t>(ch), h, w, factor, input, out);
  }
}

void upsample_backward(std::size_t c, std::size_t h, std::size_t w, std::size_t factor,
                       std::span<const double> grad_out, std::span<double> grad_input) {
  const auto channels = static_cast<std::ptrdiff_t>(c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ch = 0; ch < channels; ++ch) {
    detail::upsample_backward_channel(static_cast<std::size_t>(ch), h, w, factor, grad_out, grad_input);
  }
}

}  // namespace simcount::kernels::parallel
