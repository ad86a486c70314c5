#include "simcount/kernels.hpp"

#include <algorithm>

#include "kernel_bodies.hpp"

namespace simcount::kernels::reference {

void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
            std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < m; ++i) detail::matmul_row(i, k, n, a, b, out);
}

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel, std::span<const double> bias,
                    std::span<double> out) {
  for (std::size_t co = 0; co < g.c_out; ++co) detail::conv_forward_channel(g, co, input, kernel, bias, out);
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out,
                           std::span<const double> kernel, std::span<double> grad_input) {
  for (std::size_t ci = 0; ci < g.c_in; ++ci) detail::conv_backward_input_channel(g, ci, grad_out, kernel, grad_input);
}

void conv2d_backward_kernel(const ConvGeometry& g, std::span<const double> grad_out,
                            std::span<const double> input, std::span<double> grad_kernel) {
  for (std::size_t co = 0; co < g.c_out; ++co) detail::conv_backward_kernel_channel(g, co, grad_out, input, grad_kernel);
}

void upsample_forward(std::size_t c, std::size_t h, std::size_t w, std::size_t factor,
                      std::span<const double> input, std::span<double> out) {
  for (std::size_t ch = 0; ch < c; ++ch) detail::upsample_forward_channel(ch, h, w, factor, input, out);
}

void upsample_backward(std::size_t c, std::size_t h, std::size_t w, std::size_t factor,
                       std::span<const double> grad_out, std::span<double> grad_input) {
  for (std::size_t ch = 0; ch < c; ++ch) detail::upsample_backward_channel(ch, h, w, factor, grad_out, grad_input);
}

}  // namespace simcount::kernels::reference
