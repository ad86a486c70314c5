#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "simcount/tensor.hpp"

// Differentiable operations. Each records a backward closure when grad mode
// is on and any operand requires grad.
namespace simcount {

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// a * s where s is a one-element tensor (e.g. a learnable ratio).
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);

// Sum of all entries, shape [1].
Tensor sum(const Tensor& a);

// input [c_in,h,w], kernel [c_out,c_in,k,k], bias [c_out] or undefined.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t padding);
// Zero padding of the two spatial axes of [c,h,w].
Tensor pad2d(const Tensor& input, std::size_t top, std::size_t bottom,
             std::size_t left, std::size_t right);
// [c,h,w] -> [c]
Tensor global_avg_pool(const Tensor& input);
// Corner-aligned bilinear interpolation, [c,h,w] -> [c,h*f,w*f].
Tensor bilinear_upsample(const Tensor& input, std::size_t factor);

Tensor softmax(const Tensor& input);
Tensor softmax_rows(const Tensor& input);

// Concatenation along axis 0; trailing dims must agree.
Tensor concat(std::span<const Tensor> parts);
// Rows [begin, end) along axis 0.
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end);
// Stack equal-shape tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);
Tensor mean_axis0(const Tensor& a);

// x[c,...] + b[c] broadcast over trailing axes.
Tensor add_channel_bias(const Tensor& x, const Tensor& b);
// x[n,d] + b[d] broadcast over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& b);
// v[d] -> [d,h,w]
Tensor tile_spatial(const Tensor& v, std::size_t h, std::size_t w);

// Positive/negative membership per entry of the flattened scores.
enum class Mark : std::int8_t { kIgnored = 0, kPositive = 1, kNegative = 2 };

// -log(sum_pos exp(s) / (sum_pos exp(s) + sum_neg exp(s))), stabilized by
// max subtraction. Returns 0 when no entry is positive.
Tensor log_ratio_loss(const Tensor& scores, std::span<const Mark> marks);

}  // namespace simcount
