#include "simcount/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "simcount/errors.hpp"
#include "simcount/kernels.hpp"

namespace simcount {

namespace {

using detail::BackwardFn;
using detail::Node;
using detail::NodePtr;

Tensor make_op(Shape shape, std::vector<double> data, const char* op,
               std::initializer_list<const Tensor*> inputs, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs_grad = false;
  if (grad_mode_enabled()) {
    for (const Tensor* t : inputs) needs_grad = needs_grad || (t->defined() && t->requires_grad());
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Tensor* t : inputs) {
      // Undefined optional operands keep their slot so parent indices stay fixed.
      node->parents.push_back(t->defined() ? t->node() : nullptr);
    }
    node->backward = std::move(fn);
  }
  return Tensor(std::move(node));
}

// Grad buffer of parent `i`, or nullptr when it does not take gradients.
double* grad_of(const Node& self, std::size_t i) {
  const NodePtr& p = self.parents[i];
  if (!p || !p->requires_grad) return nullptr;
  return p->grad.data();
}

const std::vector<double>& data_of(const Node& self, std::size_t i) { return self.parents[i]->data; }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         to_string(t.shape()));
  }
}

std::vector<double> transposed(std::span<const double> src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = src[i * cols + j];
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::parallel::matmul(m, k, n, a.data(), b.data(), out);
  return make_op({m, n}, std::move(out), "matmul", {&a, &b}, [m, k, n](const Node& self) {
    if (double* ga = grad_of(self, 0)) {
      const auto bt = transposed(data_of(self, 1), k, n);
      std::vector<double> tmp(m * k);
      kernels::parallel::matmul(m, n, k, self.grad, bt, tmp);
      for (std::size_t i = 0; i < tmp.size(); ++i) ga[i] += tmp[i];
    }
    if (double* gb = grad_of(self, 1)) {
      const auto at = transposed(data_of(self, 0), m, k);
      std::vector<double> tmp(k * n);
      kernels::parallel::matmul(k, m, n, at, self.grad, tmp);
      for (std::size_t i = 0; i < tmp.size(); ++i) gb[i] += tmp[i];
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2);
  const std::size_t r = a.dim(0), c = a.dim(1);
  return make_op({c, r}, transposed(a.data(), r, c), "transpose", {&a}, [r, c](const Node& self) {
    if (double* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_op(std::move(shape), std::move(out), "reshape", {&a}, [](const Node& self) {
    if (double* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return make_op(a.shape(), std::move(out), "add", {&a, &b}, [](const Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* g = grad_of(self, p)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  return make_op(a.shape(), std::move(out), "sub", {&a, &b}, [](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return make_op(a.shape(), std::move(out), "hadamard", {&a, &b}, [](const Node& self) {
    const auto& av = data_of(self, 0);
    const auto& bv = data_of(self, 1);
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (double* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * factor;
  return make_op(a.shape(), std::move(out), "scale", {&a}, [factor](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
    }
  });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) throw DimensionError("scale_by: factor must have one element, got " + to_string(s.shape()));
  const double factor = s.item();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * factor;
  return make_op(a.shape(), std::move(out), "scale_by", {&a, &s}, [](const Node& self) {
    const auto& av = data_of(self, 0);
    const double factor = data_of(self, 1)[0];
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
    }
    if (double* g = grad_of(self, 1)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * av[i];
      g[0] += acc;
    }
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) > 0.0 ? a.at(i) : 0.0;
  return make_op(a.shape(), std::move(out), "relu", {&a}, [](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      const auto& x = data_of(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (x[i] > 0.0) g[i] += self.grad[i];
      }
    }
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.at(i));
  return make_op(a.shape(), std::move(out), "tanh", {&a}, [](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double y = self.data[i];
        g[i] += self.grad[i] * (1.0 - y * y);
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return make_op({1}, {acc}, "sum", {&a}, [](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      const double up = self.grad[0];
      const std::size_t n = self.parents[0]->data.size();
      for (std::size_t i = 0; i < n; ++i) g[i] += up;
    }
  });
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank("conv2d input", input, 3);
  require_rank("conv2d kernel", kernel, 4);
  kernels::ConvGeometry g;
  g.c_in = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.c_out = kernel.dim(0);
  g.k = kernel.dim(2);
  g.stride = stride;
  g.padding = padding;
  if (kernel.dim(1) != g.c_in || kernel.dim(3) != g.k) {
    throw DimensionError("conv2d: kernel " + to_string(kernel.shape()) + " incompatible with input " +
                         to_string(input.shape()));
  }
  if (g.k % 2 == 0) throw ConfigError("conv2d: kernel size must be odd, got " + std::to_string(g.k));
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.c_out)) {
    throw DimensionError("conv2d: bias " + to_string(bias.shape()) + " does not match " +
                         std::to_string(g.c_out) + " output channels");
  }
  const std::size_t span_h = g.h + 2 * padding, span_w = g.w + 2 * padding;
  if (span_h < g.k || span_w < g.k || (span_h - g.k) % stride != 0 || (span_w - g.k) % stride != 0) {
    throw ConfigError("conv2d: output size not integral for input " + to_string(input.shape()) +
                      ", k=" + std::to_string(g.k) + ", stride=" + std::to_string(stride) +
                      ", padding=" + std::to_string(padding));
  }
  g.h_out = (span_h - g.k) / stride + 1;
  g.w_out = (span_w - g.k) / stride + 1;

  std::vector<double> out(g.c_out * g.h_out * g.w_out);
  const std::span<const double> bias_view = bias.defined() ? bias.data() : std::span<const double>{};
  kernels::parallel::conv2d_forward(g, input.data(), kernel.data(), bias_view, out);
  return make_op({g.c_out, g.h_out, g.w_out}, std::move(out), "conv2d", {&input, &kernel, &bias},
                 [g](const Node& self) {
                   if (double* gi = grad_of(self, 0)) {
                     kernels::parallel::conv2d_backward_input(g, self.grad, data_of(self, 1),
                                                              {gi, g.c_in * g.h * g.w});
                   }
                   if (double* gk = grad_of(self, 1)) {
                     kernels::parallel::conv2d_backward_kernel(g, self.grad, data_of(self, 0),
                                                               {gk, g.c_out * g.c_in * g.k * g.k});
                   }
                   if (double* gb = grad_of(self, 2)) {
                     const std::size_t plane = g.h_out * g.w_out;
                     for (std::size_t co = 0; co < g.c_out; ++co) {
                       double acc = 0.0;
                       for (std::size_t i = 0; i < plane; ++i) acc += self.grad[co * plane + i];
                       gb[co] += acc;
                     }
                   }
                 });
}

Tensor pad2d(const Tensor& input, std::size_t top, std::size_t bottom, std::size_t left,
             std::size_t right) {
  require_rank("pad2d", input, 3);
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t ho = h + top + bottom, wo = w + left + right;
  std::vector<double> out(c * ho * wo, 0.0);
  const auto src = input.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((ch * h + y) * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>((ch * ho + y + top) * wo + left));
  return make_op({c, ho, wo}, std::move(out), "pad2d", {&input}, [=](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) g[(ch * h + y) * w + x] += self.grad[(ch * ho + y + top) * wo + left + x];
    }
  });
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank("global_avg_pool", input, 3);
  const std::size_t c = input.dim(0), plane = input.dim(1) * input.dim(2);
  std::vector<double> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += input.at(ch * plane + i);
    out[ch] = acc / static_cast<double>(plane);
  }
  return make_op({c}, std::move(out), "global_avg_pool", {&input}, [c, plane](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      const double inv = 1.0 / static_cast<double>(plane);
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i) g[ch * plane + i] += self.grad[ch] * inv;
    }
  });
}

Tensor bilinear_upsample(const Tensor& input, std::size_t factor) {
  require_rank("bilinear_upsample", input, 3);
  if (factor == 0) throw ContractError("bilinear_upsample: factor must be >= 1");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  std::vector<double> out(c * h * factor * w * factor);
  kernels::parallel::upsample_forward(c, h, w, factor, input.data(), out);
  return make_op({c, h * factor, w * factor}, std::move(out), "bilinear_upsample", {&input},
                 [=](const Node& self) {
                   if (double* g = grad_of(self, 0)) {
                     kernels::parallel::upsample_backward(c, h, w, factor, self.grad, {g, c * h * w});
                   }
                 });
}

namespace {

void softmax_inplace(const double* x, double* y, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - m);
    z += y[i];
  }
  for (std::size_t i = 0; i < n; ++i) y[i] /= z;
}

void softmax_backward_row(const double* y, const double* gy, double* gx, std::size_t n) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += gy[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - dot);
}

}  // namespace

Tensor softmax(const Tensor& input) {
  require_rank("softmax", input, 1);
  const std::size_t n = input.size();
  std::vector<double> out(n);
  softmax_inplace(input.data().data(), out.data(), n);
  return make_op({n}, std::move(out), "softmax", {&input}, [n](const Node& self) {
    if (double* g = grad_of(self, 0)) softmax_backward_row(self.data.data(), self.grad.data(), g, n);
  });
}

Tensor softmax_rows(const Tensor& input) {
  require_rank("softmax_rows", input, 2);
  const std::size_t rows = input.dim(0), cols = input.dim(1);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) softmax_inplace(input.data().data() + r * cols, out.data() + r * cols, cols);
  return make_op(input.shape(), std::move(out), "softmax_rows", {&input}, [rows, cols](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r)
        softmax_backward_row(self.data.data() + r * cols, self.grad.data() + r * cols, g + r * cols, cols);
    }
  });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape trailing(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    if (Shape(p.shape().begin() + 1, p.shape().end()) != trailing) {
      throw DimensionError("concat: trailing dims of " + to_string(p.shape()) + " differ from " +
                           to_string(parts[0].shape()));
    }
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
    rows += p.dim(0);
  }
  Shape shape = parts[0].shape();
  shape[0] = rows;

  // Parent list has a variable length; build the node directly.
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(out);
  node->op = "concat";
  bool needs_grad = false;
  if (grad_mode_enabled()) {
    for (const Tensor& p : parts) needs_grad = needs_grad || p.requires_grad();
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Tensor& p : parts) node->parents.push_back(p.node());
    node->backward = [offsets](const Node& self) {
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        if (double* g = grad_of(self, i)) {
          const std::size_t n = self.parents[i]->data.size();
          for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[offsets[i] + j];
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.dim(0)) {
    throw ContractError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") invalid for shape " + to_string(a.shape()));
  }
  const std::size_t row = a.size() / a.dim(0);
  Shape shape = a.shape();
  shape[0] = end - begin;
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * row),
                          a.data().begin() + static_cast<std::ptrdiff_t>(end * row));
  const std::size_t offset = begin * row;
  return make_op(std::move(shape), std::move(out), "slice", {&a}, [offset](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
    }
  });
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("stack: no inputs");
  std::vector<Tensor> lifted;
  lifted.reserve(parts.size());
  for (const Tensor& p : parts) {
    if (p.shape() != parts[0].shape()) {
      throw DimensionError("stack: shape " + to_string(p.shape()) + " differs from " + to_string(parts[0].shape()));
    }
    Shape s{1};
    s.insert(s.end(), p.shape().begin(), p.shape().end());
    lifted.push_back(reshape(p, std::move(s)));
  }
  return concat(lifted);
}

Tensor mean_axis0(const Tensor& a) {
  const std::size_t n = a.dim(0);
  const std::size_t row = a.size() / n;
  Shape shape(a.shape().begin() + 1, a.shape().end());
  if (shape.empty()) shape = {1};
  std::vector<double> out(row, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < row; ++j) out[j] += a.at(i * row + j);
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= inv;
  return make_op(std::move(shape), std::move(out), "mean_axis0", {&a}, [n, row, inv](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < row; ++j) g[i * row + j] += self.grad[j] * inv;
    }
  });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  if (b.rank() != 1 || b.dim(0) != x.dim(0)) {
    throw DimensionError("add_channel_bias: bias " + to_string(b.shape()) + " vs input " + to_string(x.shape()));
  }
  const std::size_t c = x.dim(0), inner = x.size() / c;
  std::vector<double> out(x.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < inner; ++i) out[ch * inner + i] = x.at(ch * inner + i) + b.at(ch);
  return make_op(x.shape(), std::move(out), "add_channel_bias", {&x, &b}, [c, inner](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_of(self, 1)) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < inner; ++i) acc += self.grad[ch * inner + i];
        g[ch] += acc;
      }
    }
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& b) {
  require_rank("add_row_bias", x, 2);
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (b.rank() != 1 || b.dim(0) != cols) {
    throw DimensionError("add_row_bias: bias " + to_string(b.shape()) + " vs input " + to_string(x.shape()));
  }
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] = x.at(r * cols + j) + b.at(j);
  return make_op(x.shape(), std::move(out), "add_row_bias", {&x, &b}, [rows, cols](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_of(self, 1)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) g[j] += self.grad[r * cols + j];
    }
  });
}

Tensor tile_spatial(const Tensor& v, std::size_t h, std::size_t w) {
  require_rank("tile_spatial", v, 1);
  const std::size_t d = v.dim(0), plane = h * w;
  if (plane == 0) throw ContractError("tile_spatial: empty spatial extent");
  std::vector<double> out(d * plane);
  for (std::size_t c = 0; c < d; ++c) std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(c * plane), plane, v.at(c));
  return make_op({d, h, w}, std::move(out), "tile_spatial", {&v}, [d, plane](const Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += self.grad[c * plane + i];
        g[c] += acc;
      }
    }
  });
}

Tensor log_ratio_loss(const Tensor& scores, std::span<const Mark> marks) {
  if (marks.size() != scores.size()) {
    throw DimensionError("log_ratio_loss: " + std::to_string(marks.size()) + " marks for scores " +
                         to_string(scores.shape()));
  }
  const auto s = scores.data();
  constexpr double kNoMax = -std::numeric_limits<double>::infinity();
  double m_all = kNoMax, m_pos = kNoMax;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (marks[i] == Mark::kIgnored) continue;
    m_all = std::max(m_all, s[i]);
    if (marks[i] == Mark::kPositive) m_pos = std::max(m_pos, s[i]);
  }
  if (m_pos == kNoMax) {
    return make_op({1}, {0.0}, "log_ratio_loss", {&scores}, [](const Node&) {});
  }
  // Each log-sum-exp is shifted by its own maximum.
  double all = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (marks[i] == Mark::kIgnored) continue;
    all += std::exp(s[i] - m_all);
    if (marks[i] == Mark::kPositive) pos += std::exp(s[i] - m_pos);
  }
  const double loss = (m_all + std::log(all)) - (m_pos + std::log(pos));
  std::vector<Mark> kept(marks.begin(), marks.end());
  return make_op({1}, {loss}, "log_ratio_loss", {&scores}, [kept, m_all, m_pos, pos, all](const Node& self) {
    double* g = grad_of(self, 0);
    if (g == nullptr) return;
    const auto& sv = data_of(self, 0);
    const double up = self.grad[0];
    // d/ds_i = softmax over kept entries - softmax over positives (if positive)
    for (std::size_t i = 0; i < sv.size(); ++i) {
      if (kept[i] == Mark::kIgnored) continue;
      double d = std::exp(sv[i] - m_all) / all;
      if (kept[i] == Mark::kPositive) d -= std::exp(sv[i] - m_pos) / pos;
      g[i] += up * d;
    }
  });
}

}  // namespace simcount
