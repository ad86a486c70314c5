#pragma once

#include <vector>

#include "simcount/tensor.hpp"

namespace simcount {

// Owning copy; safe to iterate when `t` is a temporary.
inline std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace simcount
