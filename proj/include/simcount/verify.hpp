#pragma once

#include <string>
#include <vector>

namespace simcount {

struct VerifyCheck {
  std::string name;
  std::string metric;  // "max_rel_error" or "max_abs_error"
  double value = 0;
  double tolerance = 0;
  std::size_t coords = 0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  double seconds = 0;
  bool all_passed() const;
};

inline constexpr double kGradTolerance = 1e-4;

// Gradient checks of every differentiable op and module, plus the
// identity-reduction, loss-oracle and scale-level checks.
VerifyReport run_verify();

// One line per check followed by a summary line.
std::string format_verify_report(const VerifyReport& report);

}  // namespace simcount
