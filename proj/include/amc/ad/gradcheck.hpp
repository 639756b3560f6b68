#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace amc::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;   // at worst_index
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences of `f` around `params`, one coordinate at a time,
/// compared against `analytic`. Relative error uses the denominator
/// max(1, |analytic|, |numeric|). `step` must lie in [1e-7, 1e-3].
GradCheckReport finite_diff_check(const ScalarFn& f, std::span<const double> params,
                                  std::span<const double> analytic, double step = 1e-5);

}  // namespace amc::ad
