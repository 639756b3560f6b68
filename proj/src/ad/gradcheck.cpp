#include "amc/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace amc::ad {

GradCheckReport finite_diff_check(const ScalarFn& f, std::span<const double> params,
                                  std::span<const double> analytic, double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw std::invalid_argument("finite_diff_check: step must lie in [1e-7, 1e-3]");
  }
  if (analytic.size() != params.size()) {
    throw std::invalid_argument("finite_diff_check: gradient length does not match parameter count");
  }
  std::vector<double> x(params.begin(), params.end());
  GradCheckReport report;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (!(err <= report.max_rel_error)) {  // also catches NaN
      report.max_rel_error = std::isnan(err) ? INFINITY : err;
      report.worst_index = i;
      report.analytic = analytic[i];
      report.numeric = numeric;
    }
  }
  return report;
}

}  // namespace amc::ad
