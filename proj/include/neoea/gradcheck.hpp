#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "neoea/errors.hpp"
#include "neoea/matrix.hpp"

namespace neoea {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double analytic_at_max = 0.0;
  double numeric_at_max = 0.0;
  std::string where;  // "param <k> [r,c]" of the worst coordinate
};

// Central-difference check of analytic gradients.
//
// `eval` recomputes the loss at the current parameter values.  `params`
// are the live parameter matrices; `analytic` are the claimed gradients,
// one per parameter, captured at the unperturbed point.  Each coordinate
// is perturbed by +/-h and restored exactly afterwards.  Relative error
// uses max(|analytic|, |numeric|, denom_floor) as the denominator; the
// floor must sit above the rounding noise of the difference quotient,
// roughly |loss| * 2^-52 / h, or exact zeros of the true gradient read
// as large relative errors.
inline GradCheckResult finite_diff_check(const std::function<double()>& eval,
                                         std::span<DenseMatrix* const> params,
                                         std::span<const DenseMatrix* const> analytic,
                                         double h = 1e-5, double denom_floor = 1e-8) {
  if (params.size() != analytic.size()) {
    throw DataError("finite_diff_check: parameter/gradient count mismatch");
  }
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    DenseMatrix& p = *params[k];
    const DenseMatrix& g = *analytic[k];
    if (!p.same_shape(g)) throw DataError("finite_diff_check: shape mismatch");
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + h;
      const double f_plus = eval();
      p.values[i] = saved - h;
      const double f_minus = eval();
      p.values[i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw NumericError("finite_diff_check: non-finite loss during probe");
      }
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = g.values[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), denom_floor});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.analytic_at_max = a;
        result.numeric_at_max = numeric;
        result.where = "param " + std::to_string(k) + " [" +
                       std::to_string(i / std::max<std::size_t>(p.cols, 1)) + "," +
                       std::to_string(i % std::max<std::size_t>(p.cols, 1)) + "]";
      }
    }
  }
  return result;
}

}  // namespace neoea
