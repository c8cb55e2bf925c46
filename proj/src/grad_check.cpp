#include "lsa/grad_check.hpp"

#include <cmath>

namespace lsa {

GradCheckReport grad_check(const std::vector<Param*>& params,
                           const std::function<double()>& loss_and_grad,
                           const std::function<double()>& loss_only,
                           double eps) {
  double base = loss_and_grad();
  if (!std::isfinite(base))
    throw EvaluationError("grad_check: non-finite loss at base point");

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + eps;
      double plus = loss_only();
      p.value[i] = saved - eps;
      double minus = loss_only();
      p.value[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw EvaluationError("grad_check: non-finite loss at perturbed point");
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      const double rel = std::fabs(a - numeric) / denom;
      ++report.n_elements;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = std::to_string(pi) + ":" + std::to_string(i);
      }
    }
  }
  return report;
}

}  // namespace lsa
