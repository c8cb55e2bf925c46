#ifndef LSA_GRAD_CHECK_HPP
#define LSA_GRAD_CHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "lsa/tensor.hpp"

namespace lsa {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t n_elements = 0;
  std::string worst;  // "param_index:element_index" of the worst element
};

// Compares analytic gradients against central finite differences.
//
// loss_and_grad must zero every gradient, run the forward and backward, and
// return the scalar loss. loss_only must evaluate the same scalar at the
// current parameter values without touching gradients. Relative error per
// element is |a - n| / max(1, |a|, |n|).
GradCheckReport grad_check(const std::vector<Param*>& params,
                           const std::function<double()>& loss_and_grad,
                           const std::function<double()>& loss_only,
                           double eps = 1e-5);

}  // namespace lsa

#endif  // LSA_GRAD_CHECK_HPP
