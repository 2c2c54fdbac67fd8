#pragma once

// Central finite-difference gradient checker. Verifies hand-derived
// backward rules against numeric differentiation of the scalar loss.

#include <functional>
#include <vector>

#include "boardgraph/linalg.hpp"

namespace boardgraph {

struct GradcheckReport {
    double max_relative_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

// `loss` re-evaluates the scalar objective with the current contents of
// `params`; `analytic` holds the analytic gradients flattened in the same
// order as the views. Each scalar is perturbed by +/- eps, and the
// relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradcheckReport finite_difference_gradcheck(const std::function<double()>& loss,
                                            std::vector<ParamView> params,
                                            const std::vector<double>& analytic, double eps);

}  // namespace boardgraph
