#pragma once
#include <functional>

#include "tann/matrix.hpp"

namespace tann {

// Central-difference gradient of a scalar function of one matrix argument.
// The numerical oracle every hand-derived backward pass is audited against.
// Errors: eps <= 0, or f returning a non-finite value.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double eps);

// Guarded relative error: |a-b| / max(|a|, |b|, floor). The floor turns the
// comparison into an absolute one for near-zero gradients, where central
// differences bottom out in cancellation noise.
double rel_err(double analytic, double numeric, double floor = 1e-4);
double max_rel_err(const Matrix& analytic, const Matrix& numeric, double floor = 1e-4);

}  // namespace tann
