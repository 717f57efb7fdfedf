#include "tann/gradcheck.hpp"

#include <cmath>

#include "tann/error.hpp"

namespace tann {

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double eps) {
  if (!(eps > 0.0)) throw ValidationError("finite_diff_grad: eps must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + eps;
      const double fp = f(probe);
      probe(i, j) = orig - eps;
      const double fm = f(probe);
      probe(i, j) = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("finite_diff_grad: objective returned a non-finite value");
      grad(i, j) = (fp - fm) / (2.0 * eps);
    }
  }
  return grad;
}

double rel_err(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

double max_rel_err(const Matrix& analytic, const Matrix& numeric, double floor) {
  require_same_shape(analytic, numeric, "max_rel_err");
  double m = 0.0;
  for (int i = 0; i < analytic.rows(); ++i)
    for (int j = 0; j < analytic.cols(); ++j)
      m = std::max(m, rel_err(analytic(i, j), numeric(i, j), floor));
  return m;
}

}  // namespace tann
