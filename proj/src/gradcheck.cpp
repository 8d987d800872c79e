#include "predilect/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "predilect/errors.hpp"

namespace predilect {

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x, double step) {
  if (!(step > 0.0)) throw ContractError("finite_diff_grad: step must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe.data()[i];
    probe.data()[i] = original + step;
    const double up = f(probe);
    probe.data()[i] = original - step;
    const double down = f(probe);
    probe.data()[i] = original;
    grad.data()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  if (!analytic.same_shape(numeric)) {
    throw ShapeError("relative_error: " + analytic.shape_string() + " vs " + numeric.shape_string());
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic.data()[i] - numeric.data()[i]));
  }
  const double scale = std::max(max_abs(analytic), max_abs(numeric));
  if (scale < 1e-10) return diff;
  return diff / scale;
}

}  // namespace predilect
