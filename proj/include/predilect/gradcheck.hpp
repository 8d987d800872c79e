#pragma once

#include <functional>

#include "predilect/matrix.hpp"

namespace predilect {

// Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / 2h for every entry
// of x. Throws ContractError if step <= 0.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x, double step);

// Tensor-level relative error max|a-b| / max(max|a|, max|b|). When both
// tensors are (numerically) zero the absolute difference is returned.
double relative_error(const Matrix& analytic, const Matrix& numeric);

}  // namespace predilect
