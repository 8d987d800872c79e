#include "predilect/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "predilect/errors.hpp"

namespace predilect {

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

void Parameter::zero_grad() {
  if (!grad.same_shape(value)) grad = Matrix(value.rows(), value.cols());
  grad.fill(0.0);
}

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("scalar(): node has shape " + v.shape_string());
  }
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  if (!grad_enabled()) return constant(p.value);
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = p.value;
  node.param = &p;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                   [this](std::size_t i) { return nodes_[i].requires_grad; });
  if (node.requires_grad) {
    node.inputs = std::move(inputs);
    node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  node.grad += g;
}

void Tape::backward(Var loss) {
  if (loss.id() >= nodes_.size() || &loss.tape() != this) {
    throw ContractError("backward: loss does not belong to this tape");
  }
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad(0, 0) = 1.0;
  // Node ids are a topological order by construction.
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

namespace ad {

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": operands on different tapes");
  return a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(predilect::matmul(a.value(), b.value()), {ia, ib},
                  [ia, ib](Tape& t, std::size_t self) {
                    const Matrix& g = t.grad(self);
                    if (t.requires_grad(ia)) t.accumulate(ia, predilect::matmul(g, predilect::transpose(t.value(ib))));
                    if (t.requires_grad(ib)) t.accumulate(ib, predilect::matmul(predilect::transpose(t.value(ia)), g));
                  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b, "hadamard");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(predilect::hadamard(a.value(), b.value()), {ia, ib},
                  [ia, ib](Tape& t, std::size_t self) {
                    const Matrix& g = t.grad(self);
                    if (t.requires_grad(ia)) t.accumulate(ia, predilect::hadamard(g, t.value(ib)));
                    if (t.requires_grad(ib)) t.accumulate(ib, predilect::hadamard(g, t.value(ia)));
                  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(predilect::add(a.value(), b.value()), {ia, ib},
                  [ia, ib](Tape& t, std::size_t self) {
                    t.accumulate(ia, t.grad(self));
                    t.accumulate(ib, t.grad(self));
                  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var scale(Var a, double factor) {
  const std::size_t ia = a.id();
  return a.tape().record(predilect::scale(a.value(), factor), {ia},
                         [ia, factor](Tape& t, std::size_t self) {
                           t.accumulate(ia, predilect::scale(t.grad(self), factor));
                         });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row, "add_row");
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: row " + row.value().shape_string() + " does not broadcast over " +
                     a.value().shape_string());
  }
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += row.value()(0, j);
  const std::size_t ia = a.id(), ir = row.id();
  return t.record(std::move(out), {ia, ir}, [ia, ir](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.accumulate(ia, g);
    if (t.requires_grad(ir)) {
      Matrix gr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      t.accumulate(ir, gr);
    }
  });
}

Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(predilect::transpose(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, predilect::transpose(t.grad(self)));
  });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(predilect::sigmoid(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& s = t.value(self);
    Matrix g = t.grad(self);
    const bool faulty = t.fault() == BackwardFault::kSigmoid;
    auto gd = g.data();
    auto sd = s.data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      gd[i] *= faulty ? sd[i] : sd[i] * (1.0 - sd[i]);
    }
    t.accumulate(ia, g);
  });
}

Var tanh(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(predilect::tanh(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    Matrix g = t.grad(self);
    auto gd = g.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= 1.0 - yd[i] * yd[i];
    t.accumulate(ia, g);
  });
}

Var softmax_rows(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(predilect::softmax_rows(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& s = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix out(s.rows(), s.cols());
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < s.cols(); ++j) dot += g(i, j) * s(i, j);
      for (std::size_t j = 0; j < s.cols(); ++j) out(i, j) = s(i, j) * (g(i, j) - dot);
    }
    t.accumulate(ia, out);
  });
}

Var log_softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - peak);
    const double lse = peak + std::log(total);
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) - lse;
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix dx(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) gsum += g(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) dx(i, j) = g(i, j) - std::exp(y(i, j)) * gsum;
    }
    t.accumulate(ia, dx);
  });
}

Var mean_rows(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record(predilect::mean_rows(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const std::size_t n = t.value(ia).rows();
    Matrix dx(n, g.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) dx(i, j) = g(0, j) / static_cast<double>(n);
    t.accumulate(ia, dx);
  });
}

Var tile_rows(Var row, std::size_t n) {
  if (row.rows() != 1) throw ShapeError("tile_rows: expected a single row, got " + row.value().shape_string());
  if (n == 0) throw ContractError("tile_rows: n must be positive");
  Matrix out(n, row.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < row.cols(); ++j) out(i, j) = row.value()(0, j);
  const std::size_t ir = row.id();
  return row.tape().record(std::move(out), {ir}, [ir](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix dr(1, g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) dr(0, j) += g(i, j);
    t.accumulate(ir, dr);
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  Tape& t = rows.front().tape();
  const std::size_t cols = rows.front().cols();
  Matrix out(rows.size(), cols);
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    same_tape(rows.front(), rows[i], "stack_rows");
    if (rows[i].rows() != 1 || rows[i].cols() != cols) {
      throw ShapeError("stack_rows: row " + std::to_string(i) + " has shape " +
                       rows[i].value().shape_string());
    }
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = rows[i].value()(0, j);
    ids.push_back(rows[i].id());
  }
  auto inputs = ids;
  return t.record(std::move(out), std::move(inputs), [ids](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.requires_grad(ids[i])) t.accumulate(ids[i], Matrix::row_vector(g.row(i)));
    }
  });
}

Var normalize_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double ss = 0.0;
    for (double v : x.row(i)) ss += v * v;
    if (ss == 0.0) throw DegenerateVectorError("normalize_rows: row " + std::to_string(i) + " has zero norm");
    norms[i] = std::sqrt(ss);
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / norms[i];
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, norms](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix dx(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) dx(i, j) = (g(i, j) - y(i, j) * dot) / norms[i];
    }
    t.accumulate(ia, dx);
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ia = a.id();
  return a.tape().record(Matrix(1, 1, total), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ia);
    t.accumulate(ia, Matrix(x.rows(), x.cols(), t.grad(self)(0, 0)));
  });
}

Var select_mean(Var a, const std::vector<std::size_t>& cols) {
  const Matrix& x = a.value();
  if (cols.size() != x.rows()) {
    throw ShapeError("select_mean: " + std::to_string(cols.size()) + " indices for " +
                     std::to_string(x.rows()) + " rows");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= x.cols()) throw ContractError("select_mean: column index out of range");
    total += x(i, cols[i]);
  }
  const double inv = 1.0 / static_cast<double>(cols.size());
  const std::size_t ia = a.id();
  return a.tape().record(Matrix(1, 1, total * inv), {ia}, [ia, cols, inv](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ia);
    Matrix dx(x.rows(), x.cols());
    const double g = t.grad(self)(0, 0) * inv;
    for (std::size_t i = 0; i < cols.size(); ++i) dx(i, cols[i]) = g;
    t.accumulate(ia, dx);
  });
}

Var embed_mean(Var table, std::vector<std::size_t> indices) {
  if (indices.empty()) throw ContractError("embed_mean: no indices");
  const Matrix& w = table.value();
  std::sort(indices.begin(), indices.end());
  Matrix out(1, w.cols());
  for (std::size_t idx : indices) {
    if (idx >= w.rows()) throw ContractError("embed_mean: index out of range");
    for (std::size_t j = 0; j < w.cols(); ++j) out(0, j) += w(idx, j);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (double& v : out.data()) v *= inv;
  const std::size_t it = table.id();
  return table.tape().record(std::move(out), {it}, [it, indices, inv](Tape& t, std::size_t self) {
    const Matrix& w = t.value(it);
    const Matrix& g = t.grad(self);
    Matrix dw(w.rows(), w.cols());
    for (std::size_t idx : indices)
      for (std::size_t j = 0; j < w.cols(); ++j) dw(idx, j) += g(0, j) * inv;
    t.accumulate(it, dw);
  });
}

}  // namespace ad

}  // namespace predilect
