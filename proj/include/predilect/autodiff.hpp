#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "predilect/matrix.hpp"

namespace predilect {

// A trainable tensor. The gradient accumulates across backward passes until
// zero_grad() is called.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string name, Matrix value);
  void zero_grad();
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Test-only fault injection, used to prove the gradient checker can fail.
enum class BackwardFault { kNone, kSigmoid };

// Define-by-run reverse-mode tape. Build one per forward pass, call
// backward() on a 1x1 node, then drop it. Not thread-safe; separate tapes are
// independent.
class Tape {
 public:
  enum class Mode { kTrain, kInference };

  explicit Tape(Mode mode = Mode::kTrain) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a parameter. In inference mode it behaves as a constant.
  // Repeated calls with the same parameter return the same node.
  Var parameter(Parameter& p);

  // Backpropagates from a 1x1 node and adds the result into every bound
  // parameter's grad. Throws ContractError if loss is not scalar.
  void backward(Var loss);

  bool grad_enabled() const { return mode_ == Mode::kTrain; }
  std::size_t size() const { return nodes_.size(); }

  void set_fault(BackwardFault fault) { fault_ = fault; }
  BackwardFault fault() const { return fault_; }

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn fn);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Adds g into the gradient of node id (no-op for nodes not requiring grad).
  void accumulate(std::size_t id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Mode mode_;
  BackwardFault fault_ = BackwardFault::kNone;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// Differentiable ops. Shapes follow the value-level functions in matrix.hpp.
namespace ad {

Var matmul(Var a, Var b);
Var hadamard(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double factor);
Var add_row(Var a, Var row);  // broadcast a 1xC row over every row of a
Var transpose(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var mean_rows(Var a);                     // n x d -> 1 x d
Var tile_rows(Var row, std::size_t n);    // 1 x d -> n x d
Var stack_rows(const std::vector<Var>& rows);  // k of 1 x d -> k x d
Var normalize_rows(Var a);                // L2; throws DegenerateVectorError on zero rows
Var sum(Var a);                           // -> 1 x 1
// Mean of a(i, cols[i]) over rows; cols.size() must equal a.rows().
Var select_mean(Var a, const std::vector<std::size_t>& cols);
// Mean of the table rows at the given indices -> 1 x d. Indices are summed in
// ascending order so the result is independent of their order.
Var embed_mean(Var table, std::vector<std::size_t> indices);

}  // namespace ad

}  // namespace predilect
