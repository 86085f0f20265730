#pragma once

// Dense float64 tensors with reverse-mode automatic differentiation.
//
// Every tensor is a handle to an immutable graph node. Operations on tensors
// that depend on a tracked parameter record their inputs and a backward rule;
// `backward` collects the reachable nodes into a GradientTape ordered by
// creation sequence (which is always a topological order) and replays it in
// reverse. Graph memory is released when the last handle goes away.
//
// Shapes are at most rank 2. A rank-1 tensor of length n behaves as a 1 x n
// row and a rank-0 tensor as 1 x 1.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace snodep {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct Node;
class AdjointMap;
}  // namespace detail

class Gradients;
class Tensor;
Gradients backward(const Tensor& loss);

class Tensor {
 public:
  Tensor();

  /// Untracked tensor holding `values` in row-major order.
  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  /// Learnable leaf: gradients are reported for it by `backward`.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  double item() const;
  double at(std::size_t r, std::size_t c) const;

  /// Mutable access for leaf parameters only (optimizer updates, loading).
  std::span<double> mutable_values();

  bool tracked() const;
  bool is_parameter() const;
  std::uint64_t sequence() const;
  const char* op_name() const;

  /// Identity used as the key of gradient maps.
  const void* id() const { return node_.get(); }

  /// Untracked copy of the current values.
  Tensor detach() const;

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct detail::Node;
  friend class GradientTape;
  friend class detail::AdjointMap;
  friend Gradients backward(const Tensor& loss);
  friend const std::vector<Tensor>& op_inputs(const Tensor& t);
  friend Tensor make_op(const char* op, Shape shape, std::vector<double> value,
                        std::vector<Tensor> inputs,
                        std::function<void(const Tensor&, detail::AdjointMap&)> backward);
};

namespace detail {

// Accumulates adjoints during a backward sweep, keyed by node identity.
class AdjointMap {
 public:
  std::vector<double>& of(const Tensor& t);
  std::vector<double>* find(const void* id);
  std::unordered_map<const void*, std::vector<double>>& raw() { return adjoints_; }

 private:
  std::unordered_map<const void*, std::vector<double>> adjoints_;
};

}  // namespace detail

/// Builds an operation node. Used by the primitives; the backward rule
/// receives the result tensor and must add contributions into the adjoints
/// of `result`'s inputs.
Tensor make_op(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
               std::function<void(const Tensor&, detail::AdjointMap&)> backward);

/// Inputs of an operation node, in recording order.
const std::vector<Tensor>& op_inputs(const Tensor& t);

/// Ordered record of the operations reachable from a root tensor.
class GradientTape {
 public:
  static GradientTape record(const Tensor& root);

  /// Operations in creation order; every entry's inputs precede it.
  const std::vector<Tensor>& operations() const { return ops_; }
  /// Tracked leaves reachable from the root.
  const std::vector<Tensor>& parameters() const { return params_; }

 private:
  std::vector<Tensor> ops_;
  std::vector<Tensor> params_;
};

/// Gradient of a scalar loss with respect to parameters.
class Gradients {
 public:
  /// Gradient for `param`; zeros when the loss does not depend on it.
  std::vector<double> of(const Tensor& param) const;
  bool contains(const Tensor& param) const;
  std::size_t size() const { return grads_.size(); }
  bool empty() const { return grads_.empty(); }

  void set(const Tensor& param, std::vector<double> grad);
  /// this += scale * other, entry-wise.
  void accumulate(const Gradients& other, double scale = 1.0);

 private:
  std::unordered_map<const void*, std::vector<double>> grads_;
};

/// Reverse sweep from a scalar loss. Throws ShapeError for non-scalar losses.
Gradients backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Primitives. Elementwise binary operations accept equal shapes, or a row
// operand (rank 1 of length cols, or 1 x cols) broadcast over the rows of the
// other operand.

enum class OpKind {
  matmul,
  add,
  sub,
  mul,
  div,
  tanh,
  sigmoid,
  softplus,
  exp,
  log,
  sum,
  mean,
  concat,
  slice,
  square,
  lgamma_int,
};

const char* op_kind_name(OpKind kind);

/// Extra arguments for the structural primitives.
struct PrimitiveArgs {
  int axis = 1;            // concat, slice
  std::size_t begin = 0;   // slice
  std::size_t end = 0;     // slice
};

/// Generic dispatcher over the primitive set.
Tensor apply_primitive(OpKind kind, std::span<const Tensor> inputs, const PrimitiveArgs& args = {});

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
/// Sum of all entries, rank 0.
Tensor sum(const Tensor& a);
/// Mean of all entries, rank 0.
Tensor mean(const Tensor& a);
/// Sum over columns: rows x cols -> rows x 1.
Tensor row_sum(const Tensor& a);
/// Concatenation of rank-2 views along axis 0 (rows) or 1 (columns).
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor concat(std::initializer_list<Tensor> parts, int axis);
/// Half-open range [begin, end) along axis 0 or 1.
Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end);
/// ln(k!) = lgamma(k + 1) for non-negative integer entries. Untracked inputs only.
Tensor lgamma_int(const Tensor& counts);

// Helpers built from constants.
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor neg(const Tensor& a);
/// Multiplies row r of `a` by the constant factors[r].
Tensor scale_rows(const Tensor& a, std::span<const double> factors);

/// ln(k!) via a cumulative table of ln k, extended on demand.
double log_factorial(std::uint64_t k);

}  // namespace snodep
