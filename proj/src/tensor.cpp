#include "snodep/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

#include "snodep/error.hpp"

namespace snodep {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  bool tracked = false;
  bool parameter = false;
  std::uint64_t seq = 0;
  const char* op = "const";
  std::vector<Tensor> inputs;
  std::function<void(const Tensor&, AdjointMap&)> backward;

  // Long recurrences (solver steps) build deep chains; release them
  // iteratively instead of through nested destructor calls.
  ~Node() {
    std::vector<std::shared_ptr<Node>> pending;
    for (auto& in : inputs) pending.push_back(std::move(in.node_));
    inputs.clear();
    while (!pending.empty()) {
      std::shared_ptr<Node> n = std::move(pending.back());
      pending.pop_back();
      if (n && n.use_count() == 1) {
        for (auto& in : n->inputs) pending.push_back(std::move(in.node_));
        n->inputs.clear();
      }
    }
  }
};

std::vector<double>& AdjointMap::of(const Tensor& t) {
  auto& slot = adjoints_[t.id()];
  if (slot.empty()) slot.assign(t.size(), 0.0);
  return slot;
}

std::vector<double>* AdjointMap::find(const void* id) {
  auto it = adjoints_.find(id);
  return it == adjoints_.end() ? nullptr : &it->second;
}

}  // namespace detail

namespace {

std::atomic<std::uint64_t> g_sequence{1};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<double> value) {
  if (shape_size(shape) != value.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not hold " +
                     std::to_string(value.size()) + " values");
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->seq = g_sequence.fetch_add(1, std::memory_order_relaxed);
  return n;
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

enum class Broadcast { same, b_row, a_row };

Broadcast broadcast_mode(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::b_row;
  if (a.rows() == 1 && a.cols() == b.cols()) return Broadcast::a_row;
  shape_fail(op, a, b);
}

// Elementwise binary op with row broadcasting. `fwd(x, y)` gives the value,
// `grads(x, y, out)` returns {d out/dx, d out/dy}.
template <typename Fwd, typename Grad>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, Grad grads) {
  const Broadcast mode = broadcast_mode(name, a, b);
  const Tensor& full = mode == Broadcast::a_row ? b : a;
  const std::size_t rows = full.rows(), cols = full.cols();
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      const double x = mode == Broadcast::a_row ? av[c] : av[i];
      const double y = mode == Broadcast::b_row ? bv[c] : bv[i];
      out[i] = fwd(x, y, i);
    }
  }
  return make_op(name, full.shape(), std::move(out), {a, b},
                 [mode, rows, cols, grads](const Tensor& res, detail::AdjointMap& adj) {
                   const auto& in = op_inputs(res);
                   const Tensor& a = in[0];
                   const Tensor& b = in[1];
                   const auto& g = *adj.find(res.id());
                   auto av = a.values();
                   auto bv = b.values();
                   auto ov = res.values();
                   std::vector<double>* ga = a.tracked() ? &adj.of(a) : nullptr;
                   std::vector<double>* gb = b.tracked() ? &adj.of(b) : nullptr;
                   for (std::size_t r = 0; r < rows; ++r) {
                     for (std::size_t c = 0; c < cols; ++c) {
                       const std::size_t i = r * cols + c;
                       const std::size_t ia = mode == Broadcast::a_row ? c : i;
                       const std::size_t ib = mode == Broadcast::b_row ? c : i;
                       const auto [dx, dy] = grads(av[ia], bv[ib], ov[i]);
                       if (ga) (*ga)[ia] += g[i] * dx;
                       if (gb) (*gb)[ib] += g[i] * dy;
                     }
                   }
                 });
}

// Elementwise unary op; `deriv(x, y)` gives dy/dx from input and output.
template <typename Fwd, typename Deriv>
Tensor unary(const char* name, const Tensor& a, Fwd fwd, Deriv deriv) {
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], i);
  return make_op(name, a.shape(), std::move(out), {a},
                 [deriv](const Tensor& res, detail::AdjointMap& adj) {
                   const Tensor& a = op_inputs(res)[0];
                   const auto& g = *adj.find(res.id());
                   auto& ga = adj.of(a);
                   auto av = a.values();
                   auto ov = res.values();
                   for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(av[i], ov[i]);
                 });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// --- Tensor -----------------------------------------------------------------

Tensor::Tensor() = default;

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape.size() > 2) throw ShapeError("tensor: rank above 2 is not supported");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor: zero-length dimension in " + shape_str(shape));
  }
  return Tensor(new_node(std::move(shape), std::move(values)));
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_size(shape);
  return constant(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->tracked = true;
  t.node_->parameter = true;
  t.node_->op = "param";
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }

std::size_t Tensor::rows() const { return rank() == 2 ? shape()[0] : 1; }

std::size_t Tensor::cols() const {
  if (rank() == 2) return shape()[1];
  if (rank() == 1) return shape()[0];
  return 1;
}

std::span<const double> Tensor::values() const { return node_->value; }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

std::span<double> Tensor::mutable_values() {
  if (!node_->parameter) throw Error("mutable_values: only parameters may be modified in place");
  return node_->value;
}

bool Tensor::tracked() const { return node_->tracked; }
bool Tensor::is_parameter() const { return node_->parameter; }
std::uint64_t Tensor::sequence() const { return node_->seq; }
const char* Tensor::op_name() const { return node_->op; }

Tensor Tensor::detach() const { return constant(shape(), node_->value); }

Tensor make_op(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
               std::function<void(const Tensor&, detail::AdjointMap&)> backward) {
  auto node = new_node(std::move(shape), std::move(value));
  node->op = op;
  const bool tracked =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.tracked(); });
  if (tracked) {
    node->tracked = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

const std::vector<Tensor>& op_inputs(const Tensor& t) { return t.node_->inputs; }

// --- tape and backward ------------------------------------------------------

GradientTape GradientTape::record(const Tensor& root) {
  GradientTape tape;
  if (!root.defined() || !root.tracked()) return tape;
  std::unordered_map<const void*, bool> seen;
  std::vector<Tensor> stack{root};
  seen[root.id()] = true;
  while (!stack.empty()) {
    Tensor t = std::move(stack.back());
    stack.pop_back();
    if (t.is_parameter()) {
      tape.params_.push_back(t);
      continue;
    }
    for (const Tensor& in : op_inputs(t)) {
      if (in.tracked() && !seen[in.id()]) {
        seen[in.id()] = true;
        stack.push_back(in);
      }
    }
    tape.ops_.push_back(std::move(t));
  }
  auto by_seq = [](const Tensor& a, const Tensor& b) { return a.sequence() < b.sequence(); };
  std::sort(tape.ops_.begin(), tape.ops_.end(), by_seq);
  std::sort(tape.params_.begin(), tape.params_.end(), by_seq);
  return tape;
}

std::vector<double> Gradients::of(const Tensor& param) const {
  auto it = grads_.find(param.id());
  if (it == grads_.end()) return std::vector<double>(param.size(), 0.0);
  return it->second;
}

bool Gradients::contains(const Tensor& param) const { return grads_.count(param.id()) != 0; }

void Gradients::set(const Tensor& param, std::vector<double> grad) {
  if (grad.size() != param.size()) throw ShapeError("gradients: size mismatch for parameter");
  grads_[param.id()] = std::move(grad);
}

void Gradients::accumulate(const Gradients& other, double scale) {
  for (const auto& [id, g] : other.grads_) {
    auto& mine = grads_[id];
    if (mine.empty()) mine.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) mine[i] += scale * g[i];
  }
}

Gradients backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  Gradients out;
  if (!loss.tracked()) return out;
  if (loss.is_parameter()) {
    out.set(loss, {1.0});
    return out;
  }
  GradientTape tape = GradientTape::record(loss);
  detail::AdjointMap adj;
  adj.of(loss)[0] = 1.0;
  const auto& ops = tape.operations();
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    auto* g = adj.find(it->id());
    if (!g) continue;
    it->node_->backward(*it, adj);
    adj.raw().erase(it->id());
  }
  for (const Tensor& p : tape.parameters()) {
    if (auto* g = adj.find(p.id())) out.set(p, std::move(*g));
  }
  return out;
}

// --- primitives -------------------------------------------------------------

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::softplus: return "softplus";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::square: return "square";
    case OpKind::lgamma_int: return "lgamma_int";
  }
  return "?";
}

Tensor apply_primitive(OpKind kind, std::span<const Tensor> in, const PrimitiveArgs& args) {
  auto need = [&](std::size_t n) {
    if (in.size() != n) {
      throw ShapeError(std::string(op_kind_name(kind)) + ": expected " + std::to_string(n) +
                       " inputs, got " + std::to_string(in.size()));
    }
  };
  switch (kind) {
    case OpKind::matmul: need(2); return matmul(in[0], in[1]);
    case OpKind::add: need(2); return add(in[0], in[1]);
    case OpKind::sub: need(2); return sub(in[0], in[1]);
    case OpKind::mul: need(2); return mul(in[0], in[1]);
    case OpKind::div: need(2); return div(in[0], in[1]);
    case OpKind::tanh: need(1); return tanh(in[0]);
    case OpKind::sigmoid: need(1); return sigmoid(in[0]);
    case OpKind::softplus: need(1); return softplus(in[0]);
    case OpKind::exp: need(1); return exp(in[0]);
    case OpKind::log: need(1); return log(in[0]);
    case OpKind::sum: need(1); return sum(in[0]);
    case OpKind::mean: need(1); return mean(in[0]);
    case OpKind::concat: return concat(in, args.axis);
    case OpKind::slice: need(1); return slice(in[0], args.axis, args.begin, args.end);
    case OpKind::square: need(1); return square(in[0]);
    case OpKind::lgamma_int: need(1); return lgamma_int(in[0]);
  }
  throw Error("apply_primitive: unknown op kind");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_fail("matmul", a, b);
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [m, k, n](const Tensor& res, detail::AdjointMap& adj) {
                   const auto& in = op_inputs(res);
                   ConstMap g(adj.find(res.id())->data(), m, n);
                   if (in[0].tracked()) {
                     MutMap(adj.of(in[0]).data(), m, k).noalias() +=
                         g * ConstMap(in[1].values().data(), k, n).transpose();
                   }
                   if (in[1].tracked()) {
                     MutMap(adj.of(in[1]).data(), k, n).noalias() +=
                         ConstMap(in[0].values().data(), m, k).transpose() * g;
                   }
                 });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y, std::size_t) { return x + y; },
      [](double, double, double) { return std::pair{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y, std::size_t) { return x - y; },
      [](double, double, double) { return std::pair{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y, std::size_t) { return x * y; },
      [](double x, double y, double) { return std::pair{y, x}; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b,
      [](double x, double y, std::size_t i) {
        if (y == 0.0) throw DomainError("div: division by zero at index " + std::to_string(i));
        return x / y;
      },
      [](double, double y, double out) { return std::pair{1.0 / y, -out / y}; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x, std::size_t) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a, [](double x, std::size_t) { return stable_sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
  return unary(
      "softplus", a, [](double x, std::size_t) { return stable_softplus(x); },
      [](double x, double) { return stable_sigmoid(x); });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x, std::size_t) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a,
      [](double x, std::size_t i) {
        if (!(x > 0.0)) {
          throw DomainError("log: non-positive argument " + std::to_string(x) + " at index " +
                            std::to_string(i));
        }
        return std::log(x);
      },
      [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x, std::size_t) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor sum(const Tensor& a) {
  auto av = a.values();
  double s = 0.0;
  for (double x : av) s += x;
  return make_op("sum", {}, {s}, {a}, [](const Tensor& res, detail::AdjointMap& adj) {
    const double g = (*adj.find(res.id()))[0];
    for (double& x : adj.of(op_inputs(res)[0])) x += g;
  });
}

Tensor mean(const Tensor& a) {
  auto av = a.values();
  double s = 0.0;
  for (double x : av) s += x;
  const double n = static_cast<double>(av.size());
  return make_op("mean", {}, {s / n}, {a}, [n](const Tensor& res, detail::AdjointMap& adj) {
    const double g = (*adj.find(res.id()))[0] / n;
    for (double& x : adj.of(op_inputs(res)[0])) x += g;
  });
}

Tensor row_sum(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  auto av = a.values();
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += av[r * cols + c];
  }
  return make_op("row_sum", {rows, 1}, std::move(out), {a},
                 [rows, cols](const Tensor& res, detail::AdjointMap& adj) {
                   const auto& g = *adj.find(res.id());
                   auto& ga = adj.of(op_inputs(res)[0]);
                   for (std::size_t r = 0; r < rows; ++r) {
                     for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r];
                   }
                 });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].cols();
    for (const auto& p : parts) {
      if (p.cols() != cols) shape_fail("concat", parts[0], p);
      rows += p.rows();
    }
  } else {
    rows = parts[0].rows();
    for (const auto& p : parts) {
      if (p.rows() != rows) shape_fail("concat", parts[0], p);
      cols += p.cols();
    }
  }
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    auto pv = p.values();
    if (axis == 0) {
      std::copy(pv.begin(), pv.end(), out.begin() + static_cast<std::ptrdiff_t>(off * cols));
      off += p.rows();
    } else {
      const std::size_t pc = p.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy(pv.begin() + static_cast<std::ptrdiff_t>(r * pc),
                  pv.begin() + static_cast<std::ptrdiff_t>((r + 1) * pc),
                  out.begin() + static_cast<std::ptrdiff_t>(r * cols + off));
      }
      off += pc;
    }
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_op("concat", {rows, cols}, std::move(out), std::move(inputs),
                 [axis, rows, cols, offsets](const Tensor& res, detail::AdjointMap& adj) {
                   const auto& g = *adj.find(res.id());
                   const auto& in = op_inputs(res);
                   for (std::size_t k = 0; k < in.size(); ++k) {
                     if (!in[k].tracked()) continue;
                     auto& gp = adj.of(in[k]);
                     if (axis == 0) {
                       const std::size_t start = offsets[k] * cols;
                       for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[start + i];
                     } else {
                       const std::size_t pc = in[k].cols();
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t c = 0; c < pc; ++c) {
                           gp[r * pc + c] += g[r * cols + offsets[k] + c];
                         }
                       }
                     }
                   }
                 });
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end) {
  if (axis != 0 && axis != 1) throw ShapeError("slice: axis must be 0 or 1");
  const std::size_t rows = a.rows(), cols = a.cols();
  const std::size_t extent = axis == 0 ? rows : cols;
  if (begin >= end || end > extent) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of bounds for axis " + std::to_string(axis) + " of " +
                     shape_str(a.shape()));
  }
  const std::size_t out_rows = axis == 0 ? end - begin : rows;
  const std::size_t out_cols = axis == 1 ? end - begin : cols;
  auto av = a.values();
  std::vector<double> out(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      const std::size_t src = axis == 0 ? (r + begin) * cols + c : r * cols + c + begin;
      out[r * out_cols + c] = av[src];
    }
  }
  return make_op("slice", {out_rows, out_cols}, std::move(out), {a},
                 [axis, begin, cols, out_rows, out_cols](const Tensor& res, detail::AdjointMap& adj) {
                   const auto& g = *adj.find(res.id());
                   auto& ga = adj.of(op_inputs(res)[0]);
                   for (std::size_t r = 0; r < out_rows; ++r) {
                     for (std::size_t c = 0; c < out_cols; ++c) {
                       const std::size_t dst =
                           axis == 0 ? (r + begin) * cols + c : r * cols + c + begin;
                       ga[dst] += g[r * out_cols + c];
                     }
                   }
                 });
}

double log_factorial(std::uint64_t k) {
  thread_local std::vector<double> table{0.0};  // table[n] = ln n!
  while (table.size() <= k) {
    const double n = static_cast<double>(table.size());
    table.push_back(table.back() + std::log(n));
  }
  return table[k];
}

Tensor lgamma_int(const Tensor& counts) {
  if (counts.tracked()) throw DomainError("lgamma_int: argument must not require gradients");
  auto cv = counts.values();
  std::vector<double> out(cv.size());
  for (std::size_t i = 0; i < cv.size(); ++i) {
    const double k = cv[i];
    if (!(k >= 0.0) || std::floor(k) != k || !std::isfinite(k)) {
      throw DomainError("lgamma_int: expected a non-negative integer at index " +
                        std::to_string(i) + ", got " + std::to_string(k));
    }
    out[i] = log_factorial(static_cast<std::uint64_t>(k));
  }
  return Tensor::constant(counts.shape(), std::move(out));
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x, std::size_t) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x, std::size_t) { return x + offset; },
      [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale_rows(const Tensor& a, std::span<const double> factors) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (factors.size() != rows) {
    throw ShapeError("scale_rows: " + std::to_string(factors.size()) + " factors for " +
                     shape_str(a.shape()));
  }
  std::vector<double> f(factors.begin(), factors.end());
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = f[r] * av[r * cols + c];
  }
  return make_op("scale_rows", a.shape(), std::move(out), {a},
                 [f = std::move(f), rows, cols](const Tensor& res, detail::AdjointMap& adj) {
                   const auto& g = *adj.find(res.id());
                   auto& ga = adj.of(op_inputs(res)[0]);
                   for (std::size_t r = 0; r < rows; ++r) {
                     for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += f[r] * g[r * cols + c];
                   }
                 });
}

}  // namespace snodep
