// Dense double-precision tensors and a define-by-run reverse-mode graph.
// The primitive set is deliberately small; every backward rule is written
// out by hand so it can be audited against finite differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaped {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

struct Tensor {
  Shape shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), v(numel(shape), fill) {}
  Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), v(std::move(values)) {
    if (v.size() != numel(shape))
      throw std::invalid_argument("tensor: " + std::to_string(v.size()) +
                                  " values for shape " + shape_str(shape));
  }

  std::size_t size() const { return v.size(); }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.empty() ? 1 : shape.back(); }
};

// A named trainable tensor. Gradients accumulate across backward calls
// until zero_grad(); optimizer state lives with the trainer, not here.
struct Param {
  std::string name;
  Tensor value;
  std::vector<double> grad;

  Param(std::string n, Shape s) : name(std::move(n)), value(std::move(s)), grad(value.size(), 0.0) {}

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

enum class OpKind {
  input,
  param,
  matmul,
  add,
  mul,
  concat_last_axis,
  stack_rows,
  tanh,
  sigmoid,
  softmax_last_axis,
  embedding_lookup,
  slice,
  sum,
  log,
  negate,
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  Var input(Tensor t) {
    Node n;
    n.kind = OpKind::input;
    n.val = std::move(t);
    return push(std::move(n));
  }

  Var constant(Shape s, double fill) { return input(Tensor(std::move(s), fill)); }

  // Leaf referencing a Param; repeated calls return the same node so
  // tying a parameter across paths is observable in the graph itself.
  Var param(Param& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var{it->second};
    Node n;
    n.kind = OpKind::param;
    n.p = &p;
    Var v = push(std::move(n));
    param_nodes_.emplace(&p, v.id);
    return v;
  }

  // matmul covers {m,k}x{k,n}, {m,k}x{k}, {k}x{k,n} and the dot product
  // {k}x{k} -> {1}. Anything else is a shape error.
  Var matmul(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    Node n;
    n.kind = OpKind::matmul;
    n.in = {a.id, b.id};
    if (A.is_matrix() && B.is_matrix()) {
      if (A.shape[1] != B.shape[0]) fail_shapes("matmul", A.shape, B.shape);
      n.val = Tensor({A.shape[0], B.shape[1]});
      const std::size_t m = A.shape[0], k = A.shape[1], c = B.shape[1];
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const double aij = A.v[i * k + j];
          if (aij == 0.0) continue;
          for (std::size_t l = 0; l < c; ++l) n.val.v[i * c + l] += aij * B.v[j * c + l];
        }
    } else if (A.is_matrix() && B.is_vector()) {
      if (A.shape[1] != B.shape[0]) fail_shapes("matmul", A.shape, B.shape);
      n.val = Tensor({A.shape[0]});
      const std::size_t m = A.shape[0], k = A.shape[1];
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += A.v[i * k + j] * B.v[j];
        n.val.v[i] = acc;
      }
    } else if (A.is_vector() && B.is_matrix()) {
      if (A.shape[0] != B.shape[0]) fail_shapes("matmul", A.shape, B.shape);
      n.val = Tensor({B.shape[1]});
      const std::size_t k = A.shape[0], c = B.shape[1];
      for (std::size_t j = 0; j < k; ++j) {
        const double aj = A.v[j];
        if (aj == 0.0) continue;
        for (std::size_t l = 0; l < c; ++l) n.val.v[l] += aj * B.v[j * c + l];
      }
    } else if (A.is_vector() && B.is_vector()) {
      if (A.shape[0] != B.shape[0]) fail_shapes("matmul", A.shape, B.shape);
      double acc = 0.0;
      for (std::size_t j = 0; j < A.shape[0]; ++j) acc += A.v[j] * B.v[j];
      n.val = Tensor({1});
      n.val.v[0] = acc;
    } else {
      fail_shapes("matmul", A.shape, B.shape);
    }
    return push(std::move(n));
  }

  // Elementwise add; the single allowed broadcast is matrix + row vector.
  Var add(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    Node n;
    n.kind = OpKind::add;
    n.in = {a.id, b.id};
    if (A.shape == B.shape) {
      n.val = A;
      for (std::size_t i = 0; i < n.val.size(); ++i) n.val.v[i] += B.v[i];
    } else if (A.is_matrix() && B.is_vector() && A.shape[1] == B.shape[0]) {
      n.val = A;
      const std::size_t r = A.shape[0], c = A.shape[1];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) n.val.v[i * c + j] += B.v[j];
    } else {
      fail_shapes("add", A.shape, B.shape);
    }
    return push(std::move(n));
  }

  Var mul(Var a, Var b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.shape != B.shape) fail_shapes("mul", A.shape, B.shape);
    Node n;
    n.kind = OpKind::mul;
    n.in = {a.id, b.id};
    n.val = A;
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val.v[i] *= B.v[i];
    return push(std::move(n));
  }

  Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_last_axis: no operands");
    const Tensor& first = val(parts[0]);
    Node n;
    n.kind = OpKind::concat_last_axis;
    if (first.is_vector()) {
      std::size_t total = 0;
      for (Var p : parts) {
        const Tensor& t = val(p);
        if (!t.is_vector()) fail_shapes("concat_last_axis", first.shape, t.shape);
        n.in.push_back(p.id);
        total += t.shape[0];
      }
      n.val = Tensor({total});
      std::size_t off = 0;
      for (Var p : parts) {
        const Tensor& t = val(p);
        std::copy(t.v.begin(), t.v.end(), n.val.v.begin() + off);
        off += t.size();
      }
    } else {
      const std::size_t r = first.shape[0];
      std::size_t total = 0;
      for (Var p : parts) {
        const Tensor& t = val(p);
        if (!t.is_matrix() || t.shape[0] != r) fail_shapes("concat_last_axis", first.shape, t.shape);
        n.in.push_back(p.id);
        total += t.shape[1];
      }
      n.val = Tensor({r, total});
      std::size_t off = 0;
      for (Var p : parts) {
        const Tensor& t = val(p);
        const std::size_t c = t.shape[1];
        for (std::size_t i = 0; i < r; ++i)
          std::copy(t.v.begin() + i * c, t.v.begin() + (i + 1) * c, n.val.v.begin() + i * total + off);
        off += c;
      }
    }
    return push(std::move(n));
  }

  Var concat(Var a, Var b) {
    const Var parts[2] = {a, b};
    return concat(std::span<const Var>(parts, 2));
  }

  // Stacks equal-width vectors into a {T,w} matrix (row j = input j).
  Var stack_rows(std::span<const Var> rows_in) {
    if (rows_in.empty()) throw std::invalid_argument("stack_rows: no operands");
    const std::size_t w = val(rows_in[0]).shape[0];
    Node n;
    n.kind = OpKind::stack_rows;
    n.val = Tensor({rows_in.size(), w});
    std::size_t i = 0;
    for (Var r : rows_in) {
      const Tensor& t = val(r);
      if (!t.is_vector() || t.shape[0] != w) fail_shapes("stack_rows", {w}, t.shape);
      n.in.push_back(r.id);
      std::copy(t.v.begin(), t.v.end(), n.val.v.begin() + (i++) * w);
    }
    return push(std::move(n));
  }

  Var tanh(Var a) {
    return unary(OpKind::tanh, a, [](double x) { return std::tanh(x); });
  }

  Var sigmoid(Var a) {
    return unary(OpKind::sigmoid, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  }

  Var log(Var a) {
    return unary(OpKind::log, a, [](double x) { return std::log(x); });
  }

  Var negate(Var a) {
    return unary(OpKind::negate, a, [](double x) { return -x; });
  }

  // Row-wise softmax over the last axis, max-subtracted for stability.
  Var softmax(Var a) {
    const Tensor& A = val(a);
    Node n;
    n.kind = OpKind::softmax_last_axis;
    n.in = {a.id};
    n.val = A;
    const std::size_t c = A.cols();
    const std::size_t r = A.size() / c;
    for (std::size_t i = 0; i < r; ++i) {
      double* row = n.val.v.data() + i * c;
      double mx = row[0];
      for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
      double z = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        row[j] = std::exp(row[j] - mx);
        z += row[j];
      }
      for (std::size_t j = 0; j < c; ++j) row[j] /= z;
    }
    return push(std::move(n));
  }

  // Rows of `table` selected by ids; one id gives a vector, several a matrix.
  Var embedding(Var table, std::vector<int> ids) {
    const Tensor& E = val(table);
    if (!E.is_matrix()) throw std::invalid_argument("embedding_lookup: table must be a matrix, got " + shape_str(E.shape));
    if (ids.empty()) throw std::invalid_argument("embedding_lookup: no ids");
    const std::size_t v = E.shape[0], e = E.shape[1];
    for (int id : ids)
      if (id < 0 || static_cast<std::size_t>(id) >= v)
        throw std::invalid_argument("embedding_lookup: id " + std::to_string(id) + " out of range for table " + shape_str(E.shape));
    Node n;
    n.kind = OpKind::embedding_lookup;
    n.in = {table.id};
    n.ids = std::move(ids);
    if (n.ids.size() == 1) {
      n.val = Tensor({e});
      std::copy(E.v.begin() + n.ids[0] * e, E.v.begin() + (n.ids[0] + 1) * e, n.val.v.begin());
    } else {
      n.val = Tensor({n.ids.size(), e});
      for (std::size_t i = 0; i < n.ids.size(); ++i)
        std::copy(E.v.begin() + n.ids[i] * e, E.v.begin() + (n.ids[i] + 1) * e, n.val.v.begin() + i * e);
    }
    return push(std::move(n));
  }

  Var embedding(Var table, int id) { return embedding(table, std::vector<int>{id}); }

  // Range [offset, offset+len) of the last axis.
  Var slice(Var a, std::size_t offset, std::size_t len) {
    const Tensor& A = val(a);
    const std::size_t c = A.cols();
    if (len == 0 || offset + len > c)
      throw std::invalid_argument("slice: range [" + std::to_string(offset) + "," + std::to_string(offset + len) +
                                  ") out of bounds for " + shape_str(A.shape));
    Node n;
    n.kind = OpKind::slice;
    n.in = {a.id};
    n.off = offset;
    n.len = len;
    if (A.is_vector() || A.shape.empty()) {
      n.val = Tensor({len});
      std::copy(A.v.begin() + offset, A.v.begin() + offset + len, n.val.v.begin());
    } else {
      const std::size_t r = A.shape[0];
      n.val = Tensor({r, len});
      for (std::size_t i = 0; i < r; ++i)
        std::copy(A.v.begin() + i * c + offset, A.v.begin() + i * c + offset + len, n.val.v.begin() + i * len);
    }
    return push(std::move(n));
  }

  Var sum(Var a) {
    const Tensor& A = val(a);
    Node n;
    n.kind = OpKind::sum;
    n.in = {a.id};
    n.val = Tensor({1});
    double acc = 0.0;
    for (double x : A.v) acc += x;
    n.val.v[0] = acc;
    return push(std::move(n));
  }

  // Generic dispatcher for the attribute-free kinds; slice and
  // embedding_lookup carry attributes and go through their methods.
  Var apply(OpKind kind, std::span<const Var> inputs) {
    auto need = [&](std::size_t k) {
      if (inputs.size() != k)
        throw std::invalid_argument("forward_op: wrong operand count for kind");
    };
    switch (kind) {
      case OpKind::matmul: need(2); return matmul(inputs[0], inputs[1]);
      case OpKind::add: need(2); return add(inputs[0], inputs[1]);
      case OpKind::mul: need(2); return mul(inputs[0], inputs[1]);
      case OpKind::concat_last_axis: return concat(inputs);
      case OpKind::stack_rows: return stack_rows(inputs);
      case OpKind::tanh: need(1); return tanh(inputs[0]);
      case OpKind::sigmoid: need(1); return sigmoid(inputs[0]);
      case OpKind::softmax_last_axis: need(1); return softmax(inputs[0]);
      case OpKind::slice: need(1); return slice(inputs[0], 0, val(inputs[0]).cols());
      case OpKind::sum: need(1); return sum(inputs[0]);
      case OpKind::log: need(1); return log(inputs[0]);
      case OpKind::negate: need(1); return negate(inputs[0]);
      default:
        throw std::invalid_argument("forward_op: kind has no generic form");
    }
  }

  const Tensor& value(Var v) const { return val(v); }

  double scalar(Var v) const {
    const Tensor& t = val(v);
    if (t.size() != 1) throw std::invalid_argument("scalar: tensor has shape " + shape_str(t.shape));
    return t.v[0];
  }

  const std::vector<double>& grad(Var v) const {
    ensure(v);
    return nodes_[v.id].grad;
  }

  std::size_t size() const { return nodes_.size(); }

  // Reverse pass from a scalar loss. Parameter gradients accumulate into
  // Param::grad; nodes off the path to the loss keep zero grad.
  void backward(Var loss) {
    const Tensor& lt = val(loss);
    if (lt.size() != 1)
      throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(lt.shape));
    for (auto& n : nodes_) n.grad.assign(n.val_ref().size(), 0.0);
    nodes_[loss.id].grad[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      bool any = false;
      for (double g : n.grad)
        if (g != 0.0) { any = true; break; }
      if (!any) continue;
      step_backward(n);
    }
    for (auto& [p, id] : param_nodes_) {
      Node& n = nodes_[id];
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.p->grad[i] += n.grad[i];
    }
  }

 private:
  struct Node {
    OpKind kind;
    std::vector<int> in;
    Tensor val;           // unused for param nodes
    Param* p = nullptr;   // param nodes only
    std::vector<int> ids; // embedding_lookup
    std::size_t off = 0, len = 0;
    std::vector<double> grad;

    const Tensor& val_ref() const { return kind == OpKind::param ? p->value : val; }
  };

  // deque: node references stay valid while the graph grows
  std::deque<Node> nodes_;
  std::map<const Param*, int> param_nodes_;

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  void ensure(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
      throw std::invalid_argument("graph: invalid node id " + std::to_string(v.id));
  }

  const Tensor& val(Var v) const {
    ensure(v);
    return nodes_[v.id].val_ref();
  }

  [[noreturn]] static void fail_shapes(const char* op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
  }

  template <typename F>
  Var unary(OpKind k, Var a, F f) {
    Node n;
    n.kind = k;
    n.in = {a.id};
    n.val = val(a);
    for (double& x : n.val.v) x = f(x);
    return push(std::move(n));
  }

  std::vector<double>& grad_of(int id) { return nodes_[id].grad; }
  const Tensor& val_of(int id) const { return nodes_[id].val_ref(); }

  void step_backward(Node& n) {
    switch (n.kind) {
      case OpKind::input:
      case OpKind::param:
        return;
      case OpKind::matmul: {
        const Tensor& A = val_of(n.in[0]);
        const Tensor& B = val_of(n.in[1]);
        auto& dA = grad_of(n.in[0]);
        auto& dB = grad_of(n.in[1]);
        const auto& dC = n.grad;
        if (A.is_matrix() && B.is_matrix()) {
          const std::size_t m = A.shape[0], k = A.shape[1], c = B.shape[1];
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t l = 0; l < c; ++l) {
              const double g = dC[i * c + l];
              if (g == 0.0) continue;
              for (std::size_t j = 0; j < k; ++j) {
                dA[i * k + j] += g * B.v[j * c + l];
                dB[j * c + l] += A.v[i * k + j] * g;
              }
            }
        } else if (A.is_matrix() && B.is_vector()) {
          const std::size_t m = A.shape[0], k = A.shape[1];
          for (std::size_t i = 0; i < m; ++i) {
            const double g = dC[i];
            if (g == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) {
              dA[i * k + j] += g * B.v[j];
              dB[j] += A.v[i * k + j] * g;
            }
          }
        } else if (A.is_vector() && B.is_matrix()) {
          const std::size_t k = A.shape[0], c = B.shape[1];
          for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < c; ++l) {
              acc += B.v[j * c + l] * dC[l];
              dB[j * c + l] += A.v[j] * dC[l];
            }
            dA[j] += acc;
          }
        } else {
          const double g = dC[0];
          for (std::size_t j = 0; j < A.shape[0]; ++j) {
            dA[j] += g * B.v[j];
            dB[j] += g * A.v[j];
          }
        }
        return;
      }
      case OpKind::add: {
        const Tensor& A = val_of(n.in[0]);
        const Tensor& B = val_of(n.in[1]);
        auto& dA = grad_of(n.in[0]);
        auto& dB = grad_of(n.in[1]);
        if (A.shape == B.shape) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            dA[i] += n.grad[i];
            dB[i] += n.grad[i];
          }
        } else {
          const std::size_t r = A.shape[0], c = A.shape[1];
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              dA[i * c + j] += n.grad[i * c + j];
              dB[j] += n.grad[i * c + j];
            }
        }
        return;
      }
      case OpKind::mul: {
        const Tensor& A = val_of(n.in[0]);
        const Tensor& B = val_of(n.in[1]);
        auto& dA = grad_of(n.in[0]);
        auto& dB = grad_of(n.in[1]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          dA[i] += n.grad[i] * B.v[i];
          dB[i] += n.grad[i] * A.v[i];
        }
        return;
      }
      case OpKind::concat_last_axis: {
        const Tensor& out = n.val;
        if (out.is_vector()) {
          std::size_t off = 0;
          for (int src : n.in) {
            auto& d = grad_of(src);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += n.grad[off + i];
            off += d.size();
          }
        } else {
          const std::size_t r = out.shape[0], total = out.shape[1];
          std::size_t off = 0;
          for (int src : n.in) {
            const std::size_t c = val_of(src).shape[1];
            auto& d = grad_of(src);
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j) d[i * c + j] += n.grad[i * total + off + j];
            off += c;
          }
        }
        return;
      }
      case OpKind::stack_rows: {
        const std::size_t w = n.val.shape[1];
        for (std::size_t i = 0; i < n.in.size(); ++i) {
          auto& d = grad_of(n.in[i]);
          for (std::size_t j = 0; j < w; ++j) d[j] += n.grad[i * w + j];
        }
        return;
      }
      case OpKind::tanh: {
        auto& dA = grad_of(n.in[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) dA[i] += n.grad[i] * (1.0 - n.val.v[i] * n.val.v[i]);
        return;
      }
      case OpKind::sigmoid: {
        auto& dA = grad_of(n.in[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) dA[i] += n.grad[i] * n.val.v[i] * (1.0 - n.val.v[i]);
        return;
      }
      case OpKind::softmax_last_axis: {
        auto& dA = grad_of(n.in[0]);
        const std::size_t c = n.val.cols();
        const std::size_t r = n.val.size() / c;
        for (std::size_t i = 0; i < r; ++i) {
          const double* y = n.val.v.data() + i * c;
          const double* dy = n.grad.data() + i * c;
          double dot = 0.0;
          for (std::size_t j = 0; j < c; ++j) dot += dy[j] * y[j];
          for (std::size_t j = 0; j < c; ++j) dA[i * c + j] += y[j] * (dy[j] - dot);
        }
        return;
      }
      case OpKind::embedding_lookup: {
        auto& dE = grad_of(n.in[0]);
        const std::size_t e = val_of(n.in[0]).shape[1];
        for (std::size_t i = 0; i < n.ids.size(); ++i)
          for (std::size_t j = 0; j < e; ++j) dE[n.ids[i] * e + j] += n.grad[i * e + j];
        return;
      }
      case OpKind::slice: {
        const Tensor& A = val_of(n.in[0]);
        auto& dA = grad_of(n.in[0]);
        const std::size_t c = A.cols();
        const std::size_t r = A.size() / c;
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < n.len; ++j) dA[i * c + n.off + j] += n.grad[i * n.len + j];
        return;
      }
      case OpKind::sum: {
        auto& dA = grad_of(n.in[0]);
        for (double& g : dA) g += n.grad[0];
        return;
      }
      case OpKind::log: {
        const Tensor& A = val_of(n.in[0]);
        auto& dA = grad_of(n.in[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) dA[i] += n.grad[i] / A.v[i];
        return;
      }
      case OpKind::negate: {
        auto& dA = grad_of(n.in[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) dA[i] -= n.grad[i];
        return;
      }
    }
  }
};

// Parameters in creation order; the order is the checkpoint order.
class ParamStore {
 public:
  Param* create(const std::string& name, Shape shape) {
    if (index_.count(name)) throw std::invalid_argument("param store: duplicate name " + name);
    items_.push_back(std::make_unique<Param>(name, std::move(shape)));
    index_[name] = items_.size() - 1;
    return items_.back().get();
  }

  Param* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
  }

  void zero_grads() {
    for (auto& p : items_) p->zero_grad();
  }

  std::size_t size() const { return items_.size(); }
  Param& at(std::size_t i) { return *items_[i]; }
  const Param& at(std::size_t i) const { return *items_[i]; }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<std::unique_ptr<Param>> items_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace shaped
