#ifndef MSTNHP_AUTODIFF_HPP
#define MSTNHP_AUTODIFF_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstnhp/core.hpp"

namespace mstnhp {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Named dense parameter arrays with parallel gradient and Adam moment slots.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> m;
    std::vector<double> v;
  };

  std::size_t add(std::string name, std::vector<std::size_t> dims,
                  std::vector<double> init) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    if (init.size() != n) throw std::invalid_argument("ParamStore: init size mismatch");
    if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    Entry e;
    e.name = name;
    e.dims = std::move(dims);
    e.value = std::move(init);
    e.grad.assign(n, 0.0);
    e.m.assign(n, 0.0);
    e.v.assign(n, 0.0);
    index_[name] = entries_.size();
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
  }

  std::size_t add_uniform(std::string name, std::vector<std::size_t> dims, double radius,
                          RandomStream& rng) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    std::vector<double> init(n);
    for (double& x : init) x = rng.uniform(-radius, radius);
    return add(std::move(name), std::move(dims), std::move(init));
  }

  std::size_t count() const { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }

  std::size_t find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown name " + name);
    return it->second;
  }

  Entry& at(const std::string& name) { return entries_[find(name)]; }
  const Entry& at(const std::string& name) const { return entries_[find(name)]; }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.size();
    return n;
  }

  void zero_grad() {
    for (Entry& e : entries_)
      for (double& g : e.grad) g = 0.0;
  }

  void scale_grad(double c) {
    for (Entry& e : entries_)
      for (double& g : e.grad) g *= c;
  }

  std::vector<double> flat_values() const {
    std::vector<double> out;
    out.reserve(total_size());
    for (const Entry& e : entries_) out.insert(out.end(), e.value.begin(), e.value.end());
    return out;
  }

  void set_flat_values(std::span<const double> flat) {
    if (flat.size() != total_size())
      throw std::invalid_argument("ParamStore: flat value size mismatch");
    std::size_t off = 0;
    for (Entry& e : entries_) {
      for (double& x : e.value) x = flat[off++];
    }
  }

  std::vector<double> flat_grads() const {
    std::vector<double> out;
    out.reserve(total_size());
    for (const Entry& e : entries_) out.insert(out.end(), e.grad.begin(), e.grad.end());
    return out;
  }

  long step_count() const { return step_; }
  void set_step_count(long s) { step_ = s; }

  // Bias-corrected Adam descent step on the stored gradients; gradients are
  // zeroed afterwards.
  void adam_step(double lr, double beta1, double beta2, double eps) {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (Entry& e : entries_) {
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        const double g = e.grad[i];
        e.m[i] = beta1 * e.m[i] + (1.0 - beta1) * g;
        e.v[i] = beta2 * e.v[i] + (1.0 - beta2) * g * g;
        e.value[i] -= lr * (e.m[i] / bc1) / (std::sqrt(e.v[i] / bc2) + eps);
      }
    }
    zero_grad();
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  long step_ = 0;
};

// Dynamic reverse-mode tape over dense vector nodes. Values live in a flat
// arena that is reused across tapes via clear(); topological order is
// insertion order.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  void clear() {
    nodes_.clear();
    arena_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

  int constant(std::span<const double> v) {
    int id = alloc(Op::Const, v.size());
    std::copy(v.begin(), v.end(), val(id).begin());
    return id;
  }

  int constant(double x) { return constant(std::span<const double>(&x, 1)); }

  // Leaf over a whole ParamStore entry; the value is snapshotted at creation
  // and backward() accumulates into the entry's gradient slot.
  int param(std::size_t entry_index) {
    if (!store_) throw std::logic_error("Tape: no ParamStore attached");
    const auto& e = store_->entry(entry_index);
    int id = alloc(Op::Param, e.value.size());
    std::copy(e.value.begin(), e.value.end(), val(id).begin());
    nodes_[static_cast<std::size_t>(id)].param = static_cast<int>(entry_index);
    return id;
  }

  int add(int a, int b) { return binary(Op::Add, a, b); }
  int sub(int a, int b) { return binary(Op::Sub, a, b); }
  int mul(int a, int b) { return binary(Op::Mul, a, b); }

  int div(int a, int b) {
    int id = binary_alloc(Op::Div, a, b);
    auto va = val(a);
    auto vb = val(b);
    auto y = val(id);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = vb.size() == 1 ? vb[0] : vb[i];
      if (d == 0.0) throw std::domain_error("Tape: division by zero");
      y[i] = (va.size() == 1 ? va[0] : va[i]) / d;
    }
    return id;
  }

  int neg(int a) { return unary(Op::Neg, a, [](double x) { return -x; }); }
  int exp(int a) { return unary(Op::Exp, a, [](double x) { return std::exp(x); }); }

  int log(int a) {
    return unary(Op::Log, a, [](double x) {
      if (!(x > 0.0)) throw std::domain_error("Tape: log of non-positive value");
      return std::log(x);
    });
  }

  int sigmoid(int a) {
    return unary(Op::Sigmoid, a, [](double x) { return mstnhp::sigmoid(x); });
  }

  int softplus(int a) {
    return unary(Op::Softplus, a, [](double x) { return mstnhp::softplus(x); });
  }

  // 2*sigma(2x) - 1, i.e. tanh.
  int scaled_tanh(int a) {
    return unary(Op::Tanh, a, [](double x) { return std::tanh(x); });
  }

  int clamp_min(int a, double floor) {
    int id = unary(Op::ClampMin, a, [floor](double x) { return std::max(x, floor); });
    nodes_[static_cast<std::size_t>(id)].c0 = floor;
    return id;
  }

  int scale(int a, double c) {
    int id = unary(Op::Scale, a, [c](double x) { return c * x; });
    nodes_[static_cast<std::size_t>(id)].c0 = c;
    return id;
  }

  int add_const(int a, double c) {
    int id = unary(Op::AddConst, a, [c](double x) { return x + c; });
    nodes_[static_cast<std::size_t>(id)].c0 = c;
    return id;
  }

  int dot(int a, int b) {
    check_same_size(a, b);
    int id = alloc(Op::Dot, 1, a, b);
    auto va = val(a);
    auto vb = val(b);
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
    val(id)[0] = s;
    return id;
  }

  int sum(int a) {
    int id = alloc(Op::Sum, 1, a);
    double s = 0.0;
    for (double x : val(a)) s += x;
    val(id)[0] = s;
    return id;
  }

  // y = W x with W a flat row-major (rows x cols) node.
  int matvec(int w, int x, std::size_t rows, std::size_t cols) {
    if (val(w).size() != rows * cols || val(x).size() != cols)
      throw std::invalid_argument("Tape: matvec shape mismatch");
    int id = alloc(Op::MatVec, rows, w, x);
    auto vw = val(w);
    auto vx = val(x);
    auto y = val(id);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      const double* row = vw.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) s += row[c] * vx[c];
      y[r] = s;
    }
    nodes_[static_cast<std::size_t>(id)].c0 = static_cast<double>(cols);
    return id;
  }

  std::span<const double> value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return {arena_.data() + n.off, n.size};
  }

  double scalar_value(int id) const {
    auto v = value(id);
    if (v.size() != 1) throw std::logic_error("Tape: node is not scalar");
    return v[0];
  }

  // Reverse sweep from a scalar output; parameter adjoints accumulate into
  // the attached ParamStore.
  void backward(int output) {
    const Node& out = nodes_[static_cast<std::size_t>(output)];
    if (out.size != 1) throw std::invalid_argument("Tape: backward output must be scalar");
    grads_.assign(arena_.size(), 0.0);
    grads_[out.off] = 1.0;
    for (int id = output; id >= 0; --id) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      std::span<const double> g(grads_.data() + n.off, n.size);
      switch (n.op) {
        case Op::Const:
          break;
        case Op::Param: {
          auto& e = store_->entry(static_cast<std::size_t>(n.param));
          for (std::size_t i = 0; i < n.size; ++i) e.grad[i] += g[i];
          break;
        }
        case Op::Add:
          spread(n.a, g, +1.0);
          spread(n.b, g, +1.0);
          break;
        case Op::Sub:
          spread(n.a, g, +1.0);
          spread(n.b, g, -1.0);
          break;
        case Op::Mul:
          spread_scaled(n.a, g, n.b);
          spread_scaled(n.b, g, n.a);
          break;
        case Op::Div: {
          auto va = val(n.a);
          auto vb = val(n.b);
          for (std::size_t i = 0; i < n.size; ++i) {
            const double num = va.size() == 1 ? va[0] : va[i];
            const double den = vb.size() == 1 ? vb[0] : vb[i];
            grad_at(n.a, va.size() == 1 ? 0 : i) += g[i] / den;
            grad_at(n.b, vb.size() == 1 ? 0 : i) -= g[i] * num / (den * den);
          }
          break;
        }
        case Op::Neg:
          spread(n.a, g, -1.0);
          break;
        case Op::Exp: {
          auto y = val(id);
          for (std::size_t i = 0; i < n.size; ++i) grad_at(n.a, i) += g[i] * y[i];
          break;
        }
        case Op::Log: {
          auto x = val(n.a);
          for (std::size_t i = 0; i < n.size; ++i) grad_at(n.a, i) += g[i] / x[i];
          break;
        }
        case Op::Sigmoid: {
          auto y = val(id);
          for (std::size_t i = 0; i < n.size; ++i)
            grad_at(n.a, i) += g[i] * y[i] * (1.0 - y[i]);
          break;
        }
        case Op::Softplus: {
          auto x = val(n.a);
          for (std::size_t i = 0; i < n.size; ++i)
            grad_at(n.a, i) += g[i] * mstnhp::sigmoid(x[i]);
          break;
        }
        case Op::Tanh: {
          auto y = val(id);
          for (std::size_t i = 0; i < n.size; ++i)
            grad_at(n.a, i) += g[i] * (1.0 - y[i] * y[i]);
          break;
        }
        case Op::ClampMin: {
          auto x = val(n.a);
          for (std::size_t i = 0; i < n.size; ++i)
            if (x[i] > n.c0) grad_at(n.a, i) += g[i];
          break;
        }
        case Op::Scale:
          spread(n.a, g, n.c0);
          break;
        case Op::AddConst:
          spread(n.a, g, 1.0);
          break;
        case Op::Dot: {
          auto va = val(n.a);
          auto vb = val(n.b);
          for (std::size_t i = 0; i < va.size(); ++i) {
            grad_at(n.a, i) += g[0] * vb[i];
            grad_at(n.b, i) += g[0] * va[i];
          }
          break;
        }
        case Op::Sum: {
          auto va = val(n.a);
          for (std::size_t i = 0; i < va.size(); ++i) grad_at(n.a, i) += g[0];
          break;
        }
        case Op::MatVec: {
          const std::size_t cols = static_cast<std::size_t>(n.c0);
          auto vw = val(n.a);
          auto vx = val(n.b);
          for (std::size_t r = 0; r < n.size; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            for (std::size_t c = 0; c < cols; ++c) {
              grad_at(n.a, r * cols + c) += gr * vx[c];
              grad_at(n.b, c) += gr * vw[r * cols + c];
            }
          }
          break;
        }
      }
    }
  }

 private:
  enum class Op {
    Const,
    Param,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Sigmoid,
    Softplus,
    Tanh,
    ClampMin,
    Scale,
    AddConst,
    Dot,
    Sum,
    MatVec
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    int param = -1;
    double c0 = 0.0;
    std::size_t off = 0;
    std::size_t size = 0;
  };

  int alloc(Op op, std::size_t size, int a = -1, int b = -1) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.off = arena_.size();
    n.size = size;
    arena_.resize(arena_.size() + size, 0.0);
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size() - 1);
  }

  std::span<double> val(int id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return {arena_.data() + n.off, n.size};
  }

  std::span<const double> cval(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return {arena_.data() + n.off, n.size};
  }

  double& grad_at(int id, std::size_t i) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return grads_[n.off + i];
  }

  template <class F>
  int unary(Op op, int a, F&& f) {
    int id = alloc(op, cval(a).size(), a);
    auto x = cval(a);
    auto y = val(id);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(x[i]);
    return id;
  }

  void check_same_size(int a, int b) const {
    if (cval(a).size() != cval(b).size())
      throw std::invalid_argument("Tape: operand size mismatch");
  }

  // Binary elementwise op; a size-1 operand broadcasts against a vector.
  int binary_alloc(Op op, int a, int b) {
    const std::size_t sa = cval(a).size(), sb = cval(b).size();
    if (sa != sb && sa != 1 && sb != 1)
      throw std::invalid_argument("Tape: incompatible operand sizes");
    return alloc(op, std::max(sa, sb), a, b);
  }

  int binary(Op op, int a, int b) {
    int id = binary_alloc(op, a, b);
    auto va = cval(a);
    auto vb = cval(b);
    auto y = val(id);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double x0 = va.size() == 1 ? va[0] : va[i];
      const double x1 = vb.size() == 1 ? vb[0] : vb[i];
      y[i] = op == Op::Add ? x0 + x1 : op == Op::Sub ? x0 - x1 : x0 * x1;
    }
    return id;
  }

  // g scaled by a constant into input adjoint, honoring scalar broadcast.
  void spread(int id, std::span<const double> g, double c) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.size == 1 && g.size() > 1) {
      double s = 0.0;
      for (double x : g) s += x;
      grads_[n.off] += c * s;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) grads_[n.off + i] += c * g[i];
    }
  }

  // g scaled elementwise by the other operand's value (Mul backward).
  void spread_scaled(int target, std::span<const double> g, int other) {
    auto vo = cval(other);
    const Node& n = nodes_[static_cast<std::size_t>(target)];
    if (n.size == 1 && g.size() > 1) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        s += g[i] * (vo.size() == 1 ? vo[0] : vo[i]);
      grads_[n.off] += s;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i)
        grads_[n.off + i] += g[i] * (vo.size() == 1 ? vo[0] : vo[i]);
    }
  }

  ParamStore* store_;
  std::vector<Node> nodes_;
  std::vector<double> arena_;
  std::vector<double> grads_;
};

}  // namespace mstnhp

#endif  // MSTNHP_AUTODIFF_HPP
