#include "censurv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace censurv::diff {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

[[noreturn]] void op_error(const std::string& op, const std::string& detail) {
  throw_validation(op + ": " + detail);
}

void check_rank2(const std::string& op, const Var& x) {
  if (x.shape().size() != 2) op_error(op, "expected rank-2 input, got shape " + shape_str(x.shape()));
}

// Reduction axes are expressed as (count, length, in_stride, out_stride):
// `count` slices of `length` elements each.
struct Slices {
  std::size_t count;
  std::size_t length;
  std::size_t base_stride;   // stride between slices
  std::size_t elem_stride;   // stride within a slice
};

Slices slices_for_axis(const std::string& op, const std::vector<std::size_t>& shape, int axis) {
  if (shape.size() == 1) {
    if (axis != 0) op_error(op, "axis " + std::to_string(axis) + " out of range for rank-1 input");
    return {1, shape[0], 0, 1};
  }
  if (shape.size() == 2) {
    if (axis == 0) return {shape[1], shape[0], 1, shape[1]};  // columns
    if (axis == 1) return {shape[0], shape[1], shape[1], 1};  // rows
    op_error(op, "axis " + std::to_string(axis) + " out of range for rank-2 input");
  }
  op_error(op, "unsupported rank " + std::to_string(shape.size()));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> values_, bool requires_grad_)
    : shape(std::move(shape_)), values(std::move(values_)), requires_grad(requires_grad_) {
  if (shape.empty() || shape.size() > 2)
    throw_validation("Tensor: rank must be 1 or 2, got shape " + shape_str(shape));
  if (product(shape) != values.size())
    throw_validation("Tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::vector<double> v(product(shape), 0.0);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

std::size_t Tensor::numel() const { return values.size(); }

std::size_t Tensor::rows() const { return shape.empty() ? 0 : shape[0]; }

std::size_t Tensor::cols() const { return shape.size() < 2 ? 1 : shape[1]; }

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

const std::vector<std::size_t>& Var::shape() const { return tape_->node(idx_).shape; }

const std::vector<double>& Var::values() const { return tape_->node(idx_).values; }

std::vector<double> Var::grad() const {
  const auto& n = tape_->node(idx_);
  if (n.grad.empty()) return std::vector<double>(n.values.size(), 0.0);
  return n.grad;
}

double Var::scalar() const {
  const auto& n = tape_->node(idx_);
  if (n.values.size() != 1)
    throw_validation("Var::scalar: node has " + std::to_string(n.values.size()) + " elements");
  return n.values[0];
}

std::size_t Var::numel() const { return tape_->node(idx_).values.size(); }

std::size_t Var::rows() const { return shape().empty() ? 0 : shape()[0]; }

std::size_t Var::cols() const { return shape().size() < 2 ? 1 : shape()[1]; }

bool Var::requires_grad() const { return tape_->node(idx_).requires_grad; }

Var Tape::push(std::vector<std::size_t> shape, std::vector<double> values, bool requires_grad,
               std::function<void(Tape&)> backprop) {
  Node n;
  n.shape = std::move(shape);
  n.values = std::move(values);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

std::vector<double>& Tape::grad_buffer(std::size_t i) {
  Node& n = nodes_[i];
  if (n.grad.empty()) n.grad.assign(n.values.size(), 0.0);
  return n.grad;
}

void Tape::clear() { nodes_.clear(); }

Var Tape::leaf(const Tensor& t) {
  Tensor checked(t.shape, t.values, t.requires_grad);  // re-validates invariants
  return push(checked.shape, checked.values, checked.requires_grad, nullptr);
}

Var Tape::leaf(std::vector<double> values, std::vector<std::size_t> shape, bool requires_grad) {
  return leaf(Tensor(std::move(shape), std::move(values), requires_grad));
}

Var Tape::constant(double v) { return push({1}, {v}, false, nullptr); }

Var Tape::matmul(Var a, Var b) {
  check_rank2("matmul", a);
  check_rank2("matmul", b);
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2)
    op_error("matmul", "inner dimensions differ (" + shape_str(a.shape()) + " vs " + shape_str(b.shape()) + ")");
  std::vector<double> out(m * n, 0.0);
  {
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = av[i * k + p];
        if (aip == 0.0) continue;
        const double* brow = bv.data() + p * n;
        double* orow = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
      }
  }
  const std::size_t ia = a.idx_, ib = b.idx_;
  const bool rg = a.requires_grad() || b.requires_grad();
  Var out_var = push({m, n}, std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ia, ib, io, m, k, n](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      if (t.nodes_[ia].requires_grad) {
        auto& ga = t.grad_buffer(ia);
        const auto& bv = t.nodes_[ib].values;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = g[i * n + j];
            if (gij == 0.0) continue;
            const double* brow = bv.data() + j;
            double* garow = ga.data() + i * k;
            for (std::size_t p = 0; p < k; ++p) garow[p] += gij * brow[p * n];
          }
      }
      if (t.nodes_[ib].requires_grad) {
        auto& gb = t.grad_buffer(ib);
        const auto& av = t.nodes_[ia].values;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            const double* grow = t.nodes_[io].grad.data() + i * n;
            double* gbrow = gb.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
          }
      }
    };
  }
  return out_var;
}

Var Tape::add(Var a, Var b) {
  if (a.shape() != b.shape())
    op_error("add", "shape mismatch (" + shape_str(a.shape()) + " vs " + shape_str(b.shape()) + ")");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  const std::size_t ia = a.idx_, ib = b.idx_;
  const bool rg = a.requires_grad() || b.requires_grad();
  Var out_var = push(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ia, ib, io](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      if (t.nodes_[ia].requires_grad) {
        auto& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (t.nodes_[ib].requires_grad) {
        auto& gb = t.grad_buffer(ib);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    };
  }
  return out_var;
}

Var Tape::sub(Var a, Var b) {
  if (a.shape() != b.shape())
    op_error("sub", "shape mismatch (" + shape_str(a.shape()) + " vs " + shape_str(b.shape()) + ")");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  const std::size_t ia = a.idx_, ib = b.idx_;
  const bool rg = a.requires_grad() || b.requires_grad();
  Var out_var = push(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ia, ib, io](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      if (t.nodes_[ia].requires_grad) {
        auto& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (t.nodes_[ib].requires_grad) {
        auto& gb = t.grad_buffer(ib);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    };
  }
  return out_var;
}

Var Tape::mul(Var a, Var b) {
  if (a.shape() != b.shape())
    op_error("mul", "shape mismatch (" + shape_str(a.shape()) + " vs " + shape_str(b.shape()) + ")");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  const std::size_t ia = a.idx_, ib = b.idx_;
  const bool rg = a.requires_grad() || b.requires_grad();
  Var out_var = push(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ia, ib, io](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      if (t.nodes_[ia].requires_grad) {
        auto& ga = t.grad_buffer(ia);
        const auto& bv = t.nodes_[ib].values;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (t.nodes_[ib].requires_grad) {
        auto& gb = t.grad_buffer(ib);
        const auto& av = t.nodes_[ia].values;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    };
  }
  return out_var;
}

Var Tape::scale(Var a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a.values()[i];
  const std::size_t ia = a.idx_;
  const bool rg = a.requires_grad();
  Var out_var = push(a.shape(), std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ia, io, c](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      auto& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    };
  }
  return out_var;
}

Var Tape::relu(Var x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] > 0.0 ? x.values()[i] : 0.0;
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push(x.shape(), std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    // Subgradient at exactly 0 is 0.
    nodes_[io].backprop = [ix, io](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      const auto& xv = t.nodes_[ix].values;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xv[i] > 0.0) gx[i] += g[i];
    };
  }
  return out_var;
}

Var Tape::softmax(Var x, int axis) {
  const Slices s = slices_for_axis("softmax", x.shape(), axis);
  if (s.length == 0) op_error("softmax", "empty axis " + std::to_string(axis));
  std::vector<double> out(x.numel());
  for (std::size_t c = 0; c < s.count; ++c) {
    const std::size_t base = c * s.base_stride;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < s.length; ++e) mx = std::max(mx, x.values()[base + e * s.elem_stride]);
    double denom = 0.0;
    for (std::size_t e = 0; e < s.length; ++e) {
      const double v = std::exp(x.values()[base + e * s.elem_stride] - mx);
      out[base + e * s.elem_stride] = v;
      denom += v;
    }
    for (std::size_t e = 0; e < s.length; ++e) out[base + e * s.elem_stride] /= denom;
  }
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push(x.shape(), std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, s](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      const auto& y = t.nodes_[io].values;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t c = 0; c < s.count; ++c) {
        const std::size_t base = c * s.base_stride;
        double dot = 0.0;
        for (std::size_t e = 0; e < s.length; ++e) {
          const std::size_t k = base + e * s.elem_stride;
          dot += g[k] * y[k];
        }
        for (std::size_t e = 0; e < s.length; ++e) {
          const std::size_t k = base + e * s.elem_stride;
          gx[k] += y[k] * (g[k] - dot);
        }
      }
    };
  }
  return out_var;
}

Var Tape::log_sum_exp(Var x, int axis) {
  const Slices s = slices_for_axis("log_sum_exp", x.shape(), axis);
  if (s.length == 0) op_error("log_sum_exp", "empty axis " + std::to_string(axis));
  std::vector<double> out(s.count);
  for (std::size_t c = 0; c < s.count; ++c) {
    const std::size_t base = c * s.base_stride;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < s.length; ++e) mx = std::max(mx, x.values()[base + e * s.elem_stride]);
    double acc = 0.0;
    for (std::size_t e = 0; e < s.length; ++e) acc += std::exp(x.values()[base + e * s.elem_stride] - mx);
    out[c] = mx + std::log(acc);
  }
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push({s.count}, std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, s](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      const auto& lse = t.nodes_[io].values;
      const auto& xv = t.nodes_[ix].values;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t c = 0; c < s.count; ++c) {
        if (g[c] == 0.0) continue;
        const std::size_t base = c * s.base_stride;
        for (std::size_t e = 0; e < s.length; ++e) {
          const std::size_t k = base + e * s.elem_stride;
          gx[k] += g[c] * std::exp(xv[k] - lse[c]);
        }
      }
    };
  }
  return out_var;
}

Var Tape::cosine_similarity(Var a, Var b) {
  if (a.shape().size() != 1 || b.shape().size() != 1 || a.numel() != b.numel())
    op_error("cosine_similarity",
             "expected equal-length vectors, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const std::size_t n = a.numel();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a.values()[i] * b.values()[i];
    na2 += a.values()[i] * a.values()[i];
    nb2 += b.values()[i] * b.values()[i];
  }
  if (na2 == 0.0 || nb2 == 0.0) op_error("cosine_similarity", "zero-norm input vector");
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double sim = std::clamp(dot / (na * nb), -1.0, 1.0);
  const std::size_t ia = a.idx_, ib = b.idx_;
  const bool rg = a.requires_grad() || b.requires_grad();
  Var out_var = push({1}, {sim}, rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ia, ib, io, n, na, nb, sim](Tape& t) {
      const double g = t.nodes_[io].grad[0];
      if (g == 0.0) return;
      const auto& av = t.nodes_[ia].values;
      const auto& bv = t.nodes_[ib].values;
      if (t.nodes_[ia].requires_grad) {
        auto& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < n; ++i)
          ga[i] += g * (bv[i] / (na * nb) - sim * av[i] / (na * na));
      }
      if (t.nodes_[ib].requires_grad) {
        auto& gb = t.grad_buffer(ib);
        for (std::size_t i = 0; i < n; ++i)
          gb[i] += g * (av[i] / (na * nb) - sim * bv[i] / (nb * nb));
      }
    };
  }
  return out_var;
}

Var Tape::concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) op_error("concat", "no inputs");
  const std::size_t rank = xs[0].shape().size();
  for (const auto& x : xs)
    if (x.shape().size() != rank) op_error("concat", "mixed input ranks");

  std::vector<std::size_t> out_shape;
  std::vector<double> out;
  bool rg = false;
  for (const auto& x : xs) rg = rg || x.requires_grad();

  if (rank == 1) {
    if (axis != 0) op_error("concat", "axis must be 0 for rank-1 inputs");
    std::size_t total = 0;
    for (const auto& x : xs) total += x.numel();
    out.reserve(total);
    for (const auto& x : xs) out.insert(out.end(), x.values().begin(), x.values().end());
    out_shape = {total};
  } else if (rank == 2 && axis == 0) {
    const std::size_t cols = xs[0].shape()[1];
    std::size_t rows = 0;
    for (const auto& x : xs) {
      if (x.shape()[1] != cols)
        op_error("concat", "column mismatch (" + shape_str(xs[0].shape()) + " vs " + shape_str(x.shape()) + ")");
      rows += x.shape()[0];
    }
    out.reserve(rows * cols);
    for (const auto& x : xs) out.insert(out.end(), x.values().begin(), x.values().end());
    out_shape = {rows, cols};
  } else if (rank == 2 && axis == 1) {
    const std::size_t rows = xs[0].shape()[0];
    std::size_t cols = 0;
    for (const auto& x : xs) {
      if (x.shape()[0] != rows)
        op_error("concat", "row mismatch (" + shape_str(xs[0].shape()) + " vs " + shape_str(x.shape()) + ")");
      cols += x.shape()[1];
    }
    out.assign(rows * cols, 0.0);
    std::size_t col_off = 0;
    for (const auto& x : xs) {
      const std::size_t xc = x.shape()[1];
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < xc; ++c) out[r * cols + col_off + c] = x.values()[r * xc + c];
      col_off += xc;
    }
    out_shape = {rows, cols};
  } else {
    op_error("concat", "axis " + std::to_string(axis) + " out of range");
  }

  std::vector<std::size_t> idxs;
  idxs.reserve(xs.size());
  for (const auto& x : xs) idxs.push_back(x.idx_);
  Var out_var = push(std::move(out_shape), std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    if (rank == 1 || axis == 0) {
      nodes_[io].backprop = [idxs, io](Tape& t) {
        const auto& g = t.nodes_[io].grad;
        std::size_t off = 0;
        for (std::size_t k : idxs) {
          const std::size_t len = t.nodes_[k].values.size();
          if (t.nodes_[k].requires_grad) {
            auto& gk = t.grad_buffer(k);
            for (std::size_t i = 0; i < len; ++i) gk[i] += g[off + i];
          }
          off += len;
        }
      };
    } else {
      const std::size_t rows = out_var.shape()[0];
      const std::size_t cols = out_var.shape()[1];
      nodes_[io].backprop = [idxs, io, rows, cols](Tape& t) {
        const auto& g = t.nodes_[io].grad;
        std::size_t col_off = 0;
        for (std::size_t k : idxs) {
          const std::size_t xc = t.nodes_[k].shape[1];
          if (t.nodes_[k].requires_grad) {
            auto& gk = t.grad_buffer(k);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < xc; ++c) gk[r * xc + c] += g[r * cols + col_off + c];
          }
          col_off += xc;
        }
      };
    }
  }
  return out_var;
}

Var Tape::mean(Var x) {
  const std::size_t n = x.numel();
  if (n == 0) op_error("mean", "empty input");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push({1}, {acc / static_cast<double>(n)}, rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, n](Tape& t) {
      const double g = t.nodes_[io].grad[0] / static_cast<double>(n);
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    };
  }
  return out_var;
}

Var Tape::mean(Var x, int axis) {
  if (x.shape().size() != 2) op_error("mean", "axis form expects rank-2 input");
  const Slices red = slices_for_axis("mean", x.shape(), axis);
  if (red.length == 0) op_error("mean", "empty axis " + std::to_string(axis));
  std::vector<double> out(red.count, 0.0);
  for (std::size_t c = 0; c < red.count; ++c) {
    const std::size_t base = c * red.base_stride;
    double acc = 0.0;
    for (std::size_t e = 0; e < red.length; ++e) acc += x.values()[base + e * red.elem_stride];
    out[c] = acc / static_cast<double>(red.length);
  }
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push({red.count}, std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, red](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t c = 0; c < red.count; ++c) {
        const double gc = g[c] / static_cast<double>(red.length);
        if (gc == 0.0) continue;
        const std::size_t base = c * red.base_stride;
        for (std::size_t e = 0; e < red.length; ++e) gx[base + e * red.elem_stride] += gc;
      }
    };
  }
  return out_var;
}

Var Tape::sum(Var x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const std::size_t ix = x.idx_;
  const std::size_t n = x.numel();
  const bool rg = x.requires_grad();
  Var out_var = push({1}, {acc}, rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, n](Tape& t) {
      const double g = t.nodes_[io].grad[0];
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    };
  }
  return out_var;
}

Var Tape::gather(Var x, std::vector<std::size_t> indices) {
  if (x.shape().size() != 1) op_error("gather", "expected rank-1 source, got " + shape_str(x.shape()));
  std::vector<double> out(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= x.numel())
      op_error("gather", "index " + std::to_string(indices[k]) + " out of range for " + shape_str(x.shape()));
    out[k] = x.values()[indices[k]];
  }
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push({indices.size()}, std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, idx = std::move(indices)](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t k = 0; k < idx.size(); ++k) gx[idx[k]] += g[k];
    };
  }
  return out_var;
}

Var Tape::transpose(Var x) {
  check_rank2("transpose", x);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x.values()[i * c + j];
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push({c, r}, std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, r, c](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    };
  }
  return out_var;
}

Var Tape::reshape(Var x, std::vector<std::size_t> shape) {
  if (product(shape) != x.numel())
    op_error("reshape", "cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push(std::move(shape), x.values(), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    };
  }
  return out_var;
}

Var Tape::normalize_rows(Var x) {
  check_rank2("normalize_rows", x);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  std::vector<double> out(r * c);
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < c; ++j) n2 += x.values()[i * c + j] * x.values()[i * c + j];
    if (n2 == 0.0) op_error("normalize_rows", "zero-norm row " + std::to_string(i));
    norms[i] = std::sqrt(n2);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x.values()[i * c + j] / norms[i];
  }
  const std::size_t ix = x.idx_;
  const bool rg = x.requires_grad();
  Var out_var = push({r, c}, std::move(out), rg, nullptr);
  if (rg) {
    const std::size_t io = out_var.idx_;
    nodes_[io].backprop = [ix, io, r, c, norms = std::move(norms)](Tape& t) {
      const auto& g = t.nodes_[io].grad;
      const auto& u = t.nodes_[io].values;
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < r; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * u[i * c + j];
        for (std::size_t j = 0; j < c; ++j)
          gx[i * c + j] += (g[i * c + j] - u[i * c + j] * dot) / norms[i];
      }
    };
  }
  return out_var;
}

void Tape::backward(Var root) {
  if (nodes_.empty()) throw_validation("backward: tape is empty");
  if (root.tape_ != this) throw_validation("backward: root belongs to another tape");
  if (root.numel() != 1)
    throw_validation("backward: root must be scalar, got shape " + shape_str(root.shape()));
  for (auto& n : nodes_)
    if (!n.grad.empty()) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  if (!nodes_[root.idx_].requires_grad) return;  // constant root: all gradients stay zero
  grad_buffer(root.idx_)[0] = 1.0;
  for (std::size_t i = root.idx_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backprop) continue;
    n.backprop(*this);
  }
}

}  // namespace censurv::diff
