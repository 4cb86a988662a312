#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "censurv/error.hpp"

namespace censurv::diff {

// Dense row-major f64 tensor of rank 1 or 2. Scalars are shape {1}.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_, std::vector<double> values_, bool requires_grad_ = false);

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t numel() const;
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
};

std::string shape_str(const std::vector<std::size_t>& shape);

class Tape;

// Handle to a node on a Tape. Cheap to copy; invalidated by Tape::clear().
class Var {
 public:
  Var() : tape_(nullptr), idx_(0) {}

  const std::vector<std::size_t>& shape() const;
  const std::vector<double>& values() const;
  // Accumulated gradient after Tape::backward. Zeros if the node was not
  // reached by backpropagation.
  std::vector<double> grad() const;
  double scalar() const;  // value of a single-element node
  std::size_t numel() const;
  std::size_t rows() const;
  std::size_t cols() const;
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t idx) : tape_(tape), idx_(idx) {}

  Tape* tape_;
  std::size_t idx_;
};

// Define-by-run computation tape. Every forward op records a node so that
// backward() can reach its inputs. Rebuilt (cleared) per forward pass.
// Single-threaded; independent tapes may run in parallel.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(const Tensor& t);
  Var leaf(std::vector<double> values, std::vector<std::size_t> shape, bool requires_grad = false);
  Var constant(double v);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double c);
  Var relu(Var x);
  Var softmax(Var x, int axis);
  Var log_sum_exp(Var x, int axis);
  Var cosine_similarity(Var a, Var b);
  Var concat(const std::vector<Var>& xs, int axis);
  Var mean(Var x);           // mean over all elements -> {1}
  Var mean(Var x, int axis); // rank-2 only, reduces the given axis
  Var sum(Var x);            // sum over all elements -> {1}
  Var gather(Var x, std::vector<std::size_t> indices);  // rank-1 source
  Var transpose(Var x);
  Var reshape(Var x, std::vector<std::size_t> shape);
  // Each row scaled to unit L2 norm. Errors on a zero-norm row.
  Var normalize_rows(Var x);

  // Reverse-mode sweep from a scalar root. Every reachable requires_grad
  // node receives its accumulated gradient; everything else reads as zero.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear();

 private:
  friend class Var;

  struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // lazily allocated during backward
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;  // empty for leaves
  };

  Node& node(std::size_t i) { return nodes_[i]; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  Var push(std::vector<std::size_t> shape, std::vector<double> values, bool requires_grad,
           std::function<void(Tape&)> backprop);
  // Returns the grad buffer of node i, allocating zeros on first touch.
  std::vector<double>& grad_buffer(std::size_t i);

  std::vector<Node> nodes_;
};

}  // namespace censurv::diff
