#pragma once

#include <functional>
#include <string>
#include <vector>

namespace aerial {

/// Dense row-major 2-D array of doubles. All tensors in this project are
/// matrices; vectors are [1, n] rows and scalars are [1, 1].
struct Tensor {
  std::vector<int> shape;  // {rows, cols}
  std::vector<double> data;

  Tensor() = default;
  Tensor(int rows, int cols) : shape{rows, cols}, data(static_cast<size_t>(rows) * cols, 0.0) {}

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor row(const std::vector<double>& values);

  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }
  long long size() const { return static_cast<long long>(data.size()); }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-accumulation record. Operations append nodes holding the forward
/// value plus a backward closure; backward() runs the closures in reverse,
/// accumulating exactly one gradient per participating node. Leaves created
/// with requires_grad=false (and everything computed only from them) carry
/// no closures, so target-network passes cost no gradient work.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_rowvec(Var a, Var b);           // a[m,n] + broadcast b[1,n]
  Var affine(Var a, double mul, double add);  // mul * a + add, elementwise
  Var relu(Var a);
  Var elu(Var a);
  Var sigmoid(Var a);
  Var tanh_act(Var a);
  Var abs_val(Var a);
  Var softmax_rows(Var a);
  Var mean_rows(Var a);                   // [m,n] -> [1,n]
  Var sum_all(Var a);                     // -> [1,1]
  Var reshape(Var a, int rows, int cols);
  Var select_per_row(Var a, const std::vector<int>& idx);  // -> [1,m], picks a[i, idx[i]]

  /// Copy of the value with the gradient path cut; upstream receives zero.
  Var detach(Var a);

  /// Reverse pass from a recorded scalar. Throws if `loss` was not recorded
  /// on this tape or is not a [1,1] value.
  void backward(Var loss);

  const Tensor& val(Var v) const { return node(v).value; }
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  size_t num_nodes() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // sized on demand during backward
    bool requires_grad = false;
    std::function<void(Tape&)> back;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& grad_buf(int id);
  Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
  void check(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace aerial
