#include "aerial/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace aerial {

Tensor Tensor::row(const std::vector<double>& values) {
  Tensor t(1, static_cast<int>(values.size()));
  t.data = values;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(shape[0]) + ", " + std::to_string(shape[1]) + "]";
}

namespace {

void matmul_acc(const double* a, const double* b, double* out, int m, int k, int n) {
  // out[m,n] += a[m,k] * b[k,n]
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* orow = out + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[m,k] += g[m,n] * b[k,n]^T
void matmul_acc_bt(const double* g, const double* b, double* out, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* grow = g + static_cast<size_t>(i) * n;
    double* orow = out + static_cast<size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* brow = b + static_cast<size_t>(p) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
      orow[p] += acc;
    }
  }
}

// out[k,n] += a[m,k]^T * g[m,n]
void matmul_acc_at(const double* a, const double* g, double* out, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    const double* grow = g + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      double* orow = out + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
}

}  // namespace

Tape::Node& Tape::node(Var v) {
  check(v);
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  check(v);
  return nodes_[v.id];
}

void Tape::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::runtime_error("tape: value was not recorded on this tape");
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.data.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.data.empty())
    throw std::runtime_error("tape: no gradient recorded (run backward first)");
  return n.grad;
}

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::clear() { nodes_.clear(); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.cols() != B.rows())
    throw std::invalid_argument("matmul: inner dimensions differ, " + A.shape_str() + " vs " +
                                B.shape_str());
  const int m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out(m, n);
  matmul_acc(A.data.data(), B.data.data(), out.data.data(), m, k, n);
  const bool rg = requires_grad(a) || requires_grad(b);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, ib = b.id, iv = v.id;
    nodes_[iv].back = [ia, ib, iv, m, k, n](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      if (t.nodes_[ia].requires_grad)
        matmul_acc_bt(g.data.data(), t.nodes_[ib].value.data.data(),
                      t.grad_buf(ia).data.data(), m, k, n);
      if (t.nodes_[ib].requires_grad)
        matmul_acc_at(t.nodes_[ia].value.data.data(), g.data.data(),
                      t.grad_buf(ib).data.data(), m, k, n);
    };
  }
  return v;
}

Var Tape::transpose(Var a) {
  const Tensor& A = val(a);
  const int m = A.rows(), n = A.cols();
  Tensor out(n, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = A.at(i, j);
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv, m, n](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      Tensor& ga = t.grad_buf(ia);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
    };
  }
  return v;
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (!A.same_shape(B))
    throw std::invalid_argument("add: shape mismatch, " + A.shape_str() + " vs " + B.shape_str());
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] + B.data[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, ib = b.id, iv = v.id;
    nodes_[iv].back = [ia, ib, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      if (t.nodes_[ia].requires_grad) {
        Tensor& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.nodes_[ib].requires_grad) {
        Tensor& gb = t.grad_buf(ib);
        for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i];
      }
    };
  }
  return v;
}

Var Tape::sub(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (!A.same_shape(B))
    throw std::invalid_argument("sub: shape mismatch, " + A.shape_str() + " vs " + B.shape_str());
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] - B.data[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, ib = b.id, iv = v.id;
    nodes_[iv].back = [ia, ib, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      if (t.nodes_[ia].requires_grad) {
        Tensor& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.nodes_[ib].requires_grad) {
        Tensor& gb = t.grad_buf(ib);
        for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] -= g.data[i];
      }
    };
  }
  return v;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (!A.same_shape(B))
    throw std::invalid_argument("mul: shape mismatch, " + A.shape_str() + " vs " + B.shape_str());
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] * B.data[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, ib = b.id, iv = v.id;
    nodes_[iv].back = [ia, ib, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      if (t.nodes_[ia].requires_grad) {
        Tensor& ga = t.grad_buf(ia);
        const Tensor& bv = t.nodes_[ib].value;
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * bv.data[i];
      }
      if (t.nodes_[ib].requires_grad) {
        Tensor& gb = t.grad_buf(ib);
        const Tensor& av = t.nodes_[ia].value;
        for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i] * av.data[i];
      }
    };
  }
  return v;
}

Var Tape::add_rowvec(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (B.rows() != 1 || B.cols() != A.cols())
    throw std::invalid_argument("add_rowvec: expected [1, " + std::to_string(A.cols()) +
                                "] bias, got " + B.shape_str());
  Tensor out(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) out.at(i, j) = A.at(i, j) + B.at(0, j);
  const bool rg = requires_grad(a) || requires_grad(b);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, ib = b.id, iv = v.id;
    nodes_[iv].back = [ia, ib, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      if (t.nodes_[ia].requires_grad) {
        Tensor& ga = t.grad_buf(ia);
        for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
      }
      if (t.nodes_[ib].requires_grad) {
        Tensor& gb = t.grad_buf(ib);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) gb.at(0, j) += g.at(i, j);
      }
    };
  }
  return v;
}

Var Tape::affine(Var a, double mul, double add) {
  const Tensor& A = val(a);
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = mul * A.data[i] + add;
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv, mul](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += mul * g.data[i];
    };
  }
  return v;
}

Var Tape::relu(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = A.data[i] > 0.0 ? A.data[i] : 0.0;
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      const Tensor& in = t.nodes_[ia].value;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < g.data.size(); ++i)
        if (in.data[i] > 0.0) ga.data[i] += g.data[i];
    };
  }
  return v;
}

Var Tape::elu(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = A.data[i] > 0.0 ? A.data[i] : std::expm1(A.data[i]);
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      const Tensor& in = t.nodes_[ia].value;
      const Tensor& outv = t.nodes_[iv].value;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < g.data.size(); ++i)
        ga.data[i] += g.data[i] * (in.data[i] > 0.0 ? 1.0 : outv.data[i] + 1.0);
    };
  }
  return v;
}

Var Tape::sigmoid(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-A.data[i]));
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      const Tensor& y = t.nodes_[iv].value;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < g.data.size(); ++i)
        ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
    };
  }
  return v;
}

Var Tape::tanh_act(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::tanh(A.data[i]);
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      const Tensor& y = t.nodes_[iv].value;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < g.data.size(); ++i)
        ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
  }
  return v;
}

Var Tape::abs_val(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows(), A.cols());
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::fabs(A.data[i]);
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      const Tensor& in = t.nodes_[ia].value;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < g.data.size(); ++i)
        ga.data[i] += g.data[i] * (in.data[i] >= 0.0 ? 1.0 : -1.0);
    };
  }
  return v;
}

Var Tape::softmax_rows(Var a) {
  const Tensor& A = val(a);
  Tensor out(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < A.cols(); ++j) mx = std::max(mx, A.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < A.cols(); ++j) {
      const double e = std::exp(A.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < A.cols(); ++j) out.at(i, j) /= sum;
  }
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      const Tensor& y = t.nodes_[iv].value;
      Tensor& ga = t.grad_buf(ia);
      for (int i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < g.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
        for (int j = 0; j < g.cols(); ++j)
          ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
      }
    };
  }
  return v;
}

Var Tape::mean_rows(Var a) {
  const Tensor& A = val(a);
  const int m = A.rows(), n = A.cols();
  Tensor out(1, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(0, j) += A.at(i, j);
  for (int j = 0; j < n; ++j) out.at(0, j) /= m;
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv, m, n](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      Tensor& ga = t.grad_buf(ia);
      const double inv = 1.0 / m;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ga.at(i, j) += g.at(0, j) * inv;
    };
  }
  return v;
}

Var Tape::sum_all(Var a) {
  const Tensor& A = val(a);
  double s = 0.0;
  for (double x : A.data) s += x;
  const bool rg = requires_grad(a);
  Var v = push(Tensor::scalar(s), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const double g = t.nodes_[iv].grad.data[0];
      Tensor& ga = t.grad_buf(ia);
      for (double& x : ga.data) x += g;
    };
  }
  return v;
}

Var Tape::reshape(Var a, int rows, int cols) {
  const Tensor& A = val(a);
  if (static_cast<long long>(rows) * cols != A.size())
    throw std::invalid_argument("reshape: size mismatch, " + A.shape_str() + " to [" +
                                std::to_string(rows) + ", " + std::to_string(cols) + "]");
  Tensor out(rows, cols);
  out.data = A.data;
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    nodes_[iv].back = [ia, iv](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
    };
  }
  return v;
}

Var Tape::select_per_row(Var a, const std::vector<int>& idx) {
  const Tensor& A = val(a);
  if (static_cast<int>(idx.size()) != A.rows())
    throw std::invalid_argument("select_per_row: need one index per row of " + A.shape_str());
  Tensor out(1, A.rows());
  for (int i = 0; i < A.rows(); ++i) {
    if (idx[i] < 0 || idx[i] >= A.cols())
      throw std::invalid_argument("select_per_row: index out of range");
    out.at(0, i) = A.at(i, idx[i]);
  }
  const bool rg = requires_grad(a);
  Var v = push(std::move(out), rg, nullptr);
  if (rg) {
    const int ia = a.id, iv = v.id;
    const std::vector<int> ix = idx;
    nodes_[iv].back = [ia, iv, ix](Tape& t) {
      const Tensor& g = t.nodes_[iv].grad;
      Tensor& ga = t.grad_buf(ia);
      for (size_t i = 0; i < ix.size(); ++i) ga.at(static_cast<int>(i), ix[i]) += g.at(0, static_cast<int>(i));
    };
  }
  return v;
}

Var Tape::detach(Var a) { return push(val(a), false, nullptr); }

void Tape::backward(Var loss) {
  check(loss);
  Node& top = nodes_[loss.id];
  if (top.value.rows() != 1 || top.value.cols() != 1)
    throw std::runtime_error("tape: backward requires a scalar loss, got " + top.value.shape_str());
  if (!top.requires_grad)
    throw std::runtime_error("tape: loss does not depend on any trainable leaf");
  grad_buf(loss.id).data[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.back && !n.grad.data.empty()) n.back(*this);
  }
}

}  // namespace aerial
