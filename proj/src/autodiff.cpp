#include "dstts/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace dstts {

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::create(const std::string& name, std::vector<int> shape,
                                  Init init, uint64_t seed, int fan_in) {
  if (params_.count(name)) throw std::logic_error("duplicate parameter: " + name);
  Parameter p;
  p.name = name;
  p.value = Tensor(shape);
  p.grad = Tensor(shape);
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Ones:
      for (double& x : p.value.data) x = 1.0;
      break;
    case Init::UniformFanIn: {
      if (fan_in <= 0) {
        fan_in = 1;
        for (size_t i = 0; i + 1 < shape.size(); ++i) fan_in *= shape[i];
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      Rng rng(mix_seed(seed, name));
      for (double& x : p.value.data) x = rng.uniform(-bound, bound);
      break;
    }
  }
  auto [it, ok] = params_.emplace(name, std::move(p));
  (void)ok;
  return it->second;
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : &it->second;
}

bool ParameterStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

void ParameterStore::zero_grads() {
  for (auto& [name, p] : params_)
    for (double& x : p.grad.data) x = 0.0;
}

long long ParameterStore::total_size() const {
  long long n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Matmul kernels (ikj order so the inner loop is a contiguous axpy)

void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

void matmul_tn_acc(const double* a, const double* b, double* c, int k, int m, int n) {
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<size_t>(p) * m;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// ---------------------------------------------------------------------------
// Tape

int Tape::push(Tensor value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.grad = Tensor(n.value.shape);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check2d(Var x, const char* who) const {
  if (v(x).rank() != 2) throw std::logic_error(std::string(who) + ": rank-2 tensor expected");
}

double Tape::scalar(Var x) const {
  const Tensor& t = v(x);
  if (t.size() != 1) throw std::logic_error("scalar(): tensor has " + t.shape_str());
  return t.data[0];
}

Var Tape::constant(Tensor t) { return Var{push(std::move(t), false)}; }

Var Tape::param(Parameter& p) {
  int id = push(p.value, true);
  nodes_[id].source = &p;
  return Var{id};
}

Var Tape::add(Var a, Var b) {
  if (!v(a).same_shape(v(b)))
    throw std::invalid_argument("add: shape mismatch " + v(a).shape_str() + " vs " + v(b).shape_str());
  Tensor out = v(a);
  const Tensor& bv = v(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  bool ng = needs(a) || needs(b);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      if (t.needs(a))
        for (size_t i = 0; i < go.data.size(); ++i) t.g(a).data[i] += go.data[i];
      if (t.needs(b))
        for (size_t i = 0; i < go.data.size(); ++i) t.g(b).data[i] += go.data[i];
    };
  return Var{id};
}

Var Tape::sub(Var a, Var b) {
  if (!v(a).same_shape(v(b)))
    throw std::invalid_argument("sub: shape mismatch");
  Tensor out = v(a);
  const Tensor& bv = v(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  bool ng = needs(a) || needs(b);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      if (t.needs(a))
        for (size_t i = 0; i < go.data.size(); ++i) t.g(a).data[i] += go.data[i];
      if (t.needs(b))
        for (size_t i = 0; i < go.data.size(); ++i) t.g(b).data[i] -= go.data[i];
    };
  return Var{id};
}

Var Tape::mul(Var a, Var b) {
  if (!v(a).same_shape(v(b)))
    throw std::invalid_argument("mul: shape mismatch");
  Tensor out = v(a);
  const Tensor& bv = v(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  bool ng = needs(a) || needs(b);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      const Tensor& av = t.v(a);
      const Tensor& bv2 = t.v(b);
      if (t.needs(a))
        for (size_t i = 0; i < go.data.size(); ++i) t.g(a).data[i] += go.data[i] * bv2.data[i];
      if (t.needs(b))
        for (size_t i = 0; i < go.data.size(); ++i) t.g(b).data[i] += go.data[i] * av.data[i];
    };
  return Var{id};
}

Var Tape::add_row(Var m, Var r) {
  check2d(m, "add_row");
  check2d(r, "add_row");
  const Tensor& mv = v(m);
  const Tensor& rv = v(r);
  if (rv.rows() != 1 || rv.cols() != mv.cols())
    throw std::invalid_argument("add_row: row vector shape mismatch");
  Tensor out = mv;
  for (int i = 0; i < mv.rows(); ++i)
    for (int j = 0; j < mv.cols(); ++j) out.at(i, j) += rv.at(0, j);
  bool ng = needs(m) || needs(r);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [m, r, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      if (t.needs(m))
        for (size_t i = 0; i < go.data.size(); ++i) t.g(m).data[i] += go.data[i];
      if (t.needs(r)) {
        Tensor& gr = t.g(r);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < go.cols(); ++j) gr.at(0, j) += go.at(i, j);
      }
    };
  return Var{id};
}

Var Tape::mul_row(Var m, Var r) {
  check2d(m, "mul_row");
  check2d(r, "mul_row");
  const Tensor& mv = v(m);
  const Tensor& rv = v(r);
  if (rv.rows() != 1 || rv.cols() != mv.cols())
    throw std::invalid_argument("mul_row: row vector shape mismatch");
  Tensor out = mv;
  for (int i = 0; i < mv.rows(); ++i)
    for (int j = 0; j < mv.cols(); ++j) out.at(i, j) *= rv.at(0, j);
  bool ng = needs(m) || needs(r);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [m, r, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      const Tensor& mv2 = t.v(m);
      const Tensor& rv2 = t.v(r);
      if (t.needs(m)) {
        Tensor& gm = t.g(m);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < go.cols(); ++j) gm.at(i, j) += go.at(i, j) * rv2.at(0, j);
      }
      if (t.needs(r)) {
        Tensor& gr = t.g(r);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < go.cols(); ++j) gr.at(0, j) += go.at(i, j) * mv2.at(i, j);
      }
    };
  return Var{id};
}

Var Tape::scale(Var a, double c) {
  Tensor out = v(a);
  for (double& x : out.data) x *= c;
  bool ng = needs(a);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, c, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      for (size_t i = 0; i < go.data.size(); ++i) t.g(a).data[i] += c * go.data[i];
    };
  return Var{id};
}

Var Tape::mul_const(Var a, const Tensor& m) {
  if (!v(a).same_shape(m)) throw std::invalid_argument("mul_const: shape mismatch");
  Tensor out = v(a);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= m.data[i];
  bool ng = needs(a);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, m, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      for (size_t i = 0; i < go.data.size(); ++i) t.g(a).data[i] += go.data[i] * m.data[i];
    };
  return Var{id};
}

Var Tape::matmul(Var a, Var b) {
  check2d(a, "matmul");
  check2d(b, "matmul");
  const Tensor& av = v(a);
  const Tensor& bv = v(b);
  if (av.cols() != bv.rows())
    throw std::invalid_argument("matmul: inner dims " + av.shape_str() + " x " + bv.shape_str());
  Tensor out({av.rows(), bv.cols()});
  matmul_acc(av.data.data(), bv.data.data(), out.data.data(), av.rows(), av.cols(), bv.cols());
  bool ng = needs(a) || needs(b);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      const Tensor& av2 = t.v(a);
      const Tensor& bv2 = t.v(b);
      const int m = av2.rows(), k = av2.cols(), n = bv2.cols();
      if (t.needs(a))
        matmul_nt_acc(go.data.data(), bv2.data.data(), t.g(a).data.data(), m, n, k);
      if (t.needs(b))
        matmul_tn_acc(av2.data.data(), go.data.data(), t.g(b).data.data(), m, k, n);
    };
  return Var{id};
}

Var Tape::matmul_nt(Var a, Var b) {
  check2d(a, "matmul_nt");
  check2d(b, "matmul_nt");
  const Tensor& av = v(a);
  const Tensor& bv = v(b);
  if (av.cols() != bv.cols())
    throw std::invalid_argument("matmul_nt: inner dims " + av.shape_str() + " x " + bv.shape_str());
  Tensor out({av.rows(), bv.rows()});
  matmul_nt_acc(av.data.data(), bv.data.data(), out.data.data(), av.rows(), av.cols(), bv.rows());
  bool ng = needs(a) || needs(b);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, b, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;  // (M,N)
      const Tensor& av2 = t.v(a);            // (M,K)
      const Tensor& bv2 = t.v(b);            // (N,K)
      const int m = av2.rows(), k = av2.cols(), n = bv2.rows();
      if (t.needs(a))  // dA += G * B
        matmul_acc(go.data.data(), bv2.data.data(), t.g(a).data.data(), m, n, k);
      if (t.needs(b))  // dB += G^T * A
        matmul_tn_acc(go.data.data(), av2.data.data(), t.g(b).data.data(), m, n, k);
    };
  return Var{id};
}

Var Tape::tanh_op(Var a) {
  Tensor out = v(a);
  for (double& x : out.data) x = std::tanh(x);
  bool ng = needs(a);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const Tensor& y = t.nodes_[id].value;
      const Tensor& go = t.nodes_[id].grad;
      for (size_t i = 0; i < go.data.size(); ++i)
        t.g(a).data[i] += go.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
  return Var{id};
}

Var Tape::sigmoid_op(Var a) {
  Tensor out = v(a);
  for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
  bool ng = needs(a);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const Tensor& y = t.nodes_[id].value;
      const Tensor& go = t.nodes_[id].grad;
      for (size_t i = 0; i < go.data.size(); ++i)
        t.g(a).data[i] += go.data[i] * y.data[i] * (1.0 - y.data[i]);
    };
  return Var{id};
}

Var Tape::relu_op(Var a) {
  Tensor out = v(a);
  for (double& x : out.data) x = x > 0.0 ? x : 0.0;
  bool ng = needs(a);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [a, id](Tape& t) {
      const Tensor& xin = t.v(a);
      const Tensor& go = t.nodes_[id].grad;
      for (size_t i = 0; i < go.data.size(); ++i)
        if (xin.data[i] > 0.0) t.g(a).data[i] += go.data[i];
    };
  return Var{id};
}

Var Tape::softmax_rows(Var x, const Tensor* add_mask) {
  check2d(x, "softmax_rows");
  Tensor out = v(x);
  if (add_mask) {
    if (!out.same_shape(*add_mask)) throw std::invalid_argument("softmax_rows: mask shape");
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += add_mask->data[i];
  }
  const int rows = out.rows(), cols = out.cols();
  for (int i = 0; i < rows; ++i) {
    double mx = out.at(i, 0);
    for (int j = 1; j < cols; ++j) mx = std::max(mx, out.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      double e = std::exp(out.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < cols; ++j) out.at(i, j) /= sum;
  }
  bool ng = needs(x);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [x, id](Tape& t) {
      const Tensor& y = t.nodes_[id].value;
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gx = t.g(x);
      for (int i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < y.cols(); ++j) dot += go.at(i, j) * y.at(i, j);
        for (int j = 0; j < y.cols(); ++j)
          gx.at(i, j) += y.at(i, j) * (go.at(i, j) - dot);
      }
    };
  return Var{id};
}

Var Tape::slice_cols(Var x, int from, int len) {
  check2d(x, "slice_cols");
  const Tensor& xv = v(x);
  if (from < 0 || len <= 0 || from + len > xv.cols())
    throw std::invalid_argument("slice_cols: out of range");
  Tensor out({xv.rows(), len});
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < len; ++j) out.at(i, j) = xv.at(i, from + j);
  bool ng = needs(x);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [x, from, len, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gx = t.g(x);
      for (int i = 0; i < go.rows(); ++i)
        for (int j = 0; j < len; ++j) gx.at(i, from + j) += go.at(i, j);
    };
  return Var{id};
}

Var Tape::row(Var x, int r) {
  check2d(x, "row");
  const Tensor& xv = v(x);
  if (r < 0 || r >= xv.rows()) throw std::invalid_argument("row: out of range");
  Tensor out({1, xv.cols()});
  for (int j = 0; j < xv.cols(); ++j) out.at(0, j) = xv.at(r, j);
  bool ng = needs(x);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [x, r, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gx = t.g(x);
      for (int j = 0; j < go.cols(); ++j) gx.at(r, j) += go.at(0, j);
    };
  return Var{id};
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty");
  const int cols = v(rows[0]).cols();
  Tensor out({static_cast<int>(rows.size()), cols});
  bool ng = false;
  for (size_t i = 0; i < rows.size(); ++i) {
    const Tensor& rv = v(rows[i]);
    if (rv.rows() != 1 || rv.cols() != cols)
      throw std::invalid_argument("stack_rows: inconsistent row shapes");
    for (int j = 0; j < cols; ++j) out.at(static_cast<int>(i), j) = rv.at(0, j);
    ng = ng || needs(rows[i]);
  }
  int id = push(std::move(out), ng);
  if (ng) {
    std::vector<Var> rs = rows;
    nodes_[id].back = [rs, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      for (size_t i = 0; i < rs.size(); ++i) {
        if (!t.needs(rs[i])) continue;
        Tensor& gr = t.g(rs[i]);
        for (int j = 0; j < go.cols(); ++j) gr.at(0, j) += go.at(static_cast<int>(i), j);
      }
    };
  }
  return Var{id};
}

Var Tape::concat_cols(Var a, Var b) {
  check2d(a, "concat_cols");
  check2d(b, "concat_cols");
  const Tensor& av = v(a);
  const Tensor& bv = v(b);
  if (av.rows() != bv.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Tensor out({av.rows(), av.cols() + bv.cols()});
  for (int i = 0; i < av.rows(); ++i) {
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(i, j);
    for (int j = 0; j < bv.cols(); ++j) out.at(i, av.cols() + j) = bv.at(i, j);
  }
  bool ng = needs(a) || needs(b);
  const int ac = av.cols(), bc = bv.cols();
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].back = [a, b, ac, bc, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      if (t.needs(a)) {
        Tensor& ga = t.g(a);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < ac; ++j) ga.at(i, j) += go.at(i, j);
      }
      if (t.needs(b)) {
        Tensor& gb = t.g(b);
        for (int i = 0; i < go.rows(); ++i)
          for (int j = 0; j < bc; ++j) gb.at(i, j) += go.at(i, ac + j);
      }
    };
  }
  return Var{id};
}

Var Tape::reverse_rows(Var x) {
  check2d(x, "reverse_rows");
  const Tensor& xv = v(x);
  Tensor out(xv.shape);
  const int rows = xv.rows();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < xv.cols(); ++j) out.at(i, j) = xv.at(rows - 1 - i, j);
  bool ng = needs(x);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [x, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gx = t.g(x);
      const int r = go.rows();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < go.cols(); ++j) gx.at(r - 1 - i, j) += go.at(i, j);
    };
  return Var{id};
}

Var Tape::mean_rows(Var x) {
  check2d(x, "mean_rows");
  const Tensor& xv = v(x);
  if (xv.rows() < 1) throw std::invalid_argument("mean_rows: empty");
  Tensor out({1, xv.cols()});
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < xv.cols(); ++j) out.at(0, j) += xv.at(i, j);
  for (int j = 0; j < xv.cols(); ++j) out.at(0, j) /= xv.rows();
  bool ng = needs(x);
  const int rows = xv.rows();
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_[id].back = [x, rows, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gx = t.g(x);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < go.cols(); ++j) gx.at(i, j) += go.at(0, j) / rows;
    };
  }
  return Var{id};
}

Var Tape::repeat_rows(Var x, const std::vector<int>& repeats) {
  check2d(x, "repeat_rows");
  const Tensor& xv = v(x);
  if (static_cast<int>(repeats.size()) != xv.rows())
    throw std::invalid_argument("repeat_rows: repeats length mismatch");
  long long total = 0;
  for (int r : repeats) {
    if (r < 0) throw std::invalid_argument("repeat_rows: negative repeat");
    total += r;
  }
  if (total == 0) throw std::invalid_argument("repeat_rows: all repeats zero");
  Tensor out({static_cast<int>(total), xv.cols()});
  int o = 0;
  for (int i = 0; i < xv.rows(); ++i)
    for (int r = 0; r < repeats[i]; ++r, ++o)
      for (int j = 0; j < xv.cols(); ++j) out.at(o, j) = xv.at(i, j);
  bool ng = needs(x);
  int id = push(std::move(out), ng);
  if (ng) {
    std::vector<int> reps = repeats;
    nodes_[id].back = [x, reps, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gx = t.g(x);
      int o2 = 0;
      for (size_t i = 0; i < reps.size(); ++i)
        for (int r = 0; r < reps[i]; ++r, ++o2)
          for (int j = 0; j < go.cols(); ++j) gx.at(static_cast<int>(i), j) += go.at(o2, j);
    };
  }
  return Var{id};
}

Var Tape::normalize_rows(Var x, double eps) {
  check2d(x, "normalize_rows");
  const Tensor& xv = v(x);
  const int rows = xv.rows(), cols = xv.cols();
  if (cols < 1) throw std::invalid_argument("normalize_rows: empty rows");
  Tensor out(xv.shape);
  Tensor inv_sigma({rows, 1});
  for (int i = 0; i < rows; ++i) {
    double mu = 0.0;
    for (int j = 0; j < cols; ++j) mu += xv.at(i, j);
    mu /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) {
      double d = xv.at(i, j) - mu;
      var += d * d;
    }
    var /= cols;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma.at(i, 0) = is;
    for (int j = 0; j < cols; ++j) out.at(i, j) = (xv.at(i, j) - mu) * is;
  }
  bool ng = needs(x);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [x, inv_sigma, id](Tape& t) {
      const Tensor& y = t.nodes_[id].value;
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gx = t.g(x);
      const int rows2 = y.rows(), cols2 = y.cols();
      for (int i = 0; i < rows2; ++i) {
        double gmean = 0.0, gydot = 0.0;
        for (int j = 0; j < cols2; ++j) {
          gmean += go.at(i, j);
          gydot += go.at(i, j) * y.at(i, j);
        }
        gmean /= cols2;
        gydot /= cols2;
        const double is = inv_sigma.at(i, 0);
        for (int j = 0; j < cols2; ++j)
          gx.at(i, j) += is * (go.at(i, j) - gmean - y.at(i, j) * gydot);
      }
    };
  return Var{id};
}

Var Tape::conv1d(Var x, Var w, Var b) {
  check2d(x, "conv1d");
  const Tensor& xv = v(x);
  const Tensor& wv = v(w);
  const Tensor& bv = v(b);
  if (wv.rank() != 3) throw std::invalid_argument("conv1d: kernel must be rank-3");
  const int k = wv.shape[0], cin = wv.shape[1], cout = wv.shape[2];
  if (k % 2 == 0) throw std::invalid_argument("conv1d: kernel size must be odd");
  if (xv.cols() != cin) throw std::invalid_argument("conv1d: channel mismatch");
  if (bv.rank() != 2 || bv.rows() != 1 || bv.cols() != cout)
    throw std::invalid_argument("conv1d: bias shape");
  const int T = xv.rows(), pad = k / 2;
  Tensor out({T, cout});
  for (int t0 = 0; t0 < T; ++t0)
    for (int j = 0; j < cout; ++j) out.at(t0, j) = bv.at(0, j);
  for (int dt = 0; dt < k; ++dt) {
    const int off = dt - pad;
    const double* wk = wv.data.data() + static_cast<size_t>(dt) * cin * cout;
    for (int t0 = 0; t0 < T; ++t0) {
      const int ts = t0 + off;
      if (ts < 0 || ts >= T) continue;
      // out[t0,:] += x[ts,:] * W[dt,:,:]
      matmul_acc(xv.data.data() + static_cast<size_t>(ts) * cin, wk,
                 out.data.data() + static_cast<size_t>(t0) * cout, 1, cin, cout);
    }
  }
  bool ng = needs(x) || needs(w) || needs(b);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [x, w, b, k, cin, cout, pad, T, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      const Tensor& xv2 = t.v(x);
      const Tensor& wv2 = t.v(w);
      if (t.needs(b)) {
        Tensor& gb = t.g(b);
        for (int t0 = 0; t0 < T; ++t0)
          for (int j = 0; j < cout; ++j) gb.at(0, j) += go.at(t0, j);
      }
      for (int dt = 0; dt < k; ++dt) {
        const int off = dt - pad;
        const double* wk = wv2.data.data() + static_cast<size_t>(dt) * cin * cout;
        double* gwk = t.needs(w)
                          ? t.g(w).data.data() + static_cast<size_t>(dt) * cin * cout
                          : nullptr;
        for (int t0 = 0; t0 < T; ++t0) {
          const int ts = t0 + off;
          if (ts < 0 || ts >= T) continue;
          const double* gout = go.data.data() + static_cast<size_t>(t0) * cout;
          if (t.needs(x))  // dx[ts,:] += gout * W[dt,:,:]^T
            matmul_nt_acc(gout, wk, t.g(x).data.data() + static_cast<size_t>(ts) * cin,
                          1, cout, cin);
          if (gwk)  // dW[dt,:,:] += x[ts,:]^T * gout
            matmul_tn_acc(xv2.data.data() + static_cast<size_t>(ts) * cin, gout, gwk,
                          1, cin, cout);
        }
      }
    };
  return Var{id};
}

Var Tape::embed(Var table, const std::vector<int>& ids) {
  check2d(table, "embed");
  const Tensor& tv = v(table);
  if (ids.empty()) throw std::invalid_argument("embed: empty id sequence");
  Tensor out({static_cast<int>(ids.size()), tv.cols()});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows())
      throw std::out_of_range("embed: id " + std::to_string(ids[i]) + " out of vocabulary");
    for (int j = 0; j < tv.cols(); ++j) out.at(static_cast<int>(i), j) = tv.at(ids[i], j);
  }
  bool ng = needs(table);
  int id = push(std::move(out), ng);
  if (ng) {
    std::vector<int> ids2 = ids;
    nodes_[id].back = [table, ids2, id](Tape& t) {
      const Tensor& go = t.nodes_[id].grad;
      Tensor& gt = t.g(table);
      for (size_t i = 0; i < ids2.size(); ++i)
        for (int j = 0; j < go.cols(); ++j)
          gt.at(ids2[i], j) += go.at(static_cast<int>(i), j);
    };
  }
  return Var{id};
}

Var Tape::dropout(Var x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  Tensor mask(v(x).shape);
  const double keep = 1.0 - rate;
  for (double& m : mask.data) m = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  return mul_const(x, mask);
}

Var Tape::mse_loss(Var pred, const Tensor& target) {
  const Tensor& pv = v(pred);
  if (!pv.same_shape(target))
    throw std::invalid_argument("mse_loss: shape mismatch " + pv.shape_str() + " vs " +
                                target.shape_str());
  const long long n = pv.size();
  if (n == 0) throw std::invalid_argument("mse_loss: empty");
  double acc = 0.0;
  for (size_t i = 0; i < pv.data.size(); ++i) {
    double d = pv.data[i] - target.data[i];
    acc += d * d;
  }
  Tensor out({1, 1});
  out.data[0] = acc / static_cast<double>(n);
  bool ng = needs(pred);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [pred, target, n, id](Tape& t) {
      const double go = t.nodes_[id].grad.data[0];
      const Tensor& pv2 = t.v(pred);
      Tensor& gp = t.g(pred);
      const double c = 2.0 * go / static_cast<double>(n);
      for (size_t i = 0; i < pv2.data.size(); ++i)
        gp.data[i] += c * (pv2.data[i] - target.data[i]);
    };
  return Var{id};
}

Var Tape::mae_loss(Var pred, const Tensor& target) {
  const Tensor& pv = v(pred);
  if (!pv.same_shape(target))
    throw std::invalid_argument("mae_loss: shape mismatch " + pv.shape_str() + " vs " +
                                target.shape_str());
  const long long n = pv.size();
  if (n == 0) throw std::invalid_argument("mae_loss: empty");
  double acc = 0.0;
  for (size_t i = 0; i < pv.data.size(); ++i) acc += std::fabs(pv.data[i] - target.data[i]);
  Tensor out({1, 1});
  out.data[0] = acc / static_cast<double>(n);
  bool ng = needs(pred);
  int id = push(std::move(out), ng);
  if (ng)
    nodes_[id].back = [pred, target, n, id](Tape& t) {
      const double go = t.nodes_[id].grad.data[0];
      const Tensor& pv2 = t.v(pred);
      Tensor& gp = t.g(pred);
      const double c = go / static_cast<double>(n);
      for (size_t i = 0; i < pv2.data.size(); ++i) {
        double d = pv2.data[i] - target.data[i];
        gp.data[i] += c * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
      }
    };
  return Var{id};
}

void Tape::backward(Var loss) {
  Node& ln = nodes_[loss.id];
  if (ln.value.size() != 1) throw std::logic_error("backward: loss must be scalar");
  if (!ln.needs_grad) throw std::logic_error("backward: loss does not depend on parameters");
  ln.grad.data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this);
  for (Node& n : nodes_)
    if (n.source)
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        n.source->grad.data[i] += n.grad.data[i];
}

}  // namespace dstts
