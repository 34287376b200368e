#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dstts/rng.hpp"
#include "dstts/tensor.hpp"

namespace dstts {

// A named trainable tensor plus its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Ordered by name so every iteration (Adam updates, checkpoints, gradient
// checks) walks parameters in a fixed, reproducible order.
class ParameterStore {
 public:
  enum class Init { Zeros, Ones, UniformFanIn };

  // fan_in <= 0 picks fan_in from the leading dimensions of `shape`.
  Parameter& create(const std::string& name, std::vector<int> shape, Init init,
                    uint64_t seed, int fan_in = 0);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Parameter* find(const std::string& name);
  bool contains(const std::string& name) const;

  void zero_grads();
  long long total_size() const;
  size_t count() const { return params_.size(); }

  std::map<std::string, Parameter>& all() { return params_; }
  const std::map<std::string, Parameter>& all() const { return params_; }

 private:
  std::map<std::string, Parameter> params_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. A fresh tape is built per forward pass; backward() runs
// the recorded closures in reverse and accumulates into Parameter::grad.
class Tape {
 public:
  Var constant(Tensor v);
  Var param(Parameter& p);

  Var add(Var a, Var b);               // same shape
  Var sub(Var a, Var b);               // same shape
  Var mul(Var a, Var b);               // elementwise, same shape
  Var add_row(Var m, Var r);           // (T,C) + (1,C)
  Var mul_row(Var m, Var r);           // (T,C) * (1,C)
  Var scale(Var a, double c);
  Var mul_const(Var a, const Tensor& m);  // elementwise by a fixed tensor
  Var matmul(Var a, Var b);            // (M,K)x(K,N)
  Var matmul_nt(Var a, Var b);         // (M,K)x(N,K)^T -> (M,N)
  Var tanh_op(Var a);
  Var sigmoid_op(Var a);
  Var relu_op(Var a);
  // softmax over each row; `add_mask` (same shape) is added to the logits
  // first (e.g. -1e9 at padded keys).
  Var softmax_rows(Var x, const Tensor* add_mask = nullptr);
  Var slice_cols(Var x, int from, int len);
  Var row(Var x, int r);               // (T,C) -> (1,C)
  Var stack_rows(const std::vector<Var>& rows);  // each (1,C) -> (T,C)
  Var concat_cols(Var a, Var b);
  Var reverse_rows(Var x);
  Var mean_rows(Var x);                // (T,C) -> (1,C)
  Var repeat_rows(Var x, const std::vector<int>& repeats);
  // Per-row standardization with population variance and eps inside the root.
  Var normalize_rows(Var x, double eps);
  // 1-D convolution over time with zero padding ("same", odd kernel).
  // x: (T,Cin), w: (k,Cin,Cout), b: (1,Cout).
  Var conv1d(Var x, Var w, Var b);
  Var embed(Var table, const std::vector<int>& ids);
  // Inverted dropout; identity when rate == 0. Mask drawn from `rng`.
  Var dropout(Var x, double rate, Rng& rng);
  Var mse_loss(Var pred, const Tensor& target);  // -> (1,1)
  Var mae_loss(Var pred, const Tensor& target);  // -> (1,1)

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  Tensor& grad(Var v) { return nodes_[v.id].grad; }
  double scalar(Var v) const;

  void backward(Var loss);
  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    Parameter* source = nullptr;
    std::function<void(Tape&)> back;
  };

  int push(Tensor value, bool needs_grad);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  Tensor& g(Var v) { return nodes_[v.id].grad; }
  const Tensor& v(Var x) const { return nodes_[x.id].value; }
  void check2d(Var x, const char* who) const;

  std::vector<Node> nodes_;
};

// C = A * B for row-major buffers, accumulating into C.
void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n);
// C += A * B^T
void matmul_nt_acc(const double* a, const double* b, double* c, int m, int k, int n);
// C += A^T * B   (A is (K,M), B is (K,N), C is (M,N))
void matmul_tn_acc(const double* a, const double* b, double* c, int k, int m, int n);

}  // namespace dstts
