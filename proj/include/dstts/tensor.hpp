#pragma once

#include <string>
#include <vector>

namespace dstts {

// Dense row-major tensor of doubles, rank 1..3. Rank-2 tensors are the
// workhorse (time-major feature matrices); rank-3 is used for conv kernels.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  static Tensor zeros(std::vector<int> s);
  static Tensor full(std::vector<int> s, double v);
  static Tensor row_vector(std::vector<double> v);

  int rank() const { return static_cast<int>(shape.size()); }
  long long size() const { return static_cast<long long>(data.size()); }

  // rank-2 accessors
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

long long shape_numel(const std::vector<int>& shape);

}  // namespace dstts
