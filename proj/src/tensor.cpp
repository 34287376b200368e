#include "dstts/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dstts {

long long shape_numel(const std::vector<int>& shape) {
  long long n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  data.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
}

Tensor Tensor::zeros(std::vector<int> s) { return Tensor(std::move(s)); }

Tensor Tensor::full(std::vector<int> s, double v) {
  Tensor t(std::move(s));
  for (double& x : t.data) x = v;
  return t;
}

Tensor Tensor::row_vector(std::vector<double> v) {
  Tensor t;
  t.shape = {1, static_cast<int>(v.size())};
  t.data = std::move(v);
  return t;
}

int Tensor::rows() const {
  if (rank() != 2) throw std::logic_error("rows(): tensor is not rank-2");
  return shape[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw std::logic_error("cols(): tensor is not rank-2");
  return shape[1];
}

double& Tensor::at(int r, int c) {
  return data[static_cast<size_t>(r) * shape[1] + c];
}

double Tensor::at(int r, int c) const {
  return data[static_cast<size_t>(r) * shape[1] + c];
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

}  // namespace dstts
