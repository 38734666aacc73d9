// Copyright 2026 The dpclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpclip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "dpclip/counters.hpp"
#include "dpclip/errors.hpp"
#include "dpclip/kernels.hpp"

namespace dpclip {
namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimension of size 0 in shape " + to_string(shape));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + to_string(a.shape()));
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(numel(shape_), 0.0);
  counters::on_alloc(static_cast<std::int64_t>(data_.size()));
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
  check_shape(shape_);
  if (values.size() != numel(shape_)) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " given " +
                     std::to_string(values.size()) + " values");
  }
  data_ = std::move(values);
  counters::on_alloc(static_cast<std::int64_t>(data_.size()));
}

Tensor::Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<double> values)
    : Tensor(Shape(shape), std::vector<double>(values)) {}

Tensor::Tensor(const Tensor& other) : shape_(other.shape_), data_(other.data_) {
  counters::on_alloc(static_cast<std::int64_t>(data_.size()));
}

Tensor& Tensor::operator=(const Tensor& other) {
  if (this != &other) {
    Tensor copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensor::Tensor(Tensor&& other) noexcept
    : shape_(std::move(other.shape_)), data_(std::move(other.data_)) {
  other.shape_.clear();
  other.data_.clear();
}

Tensor& Tensor::operator=(Tensor&& other) noexcept {
  if (this != &other) {
    release();
    shape_ = std::move(other.shape_);
    data_ = std::move(other.data_);
    other.shape_.clear();
    other.data_.clear();
  }
  return *this;
}

Tensor::~Tensor() { release(); }

void Tensor::release() {
  if (!data_.empty()) counters::on_free(static_cast<std::int64_t>(data_.size()));
  std::vector<double>().swap(data_);
  shape_.clear();
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double& Tensor::at(std::size_t r, std::size_t c) {
  if (rank() != 2 || r >= shape_[0] || c >= shape_[1]) throw ShapeError("Tensor::at out of range");
  return data_[r * shape_[1] + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return const_cast<Tensor*>(this)->at(r, c);
}

MatrixView Tensor::matrix() {
  if (empty()) throw ShapeError("matrix view of an empty tensor");
  const std::size_t cols = shape_.back();
  return {data_.data(), data_.size() / cols, cols, cols};
}

ConstMatrixView Tensor::matrix() const { return const_cast<Tensor*>(this)->matrix(); }

MatrixView Tensor::slice(std::size_t i) {
  if (rank() != 3) throw ShapeError("slice requires a rank-3 tensor, got " + to_string(shape_));
  if (i >= shape_[0]) throw ShapeError("slice index out of range");
  const std::size_t rows = shape_[1];
  const std::size_t cols = shape_[2];
  return {data_.data() + i * rows * cols, rows, cols, cols};
}

ConstMatrixView Tensor::slice(std::size_t i) const { return const_cast<Tensor*>(this)->slice(i); }

std::span<double> Tensor::outer(std::size_t i) {
  if (empty() || i >= shape_[0]) throw ShapeError("outer index out of range");
  const std::size_t block = data_.size() / shape_[0];
  return {data_.data() + i * block, block};
}

std::span<const double> Tensor::outer(std::size_t i) const {
  return const_cast<Tensor*>(this)->outer(i);
}

void Tensor::reshape(Shape shape) {
  check_shape(shape);
  if (numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  shape_ = std::move(shape);
}

void gemm(ConstMatrixView a, Trans ta, ConstMatrixView b, Trans tb, MatrixView out,
          bool accumulate) {
  const std::size_t m = ta == Trans::No ? a.rows : a.cols;
  const std::size_t k = ta == Trans::No ? a.cols : a.rows;
  const std::size_t kb = tb == Trans::No ? b.rows : b.cols;
  const std::size_t n = tb == Trans::No ? b.cols : b.rows;
  if (k != kb || out.rows != m || out.cols != n) {
    std::ostringstream os;
    os << "gemm: op(a) is " << m << "x" << k << ", op(b) is " << kb << "x" << n << ", out is "
       << out.rows << "x" << out.cols;
    throw ShapeError(os.str());
  }
  const kernels::KernelTable& kt = kernels::active();
  if (ta == Trans::No && tb == Trans::No) {
    kt.gemm_nn(m, n, k, a.data, a.stride, b.data, b.stride, out.data, out.stride, accumulate);
  } else if (ta == Trans::Yes && tb == Trans::No) {
    kt.gemm_tn(m, n, k, a.data, a.stride, b.data, b.stride, out.data, out.stride, accumulate);
  } else if (ta == Trans::No && tb == Trans::Yes) {
    kt.gemm_nt(m, n, k, a.data, a.stride, b.data, b.stride, out.data, out.stride, accumulate);
  } else {
    throw ShapeError("gemm: transposing both operands is not supported");
  }
  counters::add_mul_adds(2ull * m * n * k);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions " + to_string(a.shape()) + " · " + to_string(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  gemm(a.matrix(), Trans::No, b.matrix(), Trans::No, out.matrix());
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("matmul_tn: " + to_string(a.shape()) + "ᵀ · " + to_string(b.shape()));
  }
  Tensor out({a.dim(1), b.dim(1)});
  gemm(a.matrix(), Trans::Yes, b.matrix(), Trans::No, out.matrix());
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.dim(1) != b.dim(1)) {
    throw ShapeError("matmul_nt: " + to_string(a.shape()) + " · " + to_string(b.shape()) + "ᵀ");
  }
  Tensor out({a.dim(0), b.dim(0)});
  gemm(a.matrix(), Trans::No, b.matrix(), Trans::Yes, out.matrix());
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.dim(0);
  const std::size_t c = a.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor out(a);
  add_inplace(out, b);
  return out;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same(a, b, "subtract");
  Tensor out(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  counters::add_mul_adds(out.size());
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same(a, b, "hadamard");
  Tensor out(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  counters::add_mul_adds(out.size());
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a);
  scale_inplace(out, s);
  return out;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  require_same(dst, src, "add_inplace");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  counters::add_mul_adds(dst.size());
}

void scale_inplace(Tensor& dst, double s) {
  for (double& v : dst.values()) v *= s;
  counters::add_mul_adds(dst.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  kernels::active().axpy(alpha, x.data(), y.data(), x.size());
  counters::add_mul_adds(2ull * x.size());
}

Tensor sum_axis(const Tensor& a, std::size_t axis) {
  if (axis >= a.rank()) throw ShapeError("sum_axis: axis out of range for " + to_string(a.shape()));
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a.dim(i);
  for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.dim(i);
  const std::size_t len = a.dim(axis);
  Shape out_shape;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (i != axis) out_shape.push_back(a.dim(i));
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      const double* src = a.data() + (o * len + l) * inner;
      double* dst = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  counters::add_mul_adds((len - 1) * outer * inner);
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("dot: length mismatch");
  if (x.empty()) return 0.0;
  counters::add_mul_adds(2ull * x.size() - 1);
  return kernels::active().dot(x.data(), y.data(), x.size());
}

double squared_norm(std::span<const double> x) { return dot(x, x); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dpclip
