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

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dpclip {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Non-owning row-major matrix window. `stride` is the distance between rows.
struct ConstMatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  double operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
  const double* row(std::size_t r) const { return data + r * stride; }
};

struct MatrixView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  double& operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
  double* row(std::size_t r) const { return data + r * stride; }
  operator ConstMatrixView() const { return {data, rows, cols, stride}; }
};

/// Dense row-major array of doubles. Storage is registered with the global
/// counters: constructing or copying a tensor adds to live_floats, destroying
/// or releasing it subtracts. A default-constructed tensor is empty (rank 0,
/// no storage) and is only a placeholder.
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor. Every dimension must be at least 1.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);
  Tensor(std::initializer_list<std::size_t> shape, std::initializer_list<double> values);

  Tensor(const Tensor& other);
  Tensor& operator=(const Tensor& other);
  Tensor(Tensor&& other) noexcept;
  Tensor& operator=(Tensor&& other) noexcept;
  ~Tensor();

  static Tensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  /// The whole tensor as rows × cols where cols is the last dimension.
  MatrixView matrix();
  ConstMatrixView matrix() const;
  /// The i-th matrix of a rank-3 tensor (i, rows, cols).
  MatrixView slice(std::size_t i);
  ConstMatrixView slice(std::size_t i) const;
  /// Contiguous block belonging to index i of the leading axis.
  std::span<double> outer(std::size_t i);
  std::span<const double> outer(std::size_t i) const;

  /// Reinterprets the storage with a new shape of the same element count.
  void reshape(Shape shape);
  /// Drops the storage and returns the tensor to the empty state.
  void release();

  void fill(double value);

 private:
  Shape shape_;
  std::vector<double> data_;
};

enum class Trans { No, Yes };

/// out (+)= op(a) · op(b). Counts 2·m·n·k multiply-adds where op(a) is m×k.
void gemm(ConstMatrixView a, Trans ta, ConstMatrixView b, Trans tb, MatrixView out,
          bool accumulate = false);

/// Rank-2 products; each counts 2·m·n·r.
Tensor matmul(const Tensor& a, const Tensor& b);
/// aᵀ · b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// a · bᵀ
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// Element-wise; each counts one operation per element.
Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void add_inplace(Tensor& dst, const Tensor& src);
void scale_inplace(Tensor& dst, double s);
/// y += alpha · x, counted as 2 per element.
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Sum over one axis; the axis is removed (a rank-1 result keeps shape {1}).
Tensor sum_axis(const Tensor& a, std::size_t axis);

/// Length-n dot product, counted as 2n − 1.
double dot(std::span<const double> x, std::span<const double> y);
/// Squared Frobenius norm, counted as 2n − 1.
double squared_norm(std::span<const double> x);
inline double squared_norm(const Tensor& t) { return squared_norm(t.values()); }

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace dpclip
