// Copyright 2026 The Declutter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <new>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace declutter::diff {

using Shape = std::vector<int>;

/// 64-byte aligned allocation. Vectorised kernels pick their loop peeling from the
/// pointer alignment, so results are only bit-reproducible with fixed alignment.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Thrown for any contract violation inside the differentiable core.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t element_count(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

std::string shape_string(const Shape& dims);

/// Dense row-major tensor. Rank-0 tensors are not used; scalars are shape {1}.
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;

  explicit BasicTensor(Shape dims, T fill = T{0}) : dims_(std::move(dims)) {
    validate_dims();
    data_.assign(element_count(dims_), fill);
  }

  BasicTensor(Shape dims, AlignedVector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    validate_dims();
    if (data_.size() != element_count(dims_)) {
      throw Error("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                  shape_string(dims_));
    }
  }

  BasicTensor(Shape dims, const std::vector<T>& data) : BasicTensor(std::move(dims), AlignedVector<T>(data.begin(), data.end())) {}

  static BasicTensor scalar(T value) { return BasicTensor(Shape{1}, AlignedVector<T>{value}); }

  const Shape& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  int dim(int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  const AlignedVector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Same data, new shape with equal element count.
  BasicTensor reshaped(Shape dims) const { return BasicTensor(std::move(dims), data_); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  BasicTensor<U> cast() const {
    AlignedVector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(dims_, std::move(out));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  void validate_dims() const {
    for (int d : dims_) {
      if (d <= 0) throw Error("tensor dims must be positive, got " + shape_string(dims_));
    }
  }

  Shape dims_;
  AlignedVector<T> data_;
};

using Tensor = BasicTensor<float>;

/// Named tensors, ordered by name. Used for graph inputs, parameters and gradients.
template <typename T>
using BasicTensorMap = std::map<std::string, BasicTensor<T>, std::less<>>;
using TensorMap = BasicTensorMap<float>;

template <typename U, typename T>
BasicTensorMap<U> cast_map(const BasicTensorMap<T>& in) {
  BasicTensorMap<U> out;
  for (const auto& [name, t] : in) out.emplace(name, t.template cast<U>());
  return out;
}

}  // namespace declutter::diff
