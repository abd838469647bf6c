#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pseudoflow/errors.hpp"
#include "pseudoflow/rng.hpp"

namespace pseudoflow {

using Shape = std::vector<std::int64_t>;

// All numeric payloads share one 64-byte alignment so SIMD kernels follow
// the same code path (and the same rounding) no matter where the allocator
// places a buffer; training trajectories stay bit-reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(alignment)));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t(alignment)); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

template <typename T>
using AlignedVec = std::vector<T, AlignedAllocator<T>>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

// Dense row-major tensor. Payload is shared on copy; ops always allocate a
// fresh payload, so values are immutable once produced. The only sanctioned
// in-place mutation is the optimizer updating parameters it owns.
template <typename T>
class TensorT {
 public:
  using Scalar = T;

  TensorT() : data_(std::make_shared<AlignedVec<T>>()) {}

  explicit TensorT(Shape shape)
      : shape_(std::move(shape)),
        data_(std::make_shared<AlignedVec<T>>(static_cast<std::size_t>(shape_numel(shape_)), T(0))) {
    check_shape();
  }

  TensorT(Shape shape, std::initializer_list<T> values)
      : shape_(std::move(shape)), data_(std::make_shared<AlignedVec<T>>(values)) {
    check_shape();
    if (static_cast<std::int64_t>(data_->size()) != shape_numel(shape_))
      throw ShapeError("tensor payload size " + std::to_string(data_->size()) +
                       " does not match shape " + shape_str(shape_));
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

  static TensorT full(Shape shape, T v) {
    TensorT t(std::move(shape));
    for (auto& x : t.mut()) x = v;
    return t;
  }

  static TensorT ones(Shape shape) { return full(std::move(shape), T(1)); }

  static TensorT scalar(T v) { return full({1}, v); }

  static TensorT randn(Shape shape, Rng& rng, T stddev = T(1), T mean = T(0)) {
    TensorT t(std::move(shape));
    for (auto& x : t.mut()) x = static_cast<T>(rng.normal(mean, stddev));
    return t;
  }

  static TensorT uniform(Shape shape, Rng& rng, T lo, T hi) {
    TensorT t(std::move(shape));
    for (auto& x : t.mut()) x = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::int64_t dims() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t size(std::int64_t i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_->size()); }
  bool empty() const { return data_->empty(); }

  std::span<const T> data() const { return {data_->data(), data_->size()}; }
  // Mutable view; callers must hold the only logical owner (parameters, fresh outputs).
  std::span<T> mut() { return {data_->data(), data_->size()}; }

  const T& operator[](std::int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }
  T& operator[](std::int64_t i) { return (*data_)[static_cast<std::size_t>(i)]; }

  T item() const {
    if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape_));
    return (*data_)[0];
  }

  // Deep copy with a private payload.
  TensorT clone() const {
    TensorT t;
    t.shape_ = shape_;
    t.data_ = std::make_shared<AlignedVec<T>>(*data_);
    t.node_ = node_;
    return t;
  }

  // Same payload, no tape association; gradients stop here.
  TensorT detached() const {
    TensorT t = *this;
    t.node_ = -1;
    return t;
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> t(shape_);
    auto dst = t.mut();
    const auto src = data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<U>(src[i]);
    return t;
  }

  bool all_finite() const {
    for (const T& x : *data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  int node() const { return node_; }
  void set_node(int n) { node_ = n; }

 private:
  void check_shape() const {
    for (auto d : shape_)
      if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape_));
  }

  Shape shape_;
  std::shared_ptr<AlignedVec<T>> data_;
  int node_ = -1;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace pseudoflow
