#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "coastal/errors.hpp"

#if defined(__linux__)
#include <sys/mman.h>
#endif

namespace coastal::nn {

/// (batch, height, width, channels), channels fastest.
struct Shape {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
           static_cast<std::size_t>(c);
  }
  bool valid() const noexcept { return n >= 1 && h >= 1 && w >= 1 && c >= 1; }
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(h) + "," + std::to_string(w) + "," +
           std::to_string(c) + ")";
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Buffers of 4 MiB and more are 2 MiB aligned and, on Linux, backed by
/// transparent huge pages; full-resolution activations otherwise spend most
/// of their time in page faults.
template <class T>
struct LargeBufferAllocator {
  using value_type = T;
  static constexpr std::size_t kLarge = std::size_t{4} << 20;
  static constexpr std::size_t kAlign = std::size_t{2} << 20;

  LargeBufferAllocator() = default;
  template <class U>
  LargeBufferAllocator(const LargeBufferAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = n * sizeof(T);
    if (bytes < kLarge) return static_cast<T*>(::operator new(bytes));
    const std::size_t rounded = (bytes + kAlign - 1) / kAlign * kAlign;
    void* p = std::aligned_alloc(kAlign, rounded);
    if (!p) throw std::bad_alloc();
#if defined(__linux__) && defined(MADV_HUGEPAGE)
    ::madvise(p, rounded, MADV_HUGEPAGE);
#endif
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t n) noexcept {
    if (n * sizeof(T) < kLarge) {
      ::operator delete(p);
    } else {
      std::free(p);
    }
  }
  template <class U>
  bool operator==(const LargeBufferAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0}) : shape_(shape), data_(shape.count(), fill) {
    if (!shape.valid()) {
      throw ConfigError("tensor dimensions must be >= 1, got " + shape.str());
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  int c() const noexcept { return shape_.c; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  std::size_t offset(int b, int i, int j, int k) const noexcept {
    return ((static_cast<std::size_t>(b) * shape_.h + i) * shape_.w + j) * shape_.c + k;
  }
  T& operator()(int b, int i, int j, int k) noexcept { return data_[offset(b, i, j, k)]; }
  const T& operator()(int b, int i, int j, int k) const noexcept { return data_[offset(b, i, j, k)]; }
  T& operator[](std::size_t k) noexcept { return data_[k]; }
  const T& operator[](std::size_t k) const noexcept { return data_[k]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_{};
  std::vector<T, LargeBufferAllocator<T>> data_;
};

}  // namespace coastal::nn
