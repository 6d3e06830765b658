#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ssacl/errors.hpp"

namespace ssacl {

/// Dense n-dimensional array with an optional gradient of the same shape.
/// Row-major storage; scalar type is a template parameter so the same layer
/// code runs in float for training and double for finite-difference checks.
template <typename T>
struct TensorT {
  std::vector<std::size_t> shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty until ensure_grad()

  TensorT() = default;
  explicit TensorT(std::vector<std::size_t> s) : shape(std::move(s)) {
    values.assign(numel(), T(0));
  }

  static TensorT zeros(std::vector<std::size_t> s) { return TensorT(std::move(s)); }

  std::size_t numel() const {
    std::size_t n = 1;
    for (const std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  std::size_t dim(std::size_t i) const { return shape.at(i); }

  bool has_grad() const { return !grad.empty(); }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), T(0));
  }

  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
  }

  bool same_shape(const TensorT& other) const { return shape == other.shape; }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }
};

using Tensor = TensorT<float>;

/// Named handle onto a parameter tensor owned by a layer.
template <typename T>
struct ParamRef {
  std::string name;
  TensorT<T>* tensor = nullptr;
};

template <typename T>
void check_shape(const TensorT<T>& t, std::initializer_list<std::size_t> expect,
                 const char* where) {
  if (t.shape.size() != expect.size()) {
    throw ConfigError(std::string(where) + ": rank mismatch, got " + t.shape_str());
  }
  std::size_t i = 0;
  for (const std::size_t d : expect) {
    if (d != 0 && t.shape[i] != d) {  // 0 = wildcard
      throw ConfigError(std::string(where) + ": shape mismatch, got " + t.shape_str());
    }
    ++i;
  }
}

}  // namespace ssacl
