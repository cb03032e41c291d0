// Copyright 2026 The coordlab Authors
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

#ifndef COORDLAB_DUAL_HPP_
#define COORDLAB_DUAL_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coordlab {

using Tag = std::uint64_t;

/// Forward-mode scalar with nestable, tagged perturbations.
///
/// A value is `primal + sum_t coeff_t * eps_t` where each eps_t is a
/// nilpotent perturbation identified by a tag, and each coefficient may
/// itself carry perturbations with strictly smaller tags. Tags are issued
/// by a global monotone counter (`fresh_tag`), so an inner differentiation
/// scope can never collide with an enclosing one, which is what makes
/// gradients-of-gradients (arbitrary nesting depth) well defined.
///
/// Arithmetic keeps the representation canonical: tangent entries are
/// sorted by tag, zero coefficients are dropped, and a coefficient only
/// ever contains tags smaller than its own.
class DualScalar {
 public:
  DualScalar() = default;
  DualScalar(double v) : primal_(v) {}  // NOLINT: implicit by design

  double primal() const { return primal_; }
  bool is_constant() const { return tangents_.empty(); }

  /// Issues a globally unique, strictly increasing tag. Thread-safe.
  static Tag fresh_tag();

  /// This value plus a unit perturbation of `tag`. `tag` must be fresher
  /// than every tag already present in the value.
  DualScalar seeded(Tag tag) const;

  /// Coefficient of the perturbation `tag` (zero if absent). The result
  /// carries only tags that were live in enclosing scopes.
  DualScalar tangent(Tag tag) const;

  friend DualScalar operator+(const DualScalar& a, const DualScalar& b);
  friend DualScalar operator-(const DualScalar& a, const DualScalar& b);
  friend DualScalar operator*(const DualScalar& a, const DualScalar& b);
  friend DualScalar operator-(const DualScalar& a);

  DualScalar& operator+=(const DualScalar& rhs) { return *this = *this + rhs; }
  DualScalar& operator-=(const DualScalar& rhs) { return *this = *this - rhs; }
  DualScalar& operator*=(const DualScalar& rhs) { return *this = *this * rhs; }

  /// Blocks every live perturbation: the primal value passes through, all
  /// derivative flow stops. Idempotent.
  friend DualScalar stop_gradient(const DualScalar& v) {
    return DualScalar(v.primal_);
  }

 private:
  bool is_zero() const { return primal_ == 0.0 && tangents_.empty(); }
  static DualScalar mul_view(const DualScalar& a, std::size_t na,
                             const DualScalar& b, std::size_t nb);
  static DualScalar scaled_view(const DualScalar& a, std::size_t na, double s);

  double primal_ = 0.0;
  // Sorted ascending by tag; invariant: entry (t, c) has only tags < t in c.
  std::vector<std::pair<Tag, DualScalar>> tangents_;
};

inline DualScalar operator+(const DualScalar& a, double b) {
  return a + DualScalar(b);
}
inline DualScalar operator+(double a, const DualScalar& b) {
  return DualScalar(a) + b;
}
inline DualScalar operator-(const DualScalar& a, double b) {
  return a - DualScalar(b);
}
inline DualScalar operator-(double a, const DualScalar& b) {
  return DualScalar(a) - b;
}
inline DualScalar operator*(const DualScalar& a, double b) {
  return a * DualScalar(b);
}
inline DualScalar operator*(double a, const DualScalar& b) {
  return DualScalar(a) * b;
}

namespace detail {
void check_finite_derivative(double v, const char* what);
}  // namespace detail

/// Derivative of a scalar function, usable inside an enclosing scope:
/// perturbations carried by `at` flow through the result.
template <class F>
DualScalar derivative_scope(F&& f, const DualScalar& at) {
  const Tag tag = DualScalar::fresh_tag();
  const DualScalar y = f(at.seeded(tag));
  return y.tangent(tag);
}

/// df/dx at a plain point. Non-finite results are reported, never returned.
template <class F>
double derivative(F&& f, double at) {
  const DualScalar d = derivative_scope(f, DualScalar(at));
  detail::check_finite_derivative(d.primal(), "derivative");
  return d.primal();
}

/// Per-coordinate derivative of a scalar function of a parameter block,
/// each coordinate in its own fresh scope. In-scope variant.
template <class F>
std::vector<DualScalar> gradient_block_scope(F&& f,
                                             const std::vector<DualScalar>& at) {
  std::vector<DualScalar> grad(at.size());
  for (std::size_t c = 0; c < at.size(); ++c) {
    const Tag tag = DualScalar::fresh_tag();
    std::vector<DualScalar> x = at;
    x[c] = at[c].seeded(tag);
    grad[c] = f(x).tangent(tag);
  }
  return grad;
}

template <class F>
std::vector<double> gradient_block(F&& f, const std::vector<double>& at) {
  std::vector<DualScalar> at_dual(at.begin(), at.end());
  const std::vector<DualScalar> g = gradient_block_scope(f, at_dual);
  std::vector<double> out(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    detail::check_finite_derivative(g[c].primal(), "gradient_block");
    out[c] = g[c].primal();
  }
  return out;
}

/// Gradient of a function that itself differentiates internally (with its
/// own fresh scopes): outer derivatives flow through the inner gradients'
/// dependence on the outer parameters.
template <class F>
std::vector<double> nested_gradient(F&& f, const std::vector<double>& at) {
  return gradient_block(std::forward<F>(f), at);
}

}  // namespace coordlab

#endif  // COORDLAB_DUAL_HPP_
