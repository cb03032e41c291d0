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

#include "coordlab/dual.hpp"

#include <atomic>
#include <cmath>

namespace coordlab {

namespace {
std::atomic<Tag> g_tag_counter{1};
}  // namespace

Tag DualScalar::fresh_tag() {
  return g_tag_counter.fetch_add(1, std::memory_order_relaxed);
}

DualScalar DualScalar::seeded(Tag tag) const {
  DualScalar out = *this;
  if (!out.tangents_.empty() && out.tangents_.back().first >= tag) {
    throw std::logic_error("DualScalar::seeded: tag is not fresh");
  }
  out.tangents_.emplace_back(tag, DualScalar(1.0));
  return out;
}

DualScalar DualScalar::tangent(Tag tag) const {
  for (const auto& [t, coeff] : tangents_) {
    if (t == tag) return coeff;
    if (t > tag) break;
  }
  return DualScalar(0.0);
}

DualScalar operator+(const DualScalar& a, const DualScalar& b) {
  if (a.tangents_.empty() && b.tangents_.empty()) {
    return DualScalar(a.primal_ + b.primal_);
  }
  DualScalar out(a.primal_ + b.primal_);
  out.tangents_.reserve(a.tangents_.size() + b.tangents_.size());
  std::size_t ia = 0, ib = 0;
  while (ia < a.tangents_.size() || ib < b.tangents_.size()) {
    const bool take_a =
        ib == b.tangents_.size() ||
        (ia < a.tangents_.size() &&
         a.tangents_[ia].first <= b.tangents_[ib].first);
    const bool take_b =
        ia == a.tangents_.size() ||
        (ib < b.tangents_.size() &&
         b.tangents_[ib].first <= a.tangents_[ia].first);
    if (take_a && take_b) {
      DualScalar c = a.tangents_[ia].second + b.tangents_[ib].second;
      if (!c.is_zero()) out.tangents_.emplace_back(a.tangents_[ia].first, std::move(c));
      ++ia;
      ++ib;
    } else if (take_a) {
      out.tangents_.push_back(a.tangents_[ia++]);
    } else {
      out.tangents_.push_back(b.tangents_[ib++]);
    }
  }
  return out;
}

DualScalar operator-(const DualScalar& a) {
  DualScalar out(-a.primal_);
  out.tangents_.reserve(a.tangents_.size());
  for (const auto& [t, c] : a.tangents_) out.tangents_.emplace_back(t, -c);
  return out;
}

DualScalar operator-(const DualScalar& a, const DualScalar& b) {
  return a + (-b);
}

DualScalar DualScalar::scaled_view(const DualScalar& a, std::size_t na,
                                   double s) {
  if (s == 0.0) return DualScalar(0.0);
  DualScalar out(a.primal_ * s);
  out.tangents_.reserve(na);
  for (std::size_t i = 0; i < na; ++i) {
    const auto& [t, c] = a.tangents_[i];
    DualScalar sc = scaled_view(c, c.tangents_.size(), s);
    if (!sc.is_zero()) out.tangents_.emplace_back(t, std::move(sc));
  }
  return out;
}

// Product over tag-prefixes: uses the first na / nb tangent entries only.
// Coefficient of eps_t in a*b is (a below t)*db_t + (b below t)*da_t; the
// "below t" restrictions are exactly prefixes of the sorted entry lists,
// and cross terms between two distinct tags always land in the larger tag's
// coefficient, so nothing is counted twice.
DualScalar DualScalar::mul_view(const DualScalar& a, std::size_t na,
                                const DualScalar& b, std::size_t nb) {
  if (na == 0 && nb == 0) return DualScalar(a.primal_ * b.primal_);
  if (na == 0) return scaled_view(b, nb, a.primal_);
  if (nb == 0) return scaled_view(a, na, b.primal_);
  DualScalar out(a.primal_ * b.primal_);
  out.tangents_.reserve(na + nb);
  std::size_t ia = 0, ib = 0;
  while (ia < na || ib < nb) {
    const bool ha = ia < na;
    const bool hb = ib < nb;
    Tag t;
    if (ha && hb) {
      t = std::min(a.tangents_[ia].first, b.tangents_[ib].first);
    } else if (ha) {
      t = a.tangents_[ia].first;
    } else {
      t = b.tangents_[ib].first;
    }
    DualScalar coeff(0.0);
    if (hb && b.tangents_[ib].first == t) {
      const DualScalar& d = b.tangents_[ib].second;
      coeff += mul_view(a, ia, d, d.tangents_.size());
    }
    if (ha && a.tangents_[ia].first == t) {
      const DualScalar& c = a.tangents_[ia].second;
      coeff += mul_view(b, ib, c, c.tangents_.size());
    }
    if (ha && a.tangents_[ia].first == t) ++ia;
    if (hb && b.tangents_[ib].first == t) ++ib;
    if (!coeff.is_zero()) out.tangents_.emplace_back(t, std::move(coeff));
  }
  return out;
}

DualScalar operator*(const DualScalar& a, const DualScalar& b) {
  return DualScalar::mul_view(a, a.tangents_.size(), b, b.tangents_.size());
}

namespace detail {
void check_finite_derivative(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::domain_error(std::string(what) +
                            ": non-finite result (" + std::to_string(v) + ")");
  }
}
}  // namespace detail

}  // namespace coordlab
