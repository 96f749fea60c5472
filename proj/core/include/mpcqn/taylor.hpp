// SPDX-License-Identifier: MIT
/// \file taylor.hpp
/// \brief Truncated multivariate Taylor scalars for forward-mode differentiation.
///
/// Taylor<D> carries a value together with every mixed derivative of order up
/// to D taken along D fixed tangent directions, at most one derivative per
/// direction (square-free truncation).  Coefficients are indexed by direction
/// subsets encoded as bit masks: coefficient S holds the mixed directional
/// derivative along the directions in S; coefficient 0 is the value.
///
/// Seeding inputs x_i with value and unit tangents and evaluating f yields in
/// coefficient {0,1,2} (mask 7) the exact third mixed directional derivative
/// of f along the three tangents, with the lower masks holding the lower
/// orders.  All arithmetic is exact in this truncated algebra: the epsilon
/// symbols are nilpotent (eps_i^2 = 0), so products use subset convolution.
///
/// D is capped at 3: the library needs values, Jacobian slices, and second
/// and third directional derivatives, nothing higher.

#pragma once

#include <array>
#include <cmath>

#include "mpcqn/errors.hpp"

namespace mpcqn {

template <int D>
class Taylor {
  static_assert(D >= 1 && D <= 3, "supported tangent direction counts are 1..3");

 public:
  static constexpr int n_dirs = D;
  static constexpr unsigned n_coef = 1u << D;

  /// Zero.
  Taylor() : c_{} {}

  /// Constant: value with all derivative coefficients zero.  Intentionally
  /// implicit so numeric literals mix with Taylor operands in generic code.
  Taylor(double value) : c_{} { c_[0] = value; }

  /// A variable carrying tangent in direction dir (0-based).
  static Taylor seeded(double value, int dir, double tangent = 1.0) {
    Taylor t(value);
    t.c_[1u << dir] = tangent;
    return t;
  }

  double value() const { return c_[0]; }

  /// Coefficient for the direction subset encoded by mask.
  double& operator[](unsigned mask) { return c_[mask]; }
  const double& operator[](unsigned mask) const { return c_[mask]; }

  Taylor operator-() const {
    Taylor r;
    for (unsigned i = 0; i < n_coef; ++i) r.c_[i] = -c_[i];
    return r;
  }

  Taylor& operator+=(const Taylor& o) {
    for (unsigned i = 0; i < n_coef; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (unsigned i = 0; i < n_coef; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Taylor& operator*=(const Taylor& o) {
    *this = *this * o;
    return *this;
  }
  Taylor& operator/=(const Taylor& o) {
    *this = *this / o;
    return *this;
  }

  Taylor& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Taylor& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Taylor& operator*=(double s) {
    for (unsigned i = 0; i < n_coef; ++i) c_[i] *= s;
    return *this;
  }
  Taylor& operator/=(double s) {
    if (s == 0.0) throw NumericalError("Taylor: division by zero scalar");
    for (unsigned i = 0; i < n_coef; ++i) c_[i] /= s;
    return *this;
  }

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator+(Taylor a, double b) { return a += b; }
  friend Taylor operator-(Taylor a, double b) { return a -= b; }
  friend Taylor operator*(Taylor a, double b) { return a *= b; }
  friend Taylor operator/(Taylor a, double b) { return a /= b; }
  friend Taylor operator+(double a, Taylor b) { return b += a; }
  friend Taylor operator-(double a, const Taylor& b) { return Taylor(a) - b; }
  friend Taylor operator*(double a, Taylor b) { return b *= a; }

  /// Product in the truncated algebra: subset convolution over direction
  /// masks, exact because the tangent symbols are square-free nilpotents.
  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    Taylor r;
    for (unsigned s = 0; s < n_coef; ++s) {
      double acc = 0.0;
      unsigned t = s;
      while (true) {
        acc += a.c_[t] * b.c_[s ^ t];
        if (t == 0) break;
        t = (t - 1) & s;
      }
      r.c_[s] = acc;
    }
    return r;
  }

  friend Taylor operator/(const Taylor& a, const Taylor& b) {
    return a * reciprocal(b);
  }
  friend Taylor operator/(double a, const Taylor& b) {
    return reciprocal(b) * a;
  }

  /// 1/x propagated through the expansion; zero value is a hard error.
  friend Taylor reciprocal(const Taylor& x) {
    const double v = x.value();
    if (v == 0.0) throw NumericalError("Taylor: division by zero-valued expansion");
    const double iv = 1.0 / v;
    return compose(x, iv, -iv * iv, 2.0 * iv * iv * iv, -6.0 * iv * iv * iv * iv);
  }

  /// Propagates a univariate analytic function through the expansion given
  /// its derivatives f0 = f(v), f1 = f'(v), f2 = f''(v), f3 = f'''(v) at the
  /// input value v.  With delta = x - v (nilpotent part), the result is
  /// f0 + f1*delta + f2/2*delta^2 + f3/6*delta^3, exact in this algebra.
  friend Taylor compose(const Taylor& x, double f0, double f1, double f2,
                        double f3) {
    Taylor delta = x;
    delta.c_[0] = 0.0;
    Taylor out = delta * f1;
    out.c_[0] += f0;
    if constexpr (D >= 2) {
      const Taylor d2 = delta * delta;
      out += d2 * (0.5 * f2);
      if constexpr (D >= 3) {
        out += (d2 * delta) * (f3 / 6.0);
      }
    }
    return out;
  }

 private:
  std::array<double, n_coef> c_;
};

template <int D>
Taylor<D> exp(const Taylor<D>& x) {
  const double e = std::exp(x.value());
  return compose(x, e, e, e, e);
}

template <int D>
Taylor<D> log(const Taylor<D>& x) {
  const double v = x.value();
  if (v <= 0.0) throw NumericalError("Taylor: log of non-positive value");
  const double iv = 1.0 / v;
  return compose(x, std::log(v), iv, -iv * iv, 2.0 * iv * iv * iv);
}

template <int D>
Taylor<D> sqrt(const Taylor<D>& x) {
  const double v = x.value();
  if (v <= 0.0) throw NumericalError("Taylor: sqrt of non-positive value");
  const double r = std::sqrt(v);
  const double f1 = 0.5 / r;
  const double f2 = -0.25 / (v * r);
  const double f3 = 0.375 / (v * v * r);
  return compose(x, r, f1, f2, f3);
}

template <int D>
Taylor<D> sin(const Taylor<D>& x) {
  const double s = std::sin(x.value());
  const double c = std::cos(x.value());
  return compose(x, s, c, -s, -c);
}

template <int D>
Taylor<D> cos(const Taylor<D>& x) {
  const double s = std::sin(x.value());
  const double c = std::cos(x.value());
  return compose(x, c, -s, -c, s);
}

template <int D>
Taylor<D> tanh(const Taylor<D>& x) {
  const double t = std::tanh(x.value());
  const double sech2 = 1.0 - t * t;
  return compose(x, t, sech2, -2.0 * t * sech2, (6.0 * t * t - 2.0) * sech2);
}

/// Integer power by repeated squaring; negative exponents go through the
/// reciprocal (zero value then raises NumericalError).
template <int D>
Taylor<D> pow(const Taylor<D>& x, int n) {
  if (n < 0) return reciprocal(pow(x, -n));
  Taylor<D> result(1.0);
  Taylor<D> base = x;
  unsigned e = static_cast<unsigned>(n);
  while (e > 0) {
    if (e & 1u) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

}  // namespace mpcqn
