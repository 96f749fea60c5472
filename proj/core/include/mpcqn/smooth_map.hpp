// SPDX-License-Identifier: MIT
/// \file smooth_map.hpp
/// \brief Type-erased smooth vector functions evaluable on doubles or
///        truncated Taylor scalars, plus derivative extraction helpers.
///
/// A SmoothMap wraps one generic callable f(in, out) written against an
/// arbitrary scalar type S (double or Taylor<1..3>).  Model code writes the
/// function once; the wrapper instantiates the four scalar channels so other
/// modules can evaluate values, Jacobians, and second/third directional
/// derivatives without templates leaking through their interfaces.
///
/// Convention for generic bodies: call math functions unqualified after
/// `using std::tanh;` etc., so argument-dependent lookup picks the Taylor
/// overloads for expansions and the std overloads for plain doubles.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mpcqn/errors.hpp"
#include "mpcqn/taylor.hpp"

namespace mpcqn {

class SmoothMap {
 public:
  SmoothMap() = default;

  /// Wraps fn(std::span<const S>, std::span<S>) generic over scalar S.
  template <class F>
  SmoothMap(std::size_t n_in, std::size_t n_out, F fn)
      : n_in_(n_in), n_out_(n_out) {
    auto shared = std::make_shared<F>(std::move(fn));
    f0_ = [shared](std::span<const double> in, std::span<double> out) {
      (*shared)(in, out);
    };
    f1_ = [shared](std::span<const Taylor<1>> in, std::span<Taylor<1>> out) {
      (*shared)(in, out);
    };
    f2_ = [shared](std::span<const Taylor<2>> in, std::span<Taylor<2>> out) {
      (*shared)(in, out);
    };
    f3_ = [shared](std::span<const Taylor<3>> in, std::span<Taylor<3>> out) {
      (*shared)(in, out);
    };
  }

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }
  explicit operator bool() const { return static_cast<bool>(f0_); }

  void eval(std::span<const double> in, std::span<double> out) const {
    f0_(in, out);
  }
  void eval(std::span<const Taylor<1>> in, std::span<Taylor<1>> out) const {
    f1_(in, out);
  }
  void eval(std::span<const Taylor<2>> in, std::span<Taylor<2>> out) const {
    f2_(in, out);
  }
  void eval(std::span<const Taylor<3>> in, std::span<Taylor<3>> out) const {
    f3_(in, out);
  }

 private:
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  std::function<void(std::span<const double>, std::span<double>)> f0_;
  std::function<void(std::span<const Taylor<1>>, std::span<Taylor<1>>)> f1_;
  std::function<void(std::span<const Taylor<2>>, std::span<Taylor<2>>)> f2_;
  std::function<void(std::span<const Taylor<3>>, std::span<Taylor<3>>)> f3_;
};

/// Plain evaluation into an Eigen vector.
inline Eigen::VectorXd eval(const SmoothMap& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(f.n_out());
  f.eval(std::span<const double>(x.data(), x.size()),
         std::span<double>(out.data(), out.size()));
  return out;
}

/// Jacobian columns [col0, col0+ncols) via one first-order sweep per column.
inline Eigen::MatrixXd jacobian_cols(const SmoothMap& f, const Eigen::VectorXd& x,
                                     Eigen::Index col0, Eigen::Index ncols) {
  std::vector<Taylor<1>> in(f.n_in()), out(f.n_out());
  for (std::size_t i = 0; i < f.n_in(); ++i) in[i] = Taylor<1>(x[i]);
  Eigen::MatrixXd jac(f.n_out(), ncols);
  for (Eigen::Index c = 0; c < ncols; ++c) {
    in[col0 + c][1] = 1.0;
    f.eval(std::span<const Taylor<1>>(in), std::span<Taylor<1>>(out));
    for (std::size_t r = 0; r < f.n_out(); ++r) jac(r, c) = out[r][1];
    in[col0 + c][1] = 0.0;
  }
  return jac;
}

inline Eigen::MatrixXd jacobian(const SmoothMap& f, const Eigen::VectorXd& x) {
  return jacobian_cols(f, x, 0, x.size());
}

/// First directional derivative along tangent t.
inline Eigen::VectorXd dir1(const SmoothMap& f, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& t) {
  std::vector<Taylor<1>> in(f.n_in()), out(f.n_out());
  for (std::size_t i = 0; i < f.n_in(); ++i) {
    in[i][0] = x[i];
    in[i][1] = t[i];
  }
  f.eval(std::span<const Taylor<1>>(in), std::span<Taylor<1>>(out));
  Eigen::VectorXd d(f.n_out());
  for (std::size_t r = 0; r < f.n_out(); ++r) d[r] = out[r][1];
  return d;
}

/// All channels of one second-order sweep along tangents (u, v).
struct Dir2Result {
  Eigen::VectorXd value;  ///< f(x)
  Eigen::VectorXd d_u;    ///< Df(x)[u]
  Eigen::VectorXd d_v;    ///< Df(x)[v]
  Eigen::VectorXd d_uv;   ///< D^2 f(x)[u, v]
};

inline Dir2Result dir2(const SmoothMap& f, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  std::vector<Taylor<2>> in(f.n_in()), out(f.n_out());
  for (std::size_t i = 0; i < f.n_in(); ++i) {
    in[i][0] = x[i];
    in[i][1] = u[i];
    in[i][2] = v[i];
  }
  f.eval(std::span<const Taylor<2>>(in), std::span<Taylor<2>>(out));
  Dir2Result r;
  r.value.resize(f.n_out());
  r.d_u.resize(f.n_out());
  r.d_v.resize(f.n_out());
  r.d_uv.resize(f.n_out());
  for (std::size_t i = 0; i < f.n_out(); ++i) {
    r.value[i] = out[i][0];
    r.d_u[i] = out[i][1];
    r.d_v[i] = out[i][2];
    r.d_uv[i] = out[i][3];
  }
  return r;
}

/// All channels of one third-order sweep along tangents (u, v, w).
struct Dir3Result {
  Eigen::VectorXd value;
  Eigen::VectorXd d_u, d_v, d_w;
  Eigen::VectorXd d_uv, d_uw, d_vw;
  Eigen::VectorXd d_uvw;  ///< D^3 f(x)[u, v, w]
};

inline Dir3Result dir3(const SmoothMap& f, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& w) {
  std::vector<Taylor<3>> in(f.n_in()), out(f.n_out());
  for (std::size_t i = 0; i < f.n_in(); ++i) {
    in[i][0] = x[i];
    in[i][1] = u[i];
    in[i][2] = v[i];
    in[i][4] = w[i];
  }
  f.eval(std::span<const Taylor<3>>(in), std::span<Taylor<3>>(out));
  Dir3Result r;
  auto fill = [&](Eigen::VectorXd& dst, unsigned mask) {
    dst.resize(f.n_out());
    for (std::size_t i = 0; i < f.n_out(); ++i) dst[i] = out[i][mask];
  };
  fill(r.value, 0);
  fill(r.d_u, 1);
  fill(r.d_v, 2);
  fill(r.d_w, 4);
  fill(r.d_uv, 3);
  fill(r.d_uw, 5);
  fill(r.d_vw, 6);
  fill(r.d_uvw, 7);
  return r;
}

/// Dense Hessian of output component out_index over input block
/// [col0, col0+ncols), one mixed sweep per coordinate pair.
inline Eigen::MatrixXd hessian_block(const SmoothMap& f, const Eigen::VectorXd& x,
                                     Eigen::Index out_index, Eigen::Index col0,
                                     Eigen::Index ncols) {
  std::vector<Taylor<2>> in(f.n_in()), out(f.n_out());
  for (std::size_t i = 0; i < f.n_in(); ++i) in[i] = Taylor<2>(x[i]);
  Eigen::MatrixXd h(ncols, ncols);
  for (Eigen::Index a = 0; a < ncols; ++a) {
    for (Eigen::Index b = a; b < ncols; ++b) {
      in[col0 + a][1] = 1.0;
      in[col0 + b][2] = 1.0;
      f.eval(std::span<const Taylor<2>>(in), std::span<Taylor<2>>(out));
      h(a, b) = h(b, a) = out[out_index][3];
      in[col0 + a][1] = 0.0;
      in[col0 + b][2] = 0.0;
    }
  }
  return h;
}

}  // namespace mpcqn
