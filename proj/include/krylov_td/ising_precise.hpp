#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/float128.hpp>

#include "double_double.hpp"
#include "error.hpp"
#include "models.hpp"

namespace krylov_td {

using quad = boost::multiprecision::float128;

// Full-orthogonalization Krylov curve of the Ising quench in a chosen real type.
struct IsingKrylovCurve {
  std::vector<double> times;
  std::vector<double> K;
  std::vector<int> krylov_size;
  double max_completeness_dev = 0.0;
  std::vector<std::vector<double>> abs_z;  // [k][n], filled on request
};

namespace detail {

// Split re/im storage of one state.
template <class R>
struct SplitVec {
  std::vector<R> re, im;
  explicit SplitVec(int n = 0) : re(n, R(0)), im(n, R(0)) {}
};

template <class R>
struct ModeGate {
  R a, b, w, d;  // [[a + ib, iw], [iw, a + id]]
};

template <class R>
void apply_gate(SplitVec<R>& x, const ModeGate<R>& g, int q, int n_qubits) {
  const int stride = 1 << (n_qubits - 1 - q);
  const int dim = static_cast<int>(x.re.size());
  for (int base = 0; base < dim; base += 2 * stride)
    for (int i = base; i < base + stride; ++i) {
      const int j = i + stride;
      const R xr = x.re[i], xi = x.im[i], yr = x.re[j], yi = x.im[j];
      x.re[i] = g.a * xr - g.b * xi - g.w * yi;
      x.im[i] = g.a * xi + g.b * xr + g.w * yr;
      x.re[j] = -g.w * xi + g.a * yr - g.d * yi;
      x.im[j] = g.w * xr + g.a * yi + g.d * yr;
    }
}

// Gate and seed coefficients are evaluated in C and rounded to the kernel type R.
template <class R>
struct coefficient_type {
  using type = R;
};
template <>
struct coefficient_type<DoubleDouble> {
  using type = quad;
};

template <class R, class C>
R narrow(const C& x) {
  if constexpr (std::is_same_v<R, C>) {
    return x;
  } else if constexpr (std::is_same_v<R, DoubleDouble>) {
    const double hi = static_cast<double>(x);
    return DoubleDouble(hi, static_cast<double>(x - C(hi)));
  } else {
    return static_cast<R>(x);
  }
}

template <class R>
void mode_coefficients(const IsingParams& p, int k, int n, R& eps, R& v) {
  using std::sin;
  using std::sqrt;
  const R pi = boost::math::constants::pi<R>();
  const R tq = R(p.t_quench), h = R(p.h);
  const R s = R(k) * R(p.dt) / (R(2) * tq);
  const R pn = pi * R(2 * n - 1) / R(2 * p.n_sites);
  const R sh = sin(pn / R(2));
  eps = R(2) * h * sqrt((R(1) - R(2) * s) * (R(1) - R(2) * s) + R(4) * (R(1) - s) * s * sh * sh);
  v = -h * h * sin(pn) / (tq * eps * eps);
}

}  // namespace detail

// Basis at step k+1: Gram-Schmidt of {K_0^{k+1}, U^k K_0^k, U^k K_1^k, ...}; psi^0 = K_0^0.
template <class R>
IsingKrylovCurve ising_full_orthogonalization(const IsingParams& p, int max_krylov = 0, int gs_passes = 2,
                                              bool with_z = false) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  ModelSpec spec;
  spec.params = p;
  validate_spec(spec);
  const int L = p.n_modes(), dim = 1 << L, M = p.m_steps();
  const int cap = max_krylov > 0 ? std::min(max_krylov, dim) : dim;
  using Vec = detail::SplitVec<R>;
  using C = typename detail::coefficient_type<R>::type;
  using detail::narrow;

  auto seed = [&](int k) {
    Vec x(dim);
    x.re[0] = R(1);
    for (int n = 1; n <= L; ++n) {
      C e, v;
      detail::mode_coefficients(p, k, n, e, v);
      const C hn = sqrt(e * e + v * v);
      C sc = sqrt((C(1) + e / hn) / C(2));
      C ss = sqrt((C(1) - e / hn) / C(2));
      if (v < C(0)) ss = -ss;
      const R s = narrow<R>(ss);
      // real rotation taking |0> to (c, s)
      detail::ModeGate<R> g{narrow<R>(sc), R(0), R(0), R(0)};
      const int stride = 1 << (L - n);
      for (int base = 0; base < dim; base += 2 * stride)
        for (int i = base; i < base + stride; ++i) {
          const int j = i + stride;
          const R xr = x.re[i], xi = x.im[i], yr = x.re[j], yi = x.im[j];
          x.re[i] = g.a * xr - s * yr;
          x.im[i] = g.a * xi - s * yi;
          x.re[j] = s * xr + g.a * yr;
          x.im[j] = s * xi + g.a * yi;
        }
    }
    return x;
  };
  auto gates = [&](int k) {
    std::vector<detail::ModeGate<R>> g(L);
    const C cdt = C(p.dt);
    for (int n = 1; n <= L; ++n) {
      C e, v;
      detail::mode_coefficients(p, k, n, e, v);
      const C hn = sqrt(e * e + v * v);
      const C c = cos(hn * cdt), s = sin(hn * cdt);
      g[n - 1] = {narrow<R>(c), narrow<R>(-e / hn * s), narrow<R>(-v / hn * s), narrow<R>(e / hn * s)};
    }
    return g;
  };
  auto apply = [&](const std::vector<detail::ModeGate<R>>& g, Vec& x) {
    for (int q = 0; q < L; ++q) detail::apply_gate(x, g[q], q, L);
  };
  // <a, b> = sum conj(a) b
  auto dot = [&](const Vec& a, const Vec& b, R& zr, R& zi) {
    zr = R(0);
    zi = R(0);
    for (int i = 0; i < dim; ++i) {
      zr += a.re[i] * b.re[i] + a.im[i] * b.im[i];
      zi += a.re[i] * b.im[i] - a.im[i] * b.re[i];
    }
  };

  IsingKrylovCurve out;
  std::vector<Vec> basis{seed(0)};
  Vec psi = basis[0];
  auto record = [&](int k) {
    R K(0), tot(0);
    for (std::size_t n = 0; n < basis.size(); ++n) {
      R zr, zi;
      dot(basis[n], psi, zr, zi);
      const R pop = zr * zr + zi * zi;
      K += R(static_cast<int>(n)) * pop;
      tot += pop;
    }
    out.times.push_back(p.time_of_step(k));
    out.K.push_back(static_cast<double>(K));
    out.krylov_size.push_back(static_cast<int>(basis.size()));
    out.max_completeness_dev = std::max(out.max_completeness_dev, std::abs(static_cast<double>(tot) - 1.0));
  };
  record(0);
  const R tol = R(kDeflationTol);
  for (int k = 0; k < M; ++k) {
    const auto g = gates(k);
    apply(g, psi);
    std::vector<Vec> next{seed(k + 1)};
    Vec f = next[0];
    std::vector<double> zrow;
    for (auto& v : basis) {
      Vec u = std::move(v);
      apply(g, u);
      R fr(0), fi(0);
      if (with_z) {
        dot(f, u, fr, fi);
        zrow.push_back(std::sqrt(static_cast<double>(fr * fr + fi * fi)));
      }
      if (static_cast<int>(next.size()) >= cap) break;
      for (int pass = 0; pass < gs_passes; ++pass)
        for (const auto& q : next) {
          R zr, zi;
          dot(q, u, zr, zi);
          for (int i = 0; i < dim; ++i) {
            u.re[i] -= zr * q.re[i] - zi * q.im[i];
            u.im[i] -= zr * q.im[i] + zi * q.re[i];
          }
        }
      R nrm(0);
      for (int i = 0; i < dim; ++i) nrm += u.re[i] * u.re[i] + u.im[i] * u.im[i];
      nrm = sqrt(nrm);
      if (nrm <= tol) break;
      for (int i = 0; i < dim; ++i) {
        u.re[i] /= nrm;
        u.im[i] /= nrm;
      }
      if (with_z) {
        // f <- -f s + K_{n+1} z^*
        R s2 = R(1) - fr * fr - fi * fi;
        const R s = s2 > R(0) ? sqrt(s2) : R(0);
        R fn(0);
        for (int i = 0; i < dim; ++i) {
          const R xr = -f.re[i] * s + u.re[i] * fr + u.im[i] * fi;
          const R xi = -f.im[i] * s + u.im[i] * fr - u.re[i] * fi;
          f.re[i] = xr;
          f.im[i] = xi;
          fn += xr * xr + xi * xi;
        }
        fn = sqrt(fn);
        if (fn > R(0))
          for (int i = 0; i < dim; ++i) {
            f.re[i] /= fn;
            f.im[i] /= fn;
          }
      }
      next.push_back(std::move(u));
    }
    if (with_z) out.abs_z.push_back(std::move(zrow));
    basis = std::move(next);
    record(k + 1);
  }
  return out;
}

}  // namespace krylov_td
