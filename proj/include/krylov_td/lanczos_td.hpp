#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "models.hpp"
#include "numcore.hpp"

namespace krylov_td {

enum class HaltReason { Deflated, DimensionCap };
enum class FrameRoute { Auto, Lab, Moving };

inline std::string to_string(HaltReason h) { return h == HaltReason::Deflated ? "Deflated" : "DimensionCap"; }

struct LanczosOptions {
  double deflation_tol = kDeflationTol;
  double drift_tol = 1e-6;
  FrameRoute route = FrameRoute::Auto;
};

// a(k, j), b(k, j); row 0 of b is zero.
struct LanczosCoefficients {
  TimeGrid grid;
  RMat a;
  RMat b;
  int dim() const { return static_cast<int>(a.rows()); }
};

struct KrylovData {
  LanczosCoefficients coeffs;
  std::vector<std::vector<CVec>> basis;  // [k][j], lab frame
  HaltReason halt = HaltReason::Deflated;
  int hilbert_dim = 0;
  bool moving_frame = false;
  std::function<CMat(double)> hamiltonian;

  const TimeGrid& grid() const { return coeffs.grid; }
  int d() const { return coeffs.dim(); }
  const RMat& a() const { return coeffs.a; }
  const RMat& b() const { return coeffs.b; }
};

namespace detail {

// Lagrange value at x from up to three (x_i, v_i) pairs.
inline CVec lagrange3(const std::vector<double>& xs, const std::vector<const CVec*>& vs, double x) {
  CVec out = CVec::Zero(vs.front()->size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double w = 1.0;
    for (std::size_t m = 0; m < xs.size(); ++m)
      if (m != i) w *= (x - xs[m]) / (xs[i] - xs[m]);
    out += w * *vs[i];
  }
  return out;
}

inline std::vector<std::reference_wrapper<const CVec>> node_basis(const std::vector<std::vector<CVec>>& rows, int j,
                                                                  std::size_t upto) {
  std::vector<std::reference_wrapper<const CVec>> out;
  out.reserve(upto);
  for (std::size_t k = 0; k < upto; ++k) out.emplace_back(rows[k][j]);
  return out;
}

}  // namespace detail

// Recursion on an arbitrary generator family G(t_j) with seed row K_0(t_j).
// Returned basis lives in the coordinates of G.
inline KrylovData lanczos_core(const std::function<CMat(int)>& generator, std::vector<CVec> seed,
                               const TimeGrid& grid, int k_max, const LanczosOptions& opt = {}) {
  const int n = grid.size();
  if (static_cast<int>(seed.size()) != n) throw StructuralError("lanczos: seed row length does not match grid");
  const int dim = static_cast<int>(seed.front().size());
  for (int j = 0; j < n; ++j) {
    if (seed[j].size() != dim) throw StructuralError("lanczos: seed dimension mismatch");
    if (std::abs(seed[j].norm() - 1.0) > opt.drift_tol)
      throw NumericalError("lanczos: seed not normalized at node " + std::to_string(j));
  }
  if (k_max < 1) throw ConfigError("lanczos: k_max must be >= 1");
  const int cap = std::min(k_max, dim);

  KrylovData kd;
  kd.hilbert_dim = dim;
  kd.basis.push_back(std::move(seed));
  std::vector<std::vector<double>> a_rows, b_rows;
  b_rows.push_back(std::vector<double>(n, 0.0));

  for (int k = 0;; ++k) {
    const auto& row = kd.basis[k];
    const auto drow = finite_diff_series(row, grid);
    std::vector<CVec> w(n);
    std::vector<double> a(n);
    double scale = 0.0;
    for (int j = 0; j < n; ++j) {
      w[j] = generator(j) * row[j] - kI * drow[j];
      a[j] = row[j].dot(w[j]).real();
      scale = std::max(scale, w[j].norm());
    }
    a_rows.push_back(a);

    if (k + 1 >= cap) {
      kd.halt = (k + 1 >= dim) ? HaltReason::Deflated : HaltReason::DimensionCap;
      break;
    }

    std::vector<CVec> r(n);
    std::vector<double> b(n);
    double bmax = 0.0;
    for (int j = 0; j < n; ++j) {
      r[j] = project_out(w[j], detail::node_basis(kd.basis, j, k + 1));
      b[j] = r[j].norm();
      bmax = std::max(bmax, b[j]);
    }
    const double thresh = opt.deflation_tol * scale;
    if (bmax <= thresh) {
      kd.halt = HaltReason::Deflated;
      break;
    }

    std::vector<CVec> next(n);
    std::vector<int> defined;
    for (int j = 0; j < n; ++j)
      if (b[j] > thresh) {
        next[j] = r[j] / b[j];
        defined.push_back(j);
      }
    for (int j = 0; j < n; ++j) {
      if (b[j] > thresh) continue;
      std::vector<int> near(defined);
      std::partial_sort(near.begin(), near.begin() + std::min<std::size_t>(3, near.size()), near.end(),
                        [j](int x, int y) { return std::abs(x - j) < std::abs(y - j) || (std::abs(x - j) == std::abs(y - j) && x < y); });
      near.resize(std::min<std::size_t>(3, near.size()));
      std::vector<double> xs;
      std::vector<const CVec*> vs;
      for (int i : near) {
        xs.push_back(grid.node(i));
        vs.push_back(&next[i]);
      }
      CVec guess = detail::lagrange3(xs, vs, grid.node(j));
      guess = project_out(guess, detail::node_basis(kd.basis, j, k + 1));
      const double gn = guess.norm();
      if (!(gn > 1e-3)) throw NumericalError("lanczos: cannot continue basis row " + std::to_string(k + 1) + " through node " + std::to_string(j));
      next[j] = guess / gn;
    }
    for (int j = 0; j < n; ++j) {
      double dev = 0.0;
      for (int m = 0; m <= k; ++m) dev = std::max(dev, std::abs(kd.basis[m][j].dot(next[j])));
      dev = std::max(dev, std::abs(next[j].norm() - 1.0));
      if (!(dev <= opt.drift_tol))
        throw NumericalError("lanczos: orthonormality drift at (k=" + std::to_string(k + 1) + ", j=" + std::to_string(j) + ")");
    }
    b_rows.push_back(b);
    kd.basis.push_back(std::move(next));
  }

  const int d = static_cast<int>(a_rows.size());
  kd.coeffs.grid = grid;
  kd.coeffs.a.resize(d, n);
  kd.coeffs.b.resize(d, n);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < n; ++j) {
      kd.coeffs.a(k, j) = a_rows[k][j];
      kd.coeffs.b(k, j) = b_rows[k][j];
    }
  return kd;
}

inline bool uses_moving_frame(const ModelSpec& spec, FrameRoute route) {
  if (spec.initial_basis != BasisKind::Instantaneous) return false;
  if (route == FrameRoute::Lab) return false;
  if (route == FrameRoute::Moving && !has_analytic_frame(spec))
    throw ConfigError("moving-frame route requested for a model without analytic frame");
  return has_analytic_frame(spec);
}

inline KrylovData run_lanczos_td(const ModelSpec& spec, const TimeGrid& grid, int k_max,
                                 const LanczosOptions& opt = {}) {
  validate_spec(spec);
  const int n = grid.size();
  const auto lab_h = make_hamiltonian(spec);

  if (uses_moving_frame(spec, opt.route)) {
    const FrameMap map(spec);
    const int dim = map.dim();
    std::vector<CVec> seed(n, CVec::Zero(dim));
    for (auto& s : seed) s[0] = 1.0;
    KrylovData kd = lanczos_core([&](int j) { return map.generator(grid.node(j)); }, std::move(seed), grid, k_max, opt);
    const int d = kd.d();
    for (int j = 0; j < n; ++j) {
      CMat coords(dim, d);
      for (int k = 0; k < d; ++k) coords.col(k) = kd.basis[k][j];
      const CMat lab = map.apply(grid.node(j), coords);
      for (int k = 0; k < d; ++k) kd.basis[k][j] = lab.col(k);
    }
    kd.moving_frame = true;
    kd.hamiltonian = lab_h;
    return kd;
  }

  std::vector<CVec> seed(n);
  const CVec psi0 = initial_state(spec);
  if (spec.initial_basis == BasisKind::FixedInitialState) {
    for (auto& s : seed) s = psi0;
  } else {
    const auto frame = instantaneous_frame(spec, grid, FrameMethod::Numeric);
    Eigen::Index level;
    (frame[0].eigvecs.adjoint() * psi0).cwiseAbs().maxCoeff(&level);
    for (int j = 0; j < n; ++j) seed[j] = frame[j].eigvecs.col(level);
  }
  KrylovData kd = lanczos_core([&](int j) { return lab_h(grid.node(j)); }, std::move(seed), grid,
                               k_max, opt);
  kd.hamiltonian = lab_h;
  return kd;
}

struct TildeData {
  RMat delta;    // [k][j]
  CMat tilde_b;  // [k][j]
};

// delta_k = -int (a_k - a_{k-1}), tilde_b_k = b_k exp(-i delta_k)
inline TildeData phase_transform(const LanczosCoefficients& c) {
  const int d = c.dim(), n = c.grid.size();
  TildeData td;
  td.delta = RMat::Zero(d, n);
  td.tilde_b = CMat::Zero(d, n);
  for (int k = 1; k < d; ++k) {
    std::vector<double> f(n);
    for (int j = 0; j < n; ++j) f[j] = c.a(k - 1, j) - c.a(k, j);
    const auto integ = cumulative_integral(f, c.grid);
    for (int j = 0; j < n; ++j) {
      td.delta(k, j) = integ[j];
      td.tilde_b(k, j) = c.b(k, j) * std::exp(-kI * integ[j]);
    }
  }
  return td;
}

inline TildeData phase_transform(const KrylovData& kd) { return phase_transform(kd.coeffs); }

struct BasisReport {
  double max_ortho_dev = 0.0;
  double max_recurrence_residual = 0.0;
};

// Audit with an independent fourth-order derivative; interior nodes only for the recurrence.
inline BasisReport verify_basis(const KrylovData& kd) {
  BasisReport rep;
  const int d = kd.d(), n = kd.grid().size();
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = k; l < d; ++l) {
        const Complex ov = kd.basis[k][j].dot(kd.basis[l][j]);
        rep.max_ortho_dev = std::max(rep.max_ortho_dev, std::abs(ov - (k == l ? 1.0 : 0.0)));
      }
  if (!kd.hamiltonian) return rep;
  const int rows = kd.halt == HaltReason::Deflated ? d : d - 1;
  std::vector<std::vector<CVec>> dks(rows);
  for (int k = 0; k < rows; ++k) dks[k] = finite_diff_series_4th(kd.basis[k], kd.grid());
  for (int j = 1; j < n - 1; ++j) {
    const CMat h = kd.hamiltonian(kd.grid().node(j));
    for (int k = 0; k < rows; ++k) {
      const auto& dk = dks[k];
      CVec res = h * kd.basis[k][j] - kI * dk[j] - kd.a()(k, j) * kd.basis[k][j];
      if (k + 1 < d) res -= kd.b()(k + 1, j) * kd.basis[k + 1][j];
      if (k > 0) res -= kd.b()(k, j) * kd.basis[k - 1][j];
      rep.max_recurrence_residual = std::max(rep.max_recurrence_residual, res.norm());
    }
  }
  return rep;
}

}  // namespace krylov_td
