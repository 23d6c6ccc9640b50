#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "chain.hpp"
#include "lanczos_td.hpp"
#include "models.hpp"
#include "numcore.hpp"

namespace krylov_td {

// Closed-form coefficients sampled on a grid.
inline LanczosCoefficients oracle_coefficients(const ModelSpec& spec, BasisKind basis, const TimeGrid& grid) {
  const auto o = oracle_lanczos(spec, basis);
  LanczosCoefficients c;
  c.grid = grid;
  c.a = RMat::Zero(o.d, grid.size());
  c.b = RMat::Zero(o.d, grid.size());
  for (int k = 0; k < o.d; ++k)
    for (int j = 0; j < grid.size(); ++j) {
      c.a(k, j) = o.a(k, grid.node(j));
      if (k > 0) c.b(k, j) = o.b(k, grid.node(j));
    }
  return c;
}

struct Closure {
  double alpha = 0.0;
  double gamma = 0.0;
  double residual = 0.0;
};

struct AlgebraTriple {
  CMat L_tilde;
  CMat J_tilde;
  CMat K_op;
  std::optional<Closure> closure;
  double fit_residual = 0.0;  // stored also when closure fails
  bool exclude_last = false;
};

inline CMat complexity_operator(int d) {
  CMat K = CMat::Zero(d, d);
  for (int k = 0; k < d; ++k) K(k, k) = k;
  return K;
}

// tilde_b on the lower diagonal of L; J = -i sum (b|k><k-1| - b*|k-1><k|).
inline AlgebraTriple triple_from_offdiag(const CVec& tilde_b, bool exclude_last = false, double rel_tol = 1e-8) {
  const int d = static_cast<int>(tilde_b.size());
  AlgebraTriple t;
  t.exclude_last = exclude_last;
  t.L_tilde = CMat::Zero(d, d);
  t.J_tilde = CMat::Zero(d, d);
  t.K_op = complexity_operator(d);
  for (int k = 1; k < d; ++k) {
    t.L_tilde(k, k - 1) = tilde_b[k];
    t.L_tilde(k - 1, k) = std::conj(tilde_b[k]);
    t.J_tilde(k, k - 1) = -kI * tilde_b[k];
    t.J_tilde(k - 1, k) = kI * std::conj(tilde_b[k]);
  }
  const CMat C = t.L_tilde * t.J_tilde - t.J_tilde * t.L_tilde;
  const int n = exclude_last ? std::max(1, d - 1) : d;
  // i C = alpha K + gamma on the diagonal
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (int k = 0; k < n; ++k) {
    A(k, 0) = k;
    A(k, 1) = 1.0;
    y[k] = (kI * C(k, k)).real();
  }
  Eigen::Vector2d fit = Eigen::Vector2d::Zero();
  if (n >= 2)
    fit = A.colPivHouseholderQr().solve(y);
  else if (n == 1)
    fit[1] = y[0];
  const CMat block = C.topLeftCorner(n, n);
  CMat model = CMat::Zero(n, n);
  for (int k = 0; k < n; ++k) model(k, k) = -kI * (fit[0] * k + fit[1]);
  const double cnorm = block.cwiseAbs().maxCoeff();
  t.fit_residual = (block - model).cwiseAbs().maxCoeff();
  if (t.fit_residual <= rel_tol * cnorm || cnorm == 0.0) t.closure = Closure{fit[0], fit[1], t.fit_residual};
  return t;
}

inline AlgebraTriple build_triple(const TildeData& td, int j, bool exclude_last = false, double rel_tol = 1e-8) {
  if (j < 0 || j >= td.tilde_b.cols()) throw StructuralError("build_triple: node out of range");
  return triple_from_offdiag(td.tilde_b.col(j), exclude_last, rel_tol);
}

struct CommutatorResiduals {
  double r1 = 0.0;  // [K, L] - iJ
  double r2 = 0.0;  // [J, K] - iL
  std::optional<double> r3;  // [L, J] + i(alpha K + gamma)
};

inline CommutatorResiduals check_commutators(const AlgebraTriple& t) {
  CommutatorResiduals r;
  const auto& K = t.K_op;
  const auto& L = t.L_tilde;
  const auto& J = t.J_tilde;
  if (K.rows() == 0) return r;
  r.r1 = (K * L - L * K - kI * J).cwiseAbs().maxCoeff();
  r.r2 = (J * K - K * J - kI * L).cwiseAbs().maxCoeff();
  if (t.closure) {
    const int d = static_cast<int>(K.rows());
    const int n = t.exclude_last ? std::max(1, d - 1) : d;
    CMat C = L * J - J * L;
    for (int k = 0; k < d; ++k) C(k, k) += kI * (t.closure->alpha * k + t.closure->gamma);
    r.r3 = C.topLeftCorner(n, n).cwiseAbs().maxCoeff();
  }
  return r;
}

// delta_1 = delta_2 = ... within tol at every node.
inline bool uniform_delta(const TildeData& td, double tol = 1e-8) {
  for (int k = 2; k < td.delta.rows(); ++k)
    for (int j = 0; j < td.delta.cols(); ++j)
      if (std::abs(td.delta(k, j) - td.delta(1, j)) > tol) return false;
  return true;
}

struct HeisenbergResult {
  std::vector<double> times;
  std::vector<double> K;  // <0|K^H|0>
  std::vector<double> J;  // <0|J^H|0>
  std::vector<double> L;  // <0|L^H|0>
  std::vector<Eigen::Matrix4d> coeffs;  // rows L^H, J^H, K^H, 1 over {L(0), J(0), K, 1}
  double max_jk_residual = 0.0;  // |J^H - FD d/dt K^H| at interior nodes
};

// theta = omega t, phi = 0, constant h: alpha = -omega^2, gamma = S omega^2, b'/b = 0, delta' = h.
inline HeisenbergResult heisenberg_evolve(double S, double h, double omega, const TimeGrid& grid) {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  const double alpha = -omega * omega, gamma = S * omega * omega, bdot_b = 0.0, delta_dot = h;
  A << bdot_b, delta_dot, 0, 0,
      -delta_dot, bdot_b, alpha, gamma,
      0, 1, 0, 0,
      0, 0, 0, 0;
  const Eigen::Matrix4d step = (A * grid.dt()).exp();
  HeisenbergResult res;
  Eigen::Matrix4d X = Eigen::Matrix4d::Identity();
  for (int j = 0; j < grid.size(); ++j) {
    if (j > 0) X = step * X;
    res.times.push_back(grid.node(j));
    res.coeffs.push_back(X);
    // <0|L(0)|0> = <0|J(0)|0> = <0|K|0> = 0
    res.L.push_back(X(0, 3));
    res.J.push_back(X(1, 3));
    res.K.push_back(X(2, 3));
  }
  std::vector<Eigen::Vector4d> krow(grid.size());
  for (int j = 0; j < grid.size(); ++j) krow[j] = res.coeffs[j].row(2).transpose();
  const auto dk = finite_diff_series(krow, grid);
  for (int j = 1; j + 1 < grid.size(); ++j)
    res.max_jk_residual =
        std::max(res.max_jk_residual, (res.coeffs[j].row(1).transpose() - dk[j]).cwiseAbs().maxCoeff());
  return res;
}

// <0|U^dag K U|0> with U generated by L~(t) (midpoint average of neighbouring nodes).
inline std::vector<double> heisenberg_direct(const TildeData& td, const TimeGrid& grid) {
  const int d = static_cast<int>(td.tilde_b.rows());
  CVec phi = CVec::Zero(d);
  phi[0] = 1.0;
  std::vector<double> K(grid.size(), 0.0);
  for (int j = 0; j < grid.size(); ++j) {
    if (j > 0) {
      ComplexTridiag L;
      L.offdiag = CVec(std::max(0, d - 1));
      for (int k = 1; k < d; ++k) L.offdiag[k - 1] = 0.5 * (td.tilde_b(k, j - 1) + td.tilde_b(k, j));
      phi = tridiag_expm_apply(L, grid.dt(), phi);
    }
    for (int k = 0; k < d; ++k) K[j] += k * std::norm(phi[k]);
  }
  return K;
}

struct OperatorQsl {
  std::vector<double> times;
  std::vector<double> lhs;         // numerical arccos of the normalized trace overlap
  std::vector<double> lhs_closed;  // 2 asin(omega |sin(q t / 2)| / q), q = sqrt(h^2 + omega^2)
  std::vector<double> rhs;         // int sqrt(Tr J^2 / Tr K^2)
  double min_gap = 0.0;            // min over t > 0 of rhs - lhs_closed
  double max_violation = 0.0;      // max over t of lhs - rhs
};

inline double spin_qsl_lhs_closed(double h, double omega, double t) {
  const double q = std::sqrt(h * h + omega * omega);
  if (q == 0.0) return 0.0;
  return 2.0 * std::asin(std::min(1.0, omega * std::abs(std::sin(0.5 * q * t)) / q));
}

inline OperatorQsl operator_qsl(int two_s, double h, double omega, const TimeGrid& grid) {
  ModelSpec spec;
  SpinParams p;
  p.two_s = two_s;
  p.h = Protocol::constant(h);
  p.theta = Protocol::linear(0.0, omega);
  spec.params = p;
  spec.initial_basis = BasisKind::Instantaneous;
  const auto td = phase_transform(oracle_coefficients(spec, BasisKind::Instantaneous, grid));
  const int d = two_s + 1;
  CMat Kt = complexity_operator(d);
  Kt -= CMat::Identity(d, d) * (Kt.trace() / double(d));
  const double k2 = (Kt * Kt).trace().real();

  OperatorQsl q;
  std::vector<double> speed(grid.size());
  CMat U = CMat::Identity(d, d);
  for (int j = 0; j < grid.size(); ++j) {
    const auto tr = triple_from_offdiag(td.tilde_b.col(j));
    speed[j] = std::sqrt((tr.J_tilde * tr.J_tilde).trace().real() / k2);
    if (j > 0) {
      const CVec mid = 0.5 * (td.tilde_b.col(j - 1) + td.tilde_b.col(j));
      U = hermitian_expm(triple_from_offdiag(mid).L_tilde, grid.dt()) * U;
    }
    const double ov = (Kt * U.adjoint() * Kt * U).trace().real() / k2;
    q.times.push_back(grid.node(j));
    q.lhs.push_back(std::acos(std::clamp(ov, -1.0, 1.0)));
    q.lhs_closed.push_back(spin_qsl_lhs_closed(h, omega, grid.node(j)));
  }
  q.rhs = cumulative_integral(speed, grid);
  q.min_gap = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.size(); ++j) {
    if (grid.node(j) > 0.0) q.min_gap = std::min(q.min_gap, q.rhs[j] - q.lhs_closed[j]);
    q.max_violation = std::max(q.max_violation, q.lhs[j] - q.rhs[j]);
  }
  return q;
}

}  // namespace krylov_td
