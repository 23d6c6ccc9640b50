#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "lanczos_td.hpp"
#include "numcore.hpp"

namespace krylov_td {

struct ChainState {
  TimeGrid grid;
  CMat phi;  // (k, j)
  int d() const { return static_cast<int>(phi.rows()); }
};

inline HermTridiag chain_generator_at(const LanczosCoefficients& c, int j) {
  const int d = c.dim();
  HermTridiag L;
  L.diag = c.a.col(j);
  L.offdiag = d > 1 ? RVec(c.b.col(j).tail(d - 1)) : RVec();
  return L;
}

// Midpoint generator with coefficients averaged between neighbouring nodes.
inline ChainState propagate_chain(const LanczosCoefficients& c) {
  const int d = c.dim(), n = c.grid.size();
  ChainState cs;
  cs.grid = c.grid;
  cs.phi = CMat::Zero(d, n);
  cs.phi(0, 0) = 1.0;
  CVec state = cs.phi.col(0);
  for (int j = 0; j + 1 < n; ++j) {
    HermTridiag L;
    L.diag = 0.5 * (c.a.col(j) + c.a.col(j + 1));
    L.offdiag = d > 1 ? RVec(0.5 * (c.b.col(j) + c.b.col(j + 1)).tail(d - 1)) : RVec();
    state = tridiag_expm_apply(L, c.grid.dt(), state);
    cs.phi.col(j + 1) = state;
  }
  return cs;
}

inline ChainState propagate_chain(const KrylovData& kd) { return propagate_chain(kd.coeffs); }

struct SpreadReport {
  std::vector<double> K;
  RMat theta;  // (n, j)
  RMat P;      // (n, j)
  std::vector<double> deltaL;
  std::vector<double> deltaK;
  RMat pop;   // |phi_n|^2
  RMat tail;  // sum_{k>n} |phi_k|^2 = sin^2 Theta_n
};

inline SpreadReport spread_report(const ChainState& cs, const LanczosCoefficients& c) {
  const int d = cs.d(), n = cs.grid.size();
  if (c.dim() != d) throw StructuralError("spread_report: chain and coefficient dimensions differ");
  SpreadReport sr;
  sr.K.assign(n, 0.0);
  sr.deltaL.assign(n, 0.0);
  sr.deltaK.assign(n, 0.0);
  sr.theta = RMat::Zero(d, n);
  sr.P = RMat::Zero(d, n);
  sr.pop = RMat::Zero(d, n);
  sr.tail = RMat::Zero(d, n);
  for (int j = 0; j < n; ++j) {
    const CVec phi = cs.phi.col(j);
    RVec p = phi.cwiseAbs2();
    double k1 = 0.0, k2 = 0.0;
    for (int k = 0; k < d; ++k) {
      k1 += k * p[k];
      k2 += double(k) * k * p[k];
    }
    sr.K[j] = k1;
    sr.deltaK[j] = std::sqrt(std::max(0.0, k2 - k1 * k1));
    // tail sums taken directly so small angles keep relative accuracy
    RVec tail(d);
    double acc = 0.0;
    for (int k = d - 1; k >= 0; --k) {
      tail[k] = acc;
      acc += p[k];
    }
    double head = 0.0;
    for (int k = 0; k < d; ++k) {
      head += p[k];
      sr.P(k, j) = head;
      sr.pop(k, j) = p[k];
      sr.tail(k, j) = tail[k];
      sr.theta(k, j) = std::atan2(std::sqrt(tail[k]), std::sqrt(head));
    }
    const CVec lphi = chain_generator_at(c, j).dense() * phi;
    const double mean = phi.dot(lphi).real();
    sr.deltaL[j] = std::sqrt(std::max(0.0, lphi.squaredNorm() - mean * mean));
  }
  return sr;
}

inline SpreadReport spread_report(const ChainState& cs, const KrylovData& kd) { return spread_report(cs, kd.coeffs); }

// 2 dL dK - |dK/dt| per node.
inline std::vector<double> check_dispersion_bound(const SpreadReport& sr, const TimeGrid& grid) {
  const auto dk = finite_diff_series(sr.K, grid);
  std::vector<double> m(sr.K.size());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = 2.0 * sr.deltaL[j] * sr.deltaK[j] - std::abs(dk[j]);
  return m;
}

struct QslMargins {
  RMat eq7;        // (n, j), n <= d-2: rhs - |dTheta_n/dt|
  RMat eq8_sin;    // b_{n+1} sin Theta_{n-1} - |dTheta_n/dt|
  RMat eq8_theta;  // b_{n+1} Theta_{n-1} - |dTheta_n/dt|
  RMat eq7_rhs;
  RMat dtheta;     // |dTheta_n/dt|
};

namespace detail {

// sqrt(num/den) with 0/0 -> 1 and clamping to [0, 1].
inline double ratio_factor(double num, double den) {
  if (num < 1e-14 && den < 1e-14) return 1.0;
  if (den <= 0.0) return 1.0;
  return std::sqrt(std::clamp(num / den, 0.0, 1.0));
}

}  // namespace detail

// Theta_{-1} = pi/2 (cos^2 Theta_{-1} = 0) at n = 0.
inline QslMargins check_qsl(const SpreadReport& sr, const LanczosCoefficients& c) {
  const int d = c.dim(), n = c.grid.size();
  const int rows = std::max(0, d - 1);
  QslMargins q;
  q.eq7 = RMat::Zero(rows, n);
  q.eq8_sin = RMat::Zero(rows, n);
  q.eq8_theta = RMat::Zero(rows, n);
  q.eq7_rhs = RMat::Zero(rows, n);
  q.dtheta = RMat::Zero(rows, n);
  for (int r = 0; r < rows; ++r) {
    const auto dth = finite_diff_series(row_as_vector(sr.theta, r), c.grid);
    for (int j = 0; j < n; ++j) {
      const double b = c.b(r + 1, j);
      const double pop_n = sr.pop(r, j), pop_next = sr.pop(r + 1, j);
      // |phi_n|^2 = cos^2 T_n - cos^2 T_{n-1}, |phi_{n+1}|^2 = sin^2 T_n - sin^2 T_{n+1}
      const double f_cos = detail::ratio_factor(pop_n, sr.P(r, j));
      const double f_sin = detail::ratio_factor(pop_next, sr.tail(r, j));
      const double prev = r == 0 ? 0.5 * kPi : sr.theta(r - 1, j);
      const double dt = std::abs(dth[j]);
      q.dtheta(r, j) = dt;
      q.eq7_rhs(r, j) = b * f_sin * f_cos;
      q.eq7(r, j) = q.eq7_rhs(r, j) - dt;
      q.eq8_sin(r, j) = b * std::sin(prev) - dt;
      q.eq8_theta(r, j) = b * prev - dt;
    }
  }
  return q;
}

inline QslMargins check_qsl(const SpreadReport& sr, const KrylovData& kd) { return check_qsl(sr, kd.coeffs); }

struct Crossing {
  int node;
  double time;
};

struct Envelope {
  RMat envelope;  // (n, j) = I_{n+1}
  std::vector<std::optional<Crossing>> crossing;
};

inline Envelope lr_envelope(const LanczosCoefficients& c, double theta_th) {
  if (!(theta_th > 0.0)) throw ConfigError("lr_envelope: theta_th must be > 0");
  const int d = c.dim(), n = c.grid.size();
  const int rows = std::max(0, d - 1);
  Envelope env;
  env.envelope = RMat::Zero(rows, n);
  env.crossing.assign(rows, std::nullopt);
  std::vector<double> prev(n, 1.0);
  for (int r = 0; r < rows; ++r) {
    std::vector<double> f(n);
    for (int j = 0; j < n; ++j) f[j] = c.b(r + 1, j) * prev[j];
    prev = cumulative_integral(f, c.grid);
    for (int j = 0; j < n; ++j) env.envelope(r, j) = prev[j];
    for (int j = 0; j < n; ++j)
      if (prev[j] >= theta_th) {
        double t = c.grid.node(j);
        if (j > 0 && prev[j] > prev[j - 1])
          t = c.grid.node(j - 1) + (theta_th - prev[j - 1]) / (prev[j] - prev[j - 1]) * c.grid.dt();
        env.crossing[r] = Crossing{j, t};
        break;
      }
  }
  return env;
}

inline Envelope lr_envelope(const KrylovData& kd, double theta_th) { return lr_envelope(kd.coeffs, theta_th); }

struct ReconstructionReport {
  double max_deviation = 0.0;
  std::vector<double> deviation;
  bool complete = true;  // false when the Krylov space was capped
};

// Sum_k K_k phi_k against midpoint-exponential integration in the full space.
inline ReconstructionReport reconstruct_and_compare(const KrylovData& kd, const ChainState& cs, const ModelSpec& spec) {
  const int n = kd.grid().size(), d = kd.d();
  const auto ham = kd.hamiltonian ? kd.hamiltonian : make_hamiltonian(spec);
  ReconstructionReport rep;
  rep.complete = kd.halt == HaltReason::Deflated;
  rep.deviation.assign(n, 0.0);
  CVec psi = kd.basis[0][0];
  for (int j = 0; j < n; ++j) {
    if (j > 0) psi = hermitian_expm_apply(ham(kd.grid().midpoint(j - 1)), kd.grid().dt(), psi);
    CVec rec = CVec::Zero(psi.size());
    for (int k = 0; k < d; ++k) rec += kd.basis[k][j] * cs.phi(k, j);
    rep.deviation[j] = (rec - psi).norm();
    rep.max_deviation = std::max(rep.max_deviation, rep.deviation[j]);
  }
  return rep;
}

}  // namespace krylov_td
