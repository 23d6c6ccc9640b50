#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "models.hpp"
#include "numcore.hpp"

namespace krylov_td {

// f(mu, m) stored at mu * (2M+1) + (m + M).
struct SambeLayout {
  int n_h = 0;
  int M = 0;
  int width() const { return 2 * M + 1; }
  int size() const { return n_h * width(); }
  int index(int mu, int m) const { return mu * width() + (m + M); }
};

struct FloquetLanczosData {
  SambeLayout layout;
  double omega = 0.0;
  std::vector<double> a;
  std::vector<double> b;  // b[0] = 0
  std::vector<CVec> bases;
  int d_effective = 0;
  int certified_rows = 0;  // rows with edge population below the threshold
  std::optional<std::string> truncation_warning;
};

inline const LmgParams& lmg_params(const ModelSpec& spec) {
  if (spec.kind() != ModelKind::Lmg) throw ConfigError("sambe: model must be LMG");
  return spec.get<LmgParams>();
}

// (H - M Omega) with hard truncation |m| <= M.
inline CVec sambe_apply(const ModelSpec& spec, const SambeLayout& L, const CVec& v) {
  const auto& p = lmg_params(spec);
  const int N = p.n_spins;
  if (L.n_h != N + 1 || v.size() != L.size()) throw StructuralError("sambe_apply: layout does not match model");
  const bool sin_drive = p.drive == LmgDrive::Sin;
  // sin: -(ih/2)[f(m+1) - f(m-1)], cos: -(h/2)[f(m+1) + f(m-1)]
  const Complex c_up = sin_drive ? Complex(0.0, -0.5 * p.h) : Complex(-0.5 * p.h, 0.0);
  const Complex c_dn = sin_drive ? Complex(0.0, 0.5 * p.h) : Complex(-0.5 * p.h, 0.0);
  CVec out = CVec::Zero(L.size());
  for (int mu = 0; mu <= N; ++mu) {
    const double x = 1.0 - 2.0 * mu / N;
    const double diag = -0.5 * N * p.j * x * x;
    const double w_lo = std::sqrt(double(mu) * (N + 1 - mu));
    const double w_hi = std::sqrt(double(mu + 1) * (N - mu));
    for (int m = -L.M; m <= L.M; ++m) {
      Complex acc = (diag - m * p.omega) * v[L.index(mu, m)];
      for (int nb = 0; nb < 2; ++nb) {
        const int mu2 = nb == 0 ? mu - 1 : mu + 1;
        if (mu2 < 0 || mu2 > N) continue;
        const double w = nb == 0 ? w_lo : w_hi;
        if (m + 1 <= L.M) acc += w * c_up * v[L.index(mu2, m + 1)];
        if (m - 1 >= -L.M) acc += w * c_dn * v[L.index(mu2, m - 1)];
      }
      out[L.index(mu, m)] = acc;
    }
  }
  return out;
}

inline double edge_population(const SambeLayout& L, const CVec& f, int layers = 2) {
  double acc = 0.0;
  for (int mu = 0; mu < L.n_h; ++mu)
    for (int m = -L.M; m <= L.M; ++m)
      if (std::abs(m) > L.M - layers) acc += std::norm(f[L.index(mu, m)]);
  return acc;
}

// M < 0 selects 2 + k_max; rows capped at 4N.
inline FloquetLanczosData sambe_lanczos(const ModelSpec& spec, int k_max, int M = -1, double edge_tol = 1e-6) {
  validate_spec(spec);
  const auto& p = lmg_params(spec);
  if (k_max < 0) throw ConfigError("sambe_lanczos: k_max must be >= 0");
  const int rows = k_max > 0 ? k_max : 4 * p.n_spins;  // 0: default 4N
  FloquetLanczosData out;
  out.layout = SambeLayout{p.n_spins + 1, M < 0 ? 2 + rows : M};
  out.omega = p.omega;
  if (out.layout.M < 1) throw ConfigError("sambe_lanczos: Fourier truncation must be >= 1");
  const auto& L = out.layout;

  CVec k0 = CVec::Zero(L.size());
  k0[L.index(0, 0)] = 1.0;
  out.bases.push_back(k0);
  out.b.push_back(0.0);
  bool certified = true;
  for (int k = 0;; ++k) {
    const CVec& cur = out.bases[k];
    if (certified && edge_population(L, cur) < edge_tol)
      out.certified_rows = k + 1;
    else
      certified = false;
    CVec w = sambe_apply(spec, L, cur);
    const double scale = w.norm();
    out.a.push_back(cur.dot(w).real());
    if (k + 1 >= rows) break;
    CVec r = project_out(w, out.bases);
    const double bn = r.norm();
    if (bn <= kDeflationTol * std::max(scale, 1.0)) break;
    out.b.push_back(bn);
    out.bases.push_back(r / bn);
  }
  out.d_effective = static_cast<int>(out.a.size());
  if (out.certified_rows < out.d_effective)
    out.truncation_warning = "Fourier truncation M=" + std::to_string(L.M) + " reached at row " +
                             std::to_string(out.certified_rows);
  return out;
}

struct Populations {
  std::vector<double> hilbert;  // over mu
  std::vector<double> fourier;  // over m = -M..M
};

inline Populations populations(const FloquetLanczosData& data, int k) {
  if (k < 0 || k >= data.d_effective) throw StructuralError("populations: row out of range");
  const auto& L = data.layout;
  Populations pop;
  pop.hilbert.assign(L.n_h, 0.0);
  pop.fourier.assign(L.width(), 0.0);
  for (int mu = 0; mu < L.n_h; ++mu)
    for (int m = -L.M; m <= L.M; ++m) {
      const double x = std::norm(data.bases[k][L.index(mu, m)]);
      pop.hilbert[mu] += x;
      pop.fourier[m + L.M] += x;
    }
  return pop;
}

inline double fourier_weight_outside(const Populations& pop, int m_window) {
  const int M = (static_cast<int>(pop.fourier.size()) - 1) / 2;
  double acc = 0.0;
  for (int m = -M; m <= M; ++m)
    if (std::abs(m) > m_window) acc += pop.fourier[m + M];
  return acc;
}

inline HermTridiag floquet_generator(const FloquetLanczosData& data) {
  HermTridiag T;
  const int d = data.d_effective;
  T.diag = Eigen::Map<const RVec>(data.a.data(), d);
  T.offdiag = RVec(std::max(0, d - 1));
  for (int k = 1; k < d; ++k) T.offdiag[k - 1] = data.b[k];
  return T;
}

// Phi_k(s) = <k| exp(-i s L) |0>
inline CVec chain_amplitudes(const FloquetLanczosData& data, double s) {
  CVec e0 = CVec::Zero(data.d_effective);
  e0[0] = 1.0;
  return tridiag_expm_apply(floquet_generator(data), s, e0);
}

// sum_k |K_k(t)> Phi_k with |K_k(t)> = sum_m exp(-i m Omega t) f_k(., m)
inline CVec floquet_reconstruct(const FloquetLanczosData& data, const CVec& phases, double t) {
  if (phases.size() > data.d_effective) throw StructuralError("floquet_reconstruct: too many chain amplitudes");
  const auto& L = data.layout;
  CVec psi = CVec::Zero(L.n_h);
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    for (int mu = 0; mu < L.n_h; ++mu)
      for (int m = -L.M; m <= L.M; ++m)
        psi[mu] += phases[k] * std::exp(-kI * (m * data.omega * t)) * data.bases[k][L.index(mu, m)];
  return psi;
}

struct FloquetCheck {
  std::vector<double> times;
  std::vector<double> deviation;
  std::vector<double> norm;
  double max_deviation = 0.0;
};

// Reconstruction at s = t against midpoint-exponential integration of H(t) over [0, t_end].
inline FloquetCheck floquet_reconstruction_check(const ModelSpec& spec, const FloquetLanczosData& data, double t_end,
                                                 int n_steps, int samples = 8) {
  const auto ham = make_hamiltonian(spec);
  const TimeGrid grid(0.0, t_end, n_steps);
  FloquetCheck chk;
  CVec psi = initial_state(spec);
  const int stride = std::max(1, n_steps / samples);
  for (int j = 0; j <= n_steps; ++j) {
    if (j > 0) psi = hermitian_expm_apply(ham(grid.midpoint(j - 1)), grid.dt(), psi);
    if (j % stride != 0 && j != n_steps) continue;
    const double t = grid.node(j);
    const CVec rec = floquet_reconstruct(data, chain_amplitudes(data, t), t);
    chk.times.push_back(t);
    chk.deviation.push_back((rec - psi).cwiseAbs().maxCoeff());
    chk.norm.push_back(rec.norm());
    chk.max_deviation = std::max(chk.max_deviation, chk.deviation.back());
  }
  return chk;
}

struct StaticLanczos {
  std::vector<double> a;
  std::vector<double> b;  // b[0] = 0
};

// Drive factor frozen at unit amplitude.
inline StaticLanczos static_limit_lanczos(const ModelSpec& spec, int k_max) {
  const auto& p = lmg_params(spec);
  const auto ops = spin_operators(p.n_spins);
  const CMat H = -(2.0 * p.j / p.n_spins) * ops.sz * ops.sz + 2.0 * p.h * ops.sx;
  StaticLanczos out;
  std::vector<CVec> basis{CVec::Unit(p.n_spins + 1, 0)};
  out.b.push_back(0.0);
  const int rows = std::min<int>(k_max, p.n_spins + 1);
  for (int k = 0;; ++k) {
    const CVec w = H * basis[k];
    out.a.push_back(basis[k].dot(w).real());
    if (k + 1 >= rows) break;
    CVec r = project_out(w, basis);
    const double bn = r.norm();
    if (bn <= kDeflationTol * std::max(w.norm(), 1.0)) break;
    out.b.push_back(bn);
    basis.push_back(r / bn);
  }
  return out;
}

}  // namespace krylov_td
