#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "models.hpp"
#include "numcore.hpp"

namespace krylov_td {

// Step unitaries U^k (k = 0..n_steps-1) and per-step seeds K_0^k (k = 0..n_steps).
struct UnitaryStepModel {
  int dim = 0;
  int n_steps = 0;
  std::function<void(int, CVec&)> apply;
  std::function<CVec(int)> seed;
  std::function<double(int)> time;
  CVec initial_state;

  CMat unitary(int k) const {
    CMat u(dim, dim);
    for (int c = 0; c < dim; ++c) {
      CVec e = CVec::Zero(dim);
      e[c] = 1.0;
      apply(k, e);
      u.col(c) = e;
    }
    return u;
  }
};

// Per-mode product form; the seed is the product of per-mode eigenvectors connected to |0>.
inline UnitaryStepModel ising_step_model(const IsingParams& p, BasisKind basis = BasisKind::Instantaneous) {
  ModelSpec spec;
  spec.params = p;
  validate_spec(spec);
  const int L = p.n_modes();
  UnitaryStepModel m;
  m.dim = 1 << L;
  m.n_steps = p.m_steps();
  m.apply = [p, L](int k, CVec& x) {
    const auto modes = ising_modes(p, k);
    for (int q = 0; q < L; ++q) apply_mode_gate(x, ising_mode_unitary(modes[q], p.dt), q, L);
  };
  const int dim = m.dim;
  if (basis == BasisKind::Instantaneous) {
    m.seed = [p, L, dim](int k) {
      const auto modes = ising_modes(p, k);
      CVec x = CVec::Zero(dim);
      x[0] = 1.0;
      for (int q = 0; q < L; ++q) {
        const Eigen::Vector2d s = ising_mode_seed(modes[q]);
        CMat g(2, 2);
        g << s[0], -s[1], s[1], s[0];  // rotation taking |0> to s
        apply_mode_gate(x, g, q, L);
      }
      return x;
    };
  } else {
    m.seed = [dim](int) {
      CVec x = CVec::Zero(dim);
      x[0] = 1.0;
      return x;
    };
  }
  m.time = [p](int k) { return p.time_of_step(k); };
  m.initial_state = m.seed(0);
  return m;
}

// Midpoint exponential over [t_k, t_{k+1}] for continuous models.
inline UnitaryStepModel continuous_step_model(const ModelSpec& spec, const TimeGrid& grid) {
  validate_spec(spec);
  auto ham = make_hamiltonian(spec);
  auto cache = std::make_shared<std::vector<CMat>>(grid.n_steps());
  UnitaryStepModel m;
  m.dim = hilbert_dim(spec);
  m.n_steps = grid.n_steps();
  m.apply = [ham, grid, cache](int k, CVec& x) {
    auto& u = (*cache)[k];
    if (u.size() == 0) u = hermitian_expm(ham(grid.midpoint(k)), grid.dt());
    x = u * x;
  };
  const CVec psi0 = initial_state(spec);
  if (spec.initial_basis == BasisKind::FixedInitialState) {
    m.seed = [psi0](int) { return psi0; };
  } else {
    auto frame = std::make_shared<std::vector<EigframeSample>>(instantaneous_frame(spec, grid));
    Eigen::Index level;
    ((*frame)[0].eigvecs.adjoint() * psi0).cwiseAbs().maxCoeff(&level);
    m.seed = [frame, level](int k) -> CVec { return (*frame)[k].eigvecs.col(level); };
  }
  m.time = [grid](int k) { return grid.node(k); };
  m.initial_state = m.seed(0);
  return m;
}

inline UnitaryStepModel matrix_step_model(std::vector<CMat> unitaries, std::vector<CVec> seeds, CVec psi0) {
  if (seeds.size() != unitaries.size() + 1) throw StructuralError("matrix_step_model: need one more seed than unitaries");
  UnitaryStepModel m;
  m.dim = static_cast<int>(psi0.size());
  m.n_steps = static_cast<int>(unitaries.size());
  auto us = std::make_shared<std::vector<CMat>>(std::move(unitaries));
  auto ss = std::make_shared<std::vector<CVec>>(std::move(seeds));
  m.apply = [us](int k, CVec& x) { x = (*us)[k] * x; };
  m.seed = [ss](int k) { return (*ss)[k]; };
  m.time = [](int k) { return static_cast<double>(k); };
  m.initial_state = std::move(psi0);
  return m;
}

enum class ArnoldiMode { Iteration, FullOrthogonalization };

struct ArnoldiOptions {
  int max_krylov = 0;  // 0: Hilbert dimension
  double saturation_tol = kDeflationTol;
  bool keep_bases = false;
  bool keep_hessenberg = false;
};

struct ArnoldiStep {
  std::vector<Complex> z;  // z_n^{k-1}: coefficients that produced this step (empty at k = 0)
  CVec phi;                // <K_n^k, psi^k>
  std::vector<CVec> basis; // kept on request
  CMat hessenberg;         // <K_m^k | U^{k-1} K_n^{k-1}>, kept on request
};

struct ArnoldiRecord {
  std::vector<ArnoldiStep> steps;
  std::vector<CVec> current_basis;
  CVec psi;
  ArnoldiMode mode = ArnoldiMode::Iteration;
  ArnoldiOptions options;
};

inline ArnoldiRecord start_record(const UnitaryStepModel& model, ArnoldiMode mode, const ArnoldiOptions& opt = {}) {
  ArnoldiRecord r;
  r.mode = mode;
  r.options = opt;
  r.psi = model.initial_state;
  const CVec k0 = model.seed(0);
  if (std::abs(k0.norm() - 1.0) > 1e-10) throw NumericalError("arnoldi: seed K_0^0 not normalized");
  r.current_basis = {k0};
  ArnoldiStep s;
  s.phi = CVec::Constant(1, k0.dot(r.psi));
  if (opt.keep_bases) s.basis = r.current_basis;
  r.steps.push_back(std::move(s));
  return r;
}

namespace detail {

inline void finish_step(const UnitaryStepModel& model, ArnoldiRecord& rec, int k, std::vector<CVec> next,
                        std::vector<Complex> z) {
  ArnoldiStep s;
  s.z = std::move(z);
  s.phi.resize(static_cast<Eigen::Index>(next.size()));
  for (std::size_t n = 0; n < next.size(); ++n) s.phi[n] = next[n].dot(rec.psi);
  if (rec.options.keep_hessenberg) {
    s.hessenberg = CMat::Zero(static_cast<Eigen::Index>(next.size()), static_cast<Eigen::Index>(rec.current_basis.size()));
    for (std::size_t c = 0; c < rec.current_basis.size(); ++c) {
      CVec u = rec.current_basis[c];
      model.apply(k, u);
      for (std::size_t m = 0; m < next.size(); ++m) s.hessenberg(m, c) = next[m].dot(u);
    }
  }
  if (rec.options.keep_bases) s.basis = next;
  rec.current_basis = std::move(next);
  rec.steps.push_back(std::move(s));
}

}  // namespace detail

// One step of the z-iteration: K_{n+1} = (U K_n - f_n z_n)/sqrt(1-|z_n|^2), f_{n+1} = -f_n sqrt(1-|z_n|^2) + K_{n+1} z_n^*.
inline void arnoldi_step(const UnitaryStepModel& model, ArnoldiRecord& rec, int k) {
  if (k + 1 != static_cast<int>(rec.steps.size())) throw StructuralError("arnoldi_step: record not valid through step k");
  const int cap = rec.options.max_krylov > 0 ? std::min(rec.options.max_krylov, model.dim) : model.dim;
  CVec f = model.seed(k + 1);
  std::vector<CVec> next{f};
  std::vector<Complex> z;
  for (std::size_t n = 0; n < rec.current_basis.size(); ++n) {
    CVec u = rec.current_basis[n];
    model.apply(k, u);
    const Complex zn = f.dot(u);
    const double s2 = 1.0 - std::norm(zn);
    if (s2 < -1e-12)
      throw NumericalError("arnoldi_step: |z| > 1 at (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    z.push_back(zn);
    if (static_cast<int>(next.size()) >= cap) break;
    // s = |U K_n - f z| (= sqrt(1 - |z|^2))
    CVec r = u - f * zn;
    const double s = r.norm();
    if (s <= rec.options.saturation_tol) break;
    CVec kn = r / s;
    f = -f * s + kn * std::conj(zn);
    f /= f.norm();
    next.push_back(std::move(kn));
  }
  model.apply(k, rec.psi);
  detail::finish_step(model, rec, k, std::move(next), std::move(z));
}

// K_n^{k+1} from U^k K_{n-1}^k projected against K_0^{k+1}..K_{n-1}^{k+1} (two passes).
inline void full_orthogonalization_step(const UnitaryStepModel& model, ArnoldiRecord& rec, int k) {
  if (k + 1 != static_cast<int>(rec.steps.size()))
    throw StructuralError("full_orthogonalization_step: record not valid through step k");
  const int cap = rec.options.max_krylov > 0 ? std::min(rec.options.max_krylov, model.dim) : model.dim;
  CVec f = model.seed(k + 1);
  std::vector<CVec> next{f};
  std::vector<Complex> z;
  for (std::size_t n = 0; n < rec.current_basis.size(); ++n) {
    CVec u = rec.current_basis[n];
    model.apply(k, u);
    const Complex zn = f.dot(u);
    z.push_back(zn);
    if (static_cast<int>(next.size()) >= cap) break;
    CVec r = project_out(u, next);
    const double s = r.norm();
    if (s <= rec.options.saturation_tol) break;
    CVec kn = r / s;
    f = -f * std::sqrt(std::max(0.0, 1.0 - std::norm(zn))) + kn * std::conj(zn);
    const double fn = f.norm();
    if (fn > 0) f /= fn;
    next.push_back(std::move(kn));
  }
  model.apply(k, rec.psi);
  detail::finish_step(model, rec, k, std::move(next), std::move(z));
}

// Columns u_l = v_{l-1} z_l + |l+1> s_l, v_l = -v_{l-1} s_l + |l+1> z_l^*, v_{-1} = |0>.
// z of length d-1: last column v_{d-2}; length d: last column v_{d-2} z_{d-1}.
inline CMat hessenberg_from_z(const std::vector<Complex>& z, int d) {
  if (d < 1) throw StructuralError("hessenberg_from_z: d must be >= 1");
  const int len = static_cast<int>(z.size());
  if (len != d - 1 && len != d) throw StructuralError("hessenberg_from_z: list length must be d-1 or d");
  for (const auto& x : z)
    if (std::abs(x) > 1.0 + 1e-12) throw NumericalError("hessenberg_from_z: |z| > 1");
  if (len == d && std::abs(std::abs(z[d - 1]) - 1.0) > 1e-10)
    throw StructuralError("hessenberg_from_z: final coefficient of a length-d list must have unit modulus");
  CMat U = CMat::Zero(d, d);
  CVec v = CVec::Zero(d);
  v[0] = 1.0;
  for (int l = 0; l < d - 1; ++l) {
    const double s = std::sqrt(std::max(0.0, 1.0 - std::norm(z[l])));
    U.col(l) = v * z[l];
    U(l + 1, l) += s;
    CVec nv = -v * s;
    nv[l + 1] += std::conj(z[l]);
    v = nv;
  }
  U.col(d - 1) = len == d ? CVec(v * z[d - 1]) : v;
  return U;
}

struct DiscreteResult {
  ArnoldiRecord record;
  std::vector<double> K;
  std::vector<double> times;
  std::vector<std::vector<double>> abs_z;  // [k][n], k = 0..n_steps-1
};

inline DiscreteResult run_discrete_evolution(const UnitaryStepModel& model, int m_steps, ArnoldiMode mode,
                                             const ArnoldiOptions& opt = {}) {
  if (m_steps < 0 || m_steps > model.n_steps) throw ConfigError("run_discrete_evolution: step count out of range");
  DiscreteResult res;
  res.record = start_record(model, mode, opt);
  auto complexity = [](const CVec& phi) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < phi.size(); ++n) acc += n * std::norm(phi[n]);
    return acc;
  };
  res.K.push_back(complexity(res.record.steps[0].phi));
  res.times.push_back(model.time(0));
  for (int k = 0; k < m_steps; ++k) {
    if (mode == ArnoldiMode::Iteration)
      arnoldi_step(model, res.record, k);
    else
      full_orthogonalization_step(model, res.record, k);
    const auto& st = res.record.steps.back();
    res.K.push_back(complexity(st.phi));
    res.times.push_back(model.time(k + 1));
    std::vector<double> az(st.z.size());
    for (std::size_t n = 0; n < az.size(); ++n) az[n] = std::abs(st.z[n]);
    res.abs_z.push_back(std::move(az));
  }
  return res;
}

}  // namespace krylov_td
