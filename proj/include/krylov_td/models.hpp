#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "numcore.hpp"
#include "protocol.hpp"

namespace krylov_td {

enum class ModelKind { SingleSpin, OscillatorTranslate, OscillatorDilate, IsingFreeFermion, Lmg, Custom };
enum class BasisKind { FixedInitialState, Instantaneous };
enum class LmgDrive { Sin, Cos };

// h(t) n(t).S with n = (sin th cos ph, sin th sin ph, cos th); index i <-> m = S - i.
struct SpinParams {
  int two_s = 1;
  Protocol h = Protocol::constant(1.0);
  Protocol theta = Protocol::constant(0.0);
  Protocol phi = Protocol::constant(0.0);
  double spin() const { return 0.5 * two_s; }
};

struct TranslateParams {
  double mass = 1.0;
  double omega = 1.0;
  Protocol x0 = Protocol::constant(0.0);
  int n_max = 64;
};

// Fock basis fixed at omega(0).
struct DilateParams {
  double mass = 1.0;
  Protocol omega = Protocol::constant(1.0);
  int n_max = 64;
};

// Time t = -t_quench + k dt, k = 0..M, M = 2 t_quench / dt.
struct IsingParams {
  int n_sites = 12;
  double t_quench = 5.0;
  double dt = 0.1;
  double h = 1.0;
  int n_modes() const { return n_sites / 2; }
  int m_steps() const { return static_cast<int>(std::lround(2.0 * t_quench / dt)); }
  double time_of_step(int k) const { return -t_quench + k * dt; }
};

struct LmgParams {
  int n_spins = 40;
  double j = 1.0;
  double h = 2.0;
  double omega = 0.1;
  LmgDrive drive = LmgDrive::Sin;
};

struct CustomTerm {
  CMat matrix;
  Protocol coefficient = Protocol::constant(1.0);
};

struct CustomParams {
  std::vector<CustomTerm> terms;
  CVec initial_state;
};

struct ModelSpec {
  std::variant<SpinParams, TranslateParams, DilateParams, IsingParams, LmgParams, CustomParams> params;
  BasisKind initial_basis = BasisKind::FixedInitialState;

  ModelKind kind() const { return static_cast<ModelKind>(params.index()); }
  template <typename P>
  const P& get() const { return std::get<P>(params); }
};

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::SingleSpin: return "SingleSpin";
    case ModelKind::OscillatorTranslate: return "OscillatorTranslate";
    case ModelKind::OscillatorDilate: return "OscillatorDilate";
    case ModelKind::IsingFreeFermion: return "IsingFreeFermion";
    case ModelKind::Lmg: return "LMG";
    case ModelKind::Custom: return "Custom";
  }
  return "?";
}

// ---------------------------------------------------------------- operators

struct SpinOps {
  CMat sz, sp, sm, sx, sy;
};

inline SpinOps spin_operators(int two_s) {
  const int d = two_s + 1;
  const double s = 0.5 * two_s;
  SpinOps o;
  o.sz = CMat::Zero(d, d);
  o.sp = CMat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = s - i;
    o.sz(i, i) = m;
    if (i > 0) o.sp(i - 1, i) = std::sqrt((s - m) * (s + m + 1.0));
  }
  o.sm = o.sp.adjoint();
  o.sx = 0.5 * (o.sp + o.sm);
  o.sy = (o.sp - o.sm) / (2.0 * kI);
  return o;
}

inline CMat lowering_operator(int n_max) {
  CMat a = CMat::Zero(n_max, n_max);
  for (int i = 1; i < n_max; ++i) a(i - 1, i) = std::sqrt(static_cast<double>(i));
  return a;
}

inline const CMat& pauli_x() {
  static const CMat x = (CMat(2, 2) << 0, 1, 1, 0).finished();
  return x;
}
inline const CMat& pauli_z() {
  static const CMat z = (CMat(2, 2) << 1, 0, 0, -1).finished();
  return z;
}

// ---------------------------------------------------------------- Ising modes

struct IsingMode {
  double eps;
  double v;
};

inline double ising_momentum(int n_sites, int n) { return kPi * (2.0 * n - 1.0) / (2.0 * n_sites); }

// Continuous-time version; s = (t + t_Q)/(2 t_Q) plays the role of k/M.
inline std::vector<IsingMode> ising_modes_at(const IsingParams& p, double t) {
  const double s = (t + p.t_quench) / (2.0 * p.t_quench);
  std::vector<IsingMode> out(p.n_modes());
  for (int n = 1; n <= p.n_modes(); ++n) {
    const double pn = ising_momentum(p.n_sites, n);
    const double sh = std::sin(0.5 * pn);
    const double eps = 2.0 * p.h * std::sqrt((1.0 - 2.0 * s) * (1.0 - 2.0 * s) + 4.0 * (1.0 - s) * s * sh * sh);
    const double v = -p.h * p.h * std::sin(pn) / (p.t_quench * eps * eps);
    out[n - 1] = {eps, v};
  }
  return out;
}

inline std::vector<IsingMode> ising_modes(const IsingParams& p, int k) {
  return ising_modes_at(p, p.time_of_step(k));
}

inline double ising_min_gap(int n_sites, double h) { return 2.0 * h * std::sin(0.5 * ising_momentum(n_sites, 1)); }

// cos(h_n dt) - i (eps Z + v X)/h_n sin(h_n dt)
inline CMat ising_mode_unitary(const IsingMode& m, double dt) {
  const double hn = std::hypot(m.eps, m.v);
  const double c = std::cos(hn * dt), s = std::sin(hn * dt);
  CMat u(2, 2);
  u << Complex(c, -m.eps / hn * s), Complex(0.0, -m.v / hn * s), Complex(0.0, -m.v / hn * s),
      Complex(c, m.eps / hn * s);
  return u;
}

// Eigenvector of eps Z + v X connected to |0> (upper level for eps > 0).
inline Eigen::Vector2d ising_mode_seed(const IsingMode& m) {
  const double hn = std::hypot(m.eps, m.v);
  // half-angle form of the eigenvector with eigenvalue +hn
  const double c = std::sqrt(0.5 * (1.0 + m.eps / hn));
  const double s = std::sqrt(0.5 * (1.0 - m.eps / hn));
  return Eigen::Vector2d(c, m.v >= 0.0 ? s : -s);
}

// Applies a 2x2 gate on qubit q (q = 0 most significant) of an L-qubit register.
inline void apply_mode_gate(CVec& x, const CMat& g, int q, int n_qubits) {
  const Eigen::Index stride = Eigen::Index(1) << (n_qubits - 1 - q);
  const Eigen::Index dim = x.size();
  const Complex g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
  for (Eigen::Index base = 0; base < dim; base += 2 * stride)
    for (Eigen::Index i = base; i < base + stride; ++i) {
      const Complex x0 = x[i], x1 = x[i + stride];
      x[i] = g00 * x0 + g01 * x1;
      x[i + stride] = g10 * x0 + g11 * x1;
    }
}

// ---------------------------------------------------------------- dimension

inline int hilbert_dim(const ModelSpec& spec) {
  switch (spec.kind()) {
    case ModelKind::SingleSpin: return spec.get<SpinParams>().two_s + 1;
    case ModelKind::OscillatorTranslate: return spec.get<TranslateParams>().n_max;
    case ModelKind::OscillatorDilate: return spec.get<DilateParams>().n_max;
    case ModelKind::IsingFreeFermion: return 1 << spec.get<IsingParams>().n_modes();
    case ModelKind::Lmg: return spec.get<LmgParams>().n_spins + 1;
    case ModelKind::Custom: {
      const auto& c = spec.get<CustomParams>();
      return c.terms.empty() ? static_cast<int>(c.initial_state.size()) : static_cast<int>(c.terms[0].matrix.rows());
    }
  }
  throw ConfigError("unknown model kind");
}

inline void validate_spec(const ModelSpec& spec) {
  switch (spec.kind()) {
    case ModelKind::SingleSpin:
      if (spec.get<SpinParams>().two_s < 1) throw ConfigError("spin: 2S must be >= 1");
      break;
    case ModelKind::OscillatorTranslate: {
      const auto& p = spec.get<TranslateParams>();
      if (p.n_max < 2 || p.mass <= 0 || p.omega <= 0) throw ConfigError("oscillator: need n_max >= 2, m > 0, omega > 0");
      break;
    }
    case ModelKind::OscillatorDilate: {
      const auto& p = spec.get<DilateParams>();
      if (p.n_max < 2 || p.mass <= 0 || p.omega.value(0.0) <= 0) throw ConfigError("oscillator: need n_max >= 2, m > 0, omega(0) > 0");
      break;
    }
    case ModelKind::IsingFreeFermion: {
      const auto& p = spec.get<IsingParams>();
      if (p.n_sites < 2 || p.n_sites % 2) throw ConfigError("ising: N must be even and >= 2");
      if (p.t_quench <= 0 || p.dt <= 0 || p.h <= 0) throw ConfigError("ising: t_Q, dt, h must be positive");
      if (p.n_modes() > 20) throw ConfigError("ising: N/2 > 20 modes is beyond dense state storage");
      break;
    }
    case ModelKind::Lmg: {
      const auto& p = spec.get<LmgParams>();
      if (p.n_spins < 1 || p.j == 0.0 || p.omega <= 0) throw ConfigError("lmg: need N >= 1, J != 0, Omega > 0");
      break;
    }
    case ModelKind::Custom: {
      const auto& c = spec.get<CustomParams>();
      if (c.terms.empty()) throw ConfigError("custom: at least one term required");
      const auto d = c.terms[0].matrix.rows();
      if (d < 2) throw ConfigError("custom: Hilbert dimension must be >= 2");
      for (const auto& t : c.terms) {
        if (t.matrix.rows() != d || t.matrix.cols() != d) throw ConfigError("custom: term matrices must be square and equal size");
        if ((t.matrix - t.matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("custom: term matrices must be Hermitian");
      }
      if (c.initial_state.size() != d) throw ConfigError("custom: initial_state dimension mismatch");
      if (std::abs(c.initial_state.norm() - 1.0) > 1e-10) throw ConfigError("custom: initial_state must be normalized");
      break;
    }
  }
}

// ---------------------------------------------------------------- Hamiltonians

// Returns H(t) with the time-independent operators built once.
inline std::function<CMat(double)> make_hamiltonian(const ModelSpec& spec) {
  switch (spec.kind()) {
    case ModelKind::SingleSpin: {
      const auto p = spec.get<SpinParams>();
      const SpinOps o = spin_operators(p.two_s);
      return [p, o](double t) -> CMat {
        const double th = p.theta.value(t), ph = p.phi.value(t);
        return p.h.value(t) *
               (std::sin(th) * std::cos(ph) * o.sx + std::sin(th) * std::sin(ph) * o.sy + std::cos(th) * o.sz);
      };
    }
    case ModelKind::OscillatorTranslate: {
      const auto p = spec.get<TranslateParams>();
      const CMat a = lowering_operator(p.n_max);
      const CMat id = CMat::Identity(p.n_max, p.n_max);
      const CMat n_half = a.adjoint() * a + 0.5 * id;
      const CMat x = a + a.adjoint();
      const double g = std::sqrt(0.5 * p.mass * p.omega);
      return [p, id, n_half, x, g](double t) -> CMat {
        const double x0 = p.x0.value(t);
        return p.omega * n_half - g * p.omega * x0 * x + 0.5 * p.mass * p.omega * p.omega * x0 * x0 * id;
      };
    }
    case ModelKind::OscillatorDilate: {
      const auto p = spec.get<DilateParams>();
      const CMat a = lowering_operator(p.n_max);
      const CMat n_half = a.adjoint() * a + 0.5 * CMat::Identity(p.n_max, p.n_max);
      const CMat sq = a * a + a.adjoint() * a.adjoint();
      const double w0 = p.omega.value(0.0);
      return [p, n_half, sq, w0](double t) -> CMat {
        const double w = p.omega.value(t);
        return (w * w + w0 * w0) / (2.0 * w0) * n_half + (w * w - w0 * w0) / (4.0 * w0) * sq;
      };
    }
    case ModelKind::IsingFreeFermion: {
      const auto p = spec.get<IsingParams>();
      const int L = p.n_modes();
      if (L > 10) throw ConfigError("ising: dense Hamiltonian limited to N/2 <= 10 modes");
      return [p, L](double t) -> CMat {
        const int dim = 1 << L;
        const auto modes = ising_modes_at(p, t);
        CMat H = CMat::Zero(dim, dim);
        for (int q = 0; q < L; ++q) {
          const CMat local = modes[q].eps * pauli_z() + modes[q].v * pauli_x();
          for (int col = 0; col < dim; ++col) {
            CVec g = CVec::Zero(dim);
            g[col] = 1.0;
            apply_mode_gate(g, local, q, L);
            H.col(col) += g;
          }
        }
        return H;
      };
    }
    case ModelKind::Lmg: {
      const auto p = spec.get<LmgParams>();
      const SpinOps o = spin_operators(p.n_spins);
      const CMat base = -(2.0 * p.j / p.n_spins) * o.sz * o.sz;
      const CMat sx = o.sx;
      return [p, base, sx](double t) -> CMat {
        if (p.drive == LmgDrive::Sin) return base + 2.0 * p.h * std::sin(p.omega * t) * sx;
        return base - 2.0 * p.h * std::cos(p.omega * t) * sx;
      };
    }
    case ModelKind::Custom: {
      const auto c = spec.get<CustomParams>();
      return [c](double t) -> CMat {
        CMat H = CMat::Zero(c.terms[0].matrix.rows(), c.terms[0].matrix.cols());
        for (const auto& term : c.terms) H += term.coefficient.value(t) * term.matrix;
        return H;
      };
    }
  }
  throw ConfigError("unknown model kind");
}

inline CMat hamiltonian_at(const ModelSpec& spec, double t) { return make_hamiltonian(spec)(t); }

// |psi(0)>: spin |S>, oscillators |0>, Ising |0...0>, LMG mu = 0.
inline CVec initial_state(const ModelSpec& spec) {
  if (spec.kind() == ModelKind::Custom) return spec.get<CustomParams>().initial_state;
  CVec psi = CVec::Zero(hilbert_dim(spec));
  psi[0] = 1.0;
  return psi;
}

// ---------------------------------------------------------------- analytic frames

// basis columns V(t)|i>; generator G = V^dag (H - i d/dt) V in that basis; cd = lab counterdiabatic term.
struct AnalyticFrame {
  CMat basis;
  CMat generator;
  CMat cd;
  int seed_index = 0;
};

inline bool has_analytic_frame(const ModelSpec& spec) {
  return spec.kind() == ModelKind::SingleSpin || spec.kind() == ModelKind::OscillatorTranslate ||
         spec.kind() == ModelKind::OscillatorDilate;
}

// V(t) = exp(-i s(t) X), optionally dressed by diagonal phases (spin: Rz(phi) Ry(theta) Rz(-phi)).
// X is diagonalized once.
class FrameMap {
 public:
  explicit FrameMap(const ModelSpec& spec) : spec_(spec) {
    CMat x;
    switch (spec.kind()) {
      case ModelKind::SingleSpin: {
        ops_ = spin_operators(spec.get<SpinParams>().two_s);
        x = ops_.sy;
        break;
      }
      case ModelKind::OscillatorTranslate: {
        a_ = lowering_operator(spec.get<TranslateParams>().n_max);
        x = kI * (a_.adjoint() - a_);
        break;
      }
      case ModelKind::OscillatorDilate: {
        a_ = lowering_operator(spec.get<DilateParams>().n_max);
        x = 0.5 * kI * (a_ * a_ - a_.adjoint() * a_.adjoint());
        break;
      }
      default:
        throw ConfigError("no analytic frame for model " + to_string(spec.kind()));
    }
    if (a_.size() > 0) {
      n_half_ = a_.adjoint() * a_ + 0.5 * CMat::Identity(a_.rows(), a_.cols());
      a_minus_ad_ = a_ - a_.adjoint();
      sq_ = a_ * a_ - a_.adjoint() * a_.adjoint();
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(x);
    q_ = es.eigenvectors();
    lambda_ = es.eigenvalues();
  }

  int dim() const { return static_cast<int>(q_.rows()); }

  // V(t) * coords
  CMat apply(double t, const CMat& coords) const {
    CVec ph(lambda_.size());
    const double s = angle(t);
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::exp(-kI * s * lambda_[i]);
    if (spec_.kind() != ModelKind::SingleSpin) return q_ * (ph.asDiagonal() * (q_.adjoint() * coords));
    const double phi = spec_.get<SpinParams>().phi.value(t);
    CVec dz(dim());
    for (int i = 0; i < dim(); ++i) dz[i] = std::exp(-kI * phi * ops_.sz(i, i).real());
    CMat r = dz.conjugate().asDiagonal() * coords;
    r = q_ * (ph.asDiagonal() * (q_.adjoint() * r));
    return dz.asDiagonal() * r;
  }

  CMat basis(double t) const { return apply(t, CMat::Identity(dim(), dim())); }

  CMat generator(double t) const {
    switch (spec_.kind()) {
      case ModelKind::SingleSpin: {
        const auto& p = spec_.get<SpinParams>();
        const double h = p.h.value(t), th = p.theta.value(t), ph = p.phi.value(t);
        const double thd = p.theta.d1(t), phd = p.phi.d1(t);
        return (h + phd * (1.0 - std::cos(th))) * ops_.sz +
               phd * std::sin(th) * (std::cos(ph) * ops_.sx + std::sin(ph) * ops_.sy) -
               thd * (std::cos(ph) * ops_.sy - std::sin(ph) * ops_.sx);
      }
      case ModelKind::OscillatorTranslate: {
        const auto& p = spec_.get<TranslateParams>();
        const double alpha_dot = std::sqrt(0.5 * p.mass * p.omega) * p.x0.d1(t);
        return p.omega * number_plus_half() + kI * alpha_dot * a_minus_ad_;
      }
      default: {
        const auto& p = spec_.get<DilateParams>();
        const double w = p.omega.value(t), wd = p.omega.d1(t);
        return w * number_plus_half() - kI * (wd / (4.0 * w)) * sq_;
      }
    }
  }

  CMat cd(double t) const {
    switch (spec_.kind()) {
      case ModelKind::SingleSpin: {
        const auto& p = spec_.get<SpinParams>();
        const double th = p.theta.value(t), ph = p.phi.value(t), thd = p.theta.d1(t), phd = p.phi.d1(t);
        const Eigen::Vector3d n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        const Eigen::Vector3d nd(thd * std::cos(th) * std::cos(ph) - phd * std::sin(th) * std::sin(ph),
                                 thd * std::cos(th) * std::sin(ph) + phd * std::sin(th) * std::cos(ph),
                                 -thd * std::sin(th));
        const Eigen::Vector3d c = n.cross(nd);
        return c[0] * ops_.sx + c[1] * ops_.sy + c[2] * ops_.sz;
      }
      case ModelKind::OscillatorTranslate: {
        const auto& p = spec_.get<TranslateParams>();
        const double alpha_dot = std::sqrt(0.5 * p.mass * p.omega) * p.x0.d1(t);
        return -kI * alpha_dot * a_minus_ad_;
      }
      default: {
        const auto& p = spec_.get<DilateParams>();
        const double w = p.omega.value(t), wd = p.omega.d1(t);
        const CMat v = basis(t);
        return v * (kI * (wd / (4.0 * w)) * sq_) * v.adjoint();
      }
    }
  }

 private:
  double angle(double t) const {
    switch (spec_.kind()) {
      case ModelKind::SingleSpin: return spec_.get<SpinParams>().theta.value(t);
      case ModelKind::OscillatorTranslate: {
        const auto& p = spec_.get<TranslateParams>();
        return std::sqrt(0.5 * p.mass * p.omega) * p.x0.value(t);
      }
      default: {
        const auto& p = spec_.get<DilateParams>();
        return 0.5 * std::log(p.omega.value(t) / p.omega.value(0.0));
      }
    }
  }
  const CMat& number_plus_half() const { return n_half_; }

  ModelSpec spec_;
  SpinOps ops_;
  CMat a_;
  CMat n_half_, a_minus_ad_, sq_;
  CMat q_;
  RVec lambda_;
};

inline AnalyticFrame analytic_frame(const ModelSpec& spec, double t) {
  const FrameMap map(spec);
  AnalyticFrame f;
  f.basis = map.basis(t);
  f.generator = map.generator(t);
  f.cd = map.cd(t);
  return f;
}

// ---------------------------------------------------------------- eigenframes

struct EigframeSample {
  double t = 0.0;
  RVec energies;
  CMat eigvecs;  // columns, ascending energy
  CMat cd_matrix;
};

enum class FrameMethod { Auto, Analytic, Numeric };

inline std::vector<EigframeSample> instantaneous_frame(const ModelSpec& spec, const TimeGrid& grid,
                                                       FrameMethod method = FrameMethod::Auto) {
  const int n = grid.size();
  std::vector<EigframeSample> out(n);
  const bool analytic = method == FrameMethod::Analytic || (method == FrameMethod::Auto && has_analytic_frame(spec));
  if (analytic) {
    const FrameMap map(spec);
    const auto ham = make_hamiltonian(spec);
    for (int j = 0; j < n; ++j) {
      const double t = grid.node(j);
      AnalyticFrame f;
      f.basis = map.basis(t);
      f.cd = map.cd(t);
      const CMat H = ham(t);
      RVec e = (f.basis.adjoint() * H * f.basis).diagonal().real();
      std::vector<int> order(e.size());
      for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return e[x] < e[y]; });
      out[j].t = t;
      out[j].energies.resize(e.size());
      out[j].eigvecs.resize(f.basis.rows(), f.basis.cols());
      for (int i = 0; i < static_cast<int>(order.size()); ++i) {
        out[j].energies[i] = e[order[i]];
        out[j].eigvecs.col(i) = f.basis.col(order[i]);
      }
      out[j].cd_matrix = f.cd;
    }
    return out;
  }

  std::vector<CMat> vecs(n);
  const auto ham = make_hamiltonian(spec);
  for (int j = 0; j < n; ++j) {
    const double t = grid.node(j);
    Eigen::SelfAdjointEigenSolver<CMat> es(ham(t));
    if (es.info() != Eigen::Success) throw NumericalError("instantaneous_frame: eigensolver failed");
    const RVec& e = es.eigenvalues();
    const double width = e[e.size() - 1] - e[0];
    for (Eigen::Index i = 1; i < e.size(); ++i)
      if (!(e[i] - e[i - 1] > 1e-10 * width))
        throw DegeneracyError("instantaneous_frame: degenerate spectrum at node " + std::to_string(j), j);
    CMat v = es.eigenvectors();
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      Complex ref;
      if (j == 0) {
        Eigen::Index imax;
        v.col(c).cwiseAbs().maxCoeff(&imax);
        ref = std::conj(v(imax, c));
      } else {
        ref = vecs[j - 1].col(c).dot(v.col(c));
        ref = std::conj(ref);
      }
      if (std::abs(ref) > 0) v.col(c) *= ref / std::abs(ref);
    }
    vecs[j] = v;
    out[j].t = t;
    out[j].energies = e;
    out[j].eigvecs = v;
  }
  const auto dv = finite_diff_series(vecs, grid);
  for (int j = 0; j < n; ++j) {
    const CMat& v = vecs[j];
    // i sum_n (1 - |n><n|)|dn><n|
    CMat x = kI * (dv[j] * v.adjoint() - v * (v.adjoint() * dv[j]).diagonal().asDiagonal() * v.adjoint());
    out[j].cd_matrix = 0.5 * (x + x.adjoint());
  }
  return out;
}

// ---------------------------------------------------------------- oracles

struct OracleLanczos {
  std::function<double(int, double)> a;
  std::function<double(int, double)> b;
  int d = 0;
  std::function<double(int)> c;
  std::function<Complex(int, double)> basis_phase;
  std::function<CVec(int, double)> basis;
};

namespace detail {

inline double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

inline Complex ipow(Complex z, int k) {
  Complex r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

inline CVec unit(int dim, int i) {
  CVec e = CVec::Zero(dim);
  e[i] = 1.0;
  return e;
}

}  // namespace detail

inline OracleLanczos oracle_lanczos(const ModelSpec& spec, BasisKind basis) {
  using detail::sgn;
  OracleLanczos o;
  const bool inst = basis == BasisKind::Instantaneous;
  switch (spec.kind()) {
    case ModelKind::SingleSpin: {
      const auto p = spec.get<SpinParams>();
      const double S = p.spin();
      const int d = p.two_s + 1;
      o.d = d;
      o.c = [d](int k) { return std::sqrt(static_cast<double>(k) * (d - k)); };
      if (!inst) {
        o.a = [p, S](int k, double t) { return (S - k) * p.h.value(t) * std::cos(p.theta.value(t)) + k * p.phi.d1(t); };
        o.b = [p, o](int k, double t) {
          return 0.5 * std::abs(p.h.value(t) * std::sin(p.theta.value(t))) * o.c(k);
        };
        o.basis_phase = [p](int k, double t) {
          const double s = sgn(p.h.value(t) * std::sin(p.theta.value(t)));
          return detail::ipow((s == 0 ? 1.0 : s) * std::exp(kI * p.phi.value(t)), k);
        };
        o.basis = [o, d](int k, double t) -> CVec { return o.basis_phase(k, t) * detail::unit(d, k); };
      } else {
        auto rate2 = [p](double t) {
          const double st = std::sin(p.theta.value(t));
          return p.theta.d1(t) * p.theta.d1(t) + p.phi.d1(t) * p.phi.d1(t) * st * st;
        };
        auto phi0_dot = [p, rate2](double t) {
          const double th = p.theta.value(t), thd = p.theta.d1(t), thdd = p.theta.d2(t);
          const double phd = p.phi.d1(t), phdd = p.phi.d2(t);
          const double y = phd * std::sin(th), yd = phdd * std::sin(th) + phd * thd * std::cos(th);
          const double r2 = rate2(t);
          return r2 > 0 ? (thd * yd - y * thdd) / r2 : 0.0;
        };
        o.a = [p, S, phi0_dot](int k, double t) {
          return (S - k) * (p.h.value(t) + p.phi.d1(t) * (1.0 - std::cos(p.theta.value(t)))) +
                 k * (p.phi.d1(t) + phi0_dot(t));
        };
        o.b = [o, rate2](int k, double t) { return 0.5 * std::sqrt(rate2(t)) * o.c(k); };
        o.basis_phase = [p](int k, double t) {
          const Complex w(p.theta.d1(t), p.phi.d1(t) * std::sin(p.theta.value(t)));
          const Complex e0 = std::abs(w) > 0 ? w / std::abs(w) : Complex(1.0);
          return detail::ipow(-kI * std::exp(kI * p.phi.value(t)) * e0, k);
        };
        auto map = std::make_shared<const FrameMap>(spec);
        o.basis = [o, map](int k, double t) -> CVec {
          return o.basis_phase(k, t) * map->apply(t, detail::unit(map->dim(), k));
        };
      }
      return o;
    }
    case ModelKind::OscillatorTranslate: {
      const auto p = spec.get<TranslateParams>();
      const double g = std::sqrt(0.5 * p.mass * p.omega);
      o.d = p.n_max;
      o.c = [](int k) { return std::sqrt(static_cast<double>(k)); };
      if (!inst) {
        o.a = [p](int k, double t) {
          const double x0 = p.x0.value(t);
          return (k + 0.5) * p.omega + 0.5 * p.mass * p.omega * p.omega * x0 * x0;
        };
        o.b = [p, g, o](int k, double t) { return g * p.omega * std::abs(p.x0.value(t)) * o.c(k); };
        o.basis_phase = [p](int k, double t) { return detail::ipow(-sgn(p.x0.value(t)), k); };
        o.basis = [o](int k, double t) -> CVec { return o.basis_phase(k, t) * detail::unit(o.d, k); };
      } else {
        o.a = [p](int k, double) { return (k + 0.5) * p.omega; };
        o.b = [p, g, o](int k, double t) { return g * std::abs(p.x0.d1(t)) * o.c(k); };
        o.basis_phase = [p](int k, double t) { return detail::ipow(-kI * sgn(p.x0.d1(t)), k); };
        auto map = std::make_shared<const FrameMap>(spec);
        o.basis = [o, map](int k, double t) -> CVec {
          return o.basis_phase(k, t) * map->apply(t, detail::unit(map->dim(), k));
        };
      }
      return o;
    }
    case ModelKind::OscillatorDilate: {
      const auto p = spec.get<DilateParams>();
      const double w0 = p.omega.value(0.0);
      o.d = (p.n_max + 1) / 2;
      o.c = [](int k) { return std::sqrt(2.0 * k * (2.0 * k - 1.0)); };
      if (!inst) {
        o.a = [p, w0](int k, double t) {
          const double w = p.omega.value(t);
          return (2.0 * k + 0.5) * (w * w + w0 * w0) / (2.0 * w0);
        };
        o.b = [p, w0, o](int k, double t) {
          const double w = p.omega.value(t);
          return std::abs(w * w - w0 * w0) / (4.0 * w0) * o.c(k);
        };
        o.basis_phase = [p, w0](int k, double t) {
          const double w = p.omega.value(t);
          return detail::ipow(sgn(w * w - w0 * w0), k);
        };
        o.basis = [o, p](int k, double t) -> CVec { return o.basis_phase(k, t) * detail::unit(p.n_max, 2 * k); };
      } else {
        o.a = [p](int k, double t) { return (2.0 * k + 0.5) * p.omega.value(t); };
        o.b = [p, o](int k, double t) { return std::abs(p.omega.d1(t)) / (4.0 * p.omega.value(t)) * o.c(k); };
        o.basis_phase = [p](int k, double t) { return detail::ipow(kI * sgn(p.omega.d1(t)), k); };
        auto map = std::make_shared<const FrameMap>(spec);
        o.basis = [o, map](int k, double t) -> CVec {
          return o.basis_phase(k, t) * map->apply(t, detail::unit(map->dim(), 2 * k));
        };
      }
      return o;
    }
    default:
      throw ConfigError("oracle_lanczos: no closed form for model " + to_string(spec.kind()));
  }
}

// K(t) = S w^2 (1 - cos(sqrt(h^2 + w^2) t)) / (h^2 + w^2)
inline double spin_heisenberg_complexity(double S, double h, double omega, double t) {
  const double q = h * h + omega * omega;
  if (q == 0.0) return 0.0;
  return S * omega * omega * (1.0 - std::cos(std::sqrt(q) * t)) / q;
}

}  // namespace krylov_td
