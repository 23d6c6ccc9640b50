#include <catch_amalgamated.hpp>

#include <cmath>

#include "krylov_td.hpp"

using namespace krylov_td;
using Catch::Approx;

namespace {

ModelSpec spin(int two_s, Protocol h, Protocol theta, Protocol phi, BasisKind basis = BasisKind::FixedInitialState) {
  SpinParams p;
  p.two_s = two_s;
  p.h = std::move(h);
  p.theta = std::move(theta);
  p.phi = std::move(phi);
  ModelSpec s;
  s.params = p;
  s.initial_basis = basis;
  return s;
}

ModelSpec dilated(Protocol omega, int n_max, BasisKind basis = BasisKind::FixedInitialState) {
  DilateParams p;
  p.omega = std::move(omega);
  p.n_max = n_max;
  ModelSpec s;
  s.params = p;
  s.initial_basis = basis;
  return s;
}

}  // namespace

TEST_CASE("spin-1/2 along z is diag(h/2, -h/2)", "[models]") {
  const auto s = spin(1, Protocol::constant(1.3), Protocol::constant(0.0), Protocol::constant(0.0));
  const CMat H = hamiltonian_at(s, 0.4);
  CHECK(std::abs(H(0, 0) - 0.65) < 1e-15);
  CHECK(std::abs(H(1, 1) + 0.65) < 1e-15);
  CHECK(std::abs(H(0, 1)) < 1e-15);
}

TEST_CASE("Ising mode energies at the sweep ends and midpoint", "[models]") {
  IsingParams p;
  p.n_sites = 12;
  p.h = 0.7;
  p.t_quench = 5.0;
  p.dt = 0.1;
  const int M = p.m_steps();
  REQUIRE(M == 100);
  const auto m0 = ising_modes(p, 0);
  for (const auto& m : m0) CHECK(m.eps == Approx(2.0 * p.h));
  const auto mid = ising_modes(p, M / 2);
  for (int n = 1; n <= p.n_modes(); ++n)
    CHECK(mid[n - 1].eps == Approx(2.0 * p.h * std::sin(0.5 * ising_momentum(p.n_sites, n))));
}

TEST_CASE("Ising midpoint gap closes with system size", "[models]") {
  double prev = ising_min_gap(4, 1.0);
  for (int N : {8, 16, 32, 64}) {
    const double g = ising_min_gap(N, 1.0);
    CHECK(g < prev);
    prev = g;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("catalog Hamiltonians are Hermitian", "[models]") {
  std::vector<ModelSpec> cat;
  cat.push_back(spin(5, Protocol::sinusoid(1.0, 0.3, 2.0), Protocol::linear(0.2, 0.7), Protocol::linear(0.0, 0.4)));
  TranslateParams tp;
  tp.x0 = Protocol::polynomial({0.0, 0.3, 0.5});
  tp.n_max = 20;
  ModelSpec ts;
  ts.params = tp;
  cat.push_back(ts);
  cat.push_back(dilated(Protocol::linear(1.0, 0.5), 20));
  IsingParams ip;
  ip.n_sites = 6;
  ModelSpec is;
  is.params = ip;
  cat.push_back(is);
  LmgParams lp;
  lp.n_spins = 6;
  ModelSpec ls;
  ls.params = lp;
  cat.push_back(ls);
  for (const auto& s : cat)
    for (double t : {0.0, 0.3, 1.1}) {
      const CMat H = hamiltonian_at(s, s.kind() == ModelKind::IsingFreeFermion ? t - 2.0 : t);
      CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(H.rows() == hilbert_dim(s));
    }
}

TEST_CASE("invalid model parameters are configuration errors", "[models]") {
  IsingParams ip;
  ip.n_sites = 7;
  ModelSpec is;
  is.params = ip;
  CHECK_THROWS_AS(validate_spec(is), ConfigError);
  CHECK_THROWS_AS(validate_spec(spin(0, Protocol::constant(1.0), Protocol(), Protocol())), ConfigError);
  CustomParams cp;
  ModelSpec cs;
  cs.params = cp;
  CHECK_THROWS_AS(validate_spec(cs), ConfigError);
  CHECK_THROWS_AS(oracle_lanczos(is, BasisKind::FixedInitialState), ConfigError);
}

TEST_CASE("spin counterdiabatic term for theta = omega t is omega Sy", "[models]") {
  const double w = 0.8;
  const auto s = spin(4, Protocol::constant(1.0), Protocol::linear(0.0, w), Protocol::constant(0.0), BasisKind::Instantaneous);
  const TimeGrid g(0.0, 2.0, 400);
  const CMat target = w * spin_operators(4).sy;
  for (const auto& f : instantaneous_frame(s, g, FrameMethod::Analytic))
    CHECK((f.cd_matrix - target).cwiseAbs().maxCoeff() < 1e-12);
  const auto num = instantaneous_frame(s, g, FrameMethod::Numeric);
  for (int j = 1; j + 1 < g.size(); ++j) CHECK((num[j].cd_matrix - target).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("static models have a vanishing counterdiabatic term", "[models]") {
  const auto s = spin(3, Protocol::constant(1.0), Protocol::constant(0.4), Protocol::constant(0.2), BasisKind::Instantaneous);
  for (const auto& f : instantaneous_frame(s, TimeGrid(0.0, 1.0, 20), FrameMethod::Numeric)) {
    CHECK(f.cd_matrix.cwiseAbs().maxCoeff() < 1e-10);
    CHECK((f.eigvecs.adjoint() * f.eigvecs - CMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dilated oscillator numeric frame matches the analytic counterdiabatic term", "[models]") {
  const auto s = dilated(Protocol::linear(1.0, 1.0), 40, BasisKind::Instantaneous);
  const TimeGrid g(0.0, 0.5, 2000);
  const auto num = instantaneous_frame(s, g, FrameMethod::Numeric);
  const auto ana = instantaneous_frame(s, g, FrameMethod::Analytic);
  const int low = 10;  // away from the truncation edge
  for (int j : {100, 1000, 1900}) {
    const CMat V = ana[j].eigvecs.leftCols(low);
    const CMat cn = V.adjoint() * num[j].cd_matrix * V;
    const CMat ca = V.adjoint() * ana[j].cd_matrix * V;
    CHECK((cn - ca).cwiseAbs().maxCoeff() < 1e-6);
    // continuity convention
    CHECK(num[j].eigvecs.col(0).dot(num[j - 1].eigvecs.col(0)).real() > 0.0);
  }
}

TEST_CASE("spin fixed-basis oracle at the protocol midpoint", "[models]") {
  const double h = 1.3, tf = 2.0;
  const auto s = spin(20, Protocol::constant(h), Protocol::ramp_to_pi(tf), Protocol::constant(0.0));
  const auto o = oracle_lanczos(s, BasisKind::FixedInitialState);
  CHECK(o.d == 21);
  CHECK(o.b(1, 0.5 * tf) == Approx(h * std::sqrt(20.0) / 2.0).epsilon(1e-14));
  for (int k = 1; k < o.d; ++k) CHECK(o.b(k, 0.7) == Approx(o.b(1, 0.7) / o.c(1) * o.c(k)).epsilon(1e-13));
}

TEST_CASE("static spin drive has no instantaneous-basis coefficients", "[models]") {
  const auto s = spin(6, Protocol::constant(1.0), Protocol::constant(0.3), Protocol::constant(0.1), BasisKind::Instantaneous);
  const auto o = oracle_lanczos(s, BasisKind::Instantaneous);
  for (int k = 1; k < o.d; ++k) CHECK(o.b(k, 0.4) == 0.0);
}

TEST_CASE("dilated oscillator fixed-basis b_1", "[models]") {
  const auto w = Protocol::linear(1.0, 0.5);
  const auto o = oracle_lanczos(dilated(w, 64), BasisKind::FixedInitialState);
  for (double t : {0.3, 1.0, 2.0}) {
    const double wt = w.value(t);
    CHECK(o.b(1, t) == Approx(std::abs(wt * wt - 1.0) / 4.0 * std::sqrt(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("coefficient factors c_k of the solvable families", "[models]") {
  const auto sp = oracle_lanczos(spin(10, Protocol::constant(1.0), Protocol::linear(0, 1), Protocol(), BasisKind::Instantaneous),
                                 BasisKind::Instantaneous);
  TranslateParams tp;
  tp.x0 = Protocol::linear(0.0, 1.0);
  ModelSpec ts;
  ts.params = tp;
  const auto tr = oracle_lanczos(ts, BasisKind::Instantaneous);
  const auto di = oracle_lanczos(dilated(Protocol::linear(1.0, 0.5), 64), BasisKind::Instantaneous);
  for (int k = 1; k < 8; ++k) {
    CHECK(sp.c(k) == Approx(std::sqrt(k * (11.0 - k))));
    CHECK(tr.c(k) == Approx(std::sqrt(double(k))));
    CHECK(di.c(k) == Approx(std::sqrt(2.0 * k * (2.0 * k - 1.0))));
  }
}

TEST_CASE("instantaneous b_1 is the counterdiabatic spread in the ground state", "[models]") {
  const auto s = spin(6, Protocol::constant(1.0), Protocol::linear(0.2, 0.9), Protocol::polynomial({0.0, 0.4, 0.3}),
                      BasisKind::Instantaneous);
  const auto o = oracle_lanczos(s, BasisKind::Instantaneous);
  const TimeGrid g(0.0, 1.5, 30);
  const auto frame = instantaneous_frame(s, g, FrameMethod::Analytic);
  Eigen::Index level;
  (frame[0].eigvecs.adjoint() * initial_state(s)).cwiseAbs().maxCoeff(&level);
  for (int j = 0; j < g.size(); ++j) {
    const CVec psi = frame[j].eigvecs.col(level);
    const CMat& cd = frame[j].cd_matrix;
    const double m1 = psi.dot(cd * psi).real(), m2 = psi.dot(cd * cd * psi).real();
    CHECK(std::sqrt(std::max(0.0, m2 - m1 * m1)) == Approx(o.b(1, g.node(j))).margin(1e-8));
  }
}

TEST_CASE("closed-form spin Heisenberg complexity", "[models]") {
  CHECK(spin_heisenberg_complexity(10, 1.0, 0.5, 0.0) == 0.0);
  CHECK(spin_heisenberg_complexity(10, 1.0, 0.0, 3.0) == 0.0);
  const double h = 1.0, w = 0.5, q = std::sqrt(h * h + w * w);
  CHECK(spin_heisenberg_complexity(10, h, w, kPi / q) == Approx(2.0 * 10 * w * w / (q * q)));
  double mx = 0.0;
  for (int i = 0; i <= 1000; ++i) mx = std::max(mx, spin_heisenberg_complexity(10, h, w, 2.0 * kPi / q * i / 1000.0));
  CHECK(mx == Approx(2.0 * 10 * w * w / (q * q)).epsilon(1e-9));
}
