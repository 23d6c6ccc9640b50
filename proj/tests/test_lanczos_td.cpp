#include <catch_amalgamated.hpp>

#include <cmath>

#include "krylov_td.hpp"

using namespace krylov_td;
using Catch::Approx;

namespace {

ModelSpec driven_spin(int two_s, BasisKind basis) {
  SpinParams p;
  p.two_s = two_s;
  p.h = Protocol::constant(1.0);
  p.theta = Protocol::linear(0.3, 1.0);
  p.phi = Protocol::linear(0.0, 0.3);
  ModelSpec s;
  s.params = p;
  s.initial_basis = basis;
  return s;
}

double max_coeff_error(const KrylovData& kd, const OracleLanczos& o) {
  double e = 0.0;
  for (int k = 0; k < kd.d(); ++k)
    for (int j = 0; j < kd.grid().size(); ++j) {
      const double t = kd.grid().node(j);
      e = std::max(e, std::abs(kd.a()(k, j) - o.a(k, t)));
      if (k > 0) e = std::max(e, std::abs(kd.b()(k, j) - o.b(k, t)));
    }
  return e;
}

}  // namespace

TEST_CASE("fixed-basis spin coefficients and basis match the oracle", "[lanczos_td]") {
  const auto s = driven_spin(6, BasisKind::FixedInitialState);
  const TimeGrid g(0.0, 2.0, 1000);
  const auto kd = run_lanczos_td(s, g, 50);
  const auto o = oracle_lanczos(s, BasisKind::FixedInitialState);
  REQUIRE(kd.d() == 7);
  CHECK(kd.halt == HaltReason::Deflated);
  CHECK(max_coeff_error(kd, o) < 1e-4);
  double be = 0.0;
  for (int k = 0; k < kd.d(); ++k)
    for (int j = 0; j < g.size(); j += 50) be = std::max(be, (kd.basis[k][j] - o.basis(k, g.node(j))).norm());
  CHECK(be < 1e-4);
}

TEST_CASE("coefficient error falls at second order in dt", "[lanczos_td]") {
  const auto s = driven_spin(4, BasisKind::FixedInitialState);
  const auto o = oracle_lanczos(s, BasisKind::FixedInitialState);
  const double e1 = max_coeff_error(run_lanczos_td(s, TimeGrid(0.0, 2.0, 200), 50), o);
  const double e2 = max_coeff_error(run_lanczos_td(s, TimeGrid(0.0, 2.0, 400), 50), o);
  CHECK(e1 / e2 > 3.5);
  CHECK(e1 / e2 < 4.5);
}

TEST_CASE("instantaneous-basis spin through the moving frame matches the oracle", "[lanczos_td]") {
  const auto s = driven_spin(10, BasisKind::Instantaneous);
  const TimeGrid g(0.0, 2.0, 2000);
  const auto kd = run_lanczos_td(s, g, 50);
  CHECK(kd.moving_frame);
  REQUIRE(kd.d() == 11);
  CHECK(max_coeff_error(kd, oracle_lanczos(s, BasisKind::Instantaneous)) < 1e-4);
  const auto rep = verify_basis(kd);
  CHECK(rep.max_ortho_dev < 1e-10);
  CHECK(rep.max_recurrence_residual < 1e-4);
}

// a_k depends on the eigenvector gauge; nested one-sided differences spoil the last few nodes at high k
TEST_CASE("lab and moving routes agree on b away from the grid ends", "[lanczos_td]") {
  const auto s = driven_spin(4, BasisKind::Instantaneous);
  const TimeGrid g(0.0, 1.5, 1500);
  LanczosOptions lab;
  lab.route = FrameRoute::Lab;
  const auto a = run_lanczos_td(s, g, 50);
  const auto b = run_lanczos_td(s, g, 50, lab);
  CHECK_FALSE(b.moving_frame);
  REQUIRE(a.d() == b.d());
  const int edge = 20;
  const int inner = g.size() - 2 * edge;
  CHECK((a.b().middleCols(edge, inner) - b.b().middleCols(edge, inner)).cwiseAbs().maxCoeff() < 1e-4);
  // a_0 is the instantaneous energy plus a gauge term
  CHECK(b.a()(0, 700) == Approx(2.0).margin(1e-6));
}

TEST_CASE("static generator reproduces static Lanczos", "[lanczos_td]") {
  SpinParams p;
  p.two_s = 5;
  p.theta = Protocol::constant(0.9);
  p.phi = Protocol::constant(0.4);
  ModelSpec s;
  s.params = p;
  const auto kd = run_lanczos_td(s, TimeGrid(0.0, 1.0, 20), 50);
  const CMat H = hamiltonian_at(s, 0.0);
  // independent three-term recurrence
  CVec prev = CVec::Zero(6), cur = initial_state(s);
  double bk = 0.0;
  for (int k = 0; k < kd.d(); ++k) {
    const CVec w = H * cur;
    const double ak = cur.dot(w).real();
    for (int j = 0; j < 21; j += 5) {
      CHECK(kd.a()(k, j) == Approx(ak).margin(1e-10));
      if (k > 0) CHECK(kd.b()(k, j) == Approx(bk).margin(1e-10));
    }
    CVec r = w - ak * cur - bk * prev;
    bk = r.norm();
    prev = cur;
    cur = r / bk;
  }
  CHECK(kd.d() == 6);
}

TEST_CASE("k_max caps the Krylov dimension", "[lanczos_td]") {
  const auto kd = run_lanczos_td(driven_spin(10, BasisKind::FixedInitialState), TimeGrid(0.0, 1.0, 100), 4);
  CHECK(kd.d() == 4);
  CHECK(kd.halt == HaltReason::DimensionCap);
  CHECK_THROWS_AS(run_lanczos_td(driven_spin(2, BasisKind::FixedInitialState), TimeGrid(0.0, 1.0, 100), 0), ConfigError);
}

TEST_CASE("phase transform keeps |tilde b| = b", "[lanczos_td]") {
  LanczosCoefficients c;
  c.grid = TimeGrid(0.0, 1.0, 100);
  c.a = RMat::Zero(3, 101);
  c.b = RMat::Zero(3, 101);
  for (int j = 0; j <= 100; ++j) {
    c.a(1, j) = 2.0;
    c.b(1, j) = 0.5 + c.grid.node(j);
    c.b(2, j) = 1.0;
  }
  const auto td = phase_transform(c);
  for (int j = 0; j <= 100; ++j) {
    CHECK(td.delta(1, j) == Approx(-2.0 * c.grid.node(j)).margin(1e-12));
    CHECK(td.delta(2, j) == Approx(2.0 * c.grid.node(j)).margin(1e-12));
    CHECK(std::abs(td.tilde_b(1, j)) == Approx(c.b(1, j)));
  }
}

TEST_CASE("custom model with a stationary seed deflates immediately", "[lanczos_td]") {
  CustomParams cp;
  CMat sz = CMat::Zero(2, 2);
  sz(0, 0) = 1.0;
  sz(1, 1) = -1.0;
  cp.terms.push_back({sz, Protocol::linear(1.0, 0.5)});
  cp.initial_state = CVec::Unit(2, 0);
  ModelSpec s;
  s.params = cp;
  const auto kd = run_lanczos_td(s, TimeGrid(0.0, 1.0, 50), 10);
  CHECK(kd.d() == 1);
  CHECK(kd.halt == HaltReason::Deflated);
  CHECK(kd.a()(0, 50) == Approx(1.5));
}
