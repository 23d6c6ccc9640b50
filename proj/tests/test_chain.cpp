#include <catch_amalgamated.hpp>

#include <cmath>

#include "krylov_td.hpp"

using namespace krylov_td;
using Catch::Approx;

namespace {

// constant two-site chain, a = 0, b_1 = beta
LanczosCoefficients two_site(double beta, int n_steps, double t_end) {
  LanczosCoefficients c;
  c.grid = TimeGrid(0.0, t_end, n_steps);
  c.a = RMat::Zero(2, n_steps + 1);
  c.b = RMat::Zero(2, n_steps + 1);
  c.b.row(1).setConstant(beta);
  return c;
}

ModelSpec ramp_spin(int two_s) {
  SpinParams p;
  p.two_s = two_s;
  p.h = Protocol::constant(1.0);
  p.theta = Protocol::ramp_to_pi(3.0);
  ModelSpec s;
  s.params = p;
  return s;
}

}  // namespace

TEST_CASE("two-site chain is a Rabi rotation", "[chain]") {
  const double beta = 0.7;
  const auto c = two_site(beta, 300, 2.0);
  const auto cs = propagate_chain(c);
  const auto sr = spread_report(cs, c);
  for (int j = 0; j <= 300; ++j) {
    const double t = c.grid.node(j);
    CHECK(std::abs(cs.phi(0, j) - std::cos(beta * t)) < 1e-12);
    CHECK(std::abs(cs.phi(1, j) - Complex(0.0, -std::sin(beta * t))) < 1e-12);
    CHECK(sr.K[j] == Approx(std::pow(std::sin(beta * t), 2)).margin(1e-12));
    CHECK(sr.theta(0, j) == Approx(beta * t).margin(1e-10));
    CHECK(sr.deltaL[j] == Approx(beta).margin(1e-12));
  }
}

TEST_CASE("envelope of a constant chain crosses at theta/b", "[chain]") {
  const auto c = two_site(0.5, 1000, 4.0);
  const auto env = lr_envelope(c, 0.3);
  REQUIRE(env.crossing.size() == 1);
  REQUIRE(env.crossing[0]);
  CHECK(env.crossing[0]->time == Approx(0.6).margin(1e-12));
  CHECK(env.envelope(0, 1000) == Approx(2.0));
  CHECK_THROWS_AS(lr_envelope(c, 0.0), ConfigError);
  CHECK_FALSE(lr_envelope(c, 5.0).crossing[0]);
}

TEST_CASE("chain dimension mismatch is structural", "[chain]") {
  const auto c = two_site(0.5, 10, 1.0);
  auto cs = propagate_chain(c);
  cs.phi = CMat::Zero(3, 11);
  CHECK_THROWS_AS(spread_report(cs, c), StructuralError);
}

TEST_CASE("driven spin chain obeys the speed limits and dispersion bound", "[chain]") {
  const auto kd = run_lanczos_td(ramp_spin(12), TimeGrid(0.0, 3.0, 3000), 50);
  const auto cs = propagate_chain(kd);
  const auto sr = spread_report(cs, kd);
  for (int j = 0; j < kd.grid().size(); ++j) CHECK(std::abs(cs.phi.col(j).norm() - 1.0) < 1e-12);
  const double tol = 1e-3;
  const auto disp = check_dispersion_bound(sr, kd.grid());
  CHECK(*std::min_element(disp.begin(), disp.end()) > -tol);
  const auto q = check_qsl(sr, kd);
  CHECK(q.eq7.minCoeff() > -tol);
  CHECK(q.eq8_sin.minCoeff() > -tol);
  CHECK(q.eq8_theta.minCoeff() > -tol);
  CHECK((q.eq8_sin - q.eq7).minCoeff() > -tol);
  // Theta_n never outruns the nested-integral envelope
  const auto env = lr_envelope(kd, 0.1);
  CHECK((env.envelope - sr.theta.topRows(env.envelope.rows())).minCoeff() > -tol);
}

TEST_CASE("chain reconstruction recovers the Schrodinger state", "[chain]") {
  const auto s = ramp_spin(8);
  const auto kd = run_lanczos_td(s, TimeGrid(0.0, 3.0, 2000), 50);
  const auto rep = reconstruct_and_compare(kd, propagate_chain(kd), s);
  CHECK(rep.complete);
  CHECK(rep.max_deviation < 1e-4);
}
