#include <catch_amalgamated.hpp>

#include <cmath>

#include "krylov_td.hpp"

using namespace krylov_td;
using Catch::Approx;

TEST_CASE("su(2) coefficients close the algebra", "[algebra]") {
  const int d = 9;
  const double beta = 0.6;
  CVec tb(d);
  tb[0] = 0.0;
  for (int k = 1; k < d; ++k) tb[k] = beta * std::sqrt(double(k) * (d - k)) * std::exp(kI * 0.4);
  const auto t = triple_from_offdiag(tb);
  REQUIRE(t.closure);
  const double S = 0.5 * (d - 1);
  CHECK(std::abs(t.closure->alpha) == Approx(4.0 * beta * beta));
  CHECK(t.closure->gamma == Approx(-t.closure->alpha * S));
  const auto r = check_commutators(t);
  CHECK(r.r1 < 1e-13);
  CHECK(r.r2 < 1e-13);
  REQUIRE(r.r3);
  CHECK(*r.r3 < 1e-13);
}

TEST_CASE("Heisenberg-Weyl coefficients close with vanishing alpha", "[algebra]") {
  const int d = 12;
  CVec tb(d);
  tb[0] = 0.0;
  for (int k = 1; k < d; ++k) tb[k] = 0.8 * std::sqrt(double(k));
  // truncation breaks the last diagonal entry
  CHECK_FALSE(triple_from_offdiag(tb).closure);
  const auto t = triple_from_offdiag(tb, true);
  REQUIRE(t.closure);
  CHECK(t.closure->alpha == Approx(0.0).margin(1e-12));
  CHECK(std::abs(t.closure->gamma) == Approx(2.0 * 0.64));
}

TEST_CASE("generic coefficients do not close", "[algebra]") {
  CVec tb(6);
  tb << 0.0, 1.0, 0.3, 2.0, 0.7, 1.1;
  const auto t = triple_from_offdiag(tb);
  CHECK_FALSE(t.closure);
  CHECK(t.fit_residual > 0.1);
  const auto r = check_commutators(t);
  CHECK_FALSE(r.r3);
  CHECK(r.r1 < 1e-14);
}

TEST_CASE("oracle coefficients sample the closed forms on the grid", "[algebra]") {
  SpinParams p;
  p.two_s = 6;
  p.theta = Protocol::linear(0.0, 0.5);
  ModelSpec s;
  s.params = p;
  const TimeGrid g(0.0, 1.0, 10);
  const auto c = oracle_coefficients(s, BasisKind::Instantaneous, g);
  const auto o = oracle_lanczos(s, BasisKind::Instantaneous);
  CHECK(c.dim() == 7);
  for (int k = 0; k < 7; ++k)
    for (int j = 0; j <= 10; ++j) {
      CHECK(c.a(k, j) == o.a(k, g.node(j)));
      if (k > 0) CHECK(c.b(k, j) == o.b(k, g.node(j)));
    }
  CHECK(uniform_delta(phase_transform(c)));
}

TEST_CASE("Heisenberg evolution of the complexity operator", "[algebra]") {
  const double S = 5.0, h = 1.0, w = 0.6;
  const TimeGrid g(0.0, 10.0, 2000);
  const auto res = heisenberg_evolve(S, h, w, g);
  for (int j = 0; j < g.size(); ++j) CHECK(res.K[j] == Approx(spin_heisenberg_complexity(S, h, w, g.node(j))).margin(1e-10));
  CHECK(res.max_jk_residual < 1e-4);
}

TEST_CASE("operator speed limit holds for the rotating spin", "[algebra]") {
  const auto q = operator_qsl(10, 1.0, 0.5, TimeGrid(0.0, 12.0, 3000));
  CHECK(q.max_violation < 1e-8);
  CHECK(q.min_gap > -1e-8);
  for (std::size_t j = 0; j < q.lhs.size(); ++j) CHECK(q.lhs[j] == Approx(q.lhs_closed[j]).margin(1e-5));
}
