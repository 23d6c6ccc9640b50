#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "krylov_td.hpp"

using namespace krylov_td;
using Catch::Approx;

namespace {

CVec random_unit(int d, std::mt19937& rng) {
  std::normal_distribution<double> g;
  CVec v(d);
  for (int i = 0; i < d; ++i) v[i] = Complex(g(rng), g(rng));
  return v / v.norm();
}

}  // namespace

TEST_CASE("time grid rejects degenerate spans", "[numcore]") {
  CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 3), StructuralError);
  CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 10), StructuralError);
  CHECK_THROWS_AS(TimeGrid(0.0, NAN, 10), StructuralError);
  const TimeGrid g(0.0, 2.0, 8);
  CHECK(g.size() == 9);
  CHECK(g.dt() == Approx(0.25));
  CHECK(g.node(8) == 2.0);
  CHECK(g.refined().n_steps() == 16);
}

TEST_CASE("finite differences are exact on quadratics", "[numcore]") {
  const TimeGrid g(-1.0, 2.0, 30);
  std::vector<double> f(g.size());
  for (int j = 0; j < g.size(); ++j) {
    const double t = g.node(j);
    f[j] = 3.0 - 2.0 * t + 0.7 * t * t;
  }
  const auto df = finite_diff_series(f, g);
  for (int j = 0; j < g.size(); ++j) CHECK(std::abs(df[j] - (-2.0 + 1.4 * g.node(j))) < 1e-12);
}

TEST_CASE("finite differences converge at second order", "[numcore]") {
  auto err = [](int n) {
    const TimeGrid g(0.0, 2.0, n);
    std::vector<CVec> f(g.size(), CVec(2));
    for (int j = 0; j < g.size(); ++j) f[j] << std::sin(g.node(j)), Complex(0.0, std::exp(g.node(j)));
    const auto df = finite_diff_series(f, g);
    double e = 0.0;
    for (int j = 0; j < g.size(); ++j) {
      CVec ex(2);
      ex << std::cos(g.node(j)), Complex(0.0, std::exp(g.node(j)));
      e = std::max(e, (df[j] - ex).cwiseAbs().maxCoeff());
    }
    return e;
  };
  const double order = std::log2(err(200) / err(400));
  CHECK(order > 1.9);
  CHECK(order < 2.1);
}

TEST_CASE("finite differences reject mismatched series", "[numcore]") {
  const TimeGrid g(0.0, 1.0, 10);
  CHECK_THROWS_AS(finite_diff_series(std::vector<double>(5, 0.0), g), StructuralError);
  std::vector<CVec> v(g.size(), CVec::Zero(3));
  v[4] = CVec::Zero(2);
  CHECK_THROWS_AS(finite_diff_series(v, g), StructuralError);
}

TEST_CASE("orthonormalize_against leaves an orthogonal unit residual", "[numcore]") {
  std::mt19937 rng(7);
  std::vector<CVec> basis;
  for (int i = 0; i < 5; ++i) {
    const auto r = orthonormalize_against(random_unit(12, rng), basis);
    REQUIRE(r.unit_residual);
    basis.push_back(*r.unit_residual);
  }
  const auto r = orthonormalize_against(random_unit(12, rng), basis);
  REQUIRE(r.unit_residual);
  CHECK(r.unit_residual->norm() == Approx(1.0).epsilon(1e-14));
  for (const auto& q : basis) CHECK(std::abs(q.dot(*r.unit_residual)) < 1e-12);
}

TEST_CASE("orthonormalize_against deflates a dependent vector", "[numcore]") {
  std::vector<CVec> basis{CVec::Unit(3, 0), CVec::Unit(3, 1)};
  CVec v(3);
  v << 0.3, Complex(0.0, -2.0), 1e-12;
  const auto r = orthonormalize_against(v, basis);
  CHECK_FALSE(r.unit_residual);
  CHECK(r.residual_norm < 1e-11);
}

TEST_CASE("tridiagonal exponential: identity at dt = 0 and two-level rotation", "[numcore]") {
  HermTridiag L;
  L.diag = RVec::Zero(2);
  L.offdiag = RVec::Constant(1, 0.8);
  CVec phi(2);
  phi << 1.0, 0.0;
  CHECK((tridiag_expm_apply(L, 0.0, phi) - phi).norm() < 1e-15);
  const double dt = 0.37;
  const CVec out = tridiag_expm_apply(L, dt, phi);
  CHECK(std::abs(out[0] - std::cos(0.8 * dt)) < 1e-14);
  CHECK(std::abs(out[1] - Complex(0.0, -std::sin(0.8 * dt))) < 1e-14);
}

TEST_CASE("tridiagonal exponential matches a dense matrix exponential and composes", "[numcore]") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  HermTridiag L;
  L.diag = RVec(7);
  L.offdiag = RVec(6);
  for (int i = 0; i < 7; ++i) L.diag[i] = 3.0 * u(rng);
  for (int i = 0; i < 6; ++i) L.offdiag[i] = 2.0 + u(rng);
  const CVec phi = random_unit(7, rng);
  const CMat dense = (CMat(-kI * 0.4 * L.dense())).exp();
  const CVec one = tridiag_expm_apply(L, 0.4, phi);
  CHECK((one - dense * phi).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(one.norm() - 1.0) < 1e-12);
  const CVec two = tridiag_expm_apply(L, 0.15, tridiag_expm_apply(L, 0.25, phi));
  CHECK((one - two).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("complex tridiagonal exponential matches a dense matrix exponential", "[numcore]") {
  std::mt19937 rng(3);
  ComplexTridiag L;
  L.offdiag = CVec(5);
  for (int i = 0; i < 5; ++i) L.offdiag[i] = std::polar(1.0 + 0.1 * i, 0.7 * i - 1.0);
  const CVec phi = random_unit(6, rng);
  const CMat dense = (CMat(-kI * 0.9 * L.dense())).exp();
  CHECK((tridiag_expm_apply(L, 0.9, phi) - dense * phi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tridiagonal exponential validates its input", "[numcore]") {
  HermTridiag L;
  L.diag = RVec::Zero(3);
  L.offdiag = RVec::Constant(2, -1.0);
  CHECK_THROWS_AS(tridiag_expm_apply(L, 0.1, CVec::Unit(3, 0)), StructuralError);
  L.offdiag = RVec::Constant(2, 1.0);
  CHECK_THROWS_AS(tridiag_expm_apply(L, 0.1, CVec::Unit(4, 0)), StructuralError);
}

TEST_CASE("cumulative trapezoid integral", "[numcore]") {
  const TimeGrid g1(0.0, 1.0, 10);
  const auto c = cumulative_integral(std::vector<double>(g1.size(), 1.0), g1);
  for (int j = 0; j < g1.size(); ++j) CHECK(c[j] == Approx(j * g1.dt()).margin(1e-15));

  const TimeGrid g2(0.0, 2.0, 7);
  std::vector<double> lin(g2.size());
  for (int j = 0; j < g2.size(); ++j) lin[j] = g2.node(j);
  CHECK(cumulative_integral(lin, g2).back() == Approx(2.0).epsilon(1e-14));

  const TimeGrid g3(0.0, 1.0, 1000);
  std::vector<double> sq(g3.size());
  for (int j = 0; j < g3.size(); ++j) sq[j] = g3.node(j) * g3.node(j);
  const auto ci = cumulative_integral(sq, g3);
  CHECK(std::abs(ci.back() - 1.0 / 3.0) < 1e-6);
  for (int j = 1; j < g3.size(); ++j) CHECK(ci[j] >= ci[j - 1]);

  CHECK_THROWS_AS(cumulative_integral(std::vector<double>(3, 1.0), g3), StructuralError);
}

TEST_CASE("protocols evaluate values and derivatives", "[numcore]") {
  const auto p = Protocol::polynomial({1.0, -2.0, 0.5});
  CHECK(p.value(2.0) == Approx(-1.0));
  CHECK(p.d1(2.0) == Approx(0.0));
  CHECK(p.d2(2.0) == Approx(1.0));
  const auto s = Protocol::sinusoid(1.0, 0.5, 2.0);
  CHECK(s.value(0.3) == Approx(1.0 + 0.5 * std::sin(0.6)));
  CHECK(s.d1(0.3) == Approx(std::cos(0.6)));
  CHECK(Protocol::ramp_to_pi(4.0).value(2.0) == Approx(kPi / 2));
  const auto tab = Protocol::tabulated({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 4.0, 9.0});
  CHECK(tab.value(2.0) == Approx(4.0));
  CHECK(Protocol::constant(3.0).is_constant());
}
