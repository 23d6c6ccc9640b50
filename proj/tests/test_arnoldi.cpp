#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "krylov_td.hpp"

using namespace krylov_td;
using Catch::Approx;

namespace {

CMat random_unitary(int d, std::mt19937& rng) {
  std::normal_distribution<double> g;
  CMat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<CMat> qr(a);
  return qr.householderQ();
}

CVec random_unit(int d, std::mt19937& rng) {
  std::normal_distribution<double> g;
  CVec v(d);
  for (int i = 0; i < d; ++i) v[i] = Complex(g(rng), g(rng));
  return v / v.norm();
}

UnitaryStepModel random_model(int d, int steps, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<CMat> us;
  std::vector<CVec> ss;
  for (int k = 0; k < steps; ++k) us.push_back(random_unitary(d, rng));
  for (int k = 0; k <= steps; ++k) ss.push_back(random_unit(d, rng));
  const CVec psi0 = ss[0];
  return matrix_step_model(std::move(us), std::move(ss), psi0);
}

IsingParams small_ising(int n_sites, double t_quench) {
  IsingParams p;
  p.n_sites = n_sites;
  p.t_quench = t_quench;
  p.dt = 0.1;
  return p;
}

}  // namespace

TEST_CASE("Hessenberg matrix from z is unitary and upper Hessenberg", "[arnoldi]") {
  std::vector<Complex> z{std::polar(0.3, 0.2), std::polar(0.9, -1.0), std::polar(0.5, 2.0), std::polar(0.1, 0.4)};
  CHECK_THROWS_AS(hessenberg_from_z(z, 4), StructuralError);
  for (int d : {5, 4}) {
    if (d == 4) z.back() = std::polar(1.0, 0.4);
    const CMat U = hessenberg_from_z(z, d);
    CHECK((U.adjoint() * U - CMat::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-14);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j + 1 < i; ++j) CHECK(std::abs(U(i, j)) < 1e-15);
  }
  CHECK_THROWS_AS(hessenberg_from_z(z, 7), StructuralError);
  CHECK_THROWS_AS(hessenberg_from_z({Complex(1.2, 0.0)}, 2), NumericalError);
}

TEST_CASE("iteration and full orthogonalization agree on random unitary steps", "[arnoldi]") {
  const auto m = random_model(6, 12, 5);
  ArnoldiOptions opt;
  opt.keep_bases = true;
  opt.keep_hessenberg = true;
  const auto it = run_discrete_evolution(m, 12, ArnoldiMode::Iteration, opt);
  const auto fo = run_discrete_evolution(m, 12, ArnoldiMode::FullOrthogonalization, opt);
  for (std::size_t k = 0; k < it.K.size(); ++k) CHECK(it.K[k] == Approx(fo.K[k]).margin(1e-10));
  for (const auto& st : it.record.steps) {
    CHECK(st.phi.norm() == Approx(1.0).epsilon(1e-12));
    const int d = static_cast<int>(st.basis.size());
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        CHECK(std::abs(st.basis[a].dot(st.basis[b]) - (a == b ? 1.0 : 0.0)) < 1e-10);
  }
  for (const auto& row : it.abs_z)
    for (double x : row) CHECK(x <= 1.0 + 1e-12);
}

TEST_CASE("recorded Hessenberg matrix matches the z parametrisation", "[arnoldi]") {
  const auto m = random_model(5, 4, 9);
  ArnoldiOptions opt;
  opt.keep_hessenberg = true;
  const auto res = run_discrete_evolution(m, 4, ArnoldiMode::Iteration, opt);
  for (std::size_t k = 1; k < res.record.steps.size(); ++k) {
    const auto& st = res.record.steps[k];
    const int d = static_cast<int>(st.hessenberg.rows());
    const CMat H = hessenberg_from_z(st.z, d).leftCols(st.hessenberg.cols());
    CHECK((st.hessenberg - H).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("step count outside the model is a configuration error", "[arnoldi]") {
  const auto m = random_model(3, 2, 1);
  CHECK_THROWS_AS(run_discrete_evolution(m, 3, ArnoldiMode::Iteration), ConfigError);
  CHECK_THROWS_AS(matrix_step_model({CMat::Identity(2, 2)}, {CVec::Unit(2, 0)}, CVec::Unit(2, 0)), StructuralError);
}

TEST_CASE("Ising mode gates commute and preserve their seeds", "[arnoldi]") {
  const auto p = small_ising(8, 3.0);
  const int L = p.n_modes();
  std::mt19937 rng(2);
  const CVec x0 = random_unit(1 << L, rng);
  for (int k : {0, 17, 30, 55}) {
    const auto modes = ising_modes(p, k);
    CVec fwd = x0, rev = x0;
    for (int q = 0; q < L; ++q) apply_mode_gate(fwd, ising_mode_unitary(modes[q], p.dt), q, L);
    for (int q = L - 1; q >= 0; --q) apply_mode_gate(rev, ising_mode_unitary(modes[q], p.dt), q, L);
    CHECK((fwd - rev).cwiseAbs().maxCoeff() < 1e-14);
    for (const auto& m : modes) {
      const CMat u = ising_mode_unitary(m, p.dt);
      CHECK((u.adjoint() * u - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
      const CVec s = ising_mode_seed(m).cast<Complex>();
      const double hn = std::hypot(m.eps, m.v);
      CHECK((u * s - std::exp(-kI * hn * p.dt) * s).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("split-storage Ising curve in double matches the generic full orthogonalization", "[arnoldi]") {
  const auto p = small_ising(8, 3.0);
  const auto gen = run_discrete_evolution(ising_step_model(p), p.m_steps(), ArnoldiMode::FullOrthogonalization);
  const auto fast = ising_full_orthogonalization<double>(p);
  REQUIRE(fast.K.size() == gen.K.size());
  for (std::size_t k = 0; k < gen.K.size(); ++k) CHECK(fast.K[k] == Approx(gen.K[k]).margin(1e-8));
  CHECK(fast.max_completeness_dev < 1e-10);
}

TEST_CASE("recorded |z| of the split-storage kernel matches the generic run", "[arnoldi]") {
  const auto p = small_ising(8, 3.0);
  const auto gen = run_discrete_evolution(ising_step_model(p), p.m_steps(), ArnoldiMode::FullOrthogonalization);
  const auto fast = ising_full_orthogonalization<quad>(p, 0, 2, true);
  REQUIRE(fast.abs_z.size() == gen.abs_z.size());
  double dev = 0.0, mx = 0.0;
  for (std::size_t k = 0; k < gen.abs_z.size(); ++k) {
    REQUIRE(fast.abs_z[k].size() == gen.abs_z[k].size());
    // low indices, where the double run is well conditioned
    for (std::size_t n = 0; n < std::min<std::size_t>(5, gen.abs_z[k].size()); ++n)
      dev = std::max(dev, std::abs(fast.abs_z[k][n] - gen.abs_z[k][n]));
    for (double z : fast.abs_z[k]) mx = std::max(mx, z);
  }
  CHECK(dev < 1e-8);
  CHECK(mx <= 1.0 + 1e-12);
}

TEST_CASE("double-double arithmetic carries about 32 digits", "[arnoldi]") {
  const DoubleDouble third = DoubleDouble(1.0) / DoubleDouble(3.0);
  const DoubleDouble back = third * DoubleDouble(3.0) - DoubleDouble(1.0);
  CHECK(std::abs(static_cast<double>(back)) < 1e-31);
  const DoubleDouble r = sqrt(DoubleDouble(2.0));
  CHECK(std::abs(static_cast<double>(r * r - DoubleDouble(2.0))) < 1e-31);
  const DoubleDouble tiny = DoubleDouble(1.0) + DoubleDouble(1e-20);
  CHECK(static_cast<double>(tiny - DoubleDouble(1.0)) == Approx(1e-20).epsilon(1e-12));
}

TEST_CASE("double-double Ising curve tracks quad", "[arnoldi]") {
  const auto p = small_ising(8, 5.0);
  const auto q = ising_full_orthogonalization<quad>(p);
  const auto d = ising_full_orthogonalization<DoubleDouble>(p);
  double dev = 0.0;
  for (std::size_t k = 0; k < q.K.size(); ++k) dev = std::max(dev, std::abs(q.K[k] - d.K[k]));
  CHECK(dev < 1e-12);
}

TEST_CASE("quad Ising curve matches a 50-digit reference", "[arnoldi]") {
  using mp50 = boost::multiprecision::cpp_bin_float_50;
  const auto p = small_ising(8, 5.0);
  const auto q = ising_full_orthogonalization<quad>(p);
  const auto r = ising_full_orthogonalization<mp50>(p);
  REQUIRE(q.K.size() == r.K.size());
  double dev = 0.0;
  for (std::size_t k = 0; k < q.K.size(); ++k) dev = std::max(dev, std::abs(q.K[k] - r.K[k]));
  CHECK(dev < 1e-12);
}

TEST_CASE("discrete complexity of a sampled continuous drive converges to the Lanczos chain", "[arnoldi]") {
  SpinParams sp;
  sp.two_s = 4;
  sp.theta = Protocol::ramp_to_pi(2.0);
  ModelSpec s;
  s.params = sp;
  auto err = [&](int n) {
    const TimeGrid g(0.0, 2.0, n);
    const auto res = run_discrete_evolution(continuous_step_model(s, g), n, ArnoldiMode::FullOrthogonalization);
    const auto kd = run_lanczos_td(s, g, 10);
    const auto sr = spread_report(propagate_chain(kd), kd);
    double e = 0.0;
    for (int j = 0; j < g.size(); ++j) e = std::max(e, std::abs(res.K[j] - sr.K[j]));
    return e;
  };
  const double e1 = err(400), e2 = err(800);
  CHECK(e2 < 5e-3);
  CHECK(e1 / e2 > 1.8);
}
