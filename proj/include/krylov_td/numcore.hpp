#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "error.hpp"

namespace krylov_td {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDeflationTol = 1e-9;

class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double t_start, double t_end, int n_steps)
      : t_start_(t_start), t_end_(t_end), n_steps_(n_steps) {
    if (n_steps < 4) throw StructuralError("TimeGrid: n_steps must be >= 4");
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start))
      throw StructuralError("TimeGrid: need finite t_start < t_end");
  }

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  int n_steps() const { return n_steps_; }
  int size() const { return n_steps_ + 1; }
  double dt() const { return (t_end_ - t_start_) / n_steps_; }
  double node(int j) const { return j == n_steps_ ? t_end_ : t_start_ + j * dt(); }
  double midpoint(int j) const { return t_start_ + (j + 0.5) * dt(); }

  TimeGrid refined(int factor = 2) const { return TimeGrid(t_start_, t_end_, n_steps_ * factor); }

 private:
  double t_start_ = 0.0;
  double t_end_ = 1.0;
  int n_steps_ = 4;
};

namespace detail {

template <typename V>
void check_series(const std::vector<V>& values, const TimeGrid& grid, const char* who) {
  if (static_cast<int>(values.size()) != grid.size())
    throw StructuralError(std::string(who) + ": series length does not match grid");
  if constexpr (!std::is_arithmetic_v<V>) {
    for (const auto& v : values)
      if (v.rows() != values.front().rows() || v.cols() != values.front().cols())
        throw StructuralError(std::string(who) + ": dimension mismatch across nodes");
  }
}

}  // namespace detail

// Second order: central inside, three-point one-sided at both ends.
template <typename V>
std::vector<V> finite_diff_series(const std::vector<V>& values, const TimeGrid& grid) {
  detail::check_series(values, grid, "finite_diff_series");
  const int n = grid.n_steps();
  const double h2 = 2.0 * grid.dt();
  std::vector<V> out(values.size());
  out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / h2;
  for (int j = 1; j < n; ++j) out[j] = (values[j + 1] - values[j - 1]) / h2;
  out[n] = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / h2;
  return out;
}

// Fourth order five-point stencils; used for audits independent of the recursion.
template <typename V>
std::vector<V> finite_diff_series_4th(const std::vector<V>& values, const TimeGrid& grid) {
  detail::check_series(values, grid, "finite_diff_series_4th");
  const int n = grid.n_steps();
  const double h12 = 12.0 * grid.dt();
  const auto& v = values;
  std::vector<V> out(values.size());
  out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / h12;
  out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / h12;
  for (int j = 2; j <= n - 2; ++j) out[j] = (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) / h12;
  out[n - 1] = (3.0 * v[n] + 10.0 * v[n - 1] - 18.0 * v[n - 2] + 6.0 * v[n - 3] - v[n - 4]) / h12;
  out[n] = (25.0 * v[n] - 48.0 * v[n - 1] + 36.0 * v[n - 2] - 16.0 * v[n - 3] + 3.0 * v[n - 4]) / h12;
  return out;
}

// Two classical Gram-Schmidt passes. Basis is any range of CVec.
template <typename Range>
CVec project_out(CVec v, const Range& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    CVec acc = CVec::Zero(v.size());
    for (const CVec& q : basis) acc.noalias() += q * q.dot(v);
    v -= acc;
  }
  return v;
}

struct OrthoResult {
  double residual_norm = 0.0;
  std::optional<CVec> unit_residual;
};

template <typename Range>
OrthoResult orthonormalize_against(const CVec& v, const Range& basis, double rel_tol = kDeflationTol) {
  const double scale = v.norm();
  CVec r = project_out(v, basis);
  OrthoResult out;
  out.residual_norm = r.norm();
  if (scale > 0.0 && out.residual_norm > rel_tol * scale) out.unit_residual = r / out.residual_norm;
  return out;
}

inline OrthoResult orthonormalize_against(const CVec& v, const std::vector<CVec>& basis,
                                          double rel_tol = kDeflationTol) {
  return orthonormalize_against<std::vector<CVec>>(v, basis, rel_tol);
}

struct HermTridiag {
  RVec diag;
  RVec offdiag;  // offdiag[k-1] = b_k

  int dim() const { return static_cast<int>(diag.size()); }
  void validate() const {
    if (diag.size() < 1 || offdiag.size() != diag.size() - 1)
      throw StructuralError("HermTridiag: |offdiag| must equal |diag| - 1");
    for (Eigen::Index i = 0; i < offdiag.size(); ++i)
      if (!(offdiag[i] >= 0.0)) throw StructuralError("HermTridiag: offdiag entries must be >= 0");
  }
  CMat dense() const {
    CMat m = CMat::Zero(dim(), dim());
    for (int k = 0; k < dim(); ++k) m(k, k) = diag[k];
    for (int k = 1; k < dim(); ++k) m(k, k - 1) = m(k - 1, k) = offdiag[k - 1];
    return m;
  }
};

struct ComplexTridiag {
  Eigen::VectorXcd offdiag;  // offdiag[k-1] = L(k, k-1)

  int dim() const { return static_cast<int>(offdiag.size()) + 1; }
  CMat dense() const {
    CMat m = CMat::Zero(dim(), dim());
    for (int k = 1; k < dim(); ++k) {
      m(k, k - 1) = offdiag[k - 1];
      m(k - 1, k) = std::conj(offdiag[k - 1]);
    }
    return m;
  }
};

namespace detail {

inline std::string tridiag_snapshot(const RVec& diag, const RVec& off) {
  std::ostringstream os;
  os.precision(17);
  os << "diag=[" << diag.transpose() << "] offdiag=[" << off.transpose() << "]";
  return os.str();
}

inline CVec real_tridiag_expm_apply(const RVec& diag, const RVec& off, double dt, const CVec& phi) {
  const Eigen::Index d = diag.size();
  if (phi.size() != d) throw StructuralError("tridiag_expm_apply: dimension mismatch");
  if (dt == 0.0) return phi;
  if (d == 1) return phi * std::exp(-kI * dt * diag[0]);
  Eigen::SelfAdjointEigenSolver<RMat> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw NumericalError("tridiag_expm_apply: eigensolver failed", tridiag_snapshot(diag, off));
  const RMat& q = es.eigenvectors();
  CVec c = q.transpose().cast<Complex>() * phi;
  for (Eigen::Index i = 0; i < d; ++i) c[i] *= std::exp(-kI * dt * es.eigenvalues()[i]);
  return q.cast<Complex>() * c;
}

}  // namespace detail

inline CVec tridiag_expm_apply(const HermTridiag& L, double dt, const CVec& phi) {
  L.validate();
  return detail::real_tridiag_expm_apply(L.diag, L.offdiag, dt, phi);
}

// Gauge the complex off-diagonal to |b| with D = diag(e^{i chi_k}).
inline CVec tridiag_expm_apply(const ComplexTridiag& L, double dt, const CVec& phi) {
  const int d = L.dim();
  if (phi.size() != d) throw StructuralError("tridiag_expm_apply: dimension mismatch");
  CVec gauge(d);
  gauge[0] = 1.0;
  RVec mod(d - 1);
  for (int k = 1; k < d; ++k) {
    const Complex b = L.offdiag[k - 1];
    mod[k - 1] = std::abs(b);
    gauge[k] = mod[k - 1] > 0.0 ? gauge[k - 1] * b / mod[k - 1] : gauge[k - 1];
  }
  CVec rotated = gauge.conjugate().cwiseProduct(phi);
  return gauge.cwiseProduct(detail::real_tridiag_expm_apply(RVec::Zero(d), mod, dt, rotated));
}

// exp(-i dt H) v for a dense Hermitian H.
inline CVec hermitian_expm_apply(const CMat& H, double dt, const CVec& v) {
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_expm_apply: eigensolver failed");
  CVec c = es.eigenvectors().adjoint() * v;
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(-kI * dt * es.eigenvalues()[i]);
  return es.eigenvectors() * c;
}

inline CMat hermitian_expm(const CMat& H, double dt) {
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_expm: eigensolver failed");
  CVec ph(H.rows());
  for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::exp(-kI * dt * es.eigenvalues()[i]);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// Trapezoid, zero at node 0.
inline std::vector<double> cumulative_integral(const std::vector<double>& f, const TimeGrid& grid) {
  if (static_cast<int>(f.size()) != grid.size())
    throw StructuralError("cumulative_integral: length does not match grid");
  std::vector<double> out(f.size(), 0.0);
  const double h = grid.dt();
  for (std::size_t j = 1; j < f.size(); ++j) out[j] = out[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
  return out;
}

inline std::vector<double> row_as_vector(const RMat& m, Eigen::Index row) {
  std::vector<double> out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[j] = m(row, j);
  return out;
}

inline double max_abs_dev_from_identity(const CMat& m) {
  return (m - CMat::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

}  // namespace krylov_td
