#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"

namespace krylov_td {

// Drive functions of time: value and first two derivatives.
class Protocol {
 public:
  struct Polynomial {
    std::vector<double> coeffs;  // sum_i c_i t^i
  };
  struct Sinusoid {
    double offset = 0.0, amplitude = 1.0, omega = 1.0, phase = 0.0;  // offset + A sin(w t + phase)
  };
  struct Spline {
    std::vector<double> t, v, m;  // m: second derivatives at knots
  };

  Protocol() : rep_(Polynomial{{0.0}}) {}

  static Protocol constant(double c) { return Protocol(Polynomial{{c}}); }
  static Protocol linear(double c0, double c1) { return Protocol(Polynomial{{c0, c1}}); }
  static Protocol polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) coeffs.push_back(0.0);
    return Protocol(Polynomial{std::move(coeffs)});
  }
  static Protocol sinusoid(double offset, double amplitude, double omega, double phase = 0.0) {
    return Protocol(Sinusoid{offset, amplitude, omega, phase});
  }
  // theta(t) = pi t / t_f
  static Protocol ramp_to_pi(double t_f) { return linear(0.0, 3.14159265358979323846 / t_f); }
  static Protocol tabulated(std::vector<double> t, std::vector<double> v);

  double value(double t) const { return eval(t, 0); }
  double d1(double t) const { return eval(t, 1); }
  double d2(double t) const { return eval(t, 2); }
  double eval(double t, int order) const;

  bool is_constant() const {
    if (auto p = std::get_if<Polynomial>(&rep_)) {
      for (std::size_t i = 1; i < p->coeffs.size(); ++i)
        if (p->coeffs[i] != 0.0) return false;
      return true;
    }
    if (auto s = std::get_if<Sinusoid>(&rep_)) return s->amplitude == 0.0 || s->omega == 0.0;
    return false;
  }

  const std::variant<Polynomial, Sinusoid, Spline>& rep() const { return rep_; }

 private:
  template <typename R>
  explicit Protocol(R r) : rep_(std::move(r)) {}
  std::variant<Polynomial, Sinusoid, Spline> rep_;
};

inline Protocol Protocol::tabulated(std::vector<double> t, std::vector<double> v) {
  const std::size_t n = t.size();
  if (n < 2 || v.size() != n) throw ConfigError("tabulated protocol needs >= 2 matching samples");
  for (std::size_t i = 1; i < n; ++i)
    if (!(t[i] > t[i - 1])) throw ConfigError("tabulated protocol times must increase");
  // natural cubic spline
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    std::vector<double> diag(n - 2), rhs(n - 2), sub(n - 2), sup(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
      sub[i - 1] = h0;
      diag[i - 1] = 2.0 * (h0 + h1);
      sup[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < diag.size(); ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = diag.size(); i-- > 0;) {
      const double next = i + 1 < diag.size() ? m[i + 2] : 0.0;
      m[i + 1] = (rhs[i] - sup[i] * next) / diag[i];
    }
  }
  return Protocol(Spline{std::move(t), std::move(v), std::move(m)});
}

inline double Protocol::eval(double t, int order) const {
  if (auto p = std::get_if<Polynomial>(&rep_)) {
    double acc = 0.0;
    for (std::size_t i = p->coeffs.size(); i-- > 0;) {
      if (static_cast<int>(i) < order) break;
      double c = p->coeffs[i];
      for (int q = 0; q < order; ++q) c *= static_cast<double>(i - q);
      acc = acc * t + c;
    }
    return acc;
  }
  if (auto s = std::get_if<Sinusoid>(&rep_)) {
    const double x = s->omega * t + s->phase;
    switch (order) {
      case 0: return s->offset + s->amplitude * std::sin(x);
      case 1: return s->amplitude * s->omega * std::cos(x);
      default: return -s->amplitude * s->omega * s->omega * std::sin(x);
    }
  }
  const auto& sp = std::get<Spline>(rep_);
  const std::size_t n = sp.t.size();
  std::size_t i = std::upper_bound(sp.t.begin(), sp.t.end(), t) - sp.t.begin();
  i = std::clamp<std::size_t>(i, 1, n - 1);
  const double h = sp.t[i] - sp.t[i - 1];
  const double A = (sp.t[i] - t) / h, B = (t - sp.t[i - 1]) / h;
  const double m0 = sp.m[i - 1], m1 = sp.m[i];
  switch (order) {
    case 0:
      return A * sp.v[i - 1] + B * sp.v[i] + ((A * A * A - A) * m0 + (B * B * B - B) * m1) * h * h / 6.0;
    case 1:
      return (sp.v[i] - sp.v[i - 1]) / h - (3.0 * A * A - 1.0) / 6.0 * h * m0 + (3.0 * B * B - 1.0) / 6.0 * h * m1;
    default:
      return A * m0 + B * m1;
  }
}

}  // namespace krylov_td
