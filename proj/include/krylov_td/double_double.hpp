#pragma once

#include <cmath>

namespace krylov_td {

// Unevaluated sum hi + lo of two doubles (about 106 significant bits).
struct DoubleDouble {
  double hi = 0.0, lo = 0.0;

  DoubleDouble() = default;
  DoubleDouble(double x) : hi(x) {}  // NOLINT(google-explicit-constructor)
  DoubleDouble(int x) : hi(x) {}     // NOLINT(google-explicit-constructor)
  DoubleDouble(double h, double l) : hi(h), lo(l) {}

  explicit operator double() const { return hi + lo; }
};

namespace dd_detail {

inline DoubleDouble quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DoubleDouble two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline DoubleDouble two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

}  // namespace dd_detail

inline DoubleDouble operator-(const DoubleDouble& x) { return {-x.hi, -x.lo}; }

inline DoubleDouble operator+(const DoubleDouble& x, const DoubleDouble& y) {
  using namespace dd_detail;
  DoubleDouble s = two_sum(x.hi, y.hi);
  const DoubleDouble t = two_sum(x.lo, y.lo);
  s.lo += t.hi;
  s = quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DoubleDouble operator-(const DoubleDouble& x, const DoubleDouble& y) { return x + (-y); }

inline DoubleDouble operator*(const DoubleDouble& x, const DoubleDouble& y) {
  DoubleDouble p = dd_detail::two_prod(x.hi, y.hi);
  p.lo += x.hi * y.lo + x.lo * y.hi;
  return dd_detail::quick_two_sum(p.hi, p.lo);
}

inline DoubleDouble operator/(const DoubleDouble& x, const DoubleDouble& y) {
  const double q1 = x.hi / y.hi;
  DoubleDouble r = x - y * DoubleDouble(q1);
  const double q2 = r.hi / y.hi;
  r = r - y * DoubleDouble(q2);
  const double q3 = r.hi / y.hi;
  return dd_detail::quick_two_sum(q1, q2) + DoubleDouble(q3);
}

inline DoubleDouble& operator+=(DoubleDouble& x, const DoubleDouble& y) { return x = x + y; }
inline DoubleDouble& operator-=(DoubleDouble& x, const DoubleDouble& y) { return x = x - y; }
inline DoubleDouble& operator*=(DoubleDouble& x, const DoubleDouble& y) { return x = x * y; }
inline DoubleDouble& operator/=(DoubleDouble& x, const DoubleDouble& y) { return x = x / y; }

inline bool operator<(const DoubleDouble& x, const DoubleDouble& y) { return x.hi < y.hi || (x.hi == y.hi && x.lo < y.lo); }
inline bool operator>(const DoubleDouble& x, const DoubleDouble& y) { return y < x; }
inline bool operator<=(const DoubleDouble& x, const DoubleDouble& y) { return !(y < x); }
inline bool operator>=(const DoubleDouble& x, const DoubleDouble& y) { return !(x < y); }
inline bool operator==(const DoubleDouble& x, const DoubleDouble& y) { return x.hi == y.hi && x.lo == y.lo; }

// One Newton correction on the double square root.
inline DoubleDouble sqrt(const DoubleDouble& a) {
  if (a.hi <= 0.0) return DoubleDouble(0.0);
  const double x = std::sqrt(a.hi);
  const DoubleDouble r = a - dd_detail::two_prod(x, x);
  return dd_detail::quick_two_sum(x, r.hi / (2.0 * x));
}

inline DoubleDouble abs(const DoubleDouble& a) { return a.hi < 0.0 ? -a : a; }

}  // namespace krylov_td
