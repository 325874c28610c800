#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace starmean {

using Point = std::vector<double>;

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Point& a) { return dot(a, a); }

inline double norm(const Point& a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double dist(const Point& a, const Point& b) { return std::sqrt(dist_sq(a, b)); }

inline Point add(const Point& a, const Point& b) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Point sub(const Point& a, const Point& b) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Point scale(const Point& a, double t) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * t;
  return r;
}

// a + t*(b - a)
inline Point lerp(const Point& a, const Point& b, double t) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + t * (b[i] - a[i]);
  return r;
}

inline constexpr double kLexTol = 1e-12;

// Coordinatewise ascending order; coordinates closer than kLexTol compare equal.
inline bool lex_less(const Point& a, const Point& b, double tol = kLexTol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - tol) return true;
    if (a[i] > b[i] + tol) return false;
  }
  return false;
}

inline bool all_finite(const Point& p) {
  for (double v : p)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_dim(const Point& p, std::size_t n, const char* who) {
  if (p.size() != n) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

}  // namespace starmean
