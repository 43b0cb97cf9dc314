#pragma once

#include <cmath>
#include <cstdint>
#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace robex {

// Feature-space / logit-space vector. All public boundaries expect finite entries.
using Vector = std::vector<double>;

// Error categories. The CLI maps these onto exit codes (config=2, io=3, numeric=4).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require_finite(const Vector& v, const char* what) {
  if (!all_finite(v)) throw NumericError(std::string("non-finite values in ") + what);
}

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const Vector& v) { return std::sqrt(dot(v, v)); }

inline double l2_distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Lowest index wins ties.
inline int argmax_index(const Vector& v) {
  if (v.empty()) throw std::invalid_argument("argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Shortest decimal form that round-trips to the same double. Used for CSV output.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Fixed 17-significant-digit form; round-trips exactly. Used for model files.
inline std::string format_double_17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

inline double parse_double(const std::string& s, const char* context) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  double out = 0.0;
  auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc{}) {
    throw IoError(std::string("cannot parse number '") + s + "' in " + context);
  }
  return out;
}

}  // namespace robex
