#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cgsim {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Rat make_rat(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  return Rat(BigInt(num), BigInt(den));
}

inline Rat rat_pow(const Rat& base, std::uint64_t e) {
  Rat acc(1);
  Rat b = base;
  while (e > 0) {
    if (e & 1) acc *= b;
    b *= b;
    e >>= 1;
  }
  return acc;
}

// floor(q) as an integer (works for negative q too).
inline BigInt rat_floor(const Rat& q) {
  BigInt n = numerator(q), d = denominator(q);
  BigInt quo = n / d;          // truncates toward zero
  if (n < 0 && quo * d != n) --quo;
  return quo;
}

inline BigInt rat_ceil(const Rat& q) {
  BigInt n = numerator(q), d = denominator(q);
  BigInt quo = n / d;
  if (n > 0 && quo * d != n) ++quo;
  return quo;
}

inline std::int64_t to_i64(const BigInt& v) { return static_cast<std::int64_t>(v); }

inline double to_double(const Rat& q) { return q.convert_to<double>(); }

inline BigInt binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt r = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    r *= BigInt(n - i);
    r /= BigInt(i + 1);
  }
  return r;
}

// Parses "3/40", "0.075", or "1" into an exact rational.
Rat parse_rat(const std::string& text);
std::string rat_to_string(const Rat& q);

}  // namespace cgsim
