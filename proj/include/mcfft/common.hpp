#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcfft {

using Complex = std::complex<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transform size or channel count outside the supported domain.
class SizeError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

class CircuitError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
  if (!is_power_of_two(n)) throw SizeError("not a power of two: " + std::to_string(n));
  int b = 0;
  while ((std::size_t{1} << b) < n) ++b;
  return b;
}

constexpr std::size_t reverse_bits(std::size_t v, int bits) {
  std::size_t r = 0;
  for (int i = 0; i < bits; ++i) r |= ((v >> i) & 1u) << (bits - 1 - i);
  return r;
}

constexpr long floor_mod(long a, long m) {
  long r = a % m;
  return r < 0 ? r + m : r;
}

constexpr long floor_div(long a, long m) { return (a - floor_mod(a, m)) / m; }

// W_n^k = exp(-2 pi i k / n)
inline Complex twiddle(std::size_t k, std::size_t n) {
  const double a = 2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
  return {std::cos(a), -std::sin(a)};
}

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace mcfft
