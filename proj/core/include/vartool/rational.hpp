#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace vartool {

class Exponent;

/// Exact rational number in lowest terms with a positive denominator.
///
/// Values that fit in 64-bit numerator/denominator are stored inline; larger
/// values spill to a shared, immutable GMP rational.
class Rational {
 public:
  Rational() = default;
  Rational(int v) : num_(v) {}  // NOLINT(google-explicit-constructor)
  Rational(long v) : num_(v) {}  // NOLINT(google-explicit-constructor)
  Rational(long long v) : num_(v) {}  // NOLINT(google-explicit-constructor)
  Rational(long long num, long long den);
  explicit Rational(const mpq_class& v);

  /// Parses "p", "-p" or "p/q".
  static Rational parse(std::string_view text);

  bool is_zero() const { return !big_ && num_ == 0; }
  bool is_one() const { return !big_ && num_ == 1 && den_ == 1; }
  bool is_integer() const;
  int sign() const;

  mpq_class to_mpq() const;
  double to_double() const;
  std::string str() const;

  /// Numerator and denominator when they fit in 64 bits.
  bool is_small() const { return !big_; }
  long long small_num() const { return num_; }
  long long small_den() const { return den_; }

  Rational operator-() const;
  Rational abs() const { return sign() < 0 ? -*this : *this; }
  Rational inverse() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b);
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  /// Integer power; negative exponents invert (throws on 0^negative).
  Rational pow(long long k) const;

  /// Exact value of this^q when it is rational (requires this >= 0 unless q
  /// is an integer).
  std::optional<Rational> exact_power(const Exponent& q) const;

  std::size_t hash() const;

 private:
  static Rational from_mpq(mpq_class v);
  void normalize_small();

  long long num_ = 0;
  long long den_ = 1;
  std::shared_ptr<const mpq_class> big_;
};

/// Small exact rational used for exponents.
class Exponent {
 public:
  constexpr Exponent() = default;
  constexpr Exponent(long long v) : num_(v) {}  // NOLINT(google-explicit-constructor)
  Exponent(long long num, long long den);
  explicit Exponent(const Rational& r);

  long long num() const { return num_; }
  long long den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  bool is_one() const { return num_ == 1 && den_ == 1; }
  /// Largest integer <= value.
  long long floor() const;
  /// value - floor(value), in [0, 1).
  Exponent frac() const { return *this - Exponent(floor()); }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  Rational to_rational() const { return Rational(num_, den_); }
  std::string str() const;

  Exponent operator-() const { return Exponent(-num_, den_); }
  friend Exponent operator+(const Exponent& a, const Exponent& b);
  friend Exponent operator-(const Exponent& a, const Exponent& b) { return a + (-b); }
  friend Exponent operator*(const Exponent& a, const Exponent& b);
  friend bool operator==(const Exponent& a, const Exponent& b) = default;
  friend std::strong_ordering operator<=>(const Exponent& a, const Exponent& b);

 private:
  long long num_ = 0;
  long long den_ = 1;
};

}  // namespace vartool
