#include "vartool/rational.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "vartool/error.hpp"

namespace vartool {

namespace {

using i128 = __int128;

constexpr long long kMax = std::numeric_limits<long long>::max();

bool fits(i128 v) { return v <= kMax && v >= -kMax; }

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

mpq_class mpq_from(long long n, long long d) {
  mpz_class num;
  mpz_class den;
  mpz_set_si(num.get_mpz_t(), n);
  mpz_set_si(den.get_mpz_t(), d);
  mpq_class q(num, den);
  q.canonicalize();
  return q;
}

// Builds a rational from 128-bit numerator/denominator (den != 0).
Rational from128(i128 n, i128 d) {
  if (d < 0) {
    n = -n;
    d = -d;
  }
  i128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  if (fits(n) && fits(d)) return Rational(static_cast<long long>(n), static_cast<long long>(d));
  // Spill: rebuild through strings of the 128-bit parts.
  auto to_str = [](i128 v) {
    bool neg = v < 0;
    if (neg) v = -v;
    std::string s;
    do {
      s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    } while (v != 0);
    if (neg) s.insert(s.begin(), '-');
    return s;
  };
  mpq_class q(mpz_class(to_str(n)), mpz_class(to_str(d)));
  q.canonicalize();
  return Rational(q);
}

bool mpz_fits_ll(const mpz_class& z) {
  if (!mpz_fits_slong_p(z.get_mpz_t())) return false;
  long v = mpz_get_si(z.get_mpz_t());
  return v != std::numeric_limits<long>::min();
}

}  // namespace

Rational::Rational(long long num, long long den) : num_(num), den_(den) {
  if (den == 0) throw ExprError("rational with zero denominator");
  normalize_small();
}

Rational::Rational(const mpq_class& v) {
  mpq_class c = v;
  c.canonicalize();
  if (mpz_fits_ll(c.get_num()) && mpz_fits_ll(c.get_den())) {
    num_ = mpz_get_si(c.get_num_mpz_t());
    den_ = mpz_get_si(c.get_den_mpz_t());
  } else {
    big_ = std::make_shared<const mpq_class>(std::move(c));
  }
}

Rational Rational::from_mpq(mpq_class v) { return Rational(v); }

void Rational::normalize_small() {
  if (num_ == std::numeric_limits<long long>::min() || den_ == std::numeric_limits<long long>::min()) {
    *this = from_mpq(mpq_from(num_, den_));
    return;
  }
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  long long g = std::gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
  if (num_ == 0) den_ = 1;
}

Rational Rational::parse(std::string_view text) {
  std::string s(text);
  try {
    mpq_class q(s, 10);
    q.canonicalize();
    return Rational(q);
  } catch (const std::invalid_argument&) {
    throw ExprError("not a rational literal: '" + s + "'");
  }
}

bool Rational::is_integer() const { return big_ ? big_->get_den() == 1 : den_ == 1; }

int Rational::sign() const {
  if (big_) return sgn(*big_);
  return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0);
}

mpq_class Rational::to_mpq() const { return big_ ? *big_ : mpq_from(num_, den_); }

double Rational::to_double() const {
  if (big_) return big_->get_d();
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::str() const {
  if (big_) return big_->get_str();
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const {
  if (big_) return from_mpq(-*big_);
  Rational r;
  r.num_ = -num_;
  r.den_ = den_;
  return r;
}

Rational Rational::inverse() const {
  if (is_zero()) throw ExprError("division by zero");
  if (big_) return from_mpq(1 / *big_);
  return Rational(den_, num_);
}

Rational operator+(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    if (a.den_ == 1 && b.den_ == 1) {
      long long r;
      if (!__builtin_add_overflow(a.num_, b.num_, &r) && r != std::numeric_limits<long long>::min())
        return Rational(r);
    }
    i128 n = static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_;
    i128 d = static_cast<i128>(a.den_) * b.den_;
    return from128(n, d);
  }
  return Rational::from_mpq(a.to_mpq() + b.to_mpq());
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    if (a.den_ == 1 && b.den_ == 1) {
      long long r;
      if (!__builtin_mul_overflow(a.num_, b.num_, &r) && r != std::numeric_limits<long long>::min())
        return Rational(r);
    }
    i128 n = static_cast<i128>(a.num_) * b.num_;
    i128 d = static_cast<i128>(a.den_) * b.den_;
    return from128(n, d);
  }
  return Rational::from_mpq(a.to_mpq() * b.to_mpq());
}

Rational operator/(const Rational& a, const Rational& b) { return a * b.inverse(); }

bool operator==(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) return a.num_ == b.num_ && a.den_ == b.den_;
  if (a.big_ && b.big_) return *a.big_ == *b.big_;
  return false;  // canonical: a value that fits is never stored big
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  if (!a.big_ && !b.big_) {
    i128 l = static_cast<i128>(a.num_) * b.den_;
    i128 r = static_cast<i128>(b.num_) * a.den_;
    return l <=> r;
  }
  int c = cmp(a.to_mpq(), b.to_mpq());
  return c <=> 0;
}

Rational Rational::pow(long long k) const {
  if (k < 0) return inverse().pow(-k);
  Rational result(1);
  Rational base = *this;
  while (k > 0) {
    if (k & 1) result *= base;
    base *= base;
    k >>= 1;
  }
  return result;
}

std::optional<Rational> Rational::exact_power(const Exponent& q) const {
  if (q.is_integer()) {
    if (is_zero() && q.num() < 0) return std::nullopt;
    return pow(q.num());
  }
  if (sign() < 0) return std::nullopt;
  if (is_zero()) return q.num() > 0 ? std::optional<Rational>(Rational(0)) : std::nullopt;
  // this^(p/d): take the d-th root of numerator and denominator.
  mpq_class v = to_mpq();
  mpz_class rn;
  mpz_class rd;
  unsigned long d = static_cast<unsigned long>(q.den());
  if (mpz_root(rn.get_mpz_t(), v.get_num_mpz_t(), d) == 0) return std::nullopt;
  if (mpz_root(rd.get_mpz_t(), v.get_den_mpz_t(), d) == 0) return std::nullopt;
  Rational root(mpq_class(rn, rd));
  return root.pow(q.num());
}

std::size_t Rational::hash() const {
  if (big_) return std::hash<std::string>{}(big_->get_str());
  std::size_t h = std::hash<long long>{}(num_);
  return h ^ (std::hash<long long>{}(den_) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

Exponent::Exponent(long long num, long long den) : num_(num), den_(den) {
  if (den_ == 0) throw ExprError("exponent with zero denominator");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  long long g = std::gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
  if (num_ == 0) den_ = 1;
}

Exponent::Exponent(const Rational& r) {
  if (!r.is_small()) throw ExprError("exponent too large: " + r.str());
  *this = Exponent(r.small_num(), r.small_den());
}

long long Exponent::floor() const {
  long long q = num_ / den_;
  if (num_ % den_ != 0 && num_ < 0) --q;
  return q;
}

std::string Exponent::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Exponent operator+(const Exponent& a, const Exponent& b) {
  i128 n = static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_;
  i128 d = static_cast<i128>(a.den_) * b.den_;
  i128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  if (!fits(n) || !fits(d)) throw ExprError("exponent overflow");
  return Exponent(static_cast<long long>(n), static_cast<long long>(d));
}

Exponent operator*(const Exponent& a, const Exponent& b) {
  i128 n = static_cast<i128>(a.num_) * b.num_;
  i128 d = static_cast<i128>(a.den_) * b.den_;
  i128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  if (!fits(n) || !fits(d)) throw ExprError("exponent overflow");
  return Exponent(static_cast<long long>(n), static_cast<long long>(d));
}

std::strong_ordering operator<=>(const Exponent& a, const Exponent& b) {
  i128 l = static_cast<i128>(a.num_) * b.den_;
  i128 r = static_cast<i128>(b.num_) * a.den_;
  return l <=> r;
}

}  // namespace vartool
