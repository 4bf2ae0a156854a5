#include "opalg/rational.hpp"

#include <numeric>
#include <stdexcept>

namespace opalg {

namespace {

std::int64_t checked(__int128 v, const char* what) {
  if (v > INT64_MAX || v < INT64_MIN)
    throw std::overflow_error(std::string("rational overflow in ") + what);
  return static_cast<std::int64_t>(v);
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
  if (d == 0) throw std::domain_error("rational with zero denominator");
  normalize();
}

void Rational::normalize() {
  if (den_ < 0) { num_ = -num_; den_ = -den_; }
  std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
  if (g > 1) { num_ /= g; den_ /= g; }
  if (num_ == 0) den_ = 1;
}

Rational Rational::operator-() const {
  Rational r;
  r.num_ = checked(-static_cast<__int128>(num_), "negate");
  r.den_ = den_;
  return r;
}

Rational Rational::operator+(const Rational& o) const {
  __int128 n = static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_;
  __int128 d = static_cast<__int128>(den_) * o.den_;
  // reduce via gcd on the 128-bit values to keep within range
  auto g128 = [](__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) { __int128 t = a % b; a = b; b = t; }
    return a == 0 ? (__int128)1 : a;
  };
  __int128 g2 = g128(n, d);
  n /= g2; d /= g2;
  Rational r;
  r.num_ = checked(n, "add");
  r.den_ = checked(d, "add");
  r.normalize();
  return r;
}

Rational Rational::operator-(const Rational& o) const { return *this + (-o); }

Rational Rational::operator*(const Rational& o) const {
  std::int64_t g1 = std::gcd(num_ < 0 ? -num_ : num_, o.den_);
  std::int64_t g2 = std::gcd(o.num_ < 0 ? -o.num_ : o.num_, den_);
  __int128 n = static_cast<__int128>(num_ / g1) * (o.num_ / g2);
  __int128 d = static_cast<__int128>(den_ / g2) * (o.den_ / g1);
  Rational r;
  r.num_ = checked(n, "mul");
  r.den_ = checked(d, "mul");
  r.normalize();
  return r;
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num_ == 0) throw std::domain_error("rational division by zero");
  return *this * o.inverse();
}

bool Rational::operator<(const Rational& o) const {
  return static_cast<__int128>(num_) * o.den_ < static_cast<__int128>(o.num_) * den_;
}

Rational Rational::inverse() const {
  if (num_ == 0) throw std::domain_error("inverse of zero");
  return Rational(den_, num_);
}

Rational Rational::pow(long e) const {
  if (e == 0) return Rational(1);
  Rational base = e < 0 ? inverse() : *this;
  unsigned long k = e < 0 ? -static_cast<unsigned long>(e) : static_cast<unsigned long>(e);
  Rational acc(1);
  while (k) {
    if (k & 1) acc *= base;
    base = (k >>= 1) ? base * base : base;
  }
  return acc;
}

SqrtSplit Rational::sqrt_split() const {
  auto split = [](std::int64_t v) {
    std::int64_t outside = 1, inside = 1;
    for (std::int64_t f = 2; f * f <= v; ++f) {
      while (v % (f * f) == 0) { outside *= f; v /= f * f; }
      while (v % f == 0) { inside *= f; v /= f; }
    }
    inside *= v;
    return std::pair<std::int64_t, std::int64_t>(outside, inside);
  };
  std::int64_t n = num_ < 0 ? -num_ : num_;
  auto [no, ni] = split(n);
  auto [do_, di] = split(den_);
  // 1/d = d/d^2, so sqrt(n/d) = sqrt(n*d)/d; keep it simple: inside keeps the
  // squarefree numerator over squarefree denominator.
  SqrtSplit s;
  s.outside = Rational(no, do_ * di);
  s.inside = Rational((num_ < 0 ? -1 : 1) * ni * di, 1);
  return s;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational gcd_rational(const Rational& a, const Rational& b) {
  if (a.is_zero()) return b.abs();
  if (b.is_zero()) return a.abs();
  std::int64_t n = std::gcd(a.num() < 0 ? -a.num() : a.num(), b.num() < 0 ? -b.num() : b.num());
  std::int64_t d = std::lcm(a.den(), b.den());
  return Rational(n, d);
}

}  // namespace opalg
