#pragma once

#include <cstdint>
#include <string>

namespace opalg {

struct SqrtSplit;

// Exact rational over int64 with overflow checks. Coefficients in operator
// calculus stay tiny, so there is no need for arbitrary precision here; any
// overflow throws instead of silently wrapping.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == 1 && den_ == 1; }
  bool is_integer() const { return den_ == 1; }
  bool is_negative() const { return num_ < 0; }

  Rational operator-() const;
  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const;

  Rational abs() const { return num_ < 0 ? -*this : *this; }
  Rational inverse() const;

  // Integer power; negative exponents invert.
  Rational pow(long e) const;

  // Largest rational s with s^2 dividing *this "squarefree-ly":
  // returns (s, rest) with *this == s^2 * rest, rest squarefree (numerator
  // and denominator squarefree). Used to pull squares out of radicals.
  SqrtSplit sqrt_split() const;

  std::string str() const;

 private:
  std::int64_t num_;
  std::int64_t den_;
  void normalize();
};

struct SqrtSplit {
  Rational outside;
  Rational inside;
};

Rational gcd_rational(const Rational& a, const Rational& b);

}  // namespace opalg
