#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace torusmix {

// Exact rational scalar. GMP-backed so schedule algebra and exact flow
// composition never round.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// floor(a) for rational a, exact.
inline long floor_long(const Rational& a) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
  if (!q.fits_slong_p()) throw std::overflow_error("floor_long: out of range");
  return q.get_si();
}

inline Rational frac_part(const Rational& a) { return a - floor_long(a); }

// a reduced mod 1 into [0,1).
inline Rational mod1(const Rational& a) { return frac_part(a); }

inline bool is_integer(const Rational& a) { return a.get_den() == 1; }

inline bool is_odd_integer(const Rational& a) {
  return is_integer(a) && mpz_odd_p(a.get_num_mpz_t());
}

// Exact dyadic rational num / 2^lden. All schedule times of the dyadic
// family live here; comparison and ring ops are value-based and never
// round. Overflow of the int64 numerator throws instead of wrapping.
struct Dyadic {
  std::int64_t num = 0;  // numerator
  int lden = 0;          // log2 of the denominator, >= 0

  Dyadic() = default;
  Dyadic(std::int64_t n) : num(n), lden(0) {}
  Dyadic(std::int64_t n, int l) : num(n), lden(l) {
    if (l < 0) throw std::invalid_argument("Dyadic: negative log-denominator");
    normalize();
  }

  static Dyadic pow2(int e) {  // 2^e, e may be negative
    return e >= 0 ? Dyadic(std::int64_t(1) << e, 0) : Dyadic(1, -e);
  }

  void normalize() {
    if (num == 0) { lden = 0; return; }
    while (lden > 0 && (num & 1) == 0) { num >>= 1; --lden; }
  }

  double to_double() const { return std::ldexp(double(num), -lden); }
  Rational to_rational() const {
    Rational r(num);
    r /= Rational(mpz_class(1) << lden);
    return r;
  }

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    int l = a.lden > b.lden ? a.lden : b.lden;
    __int128 s = (__int128)a.num << (l - a.lden);
    s += (__int128)b.num << (l - b.lden);
    return make_checked(s, l);
  }
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b) {
    int l = a.lden > b.lden ? a.lden : b.lden;
    __int128 s = (__int128)a.num << (l - a.lden);
    s -= (__int128)b.num << (l - b.lden);
    return make_checked(s, l);
  }
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    return make_checked((__int128)a.num * b.num, a.lden + b.lden);
  }
  Dyadic operator-() const { return Dyadic(-num, lden); }

  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    int l = a.lden > b.lden ? a.lden : b.lden;
    return ((__int128)a.num << (l - a.lden)) == ((__int128)b.num << (l - b.lden));
  }
  friend bool operator!=(const Dyadic& a, const Dyadic& b) { return !(a == b); }
  friend bool operator<(const Dyadic& a, const Dyadic& b) {
    int l = a.lden > b.lden ? a.lden : b.lden;
    return ((__int128)a.num << (l - a.lden)) < ((__int128)b.num << (l - b.lden));
  }
  friend bool operator>(const Dyadic& a, const Dyadic& b) { return b < a; }
  friend bool operator<=(const Dyadic& a, const Dyadic& b) { return !(b < a); }
  friend bool operator>=(const Dyadic& a, const Dyadic& b) { return !(a < b); }

  std::string str() const {
    return std::to_string(num) + (lden ? "/2^" + std::to_string(lden) : "");
  }

 private:
  static Dyadic make_checked(__int128 n, int l) {
    while (l > 0 && n != 0 && (n & 1) == 0) { n >>= 1; --l; }
    if (n == 0) l = 0;
    if (n > INT64_MAX || n < INT64_MIN)
      throw std::overflow_error("Dyadic: numerator overflow");
    Dyadic d;
    d.num = (std::int64_t)n;
    d.lden = l;
    return d;
  }
};

inline Rational to_rational(const Dyadic& d) { return d.to_rational(); }

}  // namespace torusmix
