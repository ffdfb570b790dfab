#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <string>

namespace hitchinlab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::rational<BigInt>;

inline Rational make_rational(long long num, long long den = 1) {
  return Rational(BigInt(num), BigInt(den));
}

inline BigInt rational_floor(const Rational& q) {
  BigInt quo = q.numerator() / q.denominator();  // truncates toward zero
  if (q.numerator() % q.denominator() != 0 && q.numerator() < 0) --quo;
  return quo;
}

inline double to_double(const Rational& q) {
  return q.numerator().convert_to<double>() / q.denominator().convert_to<double>();
}

inline std::string to_string(const Rational& q) {
  std::string s = q.numerator().str();
  if (q.denominator() != 1) s += "/" + q.denominator().str();
  return s;
}

}  // namespace hitchinlab
