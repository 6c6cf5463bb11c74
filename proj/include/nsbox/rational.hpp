#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace nsbox {

// Arbitrary-precision integers and rationals. cpp_rational keeps values in
// lowest terms with a positive denominator, which is exactly the invariant
// the probability tables rely on.
using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Parses "7", "-3", or "3/4". Throws ParseError on anything else
/// (including zero or negative denominators).
Rational parse_rational(const std::string& text);

/// Canonical "num/den" form with the denominator always spelled out
/// ("1/1", "-3/4"). Round-trips through parse_rational.
std::string rational_str(const Rational& r);

double rational_to_double(const Rational& r);

/// Exact value of the double as a dyadic rational (no rounding involved).
/// Throws DomainError for NaN or infinities.
Rational rational_from_double(double v);

} // namespace nsbox
