#include "nsbox/rational.hpp"

#include "nsbox/errors.hpp"

#include <cctype>
#include <cmath>

namespace nsbox {

namespace {

Integer parse_integer(const std::string& s) {
    if (s.empty())
        throw ParseError("empty integer literal");
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size())
        throw ParseError("sign without digits: '" + s + "'");
    for (std::size_t k = i; k < s.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(s[k])))
            throw ParseError("not an integer literal: '" + s + "'");
    return Integer(s);
}

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace

Rational parse_rational(const std::string& text) {
    const std::string s = strip(text);
    const std::size_t slash = s.find('/');
    if (slash == std::string::npos)
        return Rational(parse_integer(s));
    const Integer num = parse_integer(strip(s.substr(0, slash)));
    const Integer den = parse_integer(strip(s.substr(slash + 1)));
    if (den <= 0)
        throw ParseError("denominator must be positive: '" + text + "'");
    return Rational(num, den);
}

std::string rational_str(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

double rational_to_double(const Rational& r) {
    return r.convert_to<double>();
}

Rational rational_from_double(double v) {
    if (!std::isfinite(v))
        throw DomainError("cannot convert non-finite double to rational");
    if (v == 0.0) return Rational(0);
    int exp = 0;
    const double m = std::frexp(v, &exp);
    // m in [0.5, 1); 53 mantissa bits make this exact.
    const long long mant = static_cast<long long>(std::ldexp(m, 53));
    exp -= 53;
    if (exp >= 0)
        return Rational(Integer(mant) << exp);
    return Rational(Integer(mant), Integer(1) << -exp);
}

} // namespace nsbox
