#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "torusdecay/error.hpp"

namespace torusdecay {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Int numerator(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Int denominator(const Rational& r) { return boost::multiprecision::denominator(r); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Exact conversion: every finite double is a dyadic rational.
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw InvalidInput("value must be finite");
    if (x == 0.0) return Rational(0);
    int exp = 0;
    const double m = std::frexp(x, &exp);
    const auto mant = static_cast<long long>(std::ldexp(m, 53));
    Rational r(mant);
    const int e2 = exp - 53;
    if (e2 > 0)
        r *= Rational(Int(1) << e2);
    else if (e2 < 0)
        r /= Rational(Int(1) << (-e2));
    return r;
}

// floor(a/b) for exact integers, b != 0.
inline Int floor_div(const Int& a, const Int& b) {
    Int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline Int rational_floor(const Rational& r) {
    return floor_div(numerator(r), denominator(r));
}

// Parses "p", "-p" or "p/q" with decimal digits only. Anything else
// (floats, empty strings, zero denominators) is rejected.
inline Rational parse_rational(const std::string& text) {
    const auto bad = [&]() -> Rational {
        throw InvalidInput("not an exact rational: '" + text + "' (use e.g. \"3/2\" or \"-1\")");
    };
    if (text.empty()) return bad();
    auto parse_int = [&](const std::string& s) -> Int {
        if (s.empty()) bad();
        std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
        if (i == s.size()) bad();
        for (; i < s.size(); ++i)
            if (s[i] < '0' || s[i] > '9') bad();
        return Int(s);
    };
    const auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(parse_int(text));
    const Int num = parse_int(text.substr(0, slash));
    const Int den = parse_int(text.substr(slash + 1));
    if (den == 0) bad();
    return Rational(num, den);
}

// Canonical form: "p" when the denominator is 1, else "p/q" with q > 0.
inline std::string to_string(const Rational& r) {
    const Int num = numerator(r), den = denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

inline Int lcm_int(const Int& a, const Int& b) {
    if (a == 0 || b == 0) return 0;
    return boost::multiprecision::lcm(a, b);
}

// Least common multiple of the denominators of a list of rationals (>= 1).
inline Int common_denominator(const std::vector<Rational>& values) {
    Int d = 1;
    for (const auto& v : values) d = lcm_int(d, denominator(v));
    return d;
}

} // namespace torusdecay
