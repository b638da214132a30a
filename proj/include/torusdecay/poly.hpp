#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "torusdecay/rational.hpp"

namespace torusdecay {

// Dense univariate polynomial with exact rational coefficients, ascending
// degree. The zero polynomial has an empty coefficient vector.
class Poly {
public:
    Poly() = default;
    explicit Poly(std::vector<Rational> coeffs) : c_(std::move(coeffs)) { trim(); }
    static Poly constant(const Rational& v) { return Poly(std::vector<Rational>{v}); }

    const std::vector<Rational>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    // degree of the zero polynomial is reported as -1
    int degree() const { return static_cast<int>(c_.size()) - 1; }

    Rational coeff(std::size_t k) const { return k < c_.size() ? c_[k] : Rational(0); }

    bool is_constant() const { return c_.size() <= 1; }
    bool is_affine() const { return c_.size() <= 2; }

    Rational eval(const Rational& x) const {
        Rational acc(0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    double eval(double x) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + to_double(*it);
        return acc;
    }

    Poly derivative() const {
        if (c_.size() <= 1) return Poly();
        std::vector<Rational> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * Rational(static_cast<int>(k));
        return Poly(std::move(d));
    }

    // Antiderivative with zero constant term.
    Poly antiderivative() const {
        if (c_.empty()) return Poly();
        std::vector<Rational> a(c_.size() + 1);
        a[0] = Rational(0);
        for (std::size_t k = 0; k < c_.size(); ++k) a[k + 1] = c_[k] / Rational(static_cast<int>(k) + 1);
        return Poly(std::move(a));
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<Rational> s(std::max(a.c_.size(), b.c_.size()), Rational(0));
        for (std::size_t k = 0; k < a.c_.size(); ++k) s[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) s[k] += b.c_[k];
        return Poly(std::move(s));
    }

    friend Poly operator-(const Poly& a, const Poly& b) {
        std::vector<Rational> s(std::max(a.c_.size(), b.c_.size()), Rational(0));
        for (std::size_t k = 0; k < a.c_.size(); ++k) s[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) s[k] -= b.c_[k];
        return Poly(std::move(s));
    }

    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly();
        std::vector<Rational> p(a.c_.size() + b.c_.size() - 1, Rational(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) p[i + j] += a.c_[i] * b.c_[j];
        return Poly(std::move(p));
    }

    friend Poly operator*(const Rational& s, const Poly& a) {
        std::vector<Rational> p(a.c_);
        for (auto& v : p) v *= s;
        return Poly(std::move(p));
    }

    friend Poly operator-(const Poly& a) { return Rational(-1) * a; }

    friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0) c_.pop_back();
    }
    std::vector<Rational> c_;
};

struct PolyDivMod {
    Poly quotient;
    Poly remainder;
};

// Euclidean division a = q*b + r with deg r < deg b; b must be nonzero.
inline PolyDivMod poly_divmod(const Poly& a, const Poly& b) {
    if (b.is_zero()) throw InvalidInput("polynomial division by zero");
    std::vector<Rational> r(a.coeffs());
    const auto& bc = b.coeffs();
    const std::size_t db = bc.size() - 1;
    if (r.size() < bc.size()) return {Poly(), a};
    std::vector<Rational> q(r.size() - db, Rational(0));
    for (std::size_t i = r.size(); i-- > db;) {
        if (r[i] == 0) continue;
        const Rational f = r[i] / bc[db];
        q[i - db] = f;
        for (std::size_t j = 0; j <= db; ++j) r[i - db + j] -= f * bc[j];
    }
    r.resize(db);
    return {Poly(std::move(q)), Poly(std::move(r))};
}

// Monic greatest common divisor; gcd(p, 0) = monic p.
inline Poly poly_gcd(Poly a, Poly b) {
    while (!b.is_zero()) {
        Poly r = poly_divmod(a, b).remainder;
        a = std::move(b);
        b = std::move(r);
    }
    if (a.is_zero()) return a;
    return (Rational(1) / a.coeffs().back()) * a;
}

} // namespace torusdecay
