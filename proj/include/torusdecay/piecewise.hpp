#pragma once

#include <cstddef>
#include <vector>

#include "torusdecay/error.hpp"
#include "torusdecay/poly.hpp"

namespace torusdecay {

// Scalar function on [b_0, b_m] given by one polynomial per interval
// [b_j, b_{j+1}]. Breakpoints are exact rationals and strictly increasing.
// The function may jump at interior breakpoints; is_continuous() reports
// whether adjacent pieces agree there. Point evaluation at an interior
// breakpoint uses the left piece (left-continuous convention); integrals
// never depend on that choice.
class PiecewisePoly {
public:
    PiecewisePoly(std::vector<Rational> breakpoints, std::vector<Poly> pieces);

    static PiecewisePoly constant(const Rational& value, const Rational& lo, const Rational& hi);
    static PiecewisePoly from_poly(const Poly& p, const Rational& lo, const Rational& hi);

    const std::vector<Rational>& breakpoints() const { return breaks_; }
    const std::vector<Poly>& pieces() const { return pieces_; }
    const Poly& piece(std::size_t j) const { return pieces_[j]; }
    std::size_t piece_count() const { return pieces_.size(); }
    const Rational& domain_lo() const { return breaks_.front(); }
    const Rational& domain_hi() const { return breaks_.back(); }
    bool is_continuous() const { return continuous_; }

    // Index of the piece containing u, resolving interior breakpoints to the
    // left resp. right neighbour. Throws InvalidInput outside the domain.
    std::size_t piece_index_left(const Rational& u) const;
    std::size_t piece_index_right(const Rational& u) const;

    Rational eval(const Rational& u) const;
    Rational eval_left(const Rational& u) const;   // limit from below, u > domain_lo
    Rational eval_right(const Rational& u) const;  // limit from above, u < domain_hi

    PiecewisePoly derivative() const;

    // Continuous antiderivative vanishing at anchor; anchor must lie in the
    // domain. Differentiates back to *this on every open piece.
    PiecewisePoly primitive(const Rational& anchor) const;

    // Same function with extra breakpoints inserted (values outside the open
    // domain are ignored).
    PiecewisePoly refined(const std::vector<Rational>& extra) const;

    // Narrow the domain to [lo, hi]; requires domain_lo <= lo < hi <= domain_hi.
    PiecewisePoly restricted(const Rational& lo, const Rational& hi) const;

    bool is_zero() const;

    friend PiecewisePoly operator+(const PiecewisePoly& x, const PiecewisePoly& y);
    friend PiecewisePoly operator-(const PiecewisePoly& x, const PiecewisePoly& y);
    friend PiecewisePoly operator*(const PiecewisePoly& x, const PiecewisePoly& y);
    PiecewisePoly operator*(const Rational& s) const;
    PiecewisePoly operator-() const;

    // Equality as functions: identical domains and identical polynomials after
    // refining both to the union of breakpoints.
    friend bool operator==(const PiecewisePoly& x, const PiecewisePoly& y);
    friend bool operator!=(const PiecewisePoly& x, const PiecewisePoly& y) { return !(x == y); }

private:
    std::vector<Rational> breaks_;
    std::vector<Poly> pieces_;
    bool continuous_ = true;

    void recompute_continuity();
};

// The union of both breakpoint lists; domains must coincide.
std::vector<Rational> merged_breakpoints(const PiecewisePoly& x, const PiecewisePoly& y);

// Weighted primitive u -> integral_0^u g(v) f'(v) dv, exact and anchored to
// vanish at 0. Continuous even when g jumps. Domains of g and f must coincide
// and contain 0.
PiecewisePoly apply_Tg(const PiecewisePoly& g, const PiecewisePoly& f);

}  // namespace torusdecay
