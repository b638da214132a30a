#include "torusdecay/piecewise.hpp"

#include <algorithm>

namespace torusdecay {

PiecewisePoly::PiecewisePoly(std::vector<Rational> breakpoints, std::vector<Poly> pieces)
    : breaks_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    if (breaks_.size() < 2) throw InvalidInput("piecewise function needs at least two breakpoints");
    if (pieces_.size() + 1 != breaks_.size())
        throw InvalidInput("piece count must be one less than breakpoint count");
    for (std::size_t j = 0; j + 1 < breaks_.size(); ++j)
        if (!(breaks_[j] < breaks_[j + 1]))
            throw InvalidInput("breakpoints must be strictly increasing");
    recompute_continuity();
}

void PiecewisePoly::recompute_continuity() {
    continuous_ = true;
    for (std::size_t j = 0; j + 1 < pieces_.size(); ++j)
        if (pieces_[j].eval(breaks_[j + 1]) != pieces_[j + 1].eval(breaks_[j + 1])) {
            continuous_ = false;
            return;
        }
}

PiecewisePoly PiecewisePoly::constant(const Rational& value, const Rational& lo, const Rational& hi) {
    return from_poly(Poly({value}), lo, hi);
}

PiecewisePoly PiecewisePoly::from_poly(const Poly& p, const Rational& lo, const Rational& hi) {
    return PiecewisePoly({lo, hi}, {p});
}

std::size_t PiecewisePoly::piece_index_left(const Rational& u) const {
    if (u < domain_lo() || u > domain_hi()) throw InvalidInput("evaluation point outside domain");
    if (u == domain_lo()) return 0;
    // first breakpoint >= u; the piece ending there contains u as its right end
    const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), u);
    return static_cast<std::size_t>(it - breaks_.begin()) - 1;
}

std::size_t PiecewisePoly::piece_index_right(const Rational& u) const {
    if (u < domain_lo() || u > domain_hi()) throw InvalidInput("evaluation point outside domain");
    if (u == domain_hi()) return pieces_.size() - 1;
    // last breakpoint <= u; the piece starting there contains u as its left end
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), u);
    return static_cast<std::size_t>(it - breaks_.begin()) - 1;
}

Rational PiecewisePoly::eval(const Rational& u) const { return pieces_[piece_index_left(u)].eval(u); }

Rational PiecewisePoly::eval_left(const Rational& u) const {
    if (u <= domain_lo()) throw InvalidInput("no left limit at or below the lower domain end");
    return pieces_[piece_index_left(u)].eval(u);
}

Rational PiecewisePoly::eval_right(const Rational& u) const {
    if (u >= domain_hi()) throw InvalidInput("no right limit at or above the upper domain end");
    return pieces_[piece_index_right(u)].eval(u);
}

PiecewisePoly PiecewisePoly::derivative() const {
    std::vector<Poly> d;
    d.reserve(pieces_.size());
    for (const Poly& p : pieces_) d.push_back(p.derivative());
    return PiecewisePoly(breaks_, std::move(d));
}

PiecewisePoly PiecewisePoly::primitive(const Rational& anchor) const {
    if (anchor < domain_lo() || anchor > domain_hi()) throw InvalidInput("anchor outside domain");
    std::vector<Poly> prim;
    prim.reserve(pieces_.size());
    for (const Poly& p : pieces_) prim.push_back(p.antiderivative());
    // chain constants left to right so the result is continuous
    std::vector<Rational> shift(pieces_.size(), Rational(0));
    for (std::size_t j = 1; j < pieces_.size(); ++j) {
        const Rational& b = breaks_[j];
        shift[j] = shift[j - 1] + prim[j - 1].eval(b) - prim[j].eval(b);
    }
    const std::size_t ja = piece_index_left(anchor);
    const Rational at_anchor = prim[ja].eval(anchor) + shift[ja];
    std::vector<Poly> out;
    out.reserve(pieces_.size());
    for (std::size_t j = 0; j < pieces_.size(); ++j)
        out.push_back(prim[j] + Poly({shift[j] - at_anchor}));
    return PiecewisePoly(breaks_, std::move(out));
}

PiecewisePoly PiecewisePoly::refined(const std::vector<Rational>& extra) const {
    std::vector<Rational> nb = breaks_;
    for (const Rational& b : extra)
        if (b > domain_lo() && b < domain_hi()) nb.push_back(b);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    std::vector<Poly> np;
    np.reserve(nb.size() - 1);
    for (std::size_t j = 0; j + 1 < nb.size(); ++j) {
        // midpoint picks the original piece covering the new interval
        const Rational mid = (nb[j] + nb[j + 1]) / 2;
        np.push_back(pieces_[piece_index_left(mid)]);
    }
    return PiecewisePoly(std::move(nb), std::move(np));
}

PiecewisePoly PiecewisePoly::restricted(const Rational& lo, const Rational& hi) const {
    if (lo < domain_lo() || hi > domain_hi() || !(lo < hi))
        throw InvalidInput("restriction interval must lie inside the domain");
    const PiecewisePoly fine = refined({lo, hi});
    std::vector<Rational> nb;
    std::vector<Poly> np;
    for (std::size_t j = 0; j + 1 < fine.breaks_.size(); ++j) {
        if (fine.breaks_[j] < lo || fine.breaks_[j + 1] > hi) continue;
        nb.push_back(fine.breaks_[j]);
        np.push_back(fine.pieces_[j]);
    }
    nb.push_back(hi);
    return PiecewisePoly(std::move(nb), std::move(np));
}

bool PiecewisePoly::is_zero() const {
    for (const Poly& p : pieces_)
        if (!(p == Poly())) return false;
    return true;
}

std::vector<Rational> merged_breakpoints(const PiecewisePoly& x, const PiecewisePoly& y) {
    if (x.domain_lo() != y.domain_lo() || x.domain_hi() != y.domain_hi())
        throw InvalidInput("piecewise operands have different domains");
    std::vector<Rational> nb = x.breakpoints();
    nb.insert(nb.end(), y.breakpoints().begin(), y.breakpoints().end());
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    return nb;
}

namespace {

template <typename Op>
PiecewisePoly combine(const PiecewisePoly& x, const PiecewisePoly& y, Op op) {
    const std::vector<Rational> nb = merged_breakpoints(x, y);
    const PiecewisePoly xf = x.refined(nb);
    const PiecewisePoly yf = y.refined(nb);
    std::vector<Poly> np;
    np.reserve(nb.size() - 1);
    for (std::size_t j = 0; j + 1 < nb.size(); ++j) np.push_back(op(xf.piece(j), yf.piece(j)));
    return PiecewisePoly(nb, std::move(np));
}

}  // namespace

PiecewisePoly operator+(const PiecewisePoly& x, const PiecewisePoly& y) {
    return combine(x, y, [](const Poly& a, const Poly& b) { return a + b; });
}

PiecewisePoly operator-(const PiecewisePoly& x, const PiecewisePoly& y) {
    return combine(x, y, [](const Poly& a, const Poly& b) { return a - b; });
}

PiecewisePoly operator*(const PiecewisePoly& x, const PiecewisePoly& y) {
    return combine(x, y, [](const Poly& a, const Poly& b) { return a * b; });
}

PiecewisePoly PiecewisePoly::operator*(const Rational& s) const {
    std::vector<Poly> np;
    np.reserve(pieces_.size());
    for (const Poly& p : pieces_) np.push_back(s * p);
    return PiecewisePoly(breaks_, std::move(np));
}

PiecewisePoly PiecewisePoly::operator-() const { return *this * Rational(-1); }

bool operator==(const PiecewisePoly& x, const PiecewisePoly& y) {
    if (x.domain_lo() != y.domain_lo() || x.domain_hi() != y.domain_hi()) return false;
    const std::vector<Rational> nb = merged_breakpoints(x, y);
    const PiecewisePoly xf = x.refined(nb);
    const PiecewisePoly yf = y.refined(nb);
    for (std::size_t j = 0; j + 1 < nb.size(); ++j)
        if (!(xf.piece(j) == yf.piece(j))) return false;
    return true;
}

PiecewisePoly apply_Tg(const PiecewisePoly& g, const PiecewisePoly& f) {
    const PiecewisePoly integrand = g * f.derivative();
    if (Rational(0) < integrand.domain_lo() || Rational(0) > integrand.domain_hi())
        throw InvalidInput("weighted primitive requires 0 in the domain");
    return integrand.primitive(Rational(0));
}

}  // namespace torusdecay
