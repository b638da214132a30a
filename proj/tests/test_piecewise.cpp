#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "torusdecay/piecewise.hpp"

using namespace torusdecay;

// ---------------------------------------------------------------------------
// Oracles. Written against the representation only (breakpoints + coefficient
// vectors), independent of the symbolic calculus they cross-check.
// ---------------------------------------------------------------------------

namespace {

// 16-point Gauss-Legendre rule on [-1, 1]; exact to roundoff for polynomial
// integrands up to degree 31.
const double kGlNode[8] = {0.0950125098376374401853193, 0.2816035507792589132304605,
                           0.4580167776572273863424194, 0.6178762444026437484466718,
                           0.7554044083550030338951012, 0.8656312023878317438804679,
                           0.9445750230732325760779884, 0.9894009349916499325961542};
const double kGlWeight[8] = {0.1894506104550684962853967, 0.1826034150449235888667637,
                             0.1691565193950025381893121, 0.1495959888165767320815017,
                             0.1246289712555338720524763, 0.0951585116824927848099251,
                             0.0622535239386478928628438, 0.0271524594117540948517806};

// double evaluation straight off the representation (Horner per piece)
double oracle_eval(const PiecewisePoly& f, double x) {
    const auto& b = f.breakpoints();
    std::size_t j = 0;
    while (j + 2 < b.size() && x > to_double(b[j + 1])) ++j;
    double acc = 0.0;
    const auto& c = f.piece(j).coeffs();
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + to_double(*it);
    return acc;
}

double gl_segment(const PiecewisePoly& f, double lo, double hi) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (int k = 0; k < 8; ++k)
        s += kGlWeight[k] * (oracle_eval(f, mid - half * kGlNode[k]) + oracle_eval(f, mid + half * kGlNode[k]));
    return half * s;
}

// composite quadrature of f over [lo, hi], split at every breakpoint
double oracle_integral(const PiecewisePoly& f, double lo, double hi) {
    const double sign = lo <= hi ? 1.0 : -1.0;
    const double a = std::min(lo, hi), b = std::max(lo, hi);
    std::vector<double> cuts{a};
    for (const Rational& r : f.breakpoints()) {
        const double x = to_double(r);
        if (x > a && x < b) cuts.push_back(x);
    }
    cuts.push_back(b);
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) s += gl_segment(f, cuts[j], cuts[j + 1]);
    return sign * s;
}

std::mt19937_64 rng_for(const std::string& tag) {
    std::seed_seq seq(tag.begin(), tag.end());
    return std::mt19937_64(seq);
}

Rational random_rational(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-9, 9), den(1, 9);
    return Rational(num(rng), den(rng));
}

Poly random_quadratic(std::mt19937_64& rng) {
    return Poly({random_rational(rng), random_rational(rng), random_rational(rng)});
}

// random piecewise quadratic on [-2, 2] with up to three interior breaks
PiecewisePoly random_piecewise(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> extra(0, 3);
    std::vector<Rational> b{Rational(-2), Rational(2)};
    const int m = extra(rng);
    std::uniform_int_distribution<int> num(-15, 15);
    for (int i = 0; i < m; ++i) b.push_back(Rational(num(rng), 8));
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<Poly> p;
    for (std::size_t j = 0; j + 1 < b.size(); ++j) p.push_back(random_quadratic(rng));
    return PiecewisePoly(std::move(b), std::move(p));
}

const Rational kHalf(1, 2);

PiecewisePoly sign_step(const Rational& k, const Rational& lo, const Rational& hi) {
    return PiecewisePoly({lo, k, hi}, {Poly::constant(Rational(-1)), Poly::constant(Rational(1))});
}

// sgn(u - k) * h(u) assembled directly from the pieces of h (k interior)
PiecewisePoly combine_sign_identity(const PiecewisePoly& h, const Rational& k) {
    const PiecewisePoly fine = h.refined({k});
    std::vector<Poly> np;
    for (std::size_t j = 0; j + 1 < fine.breakpoints().size(); ++j) {
        const bool left_of_k = fine.breakpoints()[j + 1] <= k;
        np.push_back(left_of_k ? -fine.piece(j) : fine.piece(j));
    }
    return PiecewisePoly(fine.breakpoints(), std::move(np));
}

}  // namespace

// ---------------------------------------------------------------------------
// Representation and evaluation
// ---------------------------------------------------------------------------

TEST_CASE("construction validates breakpoints and piece counts") {
    CHECK_THROWS_AS(PiecewisePoly({Rational(0)}, {}), InvalidInput);
    CHECK_THROWS_AS(PiecewisePoly({Rational(0), Rational(0)}, {Poly()}), InvalidInput);
    CHECK_THROWS_AS(PiecewisePoly({Rational(1), Rational(0)}, {Poly()}), InvalidInput);
    CHECK_THROWS_AS(PiecewisePoly({Rational(0), Rational(1)}, {Poly(), Poly()}), InvalidInput);
}

TEST_CASE("evaluation follows the left-continuous convention at jumps") {
    const PiecewisePoly step = sign_step(Rational(0), Rational(-1), Rational(1));
    CHECK_FALSE(step.is_continuous());
    CHECK(step.eval(Rational(-1, 2)) == Rational(-1));
    CHECK(step.eval(Rational(1, 2)) == Rational(1));
    CHECK(step.eval(Rational(0)) == Rational(-1));
    CHECK(step.eval_left(Rational(0)) == Rational(-1));
    CHECK(step.eval_right(Rational(0)) == Rational(1));
    CHECK(step.eval(Rational(-1)) == Rational(-1));
    CHECK(step.eval(Rational(1)) == Rational(1));
    CHECK_THROWS_AS(step.eval(Rational(2)), InvalidInput);
    CHECK_THROWS_AS(step.eval_left(Rational(-1)), InvalidInput);
    CHECK_THROWS_AS(step.eval_right(Rational(1)), InvalidInput);
}

TEST_CASE("continuity flag reflects exact agreement at interior breakpoints") {
    const PiecewisePoly ramp(
        {Rational(-1), Rational(0), Rational(1)},
        {Poly(), Poly({Rational(0), Rational(1)})});
    CHECK(ramp.is_continuous());
    const PiecewisePoly off(
        {Rational(-1), Rational(0), Rational(1)},
        {Poly(), Poly({Rational(1, 1000000), Rational(1)})});
    CHECK_FALSE(off.is_continuous());
}

TEST_CASE("refinement preserves the function") {
    auto rng = rng_for("pw-refine");
    for (int trial = 0; trial < 50; ++trial) {
        const PiecewisePoly f = random_piecewise(rng);
        const PiecewisePoly g = f.refined({Rational(-1, 3), Rational(1, 7), Rational(5, 4)});
        CHECK(g == f);
        for (int s = 0; s < 10; ++s) {
            const Rational u = random_rational(rng) / 5;
            CHECK(f.eval(u) == g.eval(u));
        }
    }
}

TEST_CASE("restriction narrows the domain and keeps values") {
    auto rng = rng_for("pw-restrict");
    for (int trial = 0; trial < 50; ++trial) {
        const PiecewisePoly f = random_piecewise(rng);
        const PiecewisePoly g = f.restricted(Rational(-1), Rational(3, 2));
        CHECK(g.domain_lo() == Rational(-1));
        CHECK(g.domain_hi() == Rational(3, 2));
        for (int s = 0; s < 10; ++s) {
            Rational u = random_rational(rng) / 9;
            CHECK(g.eval(u) == f.eval(u));
        }
    }
    const PiecewisePoly f = random_piecewise(rng);
    CHECK_THROWS_AS(f.restricted(Rational(-3), Rational(1)), InvalidInput);
    CHECK_THROWS_AS(f.restricted(Rational(1), Rational(1)), InvalidInput);
}

TEST_CASE("arithmetic agrees with pointwise evaluation") {
    auto rng = rng_for("pw-arith");
    for (int trial = 0; trial < 100; ++trial) {
        const PiecewisePoly f = random_piecewise(rng);
        const PiecewisePoly g = random_piecewise(rng);
        const PiecewisePoly sum = f + g, diff = f - g, prod = f * g;
        const PiecewisePoly scaled = f * Rational(3, 7);
        for (int s = 0; s < 8; ++s) {
            // stay inside open pieces of both operands: random non-breakpoint u
            const Rational u = Rational(std::uniform_int_distribution<int>(-1999, 1999)(rng), 1024);
            CHECK(sum.eval(u) == f.eval(u) + g.eval(u));
            CHECK(diff.eval(u) == f.eval(u) - g.eval(u));
            CHECK(prod.eval(u) == f.eval(u) * g.eval(u));
            CHECK(scaled.eval(u) == f.eval(u) * Rational(3, 7));
        }
    }
    const PiecewisePoly f = random_piecewise(rng);
    const PiecewisePoly narrow = PiecewisePoly::constant(Rational(1), Rational(-1), Rational(1));
    CHECK_THROWS_AS((void)(f + narrow), InvalidInput);
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

TEST_CASE("primitive of a constant is the identity ramp") {
    const PiecewisePoly one = PiecewisePoly::constant(Rational(1), Rational(-1), Rational(1));
    const PiecewisePoly expect =
        PiecewisePoly::from_poly(Poly({Rational(0), Rational(1)}), Rational(-1), Rational(1));
    CHECK(one.primitive(Rational(0)) == expect);
}

TEST_CASE("primitive of the square anchors a cubic") {
    const PiecewisePoly sq = PiecewisePoly::from_poly(
        Poly({Rational(0), Rational(0), Rational(1)}), Rational(-1), Rational(1));
    const PiecewisePoly expect = PiecewisePoly::from_poly(
        Poly({Rational(0), Rational(0), Rational(0), Rational(1, 3)}), Rational(-1), Rational(1));
    CHECK(sq.primitive(Rational(0)) == expect);
}

TEST_CASE("primitive of a unit step is the positive-part ramp") {
    const PiecewisePoly step(
        {Rational(-1), Rational(0), Rational(1)},
        {Poly(), Poly::constant(Rational(1))});
    const PiecewisePoly ramp = step.primitive(Rational(0));
    const PiecewisePoly expect(
        {Rational(-1), Rational(0), Rational(1)},
        {Poly(), Poly({Rational(0), Rational(1)})});
    CHECK(ramp == expect);
    CHECK(ramp.is_continuous());
    for (int s = 0; s <= 10; ++s) {
        const double u = -1.0 + 0.2 * s;
        CHECK(oracle_eval(ramp, u) == doctest::Approx(oracle_integral(step, 0.0, u)).epsilon(1e-13));
    }
}

TEST_CASE("primitives are continuous, anchored, and match quadrature") {
    auto rng = rng_for("pw-primitive");
    for (int trial = 0; trial < 50; ++trial) {
        const PiecewisePoly f = random_piecewise(rng);
        const Rational anchor = random_rational(rng) / 5;
        const PiecewisePoly F = f.primitive(anchor);
        CHECK(F.is_continuous());
        CHECK(F.eval(anchor) == Rational(0));
        CHECK(F.derivative() == f);
        for (int s = 0; s < 5; ++s) {
            const double u = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
            CHECK(oracle_eval(F, u) ==
                  doctest::Approx(oracle_integral(f, to_double(anchor), u)).epsilon(1e-12));
        }
    }
}

TEST_CASE("derivative then primitive recovers a continuous function up to anchoring") {
    auto rng = rng_for("pw-roundtrip");
    for (int trial = 0; trial < 50; ++trial) {
        PiecewisePoly f = random_piecewise(rng).primitive(Rational(0));  // make it continuous
        const PiecewisePoly back = f.derivative().primitive(Rational(0));
        const PiecewisePoly diff = back - f;
        CHECK(diff.derivative().is_zero());
        CHECK(diff.eval(Rational(0)) == Rational(0));
        CHECK(back == f);
    }
    const PiecewisePoly f = random_piecewise(rng);
    CHECK_THROWS_AS(f.primitive(Rational(5)), InvalidInput);
}

// ---------------------------------------------------------------------------
// Weighted primitives
// ---------------------------------------------------------------------------

TEST_CASE("unit weight reproduces the function minus its value at zero") {
    auto rng = rng_for("tg-unit");
    for (int trial = 0; trial < 20; ++trial) {
        const PiecewisePoly f = random_piecewise(rng).primitive(Rational(0));
        const PiecewisePoly one = PiecewisePoly::constant(Rational(1), f.domain_lo(), f.domain_hi());
        const PiecewisePoly t = apply_Tg(one, f);
        CHECK((t - f).derivative().is_zero());
        CHECK(t.eval(Rational(0)) == Rational(0));
    }
}

TEST_CASE("linear weight against the half square integrates to a cubic") {
    const PiecewisePoly g = PiecewisePoly::from_poly(
        Poly({Rational(0), Rational(1)}), Rational(-2), Rational(2));
    const PiecewisePoly f = PiecewisePoly::from_poly(
        Poly({Rational(0), Rational(0), kHalf}), Rational(-2), Rational(2));
    const PiecewisePoly t = apply_Tg(g, f);
    const PiecewisePoly expect = PiecewisePoly::from_poly(
        Poly({Rational(0), Rational(0), Rational(0), Rational(1, 3)}), Rational(-2), Rational(2));
    CHECK(t == expect);
    for (int s = 0; s <= 8; ++s) {
        const double u = -2.0 + 0.5 * s;
        const double want = u * u * u / 3.0;
        CHECK(oracle_eval(t, u) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("sign weight produces the odd reflection identity") {
    auto rng = rng_for("tg-sign");
    for (int trial = 0; trial < 20; ++trial) {
        const PiecewisePoly f = random_piecewise(rng).primitive(Rational(0));
        const Rational k = Rational(std::uniform_int_distribution<int>(-7, 7)(rng), 4);
        const PiecewisePoly g = sign_step(k, f.domain_lo(), f.domain_hi());
        const PiecewisePoly t = apply_Tg(g, f);
        CHECK(t.is_continuous());
        // expected: sgn(u-k) (f(u) - f(k)), assembled piecewise
        const Rational fk = f.eval(k);
        const PiecewisePoly shifted = f - PiecewisePoly::constant(fk, f.domain_lo(), f.domain_hi());
        const PiecewisePoly expect = combine_sign_identity(shifted, k);
        const PiecewisePoly diff = t - expect;
        CHECK(diff.derivative().is_zero());
        CHECK(diff.is_continuous());
    }
}

TEST_CASE("weighted primitive is linear in the weight") {
    auto rng = rng_for("tg-linear");
    for (int trial = 0; trial < 50; ++trial) {
        const PiecewisePoly f = random_piecewise(rng).primitive(Rational(0));
        const PiecewisePoly g1 = random_piecewise(rng);
        const PiecewisePoly g2 = random_piecewise(rng);
        const PiecewisePoly lhs = apply_Tg(g1 + g2, f);
        const PiecewisePoly rhs = apply_Tg(g1, f) + apply_Tg(g2, f);
        CHECK((lhs - rhs).derivative().is_zero());
    }
}

TEST_CASE("weighted primitive differentiates to the weighted derivative") {
    auto rng = rng_for("tg-chain");
    for (int trial = 0; trial < 50; ++trial) {
        const PiecewisePoly f = random_piecewise(rng).primitive(Rational(0));
        const PiecewisePoly g = random_piecewise(rng);
        const PiecewisePoly t = apply_Tg(g, f);
        CHECK(t.derivative() == g * f.derivative());
    }
}

TEST_CASE("weighted primitive matches quadrature on random data") {
    auto rng = rng_for("tg-quad");
    for (int trial = 0; trial < 50; ++trial) {
        const PiecewisePoly f = random_piecewise(rng).primitive(Rational(0));
        const PiecewisePoly g = random_piecewise(rng);
        const PiecewisePoly t = apply_Tg(g, f);
        const PiecewisePoly integrand = g * f.derivative();
        for (int s = 0; s < 4; ++s) {
            const double u = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
            CHECK(oracle_eval(t, u) ==
                  doctest::Approx(oracle_integral(integrand, 0.0, u)).epsilon(1e-10));
        }
    }
}
