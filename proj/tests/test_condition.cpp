#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "doctest.h"
#include "torusdecay/condition.hpp"

using namespace torusdecay;

// ---------------------------------------------------------------------------
// Oracles and generators. The quadrature oracles work straight off the
// closed-form evaluator with plain floating point, independent of any exact
// arithmetic in the library.
// ---------------------------------------------------------------------------

namespace {

// 16-point Gauss-Legendre rule on [-1, 1].
const double kGlNode[8] = {0.0950125098376374401853193, 0.2816035507792589132304605,
                           0.4580167776572273863424194, 0.6178762444026437484466718,
                           0.7554044083550030338951012, 0.8656312023878317438804679,
                           0.9445750230732325760779884, 0.9894009349916499325961542};
const double kGlWeight[8] = {0.1894506104550684962853967, 0.1826034150449235888667637,
                             0.1691565193950025381893121, 0.1495959888165767320815017,
                             0.1246289712555338720524763, 0.0951585116824927848099251,
                             0.0622535239386478928628438, 0.0271524594117540948517806};

double gl_panel(const std::function<double(double)>& f, double lo, double hi) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (int k = 0; k < 8; ++k)
        s += kGlWeight[k] * (f(mid - half * kGlNode[k]) + f(mid + half * kGlNode[k]));
    return half * s;
}

// Composite quadrature over [lo, hi], split at the given interior cut points
// and then into >= 16 uniform panels per smooth stretch (>= 256 samples).
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::vector<double> cuts = {}) {
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        const double a = std::max(cuts[j], lo), b = std::min(cuts[j + 1], hi);
        if (!(b > a)) continue;
        for (int p = 0; p < 16; ++p)
            s += gl_panel(f, a + (b - a) * p / 16.0, a + (b - a) * (p + 1) / 16.0);
    }
    return s;
}

// Roots of sin(2*pi*(freq*x - shift)) inside (lo, hi): x = (k/2 + shift)/freq.
std::vector<double> sine_kinks(double freq, double shift, double lo, double hi) {
    std::vector<double> cuts;
    if (freq == 0.0) return cuts;
    const double step = 0.5 / std::abs(freq);
    const double base = shift / freq;
    const long k0 = static_cast<long>(std::floor((lo - base) / step)) - 1;
    for (long k = k0; base + static_cast<double>(k) * step < hi; ++k) {
        const double x = base + static_cast<double>(k) * step;
        if (x > lo && x < hi) cuts.push_back(x);
    }
    return cuts;
}

// Torus mean of g(u(t, x)) for a one-dimensional lattice with period beta.
double oracle_mean_1d(const CounterexampleField& f, double t, double beta, bool absolute) {
    const double freq = to_double(f.xi[0]);
    const double shift = to_double(f.c) * t;
    const double center = to_double(f.I);
    const auto g = [&](double x) {
        const double v = f.eval1(t, x) - center;
        return absolute ? std::abs(v) : v;
    };
    const auto cuts = absolute ? sine_kinks(freq, shift, 0.0, beta) : std::vector<double>{};
    return integrate(g, 0.0, beta, cuts) / beta;
}

// Same on the unit square; the inner variable must carry a nonzero frequency.
double oracle_mean_2d(const CounterexampleField& f, double t, bool absolute) {
    const double f1 = to_double(f.xi[0]), f2 = to_double(f.xi[1]);
    REQUIRE(f1 != 0.0);
    const double center = to_double(f.I);
    const auto outer = [&](double x2) {
        const double shift = to_double(f.c) * t - f2 * x2;
        const auto inner = [&](double x1) {
            const double x[2] = {x1, x2};
            const double v = f.eval(t, std::span<const double>(x, 2)) - center;
            return absolute ? std::abs(v) : v;
        };
        const auto cuts = absolute ? sine_kinks(f1, shift, 0.0, 1.0) : std::vector<double>{};
        return integrate(inner, 0.0, 1.0, cuts);
    };
    return integrate(outer, 0.0, 1.0);
}

std::mt19937_64 rng_for(const std::string& tag) {
    std::seed_seq seq(tag.begin(), tag.end());
    return std::mt19937_64(seq);
}

PiecewisePoly poly_on(const Poly& p) {
    return PiecewisePoly::from_poly(p, Rational(-1), Rational(1));
}

const Poly kU({Rational(0), Rational(1)});
const Poly kUSq({Rational(0), Rational(0), Rational(1)});
const Poly kBurgers({Rational(0), Rational(0), Rational(1, 2)});

// flux that follows u^2 but is flat at height 1/16 on (-1/4, 1/4)
PiecewisePoly plateau_flux() {
    return PiecewisePoly({Rational(-1), Rational(-1, 4), Rational(1, 4), Rational(1)},
                         {kUSq, Poly::constant(Rational(1, 16)), kUSq});
}

DiffusionSpec diagonal_diffusion(std::vector<Poly> diag) {
    const std::size_t n = diag.size();
    std::vector<PiecewisePoly> entries(n * n, poly_on(Poly()));
    for (std::size_t i = 0; i < n; ++i) entries[i * n + i] = poly_on(diag[i]);
    return DiffusionSpec(n, std::move(entries), Rational(1));
}

bool in_row_span(const RatMat& rows, const RatVec& v) {
    RatMat aug(rows.rows + 1, rows.cols);
    for (std::size_t i = 0; i < rows.rows; ++i) aug.set_row(i, rows.row(i));
    aug.set_row(rows.rows, v);
    return rank(aug) == rank(rows);
}

IntMat random_unimodular(std::mt19937_64& rng, std::size_t n) {
    IntMat u = IntMat::identity(n);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1), shear(-2, 2);
    for (int step = 0; step < 8; ++step) {
        const std::size_t i = static_cast<std::size_t>(pick(rng));
        const std::size_t j = static_cast<std::size_t>(pick(rng));
        if (i == j) continue;
        const Int f(shear(rng));
        for (std::size_t k = 0; k < n; ++k) u.at(i, k) += f * u.at(j, k);
    }
    return u;
}

struct Problem {
    FluxSpec flux;
    DiffusionSpec diff;
    LatticeBasis lat;
};

// Random problem mixing affine, quadratic and plateau components with a
// random diagonal diffusion and a random unimodular lattice.
Problem random_problem(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> flux_kind(0, 4), diff_kind(0, 2), coef(-3, 3);
    std::vector<PiecewisePoly> comps;
    for (std::size_t i = 0; i < n; ++i) {
        switch (flux_kind(rng)) {
            case 0: comps.push_back(poly_on(Poly())); break;
            case 1: comps.push_back(poly_on(Poly({Rational(coef(rng)), Rational(coef(rng))}))); break;
            case 2: comps.push_back(poly_on(kBurgers)); break;
            case 3: comps.push_back(poly_on(kUSq)); break;
            default: comps.push_back(plateau_flux()); break;
        }
    }
    std::vector<Poly> diag;
    for (std::size_t i = 0; i < n; ++i) {
        switch (diff_kind(rng)) {
            case 0: diag.push_back(Poly()); break;
            case 1: diag.push_back(Poly::constant(Rational(1))); break;
            default: diag.push_back(kUSq); break;
        }
    }
    return Problem{FluxSpec(std::move(comps), Rational(1)), diagonal_diffusion(std::move(diag)),
                   LatticeBasis(to_rational(random_unimodular(rng, n)))};
}

// Interior mean values worth probing: interior breakpoints and midpoints of
// consecutive breakpoints of the flux grid.
std::vector<Rational> probe_means(const FluxSpec& flux) {
    const auto& b = flux.components[0].breakpoints();
    std::vector<Rational> out;
    for (std::size_t j = 1; j + 1 < b.size(); ++j) out.push_back(b[j]);
    for (std::size_t j = 0; j + 1 < b.size(); ++j) out.push_back((b[j] + b[j + 1]) / 2);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// check_condition: curated verdicts
// ---------------------------------------------------------------------------

TEST_CASE("genuinely nonlinear scalar flux satisfies the condition") {
    const FluxSpec flux({poly_on(kBurgers)}, Rational(1));
    const auto rep = check_condition(flux, diagonal_diffusion({Poly()}),
                                     LatticeBasis::integer(1), Rational(0));
    CHECK(rep.holds);
    CHECK(rep.affine_subspace.rows == 0);
    CHECK(rep.violating.rank() == 0);
    CHECK(!rep.witness);
    CHECK(!rep.witness_ambient);
    CHECK(!rep.vicinity);
}

TEST_CASE("zero flux with zero diffusion fails on the whole interval") {
    const FluxSpec flux({poly_on(Poly())}, Rational(1));
    const auto rep = check_condition(flux, diagonal_diffusion({Poly()}),
                                     LatticeBasis::integer(1), Rational(1, 3));
    CHECK(!rep.holds);
    REQUIRE(rep.witness);
    CHECK(*rep.witness == IntVec{Int(1)});
    REQUIRE(rep.witness_ambient);
    CHECK(*rep.witness_ambient == RatVec{Rational(1)});
    REQUIRE(rep.vicinity);
    CHECK(rep.vicinity->first == Rational(-1));
    CHECK(rep.vicinity->second == Rational(1));
    CHECK(rep.violating.rank() == 1);
}

TEST_CASE("uniform diffusion rescues a fully affine flux") {
    const FluxSpec flux({poly_on(Poly())}, Rational(1));
    const auto rep = check_condition(flux, diagonal_diffusion({Poly::constant(Rational(1))}),
                                     LatticeBasis::integer(1), Rational(0));
    CHECK(rep.holds);
    CHECK(rep.affine_subspace.rows == 1);
    CHECK(rep.degenerate_subspace.rows == 0);
}

TEST_CASE("degenerate direction is rescued when the diffusion acts there") {
    // flux affine along (0,1) only; the diffusion annihilates (1,0) only
    const FluxSpec flux({poly_on(kBurgers), poly_on(Poly())}, Rational(1));
    const DiffusionSpec diff = diagonal_diffusion({Poly(), kUSq});
    const auto rep = check_condition(flux, diff, LatticeBasis::integer(2), Rational(0));
    CHECK(rep.holds);
    REQUIRE(rep.affine_subspace.rows == 1);
    CHECK(in_row_span(rep.affine_subspace, RatVec{Rational(0), Rational(1)}));
    REQUIRE(rep.degenerate_subspace.rows == 1);
    CHECK(in_row_span(rep.degenerate_subspace, RatVec{Rational(1), Rational(0)}));
    CHECK(rep.violating.rank() == 0);
}

TEST_CASE("plateau flux fails exactly at the flat height") {
    const FluxSpec flux({plateau_flux()}, Rational(1));
    const DiffusionSpec diff = diagonal_diffusion({Poly()});
    const LatticeBasis z = LatticeBasis::integer(1);

    const auto at_zero = check_condition(flux, diff, z, Rational(0));
    CHECK(!at_zero.holds);
    REQUIRE(at_zero.vicinity);
    CHECK(at_zero.vicinity->first == Rational(-1, 4));
    CHECK(at_zero.vicinity->second == Rational(1, 4));
    CHECK(*at_zero.witness == IntVec{Int(1)});

    CHECK(check_condition(flux, diff, z, Rational(1, 2)).holds);
    CHECK(check_condition(flux, diff, z, Rational(1, 4)).holds);
}

TEST_CASE("witness coordinates refer to the dual basis") {
    // periods 2Z: the dual lattice is Z/2, so the shortest dual generator is
    // 1/2 in ambient coordinates but (1) in dual coordinates
    RatMat rows(1, 1);
    rows.at(0, 0) = Rational(2);
    const FluxSpec flux({poly_on(Poly())}, Rational(1));
    const auto rep = check_condition(flux, diagonal_diffusion({Poly()}), LatticeBasis(rows),
                                     Rational(0));
    CHECK(!rep.holds);
    CHECK(*rep.witness == IntVec{Int(1)});
    CHECK(*rep.witness_ambient == RatVec{Rational(1, 2)});
}

TEST_CASE("mismatched frames are rejected") {
    const FluxSpec flux1({poly_on(kBurgers)}, Rational(1));
    const FluxSpec flux2({poly_on(kBurgers), poly_on(kU)}, Rational(1));
    const DiffusionSpec diff1 = diagonal_diffusion({Poly()});
    const DiffusionSpec wide(
        1, {PiecewisePoly::constant(Rational(0), Rational(-2), Rational(2))}, Rational(2));
    CHECK_THROWS_AS(check_condition(flux2, diff1, LatticeBasis::integer(2), Rational(0)),
                    InvalidInput);
    CHECK_THROWS_AS(check_condition(flux1, diff1, LatticeBasis::integer(2), Rational(0)),
                    InvalidInput);
    CHECK_THROWS_AS(check_condition(flux1, wide, LatticeBasis::integer(1), Rational(0)),
                    InvalidInput);
    CHECK_THROWS_AS(check_condition(flux1, diff1, LatticeBasis::integer(1), Rational(2)),
                    InvalidInput);
}

TEST_CASE("witness lies in both subspaces and the vicinity is common") {
    auto rng = rng_for("condition-witness-corpus");
    int failures = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + trial % 3;
        const Problem p = random_problem(rng, n);
        const Rational i4[] = {Rational(0), Rational(1, 3), Rational(-1, 2), Rational(1, 8)};
        const Rational I = i4[trial % 4];
        const auto rep = check_condition(p.flux, p.diff, p.lat, I);
        if (rep.holds) continue;
        ++failures;
        REQUIRE(rep.witness_ambient);
        const RatVec& xi = *rep.witness_ambient;
        CHECK(in_row_span(rep.affine_subspace, xi));
        CHECK(in_row_span(rep.degenerate_subspace, xi));
        // the reported vicinity works for the witness itself
        const auto av = affine_vicinity(p.flux, I, xi);
        REQUIRE(av);
        CHECK(av->alpha <= rep.vicinity->first);
        CHECK(av->beta >= rep.vicinity->second);
        const auto zv = zero_vicinity(p.diff, I, xi);
        REQUIRE(zv);
        CHECK(zv->alpha <= rep.vicinity->first);
        CHECK(zv->beta >= rep.vicinity->second);
        CHECK(rep.vicinity->first < I);
        CHECK(rep.vicinity->second > I);
    }
    CHECK(failures > 5);  // the corpus must actually exercise the failure path
}

TEST_CASE("verdict is invariant under unimodular relabeling of the periods") {
    auto rng = rng_for("condition-unimodular");
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 1 + trial % 3;
        const Problem p = random_problem(rng, n);
        const Rational I = (trial % 2 == 0) ? Rational(0) : Rational(1, 3);
        const auto base = check_condition(p.flux, p.diff, p.lat, I);
        for (int rep = 0; rep < 3; ++rep) {
            const IntMat u = random_unimodular(rng, n);
            const LatticeBasis relabeled(to_rational(u) * p.lat.rows);
            CHECK(check_condition(p.flux, p.diff, relabeled, I).holds == base.holds);
        }
    }
}

// ---------------------------------------------------------------------------
// check_strict_condition
// ---------------------------------------------------------------------------

TEST_CASE("strict test passes for a strictly nonlinear scalar flux") {
    const FluxSpec flux({poly_on(kBurgers)}, Rational(1));
    const auto rep = check_strict_condition(flux, diagonal_diffusion({Poly()}),
                                            LatticeBasis::integer(1), Rational(1));
    CHECK(rep.holds);
    CHECK(!rep.witness);
    CHECK(!rep.tau);
}

TEST_CASE("strict test fails for linear transport with the shift it found") {
    const FluxSpec flux({poly_on(kU)}, Rational(1));
    const auto rep = check_strict_condition(flux, diagonal_diffusion({Poly()}),
                                            LatticeBasis::integer(1), Rational(1));
    CHECK(!rep.holds);
    REQUIRE(rep.witness);
    CHECK(*rep.witness == IntVec{Int(1)});
    REQUIRE(rep.tau);
    CHECK(*rep.tau == Rational(-1));
    REQUIRE(rep.interval);
    CHECK(rep.interval->first == Rational(-1));
    CHECK(rep.interval->second == Rational(1));
}

TEST_CASE("strict test passes vacuously under uniform parabolicity") {
    const FluxSpec flux({poly_on(kU)}, Rational(1));
    const auto rep = check_strict_condition(flux, diagonal_diffusion({Poly::constant(Rational(1))}),
                                            LatticeBasis::integer(1), Rational(1));
    CHECK(rep.holds);
}

TEST_CASE("strict test finds the affine direction of a mixed flux") {
    const FluxSpec flux({poly_on(kBurgers), poly_on(Poly({Rational(0), Rational(3)}))},
                        Rational(1));
    const auto rep = check_strict_condition(flux, diagonal_diffusion({Poly(), Poly()}),
                                            LatticeBasis::integer(2), Rational(1));
    CHECK(!rep.holds);
    CHECK(*rep.witness == IntVec{Int(0), Int(1)});
    CHECK(*rep.tau == Rational(-3));
}

TEST_CASE("strict test sees a plateau that the pointwise test misses elsewhere") {
    // away from the flat height the pointwise condition holds, but the strict
    // scan covers the whole range and must find the plateau
    const FluxSpec flux({plateau_flux()}, Rational(1));
    const DiffusionSpec diff = diagonal_diffusion({Poly()});
    CHECK(check_condition(flux, diff, LatticeBasis::integer(1), Rational(1, 2)).holds);
    const auto rep = check_strict_condition(flux, diff, LatticeBasis::integer(1), Rational(1));
    CHECK(!rep.holds);
    CHECK(*rep.tau == Rational(0));
    CHECK(rep.interval->first == Rational(-1, 4));
    CHECK(rep.interval->second == Rational(1, 4));
}

TEST_CASE("strict verdict implies the pointwise verdict at every mean") {
    auto rng = rng_for("condition-strict-corpus");
    int passes = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + trial % 2;
        const Problem p = random_problem(rng, n);
        const auto strict = check_strict_condition(p.flux, p.diff, p.lat, Rational(1));
        if (!strict.holds) {
            // the reported data must reproduce the failure: constant pairing
            // of the derivative, zero form, positive interval length
            REQUIRE(strict.interval);
            CHECK(strict.interval->first < strict.interval->second);
            continue;
        }
        ++passes;
        for (const Rational& I : probe_means(p.flux))
            CHECK(check_condition(p.flux, p.diff, p.lat, I).holds);
    }
    CHECK(passes > 5);
}

// ---------------------------------------------------------------------------
// reduce_problem
// ---------------------------------------------------------------------------

TEST_CASE("already-reduced problem keeps the identity transform") {
    const FluxSpec flux({poly_on(kBurgers)}, Rational(1));
    const auto red = reduce_problem(flux, diagonal_diffusion({kUSq}), LatticeBasis::integer(1),
                                    Rational(0));
    CHECK(red.d == 1);
    CHECK(red.transform == RatMat::identity(1));
    CHECK(red.coordinates == IntMat::identity(1));
    CHECK(red.speed == RatVec{Rational(0)});
    CHECK(red.plateau.first == Rational(-1));
    CHECK(red.plateau.second == Rational(1));
    for (int k = 0; k < 4; ++k) CHECK(red.r_flags[static_cast<std::size_t>(k)]);
    CHECK(red.flux_t.components[0] == flux.components[0]);
}

TEST_CASE("constant second component is sorted last and flags the dead diffusion") {
    const FluxSpec flux({poly_on(kBurgers), poly_on(Poly::constant(Rational(7)))}, Rational(1));
    const auto red = reduce_problem(flux, diagonal_diffusion({Poly(), Poly()}),
                                    LatticeBasis::integer(2), Rational(0));
    CHECK(red.d == 1);
    CHECK(red.coordinates.row(1) == IntVec{Int(0), Int(1)});
    CHECK(red.flux_t.components[1] ==
          PiecewisePoly::constant(Rational(7), Rational(-1), Rational(1)));
    CHECK(red.plateau.first == Rational(-1));
    CHECK(red.plateau.second == Rational(1));
    CHECK(red.r_flags[0]);
    CHECK(red.r_flags[1]);
    CHECK(red.r_flags[2]);
    CHECK(!red.r_flags[3]);  // nothing diffuses along the affine direction
}

TEST_CASE("affine drift is absorbed into the speed vector") {
    const FluxSpec flux({poly_on(kBurgers), poly_on(Poly({Rational(1), Rational(3)}))},
                        Rational(1));
    const DiffusionSpec diff = diagonal_diffusion({Poly(), kUSq});
    const auto red = reduce_problem(flux, diff, LatticeBasis::integer(2), Rational(0));
    CHECK(red.d == 1);
    CHECK(red.coordinates.row(1) == IntVec{Int(0), Int(1)});
    CHECK(red.speed == RatVec{Rational(0), Rational(3)});
    CHECK(red.flux_t.components[1] ==
          PiecewisePoly::constant(Rational(1), Rational(-1), Rational(1)));
    CHECK(red.diffusion_t.entry(1, 1) == poly_on(kUSq));
    CHECK(red.transform == RatMat::identity(2));
    for (int k = 0; k < 4; ++k) CHECK(red.r_flags[static_cast<std::size_t>(k)]);
}

TEST_CASE("skewed affine direction is renormalized to a coordinate axis") {
    // (1,-1)·flux = -5u is affine; all other directions are quadratic
    const FluxSpec flux({poly_on(kUSq), poly_on(Poly({Rational(0), Rational(5), Rational(1)}))},
                        Rational(1));
    const DiffusionSpec diff =
        diagonal_diffusion({Poly::constant(Rational(1)), Poly::constant(Rational(1))});
    const auto red = reduce_problem(flux, diff, LatticeBasis::integer(2), Rational(0));
    CHECK(red.d == 1);
    CHECK(red.coordinates.row(1) == IntVec{Int(1), Int(-1)});
    // the affine pairing becomes constant after subtracting the drift
    CHECK(red.flux_t.components[1].piece(0).is_constant());
    for (int k = 0; k < 4; ++k) CHECK(red.r_flags[static_cast<std::size_t>(k)]);
    // transform is unimodular and exactly invertible
    CHECK(red.transform_inverse * red.transform == RatMat::identity(2));
}

TEST_CASE("reduction preserves pairings and verdicts on a random corpus") {
    auto rng = rng_for("condition-reduce-corpus");
    std::uniform_int_distribution<int> kvec(-3, 3);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + trial % 3;
        const Problem p = random_problem(rng, n);
        const Rational I = (trial % 2 == 0) ? Rational(0) : Rational(-1, 2);
        const auto red = reduce_problem(p.flux, p.diff, p.lat, I);

        CHECK(red.r_flags[0]);
        CHECK(red.r_flags[1]);
        CHECK(red.r_flags[2]);
        const auto original = check_condition(p.flux, p.diff, p.lat, I);
        CHECK(red.r_flags[3] == original.holds);

        // re-checking the transformed problem over Z^n gives the same verdict
        const auto transformed = check_condition(red.flux_t, red.diffusion_t,
                                                 LatticeBasis::integer(n), I);
        CHECK(transformed.holds == original.holds);

        // exact inversion and coordinate consistency
        CHECK(red.transform_inverse * red.transform == RatMat::identity(n));
        CHECK(to_rational(red.coordinates) * dual_basis(p.lat).rows == red.transform);

        // pairing identities: kappa·flux_t == (Q^T kappa)·flux - (speed·kappa) u
        // and the diffusion form is preserved
        const PiecewisePoly u_poly = poly_on(kU);
        for (int probe = 0; probe < 3; ++probe) {
            RatVec kappa(n);
            for (auto& v : kappa) v = Rational(kvec(rng));
            const RatVec eta = mat_vec(red.transform.transpose(), kappa);
            PiecewisePoly lhs = poly_on(Poly());
            PiecewisePoly rhs = u_poly * (-dot(red.speed, kappa));
            PiecewisePoly lhs_form = poly_on(Poly());
            PiecewisePoly rhs_form = poly_on(Poly());
            for (std::size_t i = 0; i < n; ++i) {
                lhs = lhs + red.flux_t.components[i] * kappa[i];
                rhs = rhs + p.flux.components[i] * eta[i];
                for (std::size_t j = 0; j < n; ++j) {
                    lhs_form = lhs_form + red.diffusion_t.entry(i, j) * (kappa[i] * kappa[j]);
                    rhs_form = rhs_form + p.diff.entry(i, j) * (eta[i] * eta[j]);
                }
            }
            CHECK(lhs == rhs);
            CHECK(lhs_form == rhs_form);
        }
    }
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

TEST_CASE("counterexample is a traveling wave with the drift speed") {
    const FluxSpec flux({poly_on(Poly({Rational(0), Rational(3)}))}, Rational(1));
    const auto rep = check_condition(flux, diagonal_diffusion({Poly()}),
                                     LatticeBasis::integer(1), Rational(0));
    REQUIRE(!rep.holds);
    const auto field = counterexample(rep);
    CHECK(field.c == Rational(3));
    CHECK(field.delta == Rational(1, 2));
    CHECK(field.xi == RatVec{Rational(1)});
    CHECK(field.eval1(0.0, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
    auto rng = rng_for("counterexample-wave");
    std::uniform_real_distribution<double> pt(-3.0, 3.0);
    for (int k = 0; k < 50; ++k) {
        const double t = pt(rng), x = pt(rng);
        CHECK(field.eval1(t, x) == doctest::Approx(field.eval1(0.0, x - 3.0 * t)).epsilon(1e-12));
    }
}

TEST_CASE("counterexample guards its preconditions") {
    const FluxSpec burgers({poly_on(kBurgers)}, Rational(1));
    const auto holds = check_condition(burgers, diagonal_diffusion({Poly()}),
                                       LatticeBasis::integer(1), Rational(0));
    CHECK_THROWS_AS(counterexample(holds), ConditionHolds);

    const FluxSpec flat({plateau_flux()}, Rational(1));
    const auto rep = check_condition(flat, diagonal_diffusion({Poly()}),
                                     LatticeBasis::integer(1), Rational(0));
    REQUIRE(!rep.holds);
    // vicinity is (-1/4, 1/4): the band must fit strictly inside
    CHECK_THROWS_AS(counterexample(rep, Rational(1, 4)), InvalidInput);
    CHECK_THROWS_AS(counterexample(rep, Rational(1)), InvalidInput);
    CHECK_THROWS_AS(counterexample(rep, Rational(0)), InvalidInput);
    CHECK_THROWS_AS(counterexample(rep, Rational(-1, 8)), InvalidInput);
    CHECK(counterexample(rep, Rational(1, 5)).delta == Rational(1, 5));
    CHECK(counterexample(rep).delta == Rational(1, 8));
}

TEST_CASE("asymmetric mean gets the default amplitude from the nearer edge") {
    const FluxSpec flux({poly_on(Poly())}, Rational(1));
    const auto rep = check_condition(flux, diagonal_diffusion({Poly()}),
                                     LatticeBasis::integer(1), Rational(1, 4));
    const auto field = counterexample(rep);
    // vicinity (-1, 1), distances 5/4 and 3/4, so delta = 3/8
    CHECK(field.delta == Rational(3, 8));
    CHECK(field.I == Rational(1, 4));
    CHECK(field.c == Rational(0));
}

TEST_CASE("counterexample keeps the torus mean and the L1 distance in time") {
    const double kT[3] = {0.0, 0.37, 2.5};

    // unit periods
    const FluxSpec drift({poly_on(Poly({Rational(0), Rational(3)}))}, Rational(1));
    const auto rep1 = check_condition(drift, diagonal_diffusion({Poly()}),
                                      LatticeBasis::integer(1), Rational(1, 4));
    const auto f1 = counterexample(rep1);
    const double closed1 = 2.0 * to_double(f1.delta) / std::numbers::pi;
    for (const double t : kT) {
        CHECK(oracle_mean_1d(f1, t, 1.0, false) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(oracle_mean_1d(f1, t, 1.0, true) == doctest::Approx(closed1).epsilon(1e-12));
    }
    CHECK(std::abs(oracle_mean_1d(f1, 0.37, 1.0, true) - oracle_mean_1d(f1, 2.5, 1.0, true)) <=
          1e-12);

    // stretched periods 2Z: the dual frequency is a half-integer
    RatMat rows(1, 1);
    rows.at(0, 0) = Rational(2);
    const auto rep2 = check_condition(drift, diagonal_diffusion({Poly()}), LatticeBasis(rows),
                                      Rational(1, 4));
    const auto f2 = counterexample(rep2);
    CHECK(f2.xi == RatVec{Rational(1, 2)});
    const double closed2 = 2.0 * to_double(f2.delta) / std::numbers::pi;
    for (const double t : kT) {
        CHECK(oracle_mean_1d(f2, t, 2.0, false) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(oracle_mean_1d(f2, t, 2.0, true) == doctest::Approx(closed2).epsilon(1e-12));
    }

    // two dimensions, witness with both components engaged:
    // (1,2)·flux = 0 is affine, every other direction is quadratic
    const FluxSpec skew(
        {poly_on(Poly({Rational(0), Rational(0), Rational(2)})), poly_on(Poly({Rational(0), Rational(0), Rational(-1)}))},
        Rational(1));
    const auto rep3 = check_condition(skew, diagonal_diffusion({Poly(), Poly()}),
                                      LatticeBasis::integer(2), Rational(0));
    REQUIRE(!rep3.holds);
    const auto f3 = counterexample(rep3);
    REQUIRE(f3.xi == RatVec{Rational(1), Rational(2)});
    const double closed3 = 2.0 * to_double(f3.delta) / std::numbers::pi;
    for (const double t : kT) {
        CHECK(oracle_mean_2d(f3, t, false) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(oracle_mean_2d(f3, t, true) == doctest::Approx(closed3).epsilon(1e-12));
    }
    CHECK(std::abs(oracle_mean_2d(f3, 0.37, true) - oracle_mean_2d(f3, 2.5, true)) <= 1e-12);
}
