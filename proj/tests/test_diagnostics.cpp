#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "torusdecay/condition.hpp"
#include "torusdecay/diagnostics.hpp"
#include "torusdecay/error.hpp"
#include "torusdecay/lattice.hpp"
#include "torusdecay/model.hpp"
#include "torusdecay/solver.hpp"

using namespace torusdecay;

namespace {

const Poly kZero;
const Poly kOne({Rational(1)});
const Poly kU({Rational(0), Rational(1)});
const Poly kBurgers({Rational(0), Rational(0), Rational(1, 2)});
const Poly kUSq({Rational(0), Rational(0), Rational(1)});

PiecewisePoly on(const Poly& p, int M = 1) {
    return PiecewisePoly::from_poly(p, Rational(-M), Rational(M));
}

FluxSpec flux1(const Poly& p, int M = 1) { return FluxSpec({on(p, M)}, Rational(M)); }

DiffusionSpec diff1(const Poly& a, int M = 1) { return DiffusionSpec(1, {on(a, M)}, Rational(M)); }

DiffusionSpec zero_diff(std::size_t n, int M = 1) {
    std::vector<PiecewisePoly> e(n * n, on(kZero, M));
    return DiffusionSpec(n, std::move(e), Rational(M));
}

PeriodicField sine_field(std::size_t N, double amp, double offset = 0.0) {
    return sample_field(Grid(N), [amp, offset](double x) {
        return amp * std::sin(2 * std::numbers::pi * x) + offset;
    });
}

// values frozen from the independent scalar recurrences run before this
// module was implemented
constexpr double kHeatDissipationCum = 2.499792917135705e-1;   // N=256, t=0.25, cfl=0.9
constexpr double kBurgersL1AtTen = 2.150483453100e-2;          // N=512, t=10, cfl=0.9

}  // namespace

TEST_CASE("mean value reduces to the exact cell average") {
    const Grid g(64);
    CHECK(mean_value(PeriodicField(g, std::vector<double>(64, 0.375), 1.0)) == 0.375);
    CHECK(std::abs(mean_value(sine_field(64, 1.0))) <= 1e-15);
    CHECK(mean_value(sine_field(64, 0.5, 0.25)) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("entropy integrals match their closed forms") {
    const Grid g(16);
    const PeriodicField c(g, std::vector<double>(16, 0.3), 1.0);
    CHECK(entropy_integral(c, EntropySpec::square(Rational(1))) ==
          doctest::Approx(0.09).epsilon(1e-15));

    const PeriodicField k(g, std::vector<double>(16, 0.25), 1.0);
    CHECK(entropy_integral(k, EntropySpec::kruzhkov(Rational(1, 4), Rational(1))) == 0.0);

    CHECK(entropy_integral(sine_field(256, 1.0), EntropySpec::square(Rational(1))) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l1 distances are cell-measure weighted") {
    const Grid g(256);
    const PeriodicField f = sine_field(256, 0.3);
    CHECK(l1_distance(f, f) == 0.0);
    CHECK(l1_distance(PeriodicField(g, std::vector<double>(256, 1.0), 1.0),
                      PeriodicField(g, std::vector<double>(256, 0.0), 1.0)) == 1.0);
    CHECK(l1_distance(f, 0.0) ==
          doctest::Approx(2 * 0.3 / std::numbers::pi).epsilon(1e-3 / 0.19));
    CHECK(l1_distance(f, PeriodicField(g, std::vector<double>(256, 0.0), 1.0)) ==
          l1_distance(f, 0.0));
    const Grid g2(64);
    CHECK_THROWS_AS(
        l1_distance(f, PeriodicField(g2, std::vector<double>(64, 0.0), 1.0)), InvalidInput);
    CHECK_THROWS_AS(l1_distance(f, std::nan("")), InvalidInput);
}

TEST_CASE("dissipation audit checks the recorded budget") {
    SUBCASE("no diffusion dissipates nothing") {
        const PeriodicField u0 = sine_field(64, 0.5);
        SchemeConfig cfg;
        cfg.cfl = 0.9;
        cfg.t_end = 1e-3;
        const Trajectory t = run(flux1(kBurgers), zero_diff(1), u0, cfg);
        const auto audit = dissipation_audit(t, zero_diff(1), u0);
        CHECK(audit.cumulative == 0.0);
        CHECK(audit.bound == doctest::Approx(0.0625).epsilon(1e-14));
        CHECK(audit.pass);
    }
    SUBCASE("constant data dissipates nothing under heat flow") {
        const Grid g(32);
        const PeriodicField u0(g, std::vector<double>(32, 0.6), 1.0);
        SchemeConfig cfg;
        cfg.t_end = 1e-3;
        const Trajectory t = run(flux1(kZero), diff1(kOne), u0, cfg);
        const auto audit = dissipation_audit(t, diff1(kOne), u0);
        CHECK(audit.cumulative == 0.0);
        CHECK(audit.bound == doctest::Approx(0.18).epsilon(1e-15));
        CHECK(audit.pass);
    }
    SUBCASE("heat run matches the frozen spectral value") {
        const PeriodicField u0 = sine_field(256, 1.0);
        SchemeConfig cfg;
        cfg.cfl = 0.9;
        cfg.t_end = 0.25;
        cfg.snapshot_every = 0;
        cfg.diagnostics_every = 0;
        const Trajectory t = run(flux1(kZero), diff1(kOne), u0, cfg);
        const auto audit = dissipation_audit(t, diff1(kOne), u0);
        CHECK(audit.bound == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(audit.cumulative == doctest::Approx(kHeatDissipationCum).epsilon(1e-8));
        CHECK(audit.pass);
    }
    SUBCASE("non-diagonal diffusion is unsupported") {
        const DiffusionSpec mixed(2, {on(kOne), on(kU), on(kU), on(kOne)}, Rational(1));
        const Grid g(8, 8);
        const PeriodicField u0(g, std::vector<double>(64, 0.1), 1.0);
        SchemeConfig cfg;
        cfg.t_end = 1e-4;
        const FluxSpec flux2({on(kBurgers), on(kBurgers)}, Rational(1));
        const Trajectory t = run(flux2, mixed, u0, cfg);
        CHECK_THROWS_AS(dissipation_audit(t, mixed, u0), Unsupported);
    }
}

TEST_CASE("decay verdicts cover all three outcomes") {
    SUBCASE("static trajectory at its mean decays at any positive threshold") {
        const Grid g(16);
        const PeriodicField u0(g, std::vector<double>(16, 0.4), 1.0);
        SchemeConfig cfg;
        cfg.t_end = 1.0;
        const Trajectory t = run(flux1(Poly({Rational(3)})), zero_diff(1), u0, cfg);
        CHECK(decay_report(t, 0.4, 1e-9) == DecayVerdict::decayed);
        CHECK_THROWS_AS(decay_report(t, 0.4, 0.0), InvalidInput);
    }
    SUBCASE("the analytic counterexample plateaus away from its mean") {
        // affine flux with no diffusion: the nonlinearity-diffusivity
        // condition fails and a traveling profile keeps its l1 distance
        const FluxSpec flux = flux1(kU);
        const DiffusionSpec diff = zero_diff(1);
        const auto rep = check_condition(flux, diff, LatticeBasis::integer(1), Rational(0));
        REQUIRE_FALSE(rep.holds);
        const CounterexampleField cf = counterexample(rep);
        const double expect = 2.0 * to_double(cf.delta) / std::numbers::pi;

        Trajectory traj;
        traj.grid = Grid(256);
        traj.mean0 = to_double(cf.I);
        for (int ti = 0; ti <= 10; ++ti) {
            traj.times.push_back(static_cast<double>(ti));
            traj.snapshots.push_back(sample_field(
                traj.grid, [&](double x) { return cf.eval1(static_cast<double>(ti), x); }));
        }
        for (const PeriodicField& s : traj.snapshots)
            CHECK(l1_distance(s, traj.mean0) == doctest::Approx(expect).epsilon(1e-4 / expect));
        CHECK(decay_report(traj, traj.mean0, 0.05) == DecayVerdict::not_decayed);
    }
    SUBCASE("a finished nonlinear run decays to the frozen golden value") {
        const PeriodicField u0 = sine_field(512, 0.5);
        SchemeConfig cfg;
        cfg.cfl = 0.9;
        cfg.t_end = 10.0;
        cfg.snapshot_every = 0;
        cfg.diagnostics_every = 0;
        const Trajectory t = run(flux1(kBurgers), zero_diff(1), u0, cfg);
        CHECK(l1_distance(t.snapshots.back(), 0.0) ==
              doctest::Approx(kBurgersL1AtTen).epsilon(1e-7));
        CHECK(decay_report(t, 0.0, 0.05) == DecayVerdict::decayed);
    }
    SUBCASE("a run still in flight is inconclusive") {
        const PeriodicField u0 = sine_field(128, 0.5);
        SchemeConfig cfg;
        cfg.cfl = 0.9;
        cfg.t_end = 0.5;
        const Trajectory t = run(flux1(kBurgers), zero_diff(1), u0, cfg);
        CHECK(decay_report(t, 0.0, 1e-4) == DecayVerdict::inconclusive);
    }
}

TEST_CASE("contraction audit certifies pairwise l1 monotonicity") {
    const Grid g(128);
    const PeriodicField u0 = sine_field(128, 0.5);
    const FluxSpec flux = flux1(kBurgers);
    const DiffusionSpec diff = diff1(kUSq);
    SchemeConfig cfg;
    cfg.cfl = 0.9;
    cfg.t_end = 2.75e-3;

    SUBCASE("shifted twin") {
        std::vector<double> sh(u0.values);
        std::rotate(sh.begin(), sh.begin() + 41, sh.end());
        const auto [a, b] = run_pair(flux, diff, u0, PeriodicField(g, sh, u0.bound), cfg);
        CHECK(contraction_audit(a, b) <= 1e-12);
    }
    SUBCASE("identical twin never separates") {
        const auto [a, b] = run_pair(flux, diff, u0, u0, cfg);
        CHECK(contraction_audit(a, b) == 0.0);
        for (const PeriodicField& s : a.snapshots) CHECK(l1_distance(s, s) == 0.0);
    }
    SUBCASE("unsynchronized trajectories are rejected") {
        SchemeConfig other = cfg;
        other.cfl = 0.8;
        const Trajectory a = run(flux, diff, u0, cfg);
        const Trajectory b = run(flux, diff, u0, other);
        CHECK_THROWS_AS(contraction_audit(a, b), InvalidInput);
        const Trajectory c = run(flux, diff, sine_field(64, 0.5), cfg);
        CHECK_THROWS_AS(contraction_audit(a, c), InvalidInput);
    }
}

TEST_CASE("the assembled report audits a monotone-regime run") {
    const PeriodicField u0 = sine_field(64, 0.5, -0.1);
    const FluxSpec flux = flux1(kBurgers);
    const DiffusionSpec diff = diff1(kUSq);
    SchemeConfig cfg;
    cfg.cfl = 0.9;
    cfg.t_end = 5e-3;
    const Trajectory t = run(flux, diff, u0, cfg);
    const DiagnosticsReport rep = diagnostics_report(t, diff, u0, 1e-6);

    CHECK(rep.monotone_regime);
    CHECK(rep.mass_drift <= 1e-12);
    CHECK(rep.entropy_monotone <= 1e-12);
    REQUIRE(rep.l1_series.size() == t.snapshots.size());
    CHECK(rep.l1_series.front().first == 0.0);
    CHECK(rep.l1_series.back().first == cfg.t_end);
    for (std::size_t k = 1; k < rep.l1_series.size(); ++k)
        CHECK(rep.l1_series[k].second - rep.l1_series[k - 1].second <= 1e-12);
    REQUIRE(rep.dissipation.has_value());
    CHECK(rep.dissipation->pass);
    CHECK(rep.dissipation->bound == doctest::Approx(0.5 * (0.125 + 0.01)).epsilon(1e-12));
    CHECK_FALSE(rep.contraction_worst.has_value());
    CHECK(rep.decay_verdict == DecayVerdict::inconclusive);
    CHECK(to_string(rep.decay_verdict) == "inconclusive");

    const Grid g2(8, 8);
    const PeriodicField w(g2, std::vector<double>(64, 0.2), 1.0);
    const FluxSpec flux2({on(kBurgers), on(kBurgers)}, Rational(1));
    const DiffusionSpec mixed(2, {on(kOne), on(kU), on(kU), on(kOne)}, Rational(1));
    SchemeConfig cfg2;
    cfg2.t_end = 1e-4;
    const Trajectory t2 = run(flux2, mixed, w, cfg2);
    const DiagnosticsReport rep2 = diagnostics_report(t2, mixed, w, 1e-6);
    CHECK_FALSE(rep2.monotone_regime);
    CHECK_FALSE(rep2.dissipation.has_value());
}
