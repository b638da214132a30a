#include "torusdecay/condition.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numbers>
#include <string>
#include <vector>

#include "torusdecay/error.hpp"

namespace torusdecay {

namespace {

void check_shared_frame(const FluxSpec& flux, const DiffusionSpec& diff, const LatticeBasis& lat) {
    if (flux.n != diff.n || flux.n != lat.n)
        throw InvalidInput("flux, diffusion and lattice must share the dimension");
    if (flux.bound != diff.bound)
        throw InvalidInput("flux and diffusion must share the working interval");
}

// Rows spanning the orthogonal complement of the row span (exact, over Q).
RatMat orthogonal_complement(const RatMat& span, std::size_t n) {
    if (span.rows == 0) return RatMat::identity(n);
    return kernel_basis(span);
}

// Canonical basis (rows) of rowspan(u) ∩ rowspan(v) in R^n.
RatMat intersect_spans(const RatMat& u, const RatMat& v, std::size_t n) {
    if (u.rows == 0 || v.rows == 0) return RatMat(0, n);
    const RatMat cu = orthogonal_complement(u, n);
    const RatMat cv = orthogonal_complement(v, n);
    RatMat stacked(cu.rows + cv.rows, n);
    for (std::size_t i = 0; i < cu.rows; ++i) stacked.set_row(i, cu.row(i));
    for (std::size_t i = 0; i < cv.rows; ++i) stacked.set_row(cu.rows + i, cv.row(i));
    return kernel_basis(stacked);
}

// The generator with the smallest ambient Euclidean norm; ties broken by
// lexicographic order of the ambient vector. Deterministic because the
// generators themselves are canonical.
std::pair<IntVec, RatVec> shortest_generator(const Sublattice& sub) {
    const RatMat amb = sub.ambient_vectors();
    std::size_t best = 0;
    Rational best_norm(-1);
    for (std::size_t i = 0; i < sub.generators.rows; ++i) {
        const RatVec v = amb.row(i);
        const Rational nrm = dot(v, v);
        if (best_norm < 0 || nrm < best_norm ||
            (nrm == best_norm && v < amb.row(best))) {
            best = i;
            best_norm = nrm;
        }
    }
    return {sub.generators.row(best), amb.row(best)};
}

// Piece indices adjacent to u: two pieces when u is an interior breakpoint,
// one otherwise.
std::vector<std::size_t> sides_of(const PiecewisePoly& p, const Rational& u) {
    const std::size_t l = (u > p.domain_lo()) ? p.piece_index_left(u) : p.piece_index_right(u);
    const std::size_t r = (u < p.domain_hi()) ? p.piece_index_right(u) : p.piece_index_left(u);
    if (l == r) return {l};
    return {l, r};
}

// Maximal interval of breakpoints around u on which p is one constant.
std::optional<std::pair<Rational, Rational>> constancy_interval(const PiecewisePoly& p,
                                                                const Rational& u) {
    const auto sides = sides_of(p, u);
    if (!p.piece(sides[0]).is_constant()) return std::nullopt;
    const Rational value = p.piece(sides[0]).coeff(0);
    const auto qualifies = [&](std::size_t q) {
        return p.piece(q).is_constant() && p.piece(q).coeff(0) == value;
    };
    for (const std::size_t s : sides)
        if (!qualifies(s)) return std::nullopt;
    std::size_t lo = *std::min_element(sides.begin(), sides.end());
    std::size_t hi = *std::max_element(sides.begin(), sides.end());
    while (lo > 0 && qualifies(lo - 1)) --lo;
    while (hi + 1 < p.piece_count() && qualifies(hi + 1)) ++hi;
    return std::make_pair(p.breakpoints()[lo], p.breakpoints()[hi + 1]);
}

}  // namespace

ConditionReport check_condition(const FluxSpec& flux, const DiffusionSpec& diff,
                                const LatticeBasis& lat, const Rational& I) {
    check_shared_frame(flux, diff, lat);
    const std::size_t n = flux.n;

    const AffineLocus w = affine_locus(flux, I);
    const RatMat z = degenerate_locus(diff, I);
    const RatMat meet = intersect_spans(w.basis, z, n);
    const LatticeBasis dual = dual_basis(lat);

    ConditionReport rep;
    rep.I = I;
    rep.affine_subspace = w.basis;
    rep.degenerate_subspace = z;
    rep.cbar = w.cbar;
    rep.violating = lattice_points_in_subspace(dual, meet);
    rep.holds = rep.violating.rank() == 0;
    if (!rep.holds) {
        auto [coords, ambient] = shortest_generator(rep.violating);
        rep.witness = std::move(coords);
        rep.witness_ambient = std::move(ambient);
        const auto zv = zero_vicinity_common(diff, I, z);
        if (!zv) throw Error("internal: degenerate locus lost its vicinity");
        rep.vicinity = std::make_pair(std::max(w.alpha, zv->alpha), std::min(w.beta, zv->beta));
    }
    return rep;
}

StrictConditionReport check_strict_condition(const FluxSpec& flux, const DiffusionSpec& diff,
                                             const LatticeBasis& lat, const Rational& M) {
    check_shared_frame(flux, diff, lat);
    if (!(M > 0)) throw InvalidInput("state range bound must be positive");
    if (M > flux.bound) throw InvalidInput("state range exceeds the working interval");
    const std::size_t n = flux.n;

    // Flux derivatives and diffusion entries restricted to [-M, M], all on
    // one common breakpoint grid so piece indices line up.
    std::vector<PiecewisePoly> dphi;
    dphi.reserve(n);
    for (const auto& c : flux.components) dphi.push_back(c.restricted(-M, M).derivative());
    std::vector<PiecewisePoly> aa;
    aa.reserve(n * n);
    for (const auto& e : diff.entries) aa.push_back(e.restricted(-M, M));
    std::vector<Rational> grid = dphi[0].breakpoints();
    const auto merge_grid = [&](const PiecewisePoly& p) {
        std::vector<Rational> merged;
        std::ranges::set_union(grid, p.breakpoints(), std::back_inserter(merged));
        grid = std::move(merged);
    };
    for (const auto& p : dphi) merge_grid(p);
    for (const auto& p : aa) merge_grid(p);
    for (auto& p : dphi) p = p.refined(grid);
    for (auto& p : aa) p = p.refined(grid);

    const LatticeBasis dual = dual_basis(lat);
    StrictConditionReport rep;

    for (std::size_t piece = 0; piece + 1 < grid.size(); ++piece) {
        // xi qualifies on this piece iff xi·flux' has no coefficient of
        // degree >= 1 (constant pairing) and xi is annihilated by every
        // polynomial coefficient matrix of the diffusion (zero form; the
        // two together are one joint kernel).
        std::vector<RatVec> rows;
        int maxdeg_phi = 0;
        for (const auto& p : dphi) maxdeg_phi = std::max(maxdeg_phi, p.piece(piece).degree());
        for (int k = 1; k <= maxdeg_phi; ++k) {
            RatVec row(n, Rational(0));
            bool nonzero = false;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = dphi[j].piece(piece).coeff(static_cast<std::size_t>(k));
                if (row[j] != 0) nonzero = true;
            }
            if (nonzero) rows.push_back(std::move(row));
        }
        int maxdeg_a = 0;
        for (const auto& p : aa) maxdeg_a = std::max(maxdeg_a, p.piece(piece).degree());
        for (int k = 0; k <= maxdeg_a; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                RatVec row(n, Rational(0));
                bool nonzero = false;
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] = aa[i * n + j].piece(piece).coeff(static_cast<std::size_t>(k));
                    if (row[j] != 0) nonzero = true;
                }
                if (nonzero) rows.push_back(std::move(row));
            }
        }
        RatMat constraint(rows.size(), n);
        for (std::size_t r = 0; r < rows.size(); ++r) constraint.set_row(r, rows[r]);
        const RatMat v = kernel_basis(constraint);
        if (v.rows == 0) continue;
        const Sublattice violating = lattice_points_in_subspace(dual, v);
        if (violating.rank() == 0) continue;

        auto [coords, ambient] = shortest_generator(violating);
        Rational value(0);
        for (std::size_t j = 0; j < n; ++j) value += ambient[j] * dphi[j].piece(piece).coeff(0);

        // Maximal interval around the offending piece where the pairing
        // keeps this constant value and the form stays identically zero.
        const auto qualifies = [&](std::size_t q) {
            Poly pairing;
            for (std::size_t j = 0; j < n; ++j)
                pairing = pairing + ambient[j] * dphi[j].piece(q);
            if (!pairing.is_constant() || pairing.coeff(0) != value) return false;
            Poly form;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    form = form + (ambient[i] * ambient[j]) * aa[i * n + j].piece(q);
            return form.is_zero();
        };
        std::size_t lo = piece, hi = piece;
        while (lo > 0 && qualifies(lo - 1)) --lo;
        while (hi + 2 < grid.size() && qualifies(hi + 1)) ++hi;

        rep.holds = false;
        rep.witness = std::move(coords);
        rep.witness_ambient = std::move(ambient);
        rep.tau = -value;
        rep.interval = std::make_pair(grid[lo], grid[hi + 1]);
        return rep;
    }
    return rep;
}

ReducedProblem reduce_problem(const FluxSpec& flux, const DiffusionSpec& diff,
                              const LatticeBasis& lat, const Rational& I) {
    check_shared_frame(flux, diff, lat);
    const std::size_t n = flux.n;
    const Rational M = flux.bound;

    const AffineLocus w = affine_locus(flux, I);
    const LatticeBasis dual = dual_basis(lat);
    const Sublattice l0 = lattice_points_in_subspace(dual, w.basis);
    const std::size_t m = l0.rank();
    const std::size_t d = n - m;

    // zeta rows in dual-basis coordinates: completion first (the genuinely
    // nonlinear directions), then the generators of the affine sublattice.
    IntMat coords(n, n);
    if (m == 0) {
        coords = IntMat::identity(n);
    } else {
        auto [basis, record] = complete_basis(l0);
        (void)basis;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < n; ++j) coords.at(i, j) = record.matrix.at(m + i, j);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) coords.at(d + i, j) = record.matrix.at(i, j);
    }
    const RatMat q = to_rational(coords) * dual.rows;

    RatVec speed(n, Rational(0));
    for (std::size_t i = 0; i < n; ++i) speed[i] = dot(q.row(i), w.cbar);

    // Transformed flux and diffusion, exactly: q·flux - speed·u and q a q^T.
    const PiecewisePoly u_poly = PiecewisePoly::from_poly(
        Poly(std::vector<Rational>{Rational(0), Rational(1)}), -M, M);
    std::vector<PiecewisePoly> comps_t;
    comps_t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PiecewisePoly acc = u_poly * (-speed[i]);
        for (std::size_t j = 0; j < n; ++j) acc = acc + flux.components[j] * q.at(i, j);
        comps_t.push_back(std::move(acc));
    }
    std::vector<PiecewisePoly> entries_t;
    entries_t.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            PiecewisePoly acc = PiecewisePoly::constant(Rational(0), -M, M);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < n; ++l)
                    acc = acc + diff.entry(k, l) * (q.at(i, k) * q.at(j, l));
            entries_t.push_back(std::move(acc));
        }

    ReducedProblem red{FluxSpec(std::move(comps_t), M),
                       DiffusionSpec(n, std::move(entries_t), M),
                       q,
                       inverse(q),
                       coords,
                       speed,
                       d,
                       std::make_pair(-M, M),
                       {},
                       I};

    // Plateau: common constancy interval of the last m transformed flux
    // components around I (full working interval when m = 0).
    bool plateau_ok = true;
    for (std::size_t i = d; i < n; ++i) {
        const auto ci = constancy_interval(red.flux_t.components[i], I);
        if (!ci) {
            plateau_ok = false;
            break;
        }
        red.plateau.first = std::max(red.plateau.first, ci->first);
        red.plateau.second = std::min(red.plateau.second, ci->second);
    }

    // Predicate checks on the output.
    const RatMat pairing = lat.rows * q.transpose();
    bool integral = true;
    for (const Rational& e : pairing.a)
        if (denominator(e) != 1) integral = false;
    const Rational pdet = integral ? determinant(pairing) : Rational(0);
    red.r_flags[0] = integral && (pdet == 1 || pdet == -1);

    const LatticeBasis std_lat = LatticeBasis::integer(n);
    const AffineLocus wt = affine_locus(red.flux_t, I);
    const Sublattice lt0 = lattice_points_in_subspace(std_lat, wt.basis);
    bool tail_supported = lt0.rank() == m;
    for (std::size_t i = 0; i < lt0.generators.rows && tail_supported; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (lt0.generators.at(i, j) != 0) tail_supported = false;
    red.r_flags[1] = tail_supported;

    red.r_flags[2] = plateau_ok;

    RatMat tail_span(m, n);
    for (std::size_t i = 0; i < m; ++i) tail_span.at(i, d + i) = Rational(1);
    const RatMat zt = degenerate_locus(red.diffusion_t, I);
    const RatMat meet = intersect_spans(tail_span, zt, n);
    red.r_flags[3] = lattice_points_in_subspace(std_lat, meet).rank() == 0;

    return red;
}

double CounterexampleField::eval(double t, std::span<const double> x) const {
    if (x.size() != xi.size()) throw InvalidInput("evaluation point has the wrong dimension");
    double phase = -to_double(c) * t;
    for (std::size_t i = 0; i < xi.size(); ++i) phase += to_double(xi[i]) * x[i];
    return to_double(I) + to_double(delta) * std::sin(2.0 * std::numbers::pi * phase);
}

double CounterexampleField::eval1(double t, double x) const {
    return eval(t, std::span<const double>(&x, 1));
}

CounterexampleField counterexample(const ConditionReport& report, std::optional<Rational> delta) {
    if (report.holds)
        throw ConditionHolds("the nonlinearity-diffusivity condition holds; no counterexample exists");
    if (!report.vicinity || !report.witness_ambient)
        throw InvalidInput("failure report is missing its vicinity or witness");
    const auto& [alpha, beta] = *report.vicinity;
    Rational amp;
    if (delta) {
        amp = *delta;
    } else {
        const Rational left = report.I - alpha;
        const Rational right = beta - report.I;
        amp = (left < right ? left : right) / 2;
    }
    if (!(amp > 0)) throw InvalidInput("counterexample amplitude must be positive");
    if (!(report.I - amp > alpha) || !(report.I + amp < beta))
        throw InvalidInput("amplitude too large for the violating vicinity");
    return CounterexampleField{report.I, amp, *report.witness_ambient,
                               dot(report.cbar, *report.witness_ambient)};
}

}  // namespace torusdecay
