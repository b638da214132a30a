#include "torusdecay/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "torusdecay/error.hpp"

namespace torusdecay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Compensated accumulator (Neumaier); deterministic for a fixed add order.
struct NeumaierAcc {
    double s = 0.0;
    double c = 0.0;
    void add(double x) {
        const double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    double get() const { return s + c; }
};

// Runs body(lo, hi) over disjoint chunks of [0, count). Every chunk is an
// independent per-cell map writing disjoint outputs, so the result does not
// depend on the chunking and is bit-identical for every thread count.
constexpr std::size_t kParallelCutoff = 2048;

template <class F>
void parallel_cells(std::size_t count, std::size_t threads, F&& body) {
    if (threads <= 1 || count < kParallelCutoff) {
        body(std::size_t{0}, count);
        return;
    }
    const std::size_t T = std::min(threads, count / (kParallelCutoff / 2) + 1);
    const std::size_t chunk = (count + T - 1) / T;
    std::vector<std::thread> pool;
    pool.reserve(T - 1);
    for (std::size_t t = 1; t < T; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    body(std::size_t{0}, std::min(chunk, count));
    for (auto& th : pool) th.join();
}

// 16-point Gauss-Legendre rule on [-1, 1], stored as symmetric pairs.
const double kGlNode[8] = {0.0950125098376374401853193, 0.2816035507792589132304605,
                           0.4580167776572273863424194, 0.6178762444026437484466718,
                           0.7554044083550030338951012, 0.8656312023878317438804679,
                           0.9445750230732325760779884, 0.9894009349916499325961542};
const double kGlWeight[8] = {0.1894506104550684962853967, 0.1826034150449235888667637,
                             0.1691565193950025381893121, 0.1495959888165767320815017,
                             0.1246289712555338720524763, 0.0951585116824927848099251,
                             0.0622535239386478928628438, 0.0271524594117540948517806};

std::optional<Rational> rational_sqrt(const Rational& c) {
    if (c < 0) return std::nullopt;
    if (c == 0) return Rational(0);
    const Int num = numerator(c);
    const Int den = denominator(c);
    const Int sn = boost::multiprecision::sqrt(num);
    const Int sd = boost::multiprecision::sqrt(den);
    if (sn * sn != num || sd * sd != den) return std::nullopt;
    return Rational(sn) / Rational(sd);
}

// q with q*q == p and q affine, when such a q exists over the rationals.
std::optional<Poly> affine_sqrt(const Poly& p) {
    if (p.is_zero()) return Poly();
    if (p.degree() == 0) {
        const auto r = rational_sqrt(p.coeff(0));
        if (!r) return std::nullopt;
        return Poly({*r});
    }
    if (p.degree() != 2 || !(p.coeff(2) > 0)) return std::nullopt;
    const auto q1 = rational_sqrt(p.coeff(2));
    if (!q1) return std::nullopt;
    const Rational q0 = p.coeff(1) / (Rational(2) * *q1);
    if (q0 * q0 != p.coeff(0)) return std::nullopt;
    return Poly({q0, *q1});
}

// A field may carry a bound that is the rounded double image of the exact
// working-interval endpoint; sub-ulp excess is pardoned.
void check_field_bound(const PeriodicField& field, const Rational& M) {
    const Rational fb = rational_from_double(field.bound);
    if (fb > M && (fb - M) * Rational(Int(1) << 50) > M)
        throw InvalidInput("field bound exceeds the working interval");
}

// Per-run constants: compiled evaluators, Lax-Friedrichs alphas, and the
// hard (cfl = 1) stability bound, all derived over the full working
// interval [-M, M], so they are valid for every admissible field.
struct StepContext {
    std::size_t n = 1;
    std::array<std::size_t, 2> N{1, 1};
    std::array<double, 2> h{1.0, 1.0};
    std::vector<CompiledPiecewise> phi;
    std::array<std::optional<CompiledPiecewise>, 2> prim_diag;
    std::optional<CompiledPiecewise> prim_cross;  // entry (0,1); the matrix is symmetric
    std::array<double, 2> alpha{0.0, 0.0};
    double dt_hard = kInf;
};

StepContext build_context(const FluxSpec& flux, const DiffusionSpec& diff, const Grid& grid) {
    if (flux.n != grid.n) throw InvalidInput("flux dimension must match the grid");
    if (diff.n != grid.n) throw InvalidInput("diffusion dimension must match the grid");
    if (flux.bound != diff.bound)
        throw InvalidInput("flux and diffusion must share the working interval");
    const Rational& RM = flux.bound;

    StepContext ctx;
    ctx.n = grid.n;
    ctx.N = grid.cells;
    ctx.h = {grid.h(0), grid.n > 1 ? grid.h(1) : 1.0};
    const double dn = static_cast<double>(grid.n);
    double hard = kInf;
    for (std::size_t a = 0; a < grid.n; ++a) {
        ctx.phi.emplace_back(flux.components[a]);
        const double L = lipschitz_bound(flux.components[a], RM);
        ctx.alpha[a] = L;
        if (L > 0.0) hard = std::min(hard, ctx.h[a] / (2.0 * dn * L));
        double La = 0.0;
        for (std::size_t b = 0; b < grid.n; ++b)
            La = std::max(La, max_abs_value(diff.entry(a, b), -RM, RM));
        if (La > 0.0) hard = std::min(hard, ctx.h[a] * ctx.h[a] / (4.0 * dn * dn * La));
    }
    ctx.dt_hard = hard;
    for (std::size_t r = 0; r < grid.n; ++r)
        if (!diff.entry(r, r).is_zero()) ctx.prim_diag[r].emplace(diff.primitive_entry(r, r));
    if (grid.n == 2 && !diff.entry(0, 1).is_zero())
        ctx.prim_cross.emplace(diff.primitive_entry(0, 1));
    return ctx;
}

struct Workspace {
    std::array<std::vector<double>, 2> fluxval;
    std::array<std::vector<double>, 2> iface;
    std::array<std::vector<double>, 3> prim;  // diagonal axis 0, diagonal axis 1, cross
};

// One conservative explicit update of u into out. Every phase is a pure
// per-cell map over the previous phase's arrays, so the arithmetic per cell
// is independent of position (exact translation equivariance) and of the
// chunking (bit-identical across thread counts).
void step_impl(const StepContext& ctx, const std::vector<double>& u, double dt,
               std::vector<double>& out, Workspace& ws, std::size_t threads) {
    const std::size_t N1 = ctx.N[0];
    const std::size_t N2 = ctx.N[1];
    const std::size_t total = N1 * N2;
    const std::size_t n = ctx.n;
    out.resize(total);

    std::array<bool, 2> adv{false, false};
    for (std::size_t a = 0; a < n; ++a) {
        adv[a] = ctx.alpha[a] > 0.0;
        if (!adv[a]) continue;  // constant component: interface differences vanish exactly
        auto& fv = ws.fluxval[a];
        fv.resize(total);
        const CompiledPiecewise& f = ctx.phi[a];
        parallel_cells(total, threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t idx = lo; idx < hi; ++idx) fv[idx] = f(u[idx]);
        });
        auto& F = ws.iface[a];
        F.resize(total);
        const double al = ctx.alpha[a];
        parallel_cells(total, threads, [&, a](std::size_t lo, std::size_t hi) {
            for (std::size_t idx = lo; idx < hi; ++idx) {
                std::size_t nidx;
                if (a == 0) {
                    const std::size_t i = idx / N2;
                    nidx = (i + 1 == N1 ? 0 : i + 1) * N2 + idx % N2;
                } else {
                    const std::size_t j = idx % N2;
                    nidx = idx - j + (j + 1 == N2 ? 0 : j + 1);
                }
                F[idx] = 0.5 * (fv[idx] + fv[nidx]) - 0.5 * al * (u[nidx] - u[idx]);
            }
        });
    }

    const std::array<const std::optional<CompiledPiecewise>*, 3> prim_src = {
        &ctx.prim_diag[0], &ctx.prim_diag[1], &ctx.prim_cross};
    for (std::size_t s = 0; s < 3; ++s) {
        if (!prim_src[s]->has_value()) continue;
        auto& pv = ws.prim[s];
        pv.resize(total);
        const CompiledPiecewise& A = **prim_src[s];
        parallel_cells(total, threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t idx = lo; idx < hi; ++idx) pv[idx] = A(u[idx]);
        });
    }

    const bool adv0 = adv[0];
    const bool adv1 = n > 1 && adv[1];
    const bool d0 = ctx.prim_diag[0].has_value();
    const bool d1 = n > 1 && ctx.prim_diag[1].has_value();
    const bool dc = ctx.prim_cross.has_value();
    const double r0 = adv0 ? dt / ctx.h[0] : 0.0;
    const double r1 = adv1 ? dt / ctx.h[1] : 0.0;
    const double q0 = d0 ? dt / (ctx.h[0] * ctx.h[0]) : 0.0;
    const double q1 = d1 ? dt / (ctx.h[1] * ctx.h[1]) : 0.0;
    // both ordered mixed pairs of the symmetric matrix: 2 * 1/(4 h1 h2)
    const double qc = dc ? dt / (2.0 * ctx.h[0] * ctx.h[1]) : 0.0;
    const double* F0 = ws.iface[0].data();
    const double* F1 = ws.iface[1].data();
    const double* P0 = ws.prim[0].data();
    const double* P1 = ws.prim[1].data();
    const double* PC = ws.prim[2].data();

    parallel_cells(total, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t idx = lo; idx < hi; ++idx) {
            const std::size_t i = idx / N2;
            const std::size_t j = idx - i * N2;
            const std::size_t ip = i + 1 == N1 ? 0 : i + 1;
            const std::size_t im = i == 0 ? N1 - 1 : i - 1;
            double acc = u[idx];
            if (adv0) acc -= r0 * (F0[idx] - F0[im * N2 + j]);
            if (d0) acc += q0 * ((P0[ip * N2 + j] - P0[idx]) - (P0[idx] - P0[im * N2 + j]));
            if (n > 1) {
                const std::size_t jp = j + 1 == N2 ? 0 : j + 1;
                const std::size_t jm = j == 0 ? N2 - 1 : j - 1;
                if (adv1) acc -= r1 * (F1[idx] - F1[i * N2 + jm]);
                if (d1) acc += q1 * ((P1[i * N2 + jp] - P1[idx]) - (P1[idx] - P1[i * N2 + jm]));
                if (dc)
                    acc += qc * ((PC[ip * N2 + jp] - PC[ip * N2 + jm]) -
                                 (PC[im * N2 + jp] - PC[im * N2 + jm]));
            }
            out[idx] = acc;
        }
    });
}

void validate_config(const SchemeConfig& cfg) {
    if (!(cfg.cfl > 0.0) || cfg.cfl > 1.0) throw InvalidInput("cfl must lie in (0, 1]");
    if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end))
        throw InvalidInput("t_end must be positive and finite");
}

struct ScanResult {
    double mean, sq, absm, dev, mn, mx;
};

ScanResult scan_field(const std::vector<double>& v, double mean0) {
    NeumaierAcc m, q, a, d;
    double mn = v[0], mx = v[0];
    for (const double x : v) {
        m.add(x);
        q.add(x * x);
        a.add(std::abs(x));
        d.add(std::abs(x - mean0));
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    const double inv = 1.0 / static_cast<double>(v.size());
    return {m.get() * inv, q.get() * inv, a.get() * inv, d.get() * inv, mn, mx};
}

// mean over cells of sum_r (centered difference of B_r(u) along axis r)^2
double dissipation_rate(const Grid& g, const std::vector<DissipationPotential>& pots,
                        const std::vector<char>& active, const std::vector<double>& u,
                        std::vector<double>& scratch) {
    const std::size_t N1 = g.cells[0];
    const std::size_t N2 = g.cells[1];
    const std::size_t total = N1 * N2;
    scratch.resize(total);
    NeumaierAcc acc;
    for (std::size_t r = 0; r < g.n; ++r) {
        if (!active[r]) continue;
        const DissipationPotential& B = pots[r];
        for (std::size_t idx = 0; idx < total; ++idx) scratch[idx] = B(u[idx]);
        const double inv2h = 0.5 * static_cast<double>(g.cells[r]);
        for (std::size_t idx = 0; idx < total; ++idx) {
            const std::size_t i = idx / N2;
            const std::size_t j = idx - i * N2;
            std::size_t p, m;
            if (r == 0) {
                p = (i + 1 == N1 ? 0 : i + 1) * N2 + j;
                m = (i == 0 ? N1 - 1 : i - 1) * N2 + j;
            } else {
                p = i * N2 + (j + 1 == N2 ? 0 : j + 1);
                m = i * N2 + (j == 0 ? N2 - 1 : j - 1);
            }
            const double term = (scratch[p] - scratch[m]) * inv2h;
            acc.add(term * term);
        }
    }
    return acc.get() / static_cast<double>(total);
}

// Per-run bookkeeping for one evolving state: current values, audit
// aggregates, and the recorded series.
struct RunnerState {
    std::vector<double> cur, nxt;
    double bound = 0.0;
    double mean0 = 0.0;
    NeumaierAcc diss_acc;
    double prev_sq = 0.0, prev_abs = 0.0, prev_dev = 0.0;
    Trajectory traj;

    void init(const PeriodicField& f, bool diagonal) {
        cur = f.values;
        bound = f.bound;
        traj.grid = f.grid;
        mean0 = stable_sum(cur) / static_cast<double>(cur.size());
        traj.mean0 = mean0;
        const ScanResult sc = scan_field(cur, mean0);
        auto& au = traj.audit;
        au.initial_min = sc.mn;
        au.initial_max = sc.mx;
        au.min_value = sc.mn;
        au.max_value = sc.mx;
        au.mass_drift = std::abs(sc.mean - mean0);
        au.monotone_guarantee = diagonal;
        au.dissipation_available = diagonal;
        prev_sq = sc.sq;
        prev_abs = sc.absm;
        prev_dev = sc.dev;
        traj.diagnostics.push_back({0.0, sc.mean, sc.sq, sc.absm, sc.dev, 0.0});
        traj.times.push_back(0.0);
        traj.snapshots.push_back(f);
    }

    void after_step(double t, std::size_t k, bool final_step, const SchemeConfig& cfg) {
        const ScanResult sc = scan_field(cur, mean0);
        bound = std::max({bound, std::abs(sc.mn), std::abs(sc.mx)});
        auto& au = traj.audit;
        au.mass_drift = std::max(au.mass_drift, std::abs(sc.mean - mean0));
        au.entropy_sq_worst_jump = std::max(au.entropy_sq_worst_jump, sc.sq - prev_sq);
        au.entropy_abs_worst_jump = std::max(au.entropy_abs_worst_jump, sc.absm - prev_abs);
        au.l1_worst_jump = std::max(au.l1_worst_jump, sc.dev - prev_dev);
        au.min_value = std::min(au.min_value, sc.mn);
        au.max_value = std::max(au.max_value, sc.mx);
        au.dissipation_cum = diss_acc.get();
        prev_sq = sc.sq;
        prev_abs = sc.absm;
        prev_dev = sc.dev;
        if (final_step || (cfg.diagnostics_every != 0 && k % cfg.diagnostics_every == 0))
            traj.diagnostics.push_back({t, sc.mean, sc.sq, sc.absm, sc.dev, diss_acc.get()});
        if (final_step || (cfg.snapshot_every != 0 && k % cfg.snapshot_every == 0)) {
            traj.times.push_back(t);
            traj.snapshots.emplace_back(traj.grid, cur, bound);
        }
        traj.steps = k;
    }
};

// Shared time loop: every state advances with the same context (same alphas)
// and the same dt sequence.
void drive(const FluxSpec& flux, const DiffusionSpec& diff, const Grid& grid,
           const SchemeConfig& cfg, std::span<RunnerState> states) {
    const bool diagonal = diff.is_diagonal();
    std::vector<DissipationPotential> pots;
    std::vector<char> pot_active;
    bool any_pot = false;
    if (diagonal) {
        pots = dissipation_potentials(diff);
        pot_active.resize(grid.n);
        for (std::size_t r = 0; r < grid.n; ++r) {
            pot_active[r] = !diff.entry(r, r).is_zero();
            any_pot = any_pot || pot_active[r];
        }
    }
    const StepContext ctx = build_context(flux, diff, grid);
    const double dtb = std::isinf(ctx.dt_hard) ? kInf : cfg.cfl * ctx.dt_hard;

    Workspace ws;
    std::vector<double> pot_scratch;
    const std::size_t threads = cfg.threads == 0 ? 1 : cfg.threads;
    double t = 0.0;
    std::size_t k = 0;
    while (t < cfg.t_end) {
        const double rem = cfg.t_end - t;
        const bool clamped = !(dtb < rem);
        const double dt = clamped ? rem : dtb;
        for (auto& st : states) {
            if (any_pot)
                st.diss_acc.add(dt * dissipation_rate(grid, pots, pot_active, st.cur, pot_scratch));
            step_impl(ctx, st.cur, dt, st.nxt, ws, threads);
            st.cur.swap(st.nxt);
        }
        ++k;
        t = clamped ? cfg.t_end : t + dt;
        for (auto& st : states) st.after_step(t, k, clamped, cfg);
    }
}

}  // namespace

Grid::Grid(std::size_t N1) : n(1), cells{N1, 1} {
    if (N1 < 4) throw InvalidInput("grids need at least 4 cells per axis");
}

Grid::Grid(std::size_t N1, std::size_t N2) : n(2), cells{N1, N2} {
    if (N1 < 4 || N2 < 4) throw InvalidInput("grids need at least 4 cells per axis");
}

PeriodicField::PeriodicField(Grid g, std::vector<double> vals, double bound_M)
    : grid(g), values(std::move(vals)), bound(bound_M) {
    if (values.size() != grid.size()) throw InvalidInput("value count must match the grid");
    if (!std::isfinite(bound) || bound < 0.0)
        throw InvalidInput("field bound must be finite and nonnegative");
    for (const double v : values) {
        if (!std::isfinite(v)) throw InvalidInput("field values must be finite");
        if (std::abs(v) > bound) throw InvalidInput("field values must respect the bound");
    }
}

double PeriodicField::min_value() const { return *std::min_element(values.begin(), values.end()); }

double PeriodicField::max_value() const { return *std::max_element(values.begin(), values.end()); }

PeriodicField sample_field(const Grid& g, const std::function<double(double)>& f) {
    if (g.n != 1) throw InvalidInput("one-variable sampler needs a 1-d grid");
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.cells[0]; ++i) v[i] = f(g.midpoint(0, i));
    return field_from_values(g, std::move(v));
}

PeriodicField sample_field(const Grid& g, const std::function<double(double, double)>& f) {
    if (g.n != 2) throw InvalidInput("two-variable sampler needs a 2-d grid");
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.cells[0]; ++i)
        for (std::size_t j = 0; j < g.cells[1]; ++j)
            v[i * g.cells[1] + j] = f(g.midpoint(0, i), g.midpoint(1, j));
    return field_from_values(g, std::move(v));
}

PeriodicField field_from_values(const Grid& g, std::vector<double> vals) {
    double b = 0.0;
    for (const double v : vals) b = std::max(b, std::abs(v));
    return PeriodicField(g, std::move(vals), b);
}

CompiledPiecewise::CompiledPiecewise(const PiecewisePoly& p) {
    breaks_.reserve(p.breakpoints().size());
    for (const Rational& b : p.breakpoints()) breaks_.push_back(to_double(b));
    offsets_.push_back(0);
    for (const Poly& q : p.pieces()) {
        for (const Rational& c : q.coeffs()) coeffs_.push_back(to_double(c));
        offsets_.push_back(coeffs_.size());
    }
}

CompiledPiecewise::CompiledPiecewise(std::vector<double> breakpoints,
                                     std::vector<std::vector<double>> piece_coeffs) {
    if (piece_coeffs.empty() || breakpoints.size() != piece_coeffs.size() + 1)
        throw InvalidInput("compiled piecewise needs one more breakpoint than pieces");
    breaks_ = std::move(breakpoints);
    offsets_.push_back(0);
    for (const auto& pc : piece_coeffs) {
        coeffs_.insert(coeffs_.end(), pc.begin(), pc.end());
        offsets_.push_back(coeffs_.size());
    }
}

DissipationPotential DissipationPotential::build(const PiecewisePoly& a_entry) {
    DissipationPotential out;
    const auto& bp = a_entry.breakpoints();

    // Polynomial tier: every piece constant or an exact affine square, so
    // B is itself piecewise polynomial (split at the sign change of the
    // affine root).
    bool poly_ok = true;
    std::vector<double> pb{to_double(bp.front())};
    std::vector<std::vector<double>> pc;
    double carry = 0.0;  // B at the current left edge
    for (std::size_t j = 0; j < a_entry.piece_count() && poly_ok; ++j) {
        const Poly& p = a_entry.piece(j);
        const Rational lo = bp[j];
        const Rational hi = bp[j + 1];
        if (p.is_constant()) {
            const double c = p.is_zero() ? 0.0 : std::max(0.0, to_double(p.coeff(0)));
            const double slope = std::sqrt(c);
            const double lod = to_double(lo);
            const double hid = to_double(hi);
            pc.push_back({carry - slope * lod, slope});
            pb.push_back(hid);
            carry += slope * (hid - lod);
            continue;
        }
        const auto q = affine_sqrt(p);
        if (!q || q->degree() != 1) {
            poly_ok = false;
            break;
        }
        const Rational q0 = q->coeff(0);
        const Rational q1 = q->coeff(1);
        const Rational root = -q0 / q1;
        std::vector<std::pair<Rational, Rational>> segs;
        if (root > lo && root < hi)
            segs = {{lo, root}, {root, hi}};
        else
            segs = {{lo, hi}};
        for (const auto& [sl, sr] : segs) {
            const Rational qm = q->eval((sl + sr) / Rational(2));
            const Rational sgn(qm > 0 ? 1 : -1);
            const Rational c1 = sgn * q0;
            const Rational c2 = sgn * q1 / Rational(2);
            const double c0 = carry - to_double(c1 * sl + c2 * sl * sl);
            pc.push_back({c0, to_double(c1), to_double(c2)});
            pb.push_back(to_double(sr));
            carry = c0 + to_double(c1 * sr + c2 * sr * sr);
        }
    }
    if (poly_ok) {
        const CompiledPiecewise draft(pb, pc);
        const double shift = draft(0.0);
        for (auto& coeffs : pc) coeffs[0] -= shift;
        out.poly_.emplace(std::move(pb), std::move(pc));
        return out;
    }

    // Table tier: dense cubic Hermite interpolation with Gauss-Legendre
    // prefix values and the exact slope sqrt(a) at the nodes. Negative
    // evaluations (possible between the certified sample points of a) are
    // clamped to zero.
    const double lo = to_double(a_entry.domain_lo());
    const double hi = to_double(a_entry.domain_hi());
    const std::size_t K = 4096;
    out.lo_ = lo;
    out.dx_ = (hi - lo) / static_cast<double>(K);
    out.val_.assign(K + 1, 0.0);
    out.der_.assign(K + 1, 0.0);
    const CompiledPiecewise ca(a_entry);
    const auto root_a = [&ca](double x) { return std::sqrt(std::max(0.0, ca(x))); };
    out.der_[0] = root_a(lo);
    NeumaierAcc prefix;
    for (std::size_t k = 1; k <= K; ++k) {
        const double xl = lo + out.dx_ * static_cast<double>(k - 1);
        const double xr = k == K ? hi : lo + out.dx_ * static_cast<double>(k);
        const double mid = 0.5 * (xl + xr);
        const double half = 0.5 * (xr - xl);
        double s = 0.0;
        for (int g = 0; g < 8; ++g)
            s += kGlWeight[g] * (root_a(mid - half * kGlNode[g]) + root_a(mid + half * kGlNode[g]));
        prefix.add(half * s);
        out.val_[k] = prefix.get();
        out.der_[k] = root_a(xr);
    }
    const double shift = out.table_eval(0.0);
    for (double& v : out.val_) v -= shift;
    return out;
}

double DissipationPotential::table_eval(double u) const {
    const std::size_t K = val_.size() - 1;
    const double t = (u - lo_) / dx_;
    std::size_t k = 0;
    if (t >= static_cast<double>(K - 1))
        k = K - 1;
    else if (t > 0.0)
        k = static_cast<std::size_t>(t);
    const double s = t - static_cast<double>(k);
    const double s2 = s * s;
    const double omt = 1.0 - s;
    const double h00 = (1.0 + 2.0 * s) * omt * omt;
    const double h10 = s * omt * omt;
    const double h01 = s2 * (3.0 - 2.0 * s);
    const double h11 = s2 * (s - 1.0);
    return h00 * val_[k] + h10 * dx_ * der_[k] + h01 * val_[k + 1] + h11 * dx_ * der_[k + 1];
}

double DissipationPotential::operator()(double u) const {
    if (poly_) return (*poly_)(u);
    return table_eval(u);
}

std::vector<DissipationPotential> dissipation_potentials(const DiffusionSpec& diff) {
    if (!diff.is_diagonal())
        throw Unsupported("dissipation potentials require a diagonal diffusion matrix");
    std::vector<DissipationPotential> pots;
    pots.reserve(diff.n);
    for (std::size_t r = 0; r < diff.n; ++r)
        pots.push_back(DissipationPotential::build(diff.entry(r, r)));
    return pots;
}

double numerical_flux(const PiecewisePoly& phi_i, double u_left, double u_right, double alpha) {
    if (!std::isfinite(u_left) || !std::isfinite(u_right) || !std::isfinite(alpha))
        throw InvalidInput("numerical flux arguments must be finite");
    if (u_left != u_right) {
        Rational lo = rational_from_double(std::min(u_left, u_right));
        Rational hi = rational_from_double(std::max(u_left, u_right));
        if (lo < phi_i.domain_lo()) lo = phi_i.domain_lo();
        if (hi > phi_i.domain_hi()) hi = phi_i.domain_hi();
        if (lo <= hi) {
            const double local = max_abs_value(phi_i.derivative(), lo, hi);
            if (alpha < local * (1.0 - 1e-9))
                throw InvalidInput("alpha is below the local Lipschitz bound of the flux");
        }
    }
    const CompiledPiecewise f(phi_i);
    return 0.5 * (f(u_left) + f(u_right)) - 0.5 * alpha * (u_right - u_left);
}

std::vector<double> diffusion_increment(const DiffusionSpec& diff, const PeriodicField& field) {
    const Grid& g = field.grid;
    if (diff.n != g.n) throw InvalidInput("diffusion dimension must match the grid");
    check_field_bound(field, diff.bound);
    const std::size_t N1 = g.cells[0];
    const std::size_t N2 = g.cells[1];
    const std::size_t total = N1 * N2;
    const std::vector<double>& u = field.values;

    std::array<std::optional<CompiledPiecewise>, 3> prim;
    for (std::size_t r = 0; r < g.n; ++r)
        if (!diff.entry(r, r).is_zero()) prim[r].emplace(diff.primitive_entry(r, r));
    if (g.n == 2 && !diff.entry(0, 1).is_zero()) prim[2].emplace(diff.primitive_entry(0, 1));

    std::array<std::vector<double>, 3> pv;
    for (std::size_t s = 0; s < 3; ++s) {
        if (!prim[s]) continue;
        pv[s].resize(total);
        for (std::size_t idx = 0; idx < total; ++idx) pv[s][idx] = (*prim[s])(u[idx]);
    }

    const double q0 = prim[0] ? 1.0 / (g.h(0) * g.h(0)) : 0.0;
    const double q1 = prim[1] ? 1.0 / (g.h(1) * g.h(1)) : 0.0;
    const double qc = prim[2] ? 1.0 / (2.0 * g.h(0) * g.h(1)) : 0.0;
    const double* P0 = pv[0].data();
    const double* P1 = pv[1].data();
    const double* PC = pv[2].data();

    std::vector<double> out(total, 0.0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        const std::size_t i = idx / N2;
        const std::size_t j = idx - i * N2;
        const std::size_t ip = i + 1 == N1 ? 0 : i + 1;
        const std::size_t im = i == 0 ? N1 - 1 : i - 1;
        double acc = 0.0;
        if (prim[0]) acc += q0 * ((P0[ip * N2 + j] - P0[idx]) - (P0[idx] - P0[im * N2 + j]));
        if (g.n > 1) {
            const std::size_t jp = j + 1 == N2 ? 0 : j + 1;
            const std::size_t jm = j == 0 ? N2 - 1 : j - 1;
            if (prim[1]) acc += q1 * ((P1[i * N2 + jp] - P1[idx]) - (P1[idx] - P1[i * N2 + jm]));
            if (prim[2])
                acc += qc * ((PC[ip * N2 + jp] - PC[ip * N2 + jm]) -
                             (PC[im * N2 + jp] - PC[im * N2 + jm]));
        }
        out[idx] = acc;
    }
    return out;
}

double cfl_dt(const FluxSpec& flux, const DiffusionSpec& diff, const PeriodicField& field,
              const SchemeConfig& cfg) {
    if (!(cfg.cfl > 0.0) || cfg.cfl > 1.0) throw InvalidInput("cfl must lie in (0, 1]");
    check_field_bound(field, flux.bound);
    const StepContext ctx = build_context(flux, diff, field.grid);
    if (std::isinf(ctx.dt_hard)) {
        if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end))
            throw InvalidInput("t_end must be positive and finite");
        return cfg.t_end;
    }
    return cfg.cfl * ctx.dt_hard;
}

PeriodicField step(const PeriodicField& field, double dt, const FluxSpec& flux,
                   const DiffusionSpec& diff) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive and finite");
    check_field_bound(field, flux.bound);
    const StepContext ctx = build_context(flux, diff, field.grid);
    if (dt > ctx.dt_hard * (1.0 + 1e-12))
        throw CflViolation("dt exceeds the hard stability bound " + std::to_string(ctx.dt_hard));
    Workspace ws;
    std::vector<double> out;
    step_impl(ctx, field.values, dt, out, ws, 1);
    double nb = field.bound;
    for (const double v : out) nb = std::max(nb, std::abs(v));
    return PeriodicField(field.grid, std::move(out), nb);
}

Trajectory run(const FluxSpec& flux, const DiffusionSpec& diff, const PeriodicField& u0,
               const SchemeConfig& cfg) {
    validate_config(cfg);
    check_field_bound(u0, flux.bound);
    RunnerState st;
    st.init(u0, diff.is_diagonal());
    drive(flux, diff, u0.grid, cfg, std::span<RunnerState>(&st, 1));
    return std::move(st.traj);
}

std::pair<Trajectory, Trajectory> run_pair(const FluxSpec& flux, const DiffusionSpec& diff,
                                           const PeriodicField& u0, const PeriodicField& v0,
                                           const SchemeConfig& cfg) {
    validate_config(cfg);
    if (!(u0.grid == v0.grid)) throw InvalidInput("paired runs need a common grid");
    check_field_bound(u0, flux.bound);
    check_field_bound(v0, flux.bound);
    std::array<RunnerState, 2> st;
    const bool diagonal = diff.is_diagonal();
    st[0].init(u0, diagonal);
    st[1].init(v0, diagonal);
    drive(flux, diff, u0.grid, cfg, std::span<RunnerState>(st.data(), 2));
    return {std::move(st[0].traj), std::move(st[1].traj)};
}

double stable_sum(std::span<const double> xs) {
    NeumaierAcc acc;
    for (const double x : xs) acc.add(x);
    return acc.get();
}

}  // namespace torusdecay
