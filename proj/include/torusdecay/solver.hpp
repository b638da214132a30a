#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "torusdecay/model.hpp"

namespace torusdecay {

// Uniform periodic grid on the unit torus, n in {1, 2}. Cells are addressed
// row-major: cell (i1, i2) sits at index i1 * N2 + i2; n = 1 uses N2 = 1.
struct Grid {
    std::size_t n = 1;
    std::array<std::size_t, 2> cells{4, 1};

    explicit Grid(std::size_t N1);
    Grid(std::size_t N1, std::size_t N2);

    std::size_t size() const { return cells[0] * cells[1]; }
    double h(std::size_t axis) const { return 1.0 / static_cast<double>(cells[axis]); }
    // Cell-midpoint coordinate along an axis.
    double midpoint(std::size_t axis, std::size_t i) const {
        return (static_cast<double>(i) + 0.5) * h(axis);
    }
    friend bool operator==(const Grid&, const Grid&) = default;
};

// Cell values on a grid together with the bound M they are known to respect
// (all finite, |values| <= bound). The bound travels with the data so scheme
// constants (Lipschitz bounds, CFL limits) can be derived without rescans.
struct PeriodicField {
    Grid grid;
    std::vector<double> values;
    double bound = 0.0;

    PeriodicField(Grid g, std::vector<double> vals, double bound_M);

    double value(std::size_t i1, std::size_t i2 = 0) const {
        return values[i1 * grid.cells[1] + i2];
    }
    double min_value() const;
    double max_value() const;
};

// Field sampled at cell midpoints; bound is the max absolute sample.
PeriodicField sample_field(const Grid& g, const std::function<double(double)>& f);
PeriodicField sample_field(const Grid& g, const std::function<double(double, double)>& f);
// Field adopting raw values with the tight bound max |value|.
PeriodicField field_from_values(const Grid& g, std::vector<double> vals);

enum class FluxScheme { local_lax_friedrichs };

struct SchemeConfig {
    double cfl = 0.9;                  // safety factor in (0, 1]
    double t_end = 1.0;                // final time, > 0
    std::size_t snapshot_every = 1;    // snapshot cadence in steps; 0 = first/last only
    FluxScheme flux_scheme = FluxScheme::local_lax_friedrichs;
    std::size_t lipschitz_samples = 64;  // secant samples for non-polynomial extensions;
                                         // piecewise-polynomial data always takes the exact path
    std::size_t diagnostics_every = 1;   // stored-series cadence; 0 = first/last only.
                                         // Audits still run every step regardless.
    std::size_t threads = 1;             // per-cell map parallelism; results are bit-identical
                                         // for every thread count
};

// One row of the per-step scalar series. All integrals are over the unit
// torus (cell measure = 1 / cell count): mass = mean u, entropy_sq = mean
// u^2, entropy_abs = mean |u|, l1_to_mean = mean |u - mean(u0)|, and
// dissipation_cum = sum over completed steps of dt * mean over cells of
// sum_r (centered difference along axis r of B_r(u))^2 where B_r is the
// dissipation potential of the r-th diagonal diffusion entry (zero and
// flagged unavailable for non-diagonal diffusion).
struct DiagnosticsRow {
    double t = 0.0;
    double mass = 0.0;
    double entropy_sq = 0.0;
    double entropy_abs = 0.0;
    double l1_to_mean = 0.0;
    double dissipation_cum = 0.0;
};

// Per-step aggregates, tracked at every step even when the stored series is
// thinned, so the per-step guarantees stay checkable on long runs.
struct RunAudit {
    double mass_drift = 0.0;              // max |mean(u(t)) - mean(u0)|
    double entropy_sq_worst_jump = 0.0;   // worst positive per-step jump of mean u^2
    double entropy_abs_worst_jump = 0.0;  // worst positive per-step jump of mean |u|
    double l1_worst_jump = 0.0;           // worst positive per-step jump of mean |u - mean(u0)|
    double min_value = 0.0;               // over the whole run
    double max_value = 0.0;
    double initial_min = 0.0;
    double initial_max = 0.0;
    bool monotone_guarantee = true;       // false when mixed (off-diagonal) diffusion terms are
                                          // present: the cross stencil is experimental and sits
                                          // outside the maximum-principle/contraction guarantees
    bool dissipation_available = false;   // true iff the diffusion matrix is diagonal
    double dissipation_cum = 0.0;
};

struct Trajectory {
    Grid grid{4};
    double mean0 = 0.0;                       // conserved mean of u0
    std::vector<double> times;                // snapshot times, strictly increasing from 0
    std::vector<PeriodicField> snapshots;     // one per entry of times
    std::vector<DiagnosticsRow> diagnostics;  // scalar series; first and final rows always present
    RunAudit audit;
    std::size_t steps = 0;
};

// Double-precision evaluator for a PiecewisePoly: breakpoints and Horner
// tables rounded once at construction. Values outside the domain are
// extrapolated with the edge pieces, which keeps evaluation total under the
// <= 1e-12 range drift the scheme permits.
class CompiledPiecewise {
public:
    explicit CompiledPiecewise(const PiecewisePoly& p);
    // Raw form: breakpoints.size() must equal piece_coeffs.size() + 1;
    // coefficients ascending per piece.
    CompiledPiecewise(std::vector<double> breakpoints, std::vector<std::vector<double>> piece_coeffs);

    double operator()(double u) const {
        std::size_t j = 0;
        const std::size_t last = offsets_.size() - 2;
        while (j < last && u >= breaks_[j + 1]) ++j;
        double acc = 0.0;
        for (std::size_t k = offsets_[j + 1]; k > offsets_[j]; --k) acc = acc * u + coeffs_[k - 1];
        return acc;
    }

private:
    std::vector<double> breaks_;
    std::vector<double> coeffs_;         // ascending, flattened
    std::vector<std::size_t> offsets_;   // piece j owns coeffs_[offsets_[j], offsets_[j+1])
};

// Evaluator for the dissipation potential B(u) = integral_0^u sqrt(a(s)) ds
// of one nonnegative diagonal diffusion entry. When every piece of a is the
// square of an affine polynomial (or constant), B is assembled exactly as a
// piecewise polynomial; otherwise a dense cubic Hermite table is built from
// composite 16-point Gauss-Legendre prefix integrals with the exact slope
// sqrt(a) at the nodes.
class DissipationPotential {
public:
    static DissipationPotential build(const PiecewisePoly& a_entry);
    double operator()(double u) const;
    bool polynomial() const { return poly_.has_value(); }

private:
    DissipationPotential() = default;
    double table_eval(double u) const;
    std::optional<CompiledPiecewise> poly_;
    // Hermite table over [lo_, lo_ + dx_ * (val_.size() - 1)]
    double lo_ = 0.0;
    double dx_ = 1.0;
    std::vector<double> val_;
    std::vector<double> der_;
};

// One potential per axis from the diagonal entries. Mixed (off-diagonal)
// diffusion has no per-axis potential; throws Unsupported.
std::vector<DissipationPotential> dissipation_potentials(const DiffusionSpec& diff);

// Local Lax-Friedrichs interface value 1/2 (phi(u_l) + phi(u_r)) -
// 1/2 alpha (u_r - u_l). Consistent (equals phi(u) at u_l = u_r = u),
// nondecreasing in u_l and nonincreasing in u_r provided alpha dominates
// |phi'| between the arguments; alpha below that local bound is rejected
// with InvalidInput because monotonicity would break.
double numerical_flux(const PiecewisePoly& phi_i, double u_left, double u_right, double alpha);

// Discrete sum_ij D^2_ij A_ij(u): second central differences for diagonal
// entries and the 4-point cross stencil for mixed entries, with periodic
// wraparound. Exactly zero on constant fields; reduces to the standard
// discrete Laplacian for A(u) = u.
std::vector<double> diffusion_increment(const DiffusionSpec& diff, const PeriodicField& field);

// cfl * min over axes of [ h_i / (2 n L_phi_i), h_i^2 / (4 n^2 L_a_i) ],
// where L_phi_i is the Lipschitz bound of phi_i and L_a_i the max slope of
// the row-i primitive entries, both over the full working interval
// [-M, M]. The bound is therefore constant over a run and the update is a
// convex combination of neighbor values for every admissible field.
// Returns cfg.t_end when every bound is zero (static problem).
double cfl_dt(const FluxSpec& flux, const DiffusionSpec& diff, const PeriodicField& field,
              const SchemeConfig& cfg);

// One conservative explicit update. Throws CflViolation when dt exceeds the
// hard stability bound (the cfl = 1 value of cfl_dt).
PeriodicField step(const PeriodicField& field, double dt, const FluxSpec& flux,
                   const DiffusionSpec& diff);

// Evolve u0 to cfg.t_end with dt = cfl_dt per step, the final step clamped
// so the end time is reached exactly. Records snapshots on the cadence (plus
// first and final), the scalar series, and per-step audit aggregates.
Trajectory run(const FluxSpec& flux, const DiffusionSpec& diff, const PeriodicField& u0,
               const SchemeConfig& cfg);

// Evolve two initial data with one shared scheme: the same Lax-Friedrichs
// alpha and the same dt sequence (both derived from the full working
// interval), so the pair is synchronized and the L1 contraction property
// applies between the trajectories.
std::pair<Trajectory, Trajectory> run_pair(const FluxSpec& flux, const DiffusionSpec& diff,
                                           const PeriodicField& u0, const PeriodicField& v0,
                                           const SchemeConfig& cfg);

// Deterministic compensated (Neumaier) sum in index order.
double stable_sum(std::span<const double> xs);

}  // namespace torusdecay
