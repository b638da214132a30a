#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "torusdecay/model.hpp"
#include "torusdecay/solver.hpp"

namespace torusdecay {

// Cell-measure-weighted mean of the field values (unit torus volume).
double mean_value(const PeriodicField& field);

// Cell-measure-weighted sum of eta(u_j).
double entropy_integral(const PeriodicField& field, const EntropySpec& eta);

// Cell-measure-weighted l1 distances; the two-field form requires a common grid.
double l1_distance(const PeriodicField& f, const PeriodicField& g);
double l1_distance(const PeriodicField& f, double constant);

// Cumulative discrete dissipation of a recorded run against the exact
// entropy budget of its initial data. Diagonal diffusion only.
struct DissipationAudit {
    double cumulative = 0.0;
    double bound = 0.0;  // half the mean of u0^2
    bool pass = false;   // cumulative <= bound + 1e-10
};

DissipationAudit dissipation_audit(const Trajectory& traj, const DiffusionSpec& diff,
                                   const PeriodicField& u0);

// A finite run cannot certify a limit at infinite time, so the verdict is
// three-way: "decayed" when the final distance to the mean is below the
// threshold, "not-decayed" when the distance has visibly plateaued away
// from zero, "inconclusive" otherwise.
enum class DecayVerdict { decayed, not_decayed, inconclusive };

std::string to_string(DecayVerdict v);

DecayVerdict decay_report(const Trajectory& traj, double I, double threshold);

// Worst positive jump of the snapshot-wise l1 distance between two runs
// recorded on the same grid with identical step times.
double contraction_audit(const Trajectory& a, const Trajectory& b);

struct DiagnosticsReport {
    double mass_drift = 0.0;
    double entropy_monotone = 0.0;  // worst positive jump over the tested entropies
    std::vector<std::pair<double, double>> l1_series;  // (t, ||u(t) - I||_1)
    std::optional<double> contraction_worst;           // paired runs only
    std::optional<DissipationAudit> dissipation;       // diagonal diffusion only
    DecayVerdict decay_verdict = DecayVerdict::inconclusive;
    double threshold = 0.0;
    bool monotone_regime = true;
};

DiagnosticsReport diagnostics_report(const Trajectory& traj, const DiffusionSpec& diff,
                                     const PeriodicField& u0, double threshold);

}  // namespace torusdecay
