#include "torusdecay/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "torusdecay/error.hpp"

namespace torusdecay {

namespace {

// A field's recorded bound may exceed a rational interval endpoint by the
// rounding of the endpoint itself or by the 1e-12 maximum-principle slack
// of recorded snapshots; pardon sub-ulp excess only.
void check_inside(const PeriodicField& field, const Rational& M, const char* what) {
    const Rational fb = rational_from_double(field.bound);
    if (fb > M && (fb - M) * Rational(Int(1) << 50) > M) throw InvalidInput(what);
}

double mean_of(std::vector<double>& buf) {
    return stable_sum(buf) / static_cast<double>(buf.size());
}

std::vector<double> snapshot_l1_series(const Trajectory& traj, double I) {
    std::vector<double> d;
    d.reserve(traj.snapshots.size());
    for (const PeriodicField& s : traj.snapshots) d.push_back(l1_distance(s, I));
    return d;
}

}  // namespace

double mean_value(const PeriodicField& field) {
    return stable_sum(field.values) / static_cast<double>(field.values.size());
}

double entropy_integral(const PeriodicField& field, const EntropySpec& eta) {
    check_inside(field, eta.eta.domain_hi(), "field leaves the entropy's domain");
    const CompiledPiecewise e(eta.eta);
    std::vector<double> buf(field.values.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = e(field.values[i]);
    return mean_of(buf);
}

double l1_distance(const PeriodicField& f, const PeriodicField& g) {
    if (!(f.grid == g.grid)) throw InvalidInput("l1 distance needs a common grid");
    std::vector<double> buf(f.values.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::abs(f.values[i] - g.values[i]);
    return mean_of(buf);
}

double l1_distance(const PeriodicField& f, double constant) {
    if (!std::isfinite(constant)) throw InvalidInput("comparison constant must be finite");
    std::vector<double> buf(f.values.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::abs(f.values[i] - constant);
    return mean_of(buf);
}

DissipationAudit dissipation_audit(const Trajectory& traj, const DiffusionSpec& diff,
                                   const PeriodicField& u0) {
    if (!diff.is_diagonal())
        throw Unsupported("dissipation audit requires a diagonal diffusion matrix");
    if (!traj.audit.dissipation_available)
        throw Unsupported("trajectory was recorded without dissipation tracking");
    if (!(u0.grid == traj.grid)) throw InvalidInput("initial data grid must match the trajectory");
    std::vector<double> sq(u0.values.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = u0.values[i] * u0.values[i];
    DissipationAudit out;
    out.cumulative = traj.audit.dissipation_cum;
    out.bound = 0.5 * mean_of(sq);
    out.pass = out.cumulative <= out.bound + 1e-10;
    return out;
}

std::string to_string(DecayVerdict v) {
    switch (v) {
        case DecayVerdict::decayed: return "decayed";
        case DecayVerdict::not_decayed: return "not-decayed";
        default: return "inconclusive";
    }
}

DecayVerdict decay_report(const Trajectory& traj, double I, double threshold) {
    if (traj.snapshots.empty() || traj.times.size() != traj.snapshots.size())
        throw InvalidInput("trajectory must carry time-stamped snapshots");
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw InvalidInput("decay threshold must be positive and finite");
    const std::vector<double> d = snapshot_l1_series(traj, I);
    if (d.back() <= threshold) return DecayVerdict::decayed;

    // plateau away from zero: needs at least two samples in the closing half
    const double t_mid = traj.times.front() + 0.5 * (traj.times.back() - traj.times.front());
    std::size_t first = d.size();
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (traj.times[k] >= t_mid) {
            first = k;
            break;
        }
    }
    if (first + 1 < d.size()) {
        double tv = 0.0;
        for (std::size_t k = first + 1; k < d.size(); ++k) tv += std::abs(d[k] - d[k - 1]);
        if (d.back() > 0.9 * d.front() && tv < 1e-6) return DecayVerdict::not_decayed;
    }
    return DecayVerdict::inconclusive;
}

double contraction_audit(const Trajectory& a, const Trajectory& b) {
    if (!(a.grid == b.grid)) throw InvalidInput("paired trajectories need a common grid");
    if (a.times != b.times) throw InvalidInput("paired trajectories must share step times");
    if (a.snapshots.size() != b.snapshots.size() || a.snapshots.size() != a.times.size())
        throw InvalidInput("paired trajectories must carry matching snapshots");
    double worst = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
        const double d = l1_distance(a.snapshots[k], b.snapshots[k]);
        if (k > 0) worst = std::max(worst, d - prev);
        prev = d;
    }
    return worst;
}

DiagnosticsReport diagnostics_report(const Trajectory& traj, const DiffusionSpec& diff,
                                     const PeriodicField& u0, double threshold) {
    if (traj.snapshots.empty() || traj.times.size() != traj.snapshots.size())
        throw InvalidInput("trajectory must carry time-stamped snapshots");
    DiagnosticsReport rep;
    rep.threshold = threshold;
    rep.monotone_regime = traj.audit.monotone_guarantee;
    rep.mass_drift = traj.audit.mass_drift;

    // Worst positive jump over the tested entropies: the per-step audited
    // ones (u^2, |u|, |u - I|) plus five Kruzhkov entropies spanning the
    // initial range, evaluated on the recorded snapshots.
    rep.entropy_monotone = std::max({traj.audit.entropy_sq_worst_jump,
                                     traj.audit.entropy_abs_worst_jump,
                                     traj.audit.l1_worst_jump});
    double domain = std::max(u0.bound, 1e-30);
    for (const PeriodicField& s : traj.snapshots) domain = std::max(domain, s.bound);
    const Rational M = rational_from_double(domain);
    const double lo = traj.audit.initial_min;
    const double hi = traj.audit.initial_max;
    std::vector<EntropySpec> etas;
    etas.push_back(EntropySpec::square(M));
    for (int i = 0; i < 5; ++i) {
        const double k = lo + (hi - lo) * (2 * i + 1) / 10.0;
        Rational kr = rational_from_double(k);
        if (kr >= M) kr = M * Rational(9, 10);
        if (kr <= -M) kr = -M * Rational(9, 10);
        etas.push_back(EntropySpec::kruzhkov(kr, M));
    }
    for (const EntropySpec& eta : etas) {
        double prev = 0.0;
        for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
            const double v = entropy_integral(traj.snapshots[k], eta);
            if (k > 0) rep.entropy_monotone = std::max(rep.entropy_monotone, v - prev);
            prev = v;
        }
    }

    rep.l1_series.reserve(traj.snapshots.size());
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
        rep.l1_series.emplace_back(traj.times[k], l1_distance(traj.snapshots[k], traj.mean0));

    if (diff.is_diagonal() && traj.audit.dissipation_available)
        rep.dissipation = dissipation_audit(traj, diff, u0);

    rep.decay_verdict = decay_report(traj, traj.mean0, threshold);
    return rep;
}

}  // namespace torusdecay
