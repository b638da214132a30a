#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "torusdecay/condition.hpp"
#include "torusdecay/diagnostics.hpp"
#include "torusdecay/lattice.hpp"
#include "torusdecay/model.hpp"
#include "torusdecay/solver.hpp"

namespace torusdecay {

// ---------------------------------------------------------------------------
// Problem configuration (JSON).
//
// Top-level schema:
//   {
//     "spec":    { "n", "M", "flux", "diffusion", "lattice" },
//     "initial": { "kind": "constant" | "sine" | "raw", ... },
//     "scheme":  { "grid", "cfl", "t_end", "snapshot_every",
//                  "diagnostics_every", "threads", "flux_scheme",
//                  "lipschitz_samples", "dt_override" },
//     "outputs": { "directory", "formats" },
//     "I", "threshold", "times", "delta"      (all optional)
//   }
//
// Every rational-valued entry ("M", breakpoints, coefficients, lattice rows,
// "I", "delta", initial-data parameters) accepts an exact string like
// "-3/4", a JSON integer, or a JSON float (converted exactly as the dyadic
// rational it is). A piecewise function is
//   { "breakpoints": [b0, ..., bm], "coeffs": [[c0, c1, ...], ...] }
// with ascending-degree coefficients, piece j valid on [b_j, b_{j+1}].
// ---------------------------------------------------------------------------

struct InitialSpec {
    enum class Kind { constant, sine, raw };
    Kind kind = Kind::constant;

    Rational value;      // constant: u0 == value
    Rational mean;       // sine: u0 = mean + amplitude * sin(2pi(wave.x + phase))
    Rational amplitude;
    Rational phase;      // in turns (1 = full period)
    IntVec wave;         // integer frequency vector, one entry per axis
    std::string path;    // raw: values file, relative to the config directory
};

struct OutputSpec {
    std::string directory;  // empty = no file output requested
    bool csv = true;
    bool tdk1 = true;
    bool json = true;
};

struct ProblemConfig {
    FluxSpec flux;
    DiffusionSpec diffusion;
    LatticeBasis lattice;

    std::optional<Rational> mean_override;  // "I"
    InitialSpec initial;

    Grid grid{4};
    bool has_grid = false;
    SchemeConfig scheme;
    std::optional<double> dt_override;

    double threshold = 0.05;             // decay threshold for reports
    std::vector<double> times;           // sampling times for analytic fields
    std::optional<Rational> delta;       // analytic-field amplitude override

    OutputSpec outputs;
    std::filesystem::path base_dir;      // directory of the config file
};

// Parse a configuration document. Malformed JSON raises InvalidInput with
// "line L, column C" in the message; schema violations name the offending
// key. base_dir resolves relative raw-data paths.
ProblemConfig parse_problem_config(const std::string& text,
                                   const std::filesystem::path& base_dir);
ProblemConfig load_problem_config(const std::filesystem::path& file);

// The mean value I: the explicit override when present, otherwise derived
// exactly from the initial data (constant -> value, sine -> mean). Raw
// initial data has no exact mean; requesting I for it without an override
// raises InvalidInput.
Rational config_mean(const ProblemConfig& cfg);

// Sample or import the initial data onto cfg.grid.
PeriodicField initial_field(const ProblemConfig& cfg);

// ---------------------------------------------------------------------------
// JSON serialization of reports and specs.
// ---------------------------------------------------------------------------

nlohmann::json spec_to_json(const FluxSpec& flux, const DiffusionSpec& diff,
                            const LatticeBasis& lat);
nlohmann::json to_json(const ConditionReport& report);
// ProblemConfig-shaped document: the transformed spec plus a "reduction"
// block (transform, inverse, integer coordinates, speed, d, plateau,
// r_flags). initial/scheme/outputs are carried over from `origin`, with
// sine frequency vectors rewritten exactly into the transformed frame.
nlohmann::json to_json(const ReducedProblem& red, const ProblemConfig& origin);
nlohmann::json to_json(const DiagnosticsReport& report);
nlohmann::json to_json(const CounterexampleField& field);

// Single-row CSV rendering of a diagnostics report (header + one row).
std::string report_summary_csv(const DiagnosticsReport& report);

// ---------------------------------------------------------------------------
// Bulk trajectory data.
// ---------------------------------------------------------------------------

// Scalar series: header t,mass,I_eta_sq,I_eta_abs,l1_to_mean,dissipation_cum
// and one %.17g row per recorded step.
std::string diagnostics_csv(const Trajectory& traj);

// One row per cell: indices, cell-midpoint coordinates, value.
// 1D header i0,x0,value; 2D header i0,i1,x0,x1,value. Row-major order.
std::string snapshot_csv(const PeriodicField& field);

// index,t map for the snapshots of a trajectory.
std::string snapshot_times_csv(const Trajectory& traj);

// Compact binary frame: magic "TDK1", then little-endian u32 n, u32 N_i per
// axis, f64 t, and the cell values as f64 row-major.
std::string tdk1_bytes(const PeriodicField& field, double t);

struct Tdk1Frame {
    Grid grid{4};
    double t = 0.0;
    std::vector<double> values;
};
Tdk1Frame parse_tdk1(std::string_view bytes);
Tdk1Frame read_tdk1(const std::filesystem::path& file);

// Rebuild a trajectory from binary frames (sorted by time already —
// read_frames_dir sorts by filename, which simulate writes in time order).
// The scalar series is recomputed per frame; per-step audit aggregates are
// not recoverable from frames and stay at their defaults except for the
// value range, which is rescanned.
Trajectory trajectory_from_frames(const std::vector<Tdk1Frame>& frames);

// All snapshot_*.tdk1 files in a directory, sorted by filename.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Atomic file output: write to <path>.tmp, then rename onto <path>, so no
// partial file ever sits at the destination.
// ---------------------------------------------------------------------------
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

}  // namespace torusdecay
