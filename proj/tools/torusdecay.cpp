// Command-line driver: check / reduce / simulate / counterexample / diagnose.
//
// Exit codes: 0 success (and: condition holds), 2 invalid input (malformed
// JSON reports line and column), 3 condition fails (check), 4 CFL or setup
// failure, 5 counterexample impossible because the condition holds.
//
// All emitted files go through write-to-temp + atomic rename, so a failed
// run never leaves a partial file at a destination path. Identical configs
// produce bit-identical outputs for every --threads value.

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torusdecay/condition.hpp"
#include "torusdecay/diagnostics.hpp"
#include "torusdecay/error.hpp"
#include "torusdecay/io.hpp"
#include "torusdecay/solver.hpp"

namespace td = torusdecay;
namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out;
    bool json = false;
    std::optional<std::size_t> threads;
    std::optional<double> threshold;
    std::optional<std::string> delta;
    std::vector<double> times;
};

char fmt_buf[32];
std::string fmt(double x) {
    std::snprintf(fmt_buf, sizeof fmt_buf, "%.17g", x);
    return fmt_buf;
}

std::string vec_text(const td::RatVec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += td::to_string(v[i]);
    }
    return s + ")";
}

// Output directory: --out wins, then outputs.directory from the config.
std::optional<fs::path> out_dir(const Options& opt, const td::ProblemConfig& cfg) {
    if (!opt.out.empty()) return fs::path(opt.out);
    if (!cfg.outputs.directory.empty()) return fs::path(cfg.outputs.directory);
    return std::nullopt;
}

fs::path require_out_dir(const Options& opt, const td::ProblemConfig& cfg) {
    const auto dir = out_dir(opt, cfg);
    if (!dir)
        throw td::InvalidInput(
            "an output directory is required: pass --out or set outputs.directory");
    return *dir;
}

// --threads flag, then TORUSDECAY_THREADS, then the config value.
std::size_t resolve_threads(const Options& opt, const td::ProblemConfig& cfg) {
    if (opt.threads) return *opt.threads == 0 ? 1 : *opt.threads;
    if (const char* env = std::getenv("TORUSDECAY_THREADS")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0' || v == 0 || v > 4096)
            throw td::InvalidInput("TORUSDECAY_THREADS must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    return cfg.scheme.threads == 0 ? 1 : cfg.scheme.threads;
}

std::string snapshot_name(std::size_t index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%06zu%s", index, ext);
    return buf;
}

void write_snapshots(const fs::path& dir, const td::OutputSpec& formats,
                     const td::Trajectory& traj) {
    if (formats.csv) td::atomic_write(dir / "snapshot_times.csv", td::snapshot_times_csv(traj));
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        if (formats.csv)
            td::atomic_write(dir / snapshot_name(k, ".csv"), td::snapshot_csv(traj.snapshots[k]));
        if (formats.tdk1)
            td::atomic_write(dir / snapshot_name(k, ".tdk1"),
                             td::tdk1_bytes(traj.snapshots[k], traj.times[k]));
    }
}

void emit_document(const Options& opt, const std::optional<fs::path>& dir, bool json_enabled,
                   const char* filename, const nlohmann::json& doc, const std::string& human) {
    if (dir && json_enabled) td::atomic_write(*dir / filename, doc.dump(2) + "\n");
    if (opt.json)
        std::cout << doc.dump(2) << "\n";
    else
        std::cout << human << "\n";
}

int cmd_check(const Options& opt) {
    const td::ProblemConfig cfg = td::load_problem_config(opt.config);
    const td::Rational I = td::config_mean(cfg);
    const td::ConditionReport report = td::check_condition(cfg.flux, cfg.diffusion, cfg.lattice, I);

    std::string human;
    if (report.holds) {
        human = "condition holds at I = " + td::to_string(report.I);
    } else {
        human = "condition fails at I = " + td::to_string(report.I) + "; witness xi = " +
                vec_text(*report.witness_ambient) + "; vicinity = (" +
                td::to_string(report.vicinity->first) + ", " +
                td::to_string(report.vicinity->second) + ")";
    }
    const auto dir = out_dir(opt, cfg);
    if (dir) fs::create_directories(*dir);
    emit_document(opt, dir, cfg.outputs.json, "condition.json", td::to_json(report), human);
    return report.holds ? 0 : 3;
}

int cmd_reduce(const Options& opt) {
    const td::ProblemConfig cfg = td::load_problem_config(opt.config);
    const td::Rational I = td::config_mean(cfg);
    const td::ReducedProblem red = td::reduce_problem(cfg.flux, cfg.diffusion, cfg.lattice, I);

    std::string human = "reduced: d = " + std::to_string(red.d) + " genuinely nonlinear of n = " +
                        std::to_string(red.flux_t.n) + "; plateau = (" +
                        td::to_string(red.plateau.first) + ", " +
                        td::to_string(red.plateau.second) + "); r_flags = [";
    for (std::size_t k = 0; k < 4; ++k)
        human += std::string(red.r_flags[k] ? "true" : "false") + (k < 3 ? ", " : "]");
    const auto dir = out_dir(opt, cfg);
    if (dir) fs::create_directories(*dir);
    emit_document(opt, dir, cfg.outputs.json, "reduced.json", td::to_json(red, cfg), human);
    return 0;
}

int cmd_simulate(const Options& opt) {
    td::ProblemConfig cfg = td::load_problem_config(opt.config);
    cfg.scheme.threads = resolve_threads(opt, cfg);
    if (opt.threshold) cfg.threshold = *opt.threshold;

    if (cfg.flux.n > 2) {
        std::cerr << "error: the simulator supports 1 and 2 space dimensions\n";
        return 4;
    }
    if (!(cfg.lattice == td::LatticeBasis::integer(cfg.flux.n))) {
        std::cerr << "error: the period lattice is not the integer lattice; run the reduce "
                     "subcommand and simulate its output\n";
        return 4;
    }

    const td::PeriodicField u0 = td::initial_field(cfg);
    if (cfg.dt_override) {
        td::SchemeConfig probe = cfg.scheme;
        probe.cfl = 1.0;
        const double hard = td::cfl_dt(cfg.flux, cfg.diffusion, u0, probe);
        if (*cfg.dt_override > hard * (1.0 + 1e-12))
            throw td::CflViolation("dt_override " + fmt(*cfg.dt_override) +
                                   " exceeds the hard stability bound " + fmt(hard));
        cfg.scheme.cfl = std::min(1.0, *cfg.dt_override / hard);
    }

    const td::Trajectory traj = td::run(cfg.flux, cfg.diffusion, u0, cfg.scheme);
    const td::DiagnosticsReport report =
        td::diagnostics_report(traj, cfg.diffusion, u0, cfg.threshold);

    const fs::path dir = require_out_dir(opt, cfg);
    fs::create_directories(dir);
    if (cfg.outputs.csv) {
        td::atomic_write(dir / "diagnostics.csv", td::diagnostics_csv(traj));
        td::atomic_write(dir / "summary.csv", td::report_summary_csv(report));
    }
    write_snapshots(dir, cfg.outputs, traj);

    const std::string human =
        "simulated " + std::to_string(traj.steps) + " steps to t = " + fmt(traj.times.back()) +
        "; decay verdict: " + td::to_string(report.decay_verdict) +
        " (final l1_to_mean = " + fmt(report.l1_series.back().second) +
        ", threshold = " + fmt(report.threshold) + "); outputs in " + dir.string();
    emit_document(opt, dir, cfg.outputs.json, "report.json", td::to_json(report), human);
    return 0;
}

int cmd_counterexample(const Options& opt) {
    td::ProblemConfig cfg = td::load_problem_config(opt.config);
    if (opt.threshold) cfg.threshold = *opt.threshold;
    if (opt.delta) cfg.delta = td::parse_rational(*opt.delta);
    if (!opt.times.empty()) {
        cfg.times = opt.times;
        for (std::size_t k = 0; k < cfg.times.size(); ++k)
            if (cfg.times[k] < 0.0 || (k > 0 && cfg.times[k] <= cfg.times[k - 1]))
                throw td::InvalidInput("--times must be strictly increasing and nonnegative");
    }
    if (cfg.times.empty())
        for (int t = 0; t <= 10; ++t) cfg.times.push_back(static_cast<double>(t));

    const td::Rational I = td::config_mean(cfg);
    const td::ConditionReport report = td::check_condition(cfg.flux, cfg.diffusion, cfg.lattice, I);
    // Throws ConditionHolds (exit 5) when no counterexample exists.
    const td::CounterexampleField field = td::counterexample(report, cfg.delta);

    nlohmann::json doc = td::to_json(field);
    doc["times"] = cfg.times;
    std::string human = "counterexample: u(t, x) = I + delta sin(2 pi (xi.x - c t)) with I = " +
                        td::to_string(field.I) + ", delta = " + td::to_string(field.delta) +
                        ", xi = " + vec_text(field.xi) + ", c = " + td::to_string(field.c);

    const std::size_t n = cfg.flux.n;
    const auto dir = out_dir(opt, cfg);
    if (dir) fs::create_directories(*dir);
    if (n <= 2) {
        const td::Grid grid = cfg.has_grid ? cfg.grid : (n == 1 ? td::Grid(256) : td::Grid(64, 64));
        std::vector<td::Tdk1Frame> frames;
        for (const double t : cfg.times) {
            td::PeriodicField snap =
                n == 1 ? td::sample_field(grid, std::function<double(double)>([&](double x) {
                                              return field.eval1(t, x);
                                          }))
                       : td::sample_field(grid, std::function<double(double, double)>(
                                                    [&](double x, double y) {
                                                        const double xy[2] = {x, y};
                                                        return field.eval(t, xy);
                                                    }));
            frames.push_back(td::Tdk1Frame{grid, t, std::move(snap.values)});
        }
        td::Trajectory traj = td::trajectory_from_frames(frames);
        const td::DecayVerdict verdict = td::decay_report(traj, td::to_double(I), cfg.threshold);
        doc["decay_verdict"] = td::to_string(verdict);
        doc["threshold"] = cfg.threshold;
        human += "; decay verdict: " + td::to_string(verdict) +
                 " (l1 to mean = " + fmt(traj.diagnostics.back().l1_to_mean) + ")";
        if (dir) write_snapshots(*dir, cfg.outputs, traj);
    } else {
        human += "; sampling skipped (grids support n <= 2)";
    }
    emit_document(opt, dir, cfg.outputs.json, "counterexample.json", doc, human);
    return 0;
}

int cmd_diagnose(const Options& opt) {
    td::ProblemConfig cfg = td::load_problem_config(opt.config);
    if (opt.threshold) cfg.threshold = *opt.threshold;
    const fs::path dir = require_out_dir(opt, cfg);

    const std::vector<fs::path> files = td::list_frame_files(dir);
    if (files.empty())
        throw td::InvalidInput("no snapshot_*.tdk1 frames in " + dir.string());
    std::vector<td::Tdk1Frame> frames;
    for (const fs::path& f : files) frames.push_back(td::read_tdk1(f));

    td::Trajectory traj = td::trajectory_from_frames(frames);
    if (traj.grid.n != cfg.flux.n)
        throw td::InvalidInput("frame dimension does not match the problem spec");
    traj.audit.monotone_guarantee = cfg.diffusion.is_diagonal();

    const td::DiagnosticsReport report =
        td::diagnostics_report(traj, cfg.diffusion, traj.snapshots.front(), cfg.threshold);
    if (cfg.outputs.csv) td::atomic_write(dir / "summary.csv", td::report_summary_csv(report));

    const std::string human =
        "diagnosed " + std::to_string(frames.size()) + " frames on a " +
        std::to_string(traj.grid.cells[0]) +
        (traj.grid.n == 2 ? "x" + std::to_string(traj.grid.cells[1]) : "") +
        " grid; decay verdict: " + td::to_string(report.decay_verdict) +
        " (final l1_to_mean = " + fmt(report.l1_series.back().second) +
        ", threshold = " + fmt(report.threshold) + "); mass drift = " + fmt(report.mass_drift);
    emit_document(opt, std::optional<fs::path>(dir), cfg.outputs.json, "report.json",
                  td::to_json(report), human);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic entropy-solution toolkit: decide the nonlinearity-diffusivity "
                 "condition, reduce problems to the canonical frame, simulate decay to the "
                 "mean, and audit trajectories."};
    app.require_subcommand(1);

    Options opt;
    std::size_t threads_flag = 0;
    double threshold_flag = 0.0;
    std::string delta_flag;

    const auto add_common = [&](CLI::App* cmd, bool with_out) {
        cmd->add_option("--config", opt.config, "problem configuration (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        if (with_out) cmd->add_option("--out", opt.out, "output directory");
        cmd->add_flag("--json", opt.json, "print the machine-readable report to stdout");
    };

    CLI::App* check = app.add_subcommand("check", "decide the nonlinearity-diffusivity condition");
    add_common(check, true);
    CLI::App* reduce = app.add_subcommand("reduce", "emit the canonical reduced problem");
    add_common(reduce, true);
    CLI::App* simulate = app.add_subcommand("simulate", "run the finite-volume scheme");
    add_common(simulate, true);
    simulate->add_option("--threads", threads_flag, "worker threads (results are bit-identical)");
    simulate->add_option("--threshold", threshold_flag, "decay threshold for the verdict");
    CLI::App* cex =
        app.add_subcommand("counterexample", "emit the analytic non-decaying field");
    add_common(cex, true);
    cex->add_option("--times", opt.times, "sampling times")->delimiter(',');
    cex->add_option("--delta", delta_flag, "amplitude (rational, e.g. 1/8)");
    cex->add_option("--threshold", threshold_flag, "decay threshold for the verdict");
    CLI::App* diagnose =
        app.add_subcommand("diagnose", "rebuild a report from emitted binary frames");
    add_common(diagnose, true);
    diagnose->add_option("--threshold", threshold_flag, "decay threshold for the verdict");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (simulate->parsed() && simulate->count("--threads") > 0) opt.threads = threads_flag;
    for (CLI::App* cmd : {simulate, cex, diagnose})
        if (cmd->parsed() && cmd->count("--threshold") > 0) opt.threshold = threshold_flag;
    if (cex->parsed() && cex->count("--delta") > 0) opt.delta = delta_flag;

    try {
        if (check->parsed()) return cmd_check(opt);
        if (reduce->parsed()) return cmd_reduce(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (cex->parsed()) return cmd_counterexample(opt);
        return cmd_diagnose(opt);
    } catch (const td::ConditionHolds& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const td::CflViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const td::NotSaturated& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const td::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
