#include "torusdecay/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "torusdecay/error.hpp"

namespace torusdecay {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON plumbing.
// ---------------------------------------------------------------------------

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw InvalidInput(where + ": " + what);
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, column = 1;
        const std::size_t stop = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::string reason = e.what();
        // Trim nlohmann's "[json.exception.parse_error.N] parse error at
        // line L, column C: " prefix; the location is already reported.
        if (const auto pos = reason.find("] "); pos != std::string::npos)
            reason = reason.substr(pos + 2);
        if (reason.starts_with("parse error"))
            if (const auto pos = reason.find(": "); pos != std::string::npos)
                reason = reason.substr(pos + 2);
        throw InvalidInput("malformed JSON at line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + reason);
    }
}

const json& require_key(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) fail(where, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(where, "missing required key \"" + key + "\"");
    return *it;
}

Rational rational_from_json(const json& j, const std::string& where) {
    if (j.is_string()) {
        try {
            return parse_rational(j.get<std::string>());
        } catch (const std::exception&) {
            fail(where, "\"" + j.get<std::string>() + "\" is not a rational (use \"p/q\")");
        }
    }
    if (j.is_number_integer()) return Rational(Int(j.get<long long>()));
    if (j.is_number_unsigned()) return Rational(Int(j.get<unsigned long long>()));
    if (j.is_number_float()) {
        const double x = j.get<double>();
        if (!std::isfinite(x)) fail(where, "value must be finite");
        return rational_from_double(x);
    }
    fail(where, "expected a rational (string \"p/q\", integer, or float)");
}

double double_from_json(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(where, "value must be finite");
    return x;
}

std::size_t size_from_json(const json& j, const std::string& where) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) fail(where, "expected an integer");
    const long long v = j.get<long long>();
    if (v < 0) fail(where, "value must be nonnegative");
    return static_cast<std::size_t>(v);
}

// A piecewise function: either the full { "breakpoints", "coeffs" } object
// or a bare coefficient array [c0, c1, ...] meaning one polynomial piece
// spanning the whole working interval.
PiecewisePoly piecewise_from_json(const json& j, const Rational& M, const std::string& where) {
    if (j.is_array()) {
        std::vector<Rational> coeffs;
        for (std::size_t k = 0; k < j.size(); ++k)
            coeffs.push_back(rational_from_json(j[k], where + "[" + std::to_string(k) + "]"));
        return PiecewisePoly::from_poly(Poly(std::move(coeffs)), -M, M);
    }
    if (!j.is_object()) fail(where, "expected a piecewise object or a coefficient array");
    const json& jb = require_key(j, "breakpoints", where);
    const json& jc = require_key(j, "coeffs", where);
    if (!jb.is_array() || jb.size() < 2) fail(where + ".breakpoints", "expected >= 2 breakpoints");
    if (!jc.is_array() || jc.size() + 1 != jb.size())
        fail(where + ".coeffs", "expected one coefficient list per piece (breakpoints - 1)");
    std::vector<Rational> breaks;
    for (std::size_t k = 0; k < jb.size(); ++k)
        breaks.push_back(rational_from_json(jb[k], where + ".breakpoints[" + std::to_string(k) + "]"));
    std::vector<Poly> pieces;
    for (std::size_t p = 0; p < jc.size(); ++p) {
        const std::string pw = where + ".coeffs[" + std::to_string(p) + "]";
        if (!jc[p].is_array()) fail(pw, "expected a coefficient array");
        std::vector<Rational> coeffs;
        for (std::size_t k = 0; k < jc[p].size(); ++k)
            coeffs.push_back(rational_from_json(jc[p][k], pw + "[" + std::to_string(k) + "]"));
        pieces.emplace_back(std::move(coeffs));
    }
    return PiecewisePoly(std::move(breaks), std::move(pieces));
}

InitialSpec initial_from_json(const json& j, std::size_t n, const Rational& M) {
    InitialSpec init;
    if (!j.is_object()) fail("initial", "expected an object");
    const std::string kind = require_key(j, "kind", "initial").is_string()
                                 ? j["kind"].get<std::string>()
                                 : std::string();
    if (kind == "constant") {
        init.kind = InitialSpec::Kind::constant;
        init.value = rational_from_json(require_key(j, "value", "initial"), "initial.value");
        if (abs(init.value) > M) fail("initial.value", "lies outside the working interval");
    } else if (kind == "sine") {
        init.kind = InitialSpec::Kind::sine;
        init.amplitude =
            rational_from_json(require_key(j, "amplitude", "initial"), "initial.amplitude");
        if (j.contains("mean")) init.mean = rational_from_json(j["mean"], "initial.mean");
        if (j.contains("phase")) init.phase = rational_from_json(j["phase"], "initial.phase");
        const json& jw = require_key(j, "wave", "initial");
        if (!jw.is_array() || jw.size() != n)
            fail("initial.wave", "expected one integer frequency per axis (" + std::to_string(n) +
                                     " entries)");
        bool nonzero = false;
        for (std::size_t k = 0; k < jw.size(); ++k) {
            const std::string ww = "initial.wave[" + std::to_string(k) + "]";
            if (!jw[k].is_number_integer() && !jw[k].is_number_unsigned())
                fail(ww, "expected an integer");
            init.wave.push_back(Int(jw[k].get<long long>()));
            nonzero = nonzero || init.wave.back() != 0;
        }
        if (!nonzero) fail("initial.wave", "needs a nonzero frequency vector");
        if (abs(init.mean) + abs(init.amplitude) > M)
            fail("initial", "mean +/- amplitude leaves the working interval");
    } else if (kind == "raw") {
        init.kind = InitialSpec::Kind::raw;
        const json& jp = require_key(j, "path", "initial");
        if (!jp.is_string()) fail("initial.path", "expected a string");
        init.path = jp.get<std::string>();
        if (init.path.empty()) fail("initial.path", "must not be empty");
    } else {
        fail("initial.kind", "expected \"constant\", \"sine\", or \"raw\"");
    }
    return init;
}

// ---------------------------------------------------------------------------
// Serialization helpers.
// ---------------------------------------------------------------------------

json ratvec_to_json(const RatVec& v) {
    json arr = json::array();
    for (const Rational& r : v) arr.push_back(to_string(r));
    return arr;
}

json ratmat_to_json(const RatMat& m) {
    json arr = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) arr.push_back(ratvec_to_json(m.row(i)));
    return arr;
}

json intvec_to_json(const IntVec& v) {
    json arr = json::array();
    for (const Int& x : v) arr.push_back(x.convert_to<long long>());
    return arr;
}

json intmat_to_json(const IntMat& m) {
    json arr = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) arr.push_back(intvec_to_json(m.row(i)));
    return arr;
}

json piecewise_to_json(const PiecewisePoly& p) {
    json jb = json::array();
    for (const Rational& b : p.breakpoints()) jb.push_back(to_string(b));
    json jc = json::array();
    for (const Poly& piece : p.pieces()) {
        json row = json::array();
        if (piece.coeffs().empty()) {
            row.push_back("0");
        } else {
            for (const Rational& c : piece.coeffs()) row.push_back(to_string(c));
        }
        jc.push_back(std::move(row));
    }
    return json{{"breakpoints", std::move(jb)}, {"coeffs", std::move(jc)}};
}

json initial_to_json(const InitialSpec& init) {
    json j;
    switch (init.kind) {
        case InitialSpec::Kind::constant:
            j["kind"] = "constant";
            j["value"] = to_string(init.value);
            break;
        case InitialSpec::Kind::sine:
            j["kind"] = "sine";
            j["mean"] = to_string(init.mean);
            j["amplitude"] = to_string(init.amplitude);
            j["phase"] = to_string(init.phase);
            j["wave"] = intvec_to_json(init.wave);
            break;
        case InitialSpec::Kind::raw:
            j["kind"] = "raw";
            j["path"] = init.path;
            break;
    }
    return j;
}

json scheme_to_json(const ProblemConfig& cfg) {
    json j;
    if (cfg.has_grid) {
        json g = json::array();
        for (std::size_t a = 0; a < cfg.grid.n; ++a) g.push_back(cfg.grid.cells[a]);
        j["grid"] = std::move(g);
    }
    j["cfl"] = cfg.scheme.cfl;
    j["t_end"] = cfg.scheme.t_end;
    j["snapshot_every"] = cfg.scheme.snapshot_every;
    j["diagnostics_every"] = cfg.scheme.diagnostics_every;
    j["threads"] = cfg.scheme.threads;
    j["flux_scheme"] = "llf";
    j["lipschitz_samples"] = cfg.scheme.lipschitz_samples;
    if (cfg.dt_override) j["dt_override"] = *cfg.dt_override;
    return j;
}

json outputs_to_json(const OutputSpec& out) {
    json formats = json::array();
    if (out.csv) formats.push_back("csv");
    if (out.tdk1) formats.push_back("tdk1");
    if (out.json) formats.push_back("json");
    json j;
    j["directory"] = out.directory;
    j["formats"] = std::move(formats);
    return j;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void append_u32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

void append_f64(std::string& out, double v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

std::uint32_t take_u32(std::string_view bytes, std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    return v;
}

double take_f64(std::string_view bytes, std::size_t off) {
    double v;
    std::memcpy(&v, bytes.data() + off, 8);
    return v;
}

static_assert(std::endian::native == std::endian::little,
              "frame serialization assumes a little-endian host");

}  // namespace

// ---------------------------------------------------------------------------
// Configuration parsing.
// ---------------------------------------------------------------------------

ProblemConfig parse_problem_config(const std::string& text,
                                   const std::filesystem::path& base_dir) {
    const json doc = parse_json_text(text);
    if (!doc.is_object()) throw InvalidInput("config: expected a JSON object");

    const json& jspec = require_key(doc, "spec", "config");
    const std::size_t n = size_from_json(require_key(jspec, "n", "spec"), "spec.n");
    if (n < 1 || n > 4) fail("spec.n", "expected a dimension between 1 and 4");
    const Rational M = rational_from_json(require_key(jspec, "M", "spec"), "spec.M");
    if (M <= 0) fail("spec.M", "the working-interval bound must be positive");

    const json& jflux = require_key(jspec, "flux", "spec");
    if (!jflux.is_array() || jflux.size() != n)
        fail("spec.flux", "expected " + std::to_string(n) + " components");
    std::vector<PiecewisePoly> comps;
    for (std::size_t i = 0; i < n; ++i)
        comps.push_back(piecewise_from_json(jflux[i], M, "spec.flux[" + std::to_string(i) + "]"));
    FluxSpec flux(std::move(comps), M);

    const json& jdiff = require_key(jspec, "diffusion", "spec");
    if (!jdiff.is_array() || jdiff.size() != n)
        fail("spec.diffusion", "expected " + std::to_string(n) + " rows");
    std::vector<PiecewisePoly> entries;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string rw = "spec.diffusion[" + std::to_string(i) + "]";
        if (!jdiff[i].is_array() || jdiff[i].size() != n)
            fail(rw, "expected " + std::to_string(n) + " entries");
        for (std::size_t k = 0; k < n; ++k)
            entries.push_back(
                piecewise_from_json(jdiff[i][k], M, rw + "[" + std::to_string(k) + "]"));
    }
    DiffusionSpec diffusion(n, std::move(entries), M);

    const json& jlat = require_key(jspec, "lattice", "spec");
    if (!jlat.is_array() || jlat.size() != n)
        fail("spec.lattice", "expected " + std::to_string(n) + " generator rows");
    RatMat gens(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string rw = "spec.lattice[" + std::to_string(i) + "]";
        if (!jlat[i].is_array() || jlat[i].size() != n)
            fail(rw, "expected " + std::to_string(n) + " entries");
        for (std::size_t k = 0; k < n; ++k)
            gens.at(i, k) = rational_from_json(jlat[i][k], rw + "[" + std::to_string(k) + "]");
    }
    LatticeBasis lattice(std::move(gens));

    ProblemConfig cfg{std::move(flux), std::move(diffusion), std::move(lattice),
                      std::nullopt,    InitialSpec{},        Grid{4},
                      false,           SchemeConfig{},       std::nullopt,
                      0.05,            {},                   std::nullopt,
                      OutputSpec{},    base_dir};

    if (doc.contains("I")) cfg.mean_override = rational_from_json(doc["I"], "I");
    if (cfg.mean_override && abs(*cfg.mean_override) > M)
        fail("I", "lies outside the working interval");
    if (doc.contains("delta")) {
        cfg.delta = rational_from_json(doc["delta"], "delta");
        if (*cfg.delta <= 0) fail("delta", "must be positive");
    }
    if (doc.contains("threshold")) {
        cfg.threshold = double_from_json(doc["threshold"], "threshold");
        if (!(cfg.threshold > 0.0)) fail("threshold", "must be positive");
    }
    if (doc.contains("times")) {
        const json& jt = doc["times"];
        if (!jt.is_array() || jt.empty()) fail("times", "expected a non-empty array");
        for (std::size_t k = 0; k < jt.size(); ++k) {
            const double t = double_from_json(jt[k], "times[" + std::to_string(k) + "]");
            if (t < 0.0) fail("times", "entries must be nonnegative");
            if (!cfg.times.empty() && t <= cfg.times.back())
                fail("times", "entries must be strictly increasing");
            cfg.times.push_back(t);
        }
    }

    if (doc.contains("initial")) cfg.initial = initial_from_json(doc["initial"], n, M);

    if (doc.contains("scheme")) {
        const json& js = doc["scheme"];
        if (!js.is_object()) fail("scheme", "expected an object");
        if (js.contains("grid")) {
            const json& jg = js["grid"];
            if (!jg.is_array() || jg.empty() || jg.size() > 2)
                fail("scheme.grid", "expected [N] or [N1, N2]");
            if (jg.size() != n)
                fail("scheme.grid", "grid dimension must match the problem dimension");
            const std::size_t N1 = size_from_json(jg[0], "scheme.grid[0]");
            cfg.grid = jg.size() == 1 ? Grid(N1) : Grid(N1, size_from_json(jg[1], "scheme.grid[1]"));
            cfg.has_grid = true;
        }
        if (js.contains("cfl")) cfg.scheme.cfl = double_from_json(js["cfl"], "scheme.cfl");
        if (js.contains("t_end")) cfg.scheme.t_end = double_from_json(js["t_end"], "scheme.t_end");
        // File-producing runs default to endpoint snapshots only; dense
        // snapshot recording is opt-in because it means one file per step.
        cfg.scheme.snapshot_every = 0;
        if (js.contains("snapshot_every"))
            cfg.scheme.snapshot_every = size_from_json(js["snapshot_every"], "scheme.snapshot_every");
        if (js.contains("diagnostics_every"))
            cfg.scheme.diagnostics_every =
                size_from_json(js["diagnostics_every"], "scheme.diagnostics_every");
        if (js.contains("threads"))
            cfg.scheme.threads = size_from_json(js["threads"], "scheme.threads");
        if (js.contains("lipschitz_samples"))
            cfg.scheme.lipschitz_samples =
                size_from_json(js["lipschitz_samples"], "scheme.lipschitz_samples");
        if (js.contains("flux_scheme")) {
            const json& jf = js["flux_scheme"];
            const std::string name = jf.is_string() ? jf.get<std::string>() : std::string();
            if (name != "llf" && name != "local_lax_friedrichs")
                fail("scheme.flux_scheme", "unknown scheme \"" + name + "\"");
            cfg.scheme.flux_scheme = FluxScheme::local_lax_friedrichs;
        }
        if (js.contains("dt_override")) {
            const double dt = double_from_json(js["dt_override"], "scheme.dt_override");
            if (!(dt > 0.0)) fail("scheme.dt_override", "must be positive");
            cfg.dt_override = dt;
        }
    } else {
        cfg.scheme.snapshot_every = 0;
    }

    if (doc.contains("outputs")) {
        const json& jo = doc["outputs"];
        if (!jo.is_object()) fail("outputs", "expected an object");
        if (jo.contains("directory")) {
            if (!jo["directory"].is_string()) fail("outputs.directory", "expected a string");
            cfg.outputs.directory = jo["directory"].get<std::string>();
        }
        if (jo.contains("formats")) {
            const json& jf = jo["formats"];
            if (!jf.is_array()) fail("outputs.formats", "expected an array");
            cfg.outputs.csv = cfg.outputs.tdk1 = cfg.outputs.json = false;
            for (const json& f : jf) {
                const std::string name = f.is_string() ? f.get<std::string>() : std::string();
                if (name == "csv")
                    cfg.outputs.csv = true;
                else if (name == "tdk1")
                    cfg.outputs.tdk1 = true;
                else if (name == "json")
                    cfg.outputs.json = true;
                else
                    fail("outputs.formats", "unknown format \"" + name + "\"");
            }
        }
    }

    if (cfg.has_grid && cfg.grid.n != n)
        fail("scheme.grid", "grid dimension must match the problem dimension");
    return cfg;
}

ProblemConfig load_problem_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidInput("cannot open config file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem_config(buf.str(), file.has_parent_path() ? file.parent_path()
                                                                  : std::filesystem::path("."));
}

Rational config_mean(const ProblemConfig& cfg) {
    if (cfg.mean_override) return *cfg.mean_override;
    switch (cfg.initial.kind) {
        case InitialSpec::Kind::constant:
            return cfg.initial.value;
        case InitialSpec::Kind::sine:
            return cfg.initial.mean;
        case InitialSpec::Kind::raw:
            break;
    }
    throw InvalidInput(
        "raw initial data has no exact mean; set \"I\" in the config to use this subcommand");
}

PeriodicField initial_field(const ProblemConfig& cfg) {
    if (!cfg.has_grid) throw InvalidInput("scheme.grid is required to sample initial data");
    const Grid& g = cfg.grid;
    switch (cfg.initial.kind) {
        case InitialSpec::Kind::constant: {
            const double v = to_double(cfg.initial.value);
            return field_from_values(g, std::vector<double>(g.size(), v));
        }
        case InitialSpec::Kind::sine: {
            const double mean = to_double(cfg.initial.mean);
            const double amp = to_double(cfg.initial.amplitude);
            const double phase = to_double(cfg.initial.phase);
            const double two_pi = 2.0 * std::acos(-1.0);
            std::vector<double> wd;
            for (const Int& w : cfg.initial.wave) wd.push_back(to_double(Rational(w)));
            if (g.n == 1)
                return sample_field(g, std::function<double(double)>([&](double x) {
                                        return mean + amp * std::sin(two_pi * (wd[0] * x + phase));
                                    }));
            return sample_field(g, std::function<double(double, double)>([&](double x, double y) {
                                    return mean +
                                           amp * std::sin(two_pi * (wd[0] * x + wd[1] * y + phase));
                                }));
        }
        case InitialSpec::Kind::raw: {
            const std::filesystem::path path = cfg.base_dir / cfg.initial.path;
            if (path.extension() == ".tdk1") {
                Tdk1Frame frame = read_tdk1(path);
                if (!(frame.grid == g))
                    throw InvalidInput("raw frame " + path.string() +
                                       " does not match scheme.grid");
                return field_from_values(g, std::move(frame.values));
            }
            std::ifstream in(path);
            if (!in) throw InvalidInput("cannot open raw data file " + path.string());
            std::vector<double> vals;
            double x = 0.0;
            while (in >> x) vals.push_back(x);
            if (!in.eof())
                throw InvalidInput("raw data file " + path.string() + " holds a non-numeric token");
            if (vals.size() != g.size())
                throw InvalidInput("raw data file " + path.string() + " holds " +
                                   std::to_string(vals.size()) + " values; the grid needs " +
                                   std::to_string(g.size()));
            return field_from_values(g, std::move(vals));
        }
    }
    throw InvalidInput("unknown initial-data kind");
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

json spec_to_json(const FluxSpec& flux, const DiffusionSpec& diff, const LatticeBasis& lat) {
    json jflux = json::array();
    for (const PiecewisePoly& c : flux.components) jflux.push_back(piecewise_to_json(c));
    json jdiff = json::array();
    for (std::size_t i = 0; i < diff.n; ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < diff.n; ++k) row.push_back(piecewise_to_json(diff.entry(i, k)));
        jdiff.push_back(std::move(row));
    }
    json j;
    j["n"] = flux.n;
    j["M"] = to_string(flux.bound);
    j["flux"] = std::move(jflux);
    j["diffusion"] = std::move(jdiff);
    j["lattice"] = ratmat_to_json(lat.rows);
    return j;
}

json to_json(const ConditionReport& report) {
    json j;
    j["holds"] = report.holds;
    j["I"] = to_string(report.I);
    j["witness"] = report.witness ? intvec_to_json(*report.witness) : json(nullptr);
    j["witness_ambient"] =
        report.witness_ambient ? ratvec_to_json(*report.witness_ambient) : json(nullptr);
    if (report.vicinity) {
        j["vicinity"] = json::array(
            {to_string(report.vicinity->first), to_string(report.vicinity->second)});
    } else {
        j["vicinity"] = nullptr;
    }
    j["affine_subspace"] = ratmat_to_json(report.affine_subspace);
    j["degenerate_subspace"] = ratmat_to_json(report.degenerate_subspace);
    j["violating"] = intmat_to_json(report.violating.generators);
    j["cbar"] = ratvec_to_json(report.cbar);
    return j;
}

json to_json(const ReducedProblem& red, const ProblemConfig& origin) {
    json j;
    j["spec"] = spec_to_json(red.flux_t, red.diffusion_t,
                             LatticeBasis::integer(red.flux_t.n));

    InitialSpec init = origin.initial;
    if (init.kind == InitialSpec::Kind::sine) {
        // kappa = sum_j w_j d_j (dual basis) = sum_i m_i zeta_i with
        // m = Z^-T w, Z = integer coordinates of the zeta rows. The sine
        // argument kappa.x becomes m.y in the transformed frame.
        const UnimodularRecord rec(red.coordinates);
        IntVec m(init.wave.size(), Int(0));
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t k = 0; k < m.size(); ++k)
                m[i] += rec.inverse.at(k, i) * init.wave[k];
        init.wave = std::move(m);
    }
    j["initial"] = initial_to_json(init);
    j["scheme"] = scheme_to_json(origin);
    j["outputs"] = outputs_to_json(origin.outputs);
    j["I"] = to_string(red.I);
    j["threshold"] = origin.threshold;

    json r;
    r["transform"] = ratmat_to_json(red.transform);
    r["transform_inverse"] = ratmat_to_json(red.transform_inverse);
    r["coordinates"] = intmat_to_json(red.coordinates);
    r["speed"] = ratvec_to_json(red.speed);
    r["d"] = red.d;
    r["plateau"] = json::array({to_string(red.plateau.first), to_string(red.plateau.second)});
    r["r_flags"] = json::array({red.r_flags[0], red.r_flags[1], red.r_flags[2], red.r_flags[3]});
    j["reduction"] = std::move(r);
    return j;
}

json to_json(const DiagnosticsReport& report) {
    json j;
    j["decay_verdict"] = to_string(report.decay_verdict);
    j["threshold"] = report.threshold;
    j["mass_drift"] = report.mass_drift;
    j["entropy_monotone"] = report.entropy_monotone;
    j["monotone_regime"] = report.monotone_regime;
    json series = json::array();
    for (const auto& [t, d] : report.l1_series) series.push_back(json::array({t, d}));
    j["l1_series"] = std::move(series);
    j["contraction_worst"] =
        report.contraction_worst ? json(*report.contraction_worst) : json(nullptr);
    if (report.dissipation) {
        j["dissipation"] = json{{"cumulative", report.dissipation->cumulative},
                                {"bound", report.dissipation->bound},
                                {"pass", report.dissipation->pass}};
    } else {
        j["dissipation"] = nullptr;
    }
    return j;
}

json to_json(const CounterexampleField& field) {
    json j;
    j["I"] = to_string(field.I);
    j["delta"] = to_string(field.delta);
    j["xi"] = ratvec_to_json(field.xi);
    j["speed"] = to_string(field.c);
    // L1 distance to the mean, constant in time: 2*delta/pi.
    j["l1_to_mean"] = 2.0 * to_double(field.delta) / std::acos(-1.0);
    return j;
}

std::string report_summary_csv(const DiagnosticsReport& report) {
    std::string out =
        "decay_verdict,threshold,final_l1_to_mean,mass_drift,entropy_monotone,"
        "monotone_regime,contraction_worst,dissipation_cum,dissipation_bound,dissipation_pass\n";
    out += to_string(report.decay_verdict);
    out += ',';
    out += format_double(report.threshold);
    out += ',';
    out += report.l1_series.empty() ? std::string()
                                    : format_double(report.l1_series.back().second);
    out += ',';
    out += format_double(report.mass_drift);
    out += ',';
    out += format_double(report.entropy_monotone);
    out += ',';
    out += report.monotone_regime ? "true" : "false";
    out += ',';
    out += report.contraction_worst ? format_double(*report.contraction_worst) : std::string();
    out += ',';
    out += report.dissipation ? format_double(report.dissipation->cumulative) : std::string();
    out += ',';
    out += report.dissipation ? format_double(report.dissipation->bound) : std::string();
    out += ',';
    out += report.dissipation ? (report.dissipation->pass ? "true" : "false") : std::string();
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Bulk data.
// ---------------------------------------------------------------------------

std::string diagnostics_csv(const Trajectory& traj) {
    std::string out = "t,mass,I_eta_sq,I_eta_abs,l1_to_mean,dissipation_cum\n";
    for (const DiagnosticsRow& row : traj.diagnostics) {
        out += format_double(row.t);
        out += ',';
        out += format_double(row.mass);
        out += ',';
        out += format_double(row.entropy_sq);
        out += ',';
        out += format_double(row.entropy_abs);
        out += ',';
        out += format_double(row.l1_to_mean);
        out += ',';
        out += format_double(row.dissipation_cum);
        out += '\n';
    }
    return out;
}

std::string snapshot_csv(const PeriodicField& field) {
    const Grid& g = field.grid;
    std::string out;
    if (g.n == 1) {
        out = "i0,x0,value\n";
        for (std::size_t i = 0; i < g.cells[0]; ++i) {
            out += std::to_string(i);
            out += ',';
            out += format_double(g.midpoint(0, i));
            out += ',';
            out += format_double(field.values[i]);
            out += '\n';
        }
        return out;
    }
    out = "i0,i1,x0,x1,value\n";
    for (std::size_t i = 0; i < g.cells[0]; ++i) {
        for (std::size_t k = 0; k < g.cells[1]; ++k) {
            out += std::to_string(i);
            out += ',';
            out += std::to_string(k);
            out += ',';
            out += format_double(g.midpoint(0, i));
            out += ',';
            out += format_double(g.midpoint(1, k));
            out += ',';
            out += format_double(field.values[i * g.cells[1] + k]);
            out += '\n';
        }
    }
    return out;
}

std::string snapshot_times_csv(const Trajectory& traj) {
    std::string out = "index,t\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += format_double(traj.times[k]);
        out += '\n';
    }
    return out;
}

std::string tdk1_bytes(const PeriodicField& field, double t) {
    const Grid& g = field.grid;
    std::string out;
    out.reserve(4 + 4 + 4 * g.n + 8 + 8 * field.values.size());
    out.append("TDK1", 4);
    append_u32(out, static_cast<std::uint32_t>(g.n));
    for (std::size_t a = 0; a < g.n; ++a)
        append_u32(out, static_cast<std::uint32_t>(g.cells[a]));
    append_f64(out, t);
    for (const double v : field.values) append_f64(out, v);
    return out;
}

Tdk1Frame parse_tdk1(std::string_view bytes) {
    if (bytes.size() < 8 || bytes.substr(0, 4) != "TDK1")
        throw InvalidInput("not a TDK1 frame (bad magic)");
    const std::uint32_t n = take_u32(bytes, 4);
    if (n < 1 || n > 2) throw InvalidInput("TDK1 frame has unsupported dimension");
    const std::size_t header = 8 + 4 * n + 8;
    if (bytes.size() < header) throw InvalidInput("TDK1 frame is truncated");
    std::size_t cells = 1;
    std::array<std::size_t, 2> N{1, 1};
    for (std::uint32_t a = 0; a < n; ++a) {
        N[a] = take_u32(bytes, 8 + 4 * a);
        if (N[a] < 4 || N[a] > (1u << 24)) throw InvalidInput("TDK1 frame has a bad cell count");
        cells *= N[a];
    }
    if (bytes.size() != header + 8 * cells)
        throw InvalidInput("TDK1 frame size does not match its header");
    Tdk1Frame frame{n == 1 ? Grid(N[0]) : Grid(N[0], N[1]), take_f64(bytes, 8 + 4 * n), {}};
    if (!std::isfinite(frame.t)) throw InvalidInput("TDK1 frame time is not finite");
    frame.values.resize(cells);
    std::memcpy(frame.values.data(), bytes.data() + header, 8 * cells);
    for (const double v : frame.values)
        if (!std::isfinite(v)) throw InvalidInput("TDK1 frame holds a non-finite value");
    return frame;
}

Tdk1Frame read_tdk1(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidInput("cannot open frame file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_tdk1(buf.str());
}

Trajectory trajectory_from_frames(const std::vector<Tdk1Frame>& frames) {
    if (frames.empty()) throw InvalidInput("no frames to assemble a trajectory from");
    Trajectory traj;
    traj.grid = frames.front().grid;
    traj.steps = frames.size() - 1;
    const std::size_t cells = traj.grid.size();
    std::vector<double> scratch(cells);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const Tdk1Frame& f = frames[k];
        if (!(f.grid == traj.grid)) throw InvalidInput("frames disagree on the grid");
        if (k > 0 && !(f.t > frames[k - 1].t))
            throw InvalidInput("frame times must be strictly increasing");
        traj.times.push_back(f.t);
        traj.snapshots.push_back(field_from_values(traj.grid, f.values));
    }
    traj.mean0 = mean_value(traj.snapshots.front());
    traj.audit.initial_min =
        *std::min_element(frames.front().values.begin(), frames.front().values.end());
    traj.audit.initial_max =
        *std::max_element(frames.front().values.begin(), frames.front().values.end());
    traj.audit.min_value = traj.audit.initial_min;
    traj.audit.max_value = traj.audit.initial_max;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const PeriodicField& u = traj.snapshots[k];
        traj.audit.min_value =
            std::min(traj.audit.min_value, *std::min_element(u.values.begin(), u.values.end()));
        traj.audit.max_value =
            std::max(traj.audit.max_value, *std::max_element(u.values.begin(), u.values.end()));
        DiagnosticsRow row;
        row.t = traj.times[k];
        row.mass = mean_value(u);
        for (std::size_t i = 0; i < cells; ++i) scratch[i] = u.values[i] * u.values[i];
        row.entropy_sq = stable_sum(scratch) / static_cast<double>(cells);
        for (std::size_t i = 0; i < cells; ++i) scratch[i] = std::fabs(u.values[i]);
        row.entropy_abs = stable_sum(scratch) / static_cast<double>(cells);
        row.l1_to_mean = l1_distance(u, traj.mean0);
        row.dissipation_cum = 0.0;
        traj.diagnostics.push_back(row);
    }
    return traj;
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw InvalidInput("frame directory " + dir.string() + " does not exist");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.starts_with("snapshot_") && name.ends_with(".tdk1"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot create " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw Error("cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

}  // namespace torusdecay
