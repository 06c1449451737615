#ifndef QCAT_CLI_EXECUTE_HPP
#define QCAT_CLI_EXECUTE_HPP

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "qcat/classical_flow.hpp"
#include "qcat/cli/config.hpp"
#include "qcat/measures.hpp"
#include "qcat/protocols.hpp"

namespace qcat::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";

using Json = nlohmann::ordered_json;

struct EmittedFile {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    Json config;
    std::string artifact_version = kArtifactVersion;
    std::string started_utc;
    std::string finished_utc;
    std::vector<EmittedFile> files;  // everything written except manifest.json itself
};

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Round-trip formatting; non-finite values spelled out so CSV readers see them.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt(std::size_t x) { return std::to_string(x); }
inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(const std::string& s) { return s; }
inline std::string fmt(const char* s) { return s; }

class OutputDir {
public:
    // Files listed by an earlier manifest in the same directory are removed;
    // anything else there is refused so the new manifest covers the whole directory.
    explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
        std::error_code ec;
        std::filesystem::create_directories(root_, ec);
        if (ec) throw UsageError("key 'out': cannot create directory '" + root_.string() + "': " + ec.message());
        const auto old = root_ / "manifest.json";
        if (std::filesystem::exists(old)) {
            std::ifstream in(old);
            const Json m = Json::parse(in, nullptr, false);
            if (!m.is_discarded() && m.contains("files"))
                for (const auto& f : m["files"])
                    if (f.contains("path") && f["path"].is_string()) {
                        const std::filesystem::path rel = f["path"].get<std::string>();
                        if (rel.is_relative() && rel.filename() == rel) std::filesystem::remove(root_ / rel, ec);
                    }
            std::filesystem::remove(old, ec);
        }
        if (!std::filesystem::is_empty(root_))
            throw UsageError("key 'out': directory '" + root_.string() + "' holds files not written by a previous run");
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(root_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (root_ / name).string());
        out << content;
        out.close();
        files_.push_back({name, sha256_hex(content), content.size()});
    }

    const std::vector<EmittedFile>& files() const { return files_; }
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::vector<EmittedFile> files_;
};

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { line(header); }

    template <class... T>
    void row(const T&... v) {
        std::vector<std::string> cells{fmt(v)...};
        line(cells);
    }

    const std::string& str() const { return text_; }

private:
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += '\n';
    }
    std::string text_;
};

inline Json config_json(const RunConfig& c) {
    Json j;
    j["command"] = to_string(c.command);
    j["twice_i"] = c.twice_i;
    j["eta"] = c.eta;
    j["bound"] = to_string(c.bound);
    j["gamma"] = c.effective_gamma();
    j["t_r"] = c.t_r ? Json(*c.t_r) : Json(nullptr);
    j["theta_r"] = c.theta_r ? Json(*c.theta_r) : Json(nullptr);
    j["varphi"] = c.varphi ? Json(*c.varphi) : Json(nullptr);
    j["trmax"] = c.trmax;
    j["n_tr"] = c.n_tr;
    j["n_theta"] = c.n_theta;
    j["n_window"] = c.n_window;
    j["samples"] = c.samples;
    j["eta_min"] = c.eta_min;
    j["eta_max"] = c.eta_max;
    j["eta_points"] = c.eta_points;
    j["deviations"] = c.deviations;
    j["gammas"] = c.gammas;
    j["spins"] = c.spins;
    j["wigner_theta"] = c.wigner_theta;
    j["wigner_phi"] = c.wigner_phi;
    j["css_theta"] = c.css_theta;
    j["css_phi"] = c.css_phi;
    j["seeds_phi"] = c.seeds_phi;
    j["seeds_p"] = c.seeds_p;
    j["flow_time"] = c.flow_time;
    j["flow_dt"] = c.flow_dt;
    j["decay_samples"] = c.decay_samples;
    return j;
}

namespace detail {

inline OptimizerConfig optimizer_config(const RunConfig& c) {
    OptimizerConfig o;
    o.t_r_max = c.trmax;
    o.n_t_r = c.n_tr;
    o.n_theta = c.n_theta;
    o.n_window = c.n_window;
    return o;
}

inline Json optimum_json(const OptimizationResult& r) {
    Json j;
    j["twice_i"] = r.spin.twice();
    j["eta"] = r.eta;
    j["bound"] = to_string(r.bound);
    j["t_r"] = r.t_r;
    j["theta_r"] = r.theta_r;
    j["varphi"] = r.varphi;
    j["f_max"] = r.score.f_max;
    j["f_ripple"] = r.score.f_ripple;
    j["score"] = r.score.score;
    j["flat_landscape"] = r.flat_landscape;
    j["provenance"] = {{"t_r_max", r.config.t_r_max},         {"n_t_r", r.config.n_t_r},
                       {"n_theta", r.config.n_theta},         {"window_factor", r.config.window_factor},
                       {"n_window", r.config.n_window},       {"weight_max", r.config.weight_max},
                       {"weight_ripple", r.config.weight_ripple}, {"refine_starts", r.config.refine_starts},
                       {"min_step", r.config.min_step},       {"tie_tolerance", r.config.tie_tolerance}};
    return j;
}

// Config overrides replace the optimized values one by one; with both t_r
// and theta_r given the optimizer is skipped.
inline PulseParams resolve_pulse(const RunConfig& c, Json& summary) {
    const SpinQuantumNumber spin(c.twice_i);
    PulseParams p;
    if (c.t_r && c.theta_r) {
        p.t_r = *c.t_r;
        p.theta_r = *c.theta_r;
        if (c.varphi) {
            p.varphi = *c.varphi;
        } else if (c.bound == CatBound::XAxis) {
            p.varphi = 0.0;
        } else {
            p.varphi = evaluate_candidate(spin, c.eta, c.bound, p.t_r, p.theta_r, std::nullopt, optimizer_config(c)).varphi;
        }
        summary["pulse_source"] = "config";
    } else {
        const OptimizationResult r = optimize(spin, c.eta, c.bound, optimizer_config(c));
        p = params_of(r);
        if (c.t_r) p.t_r = *c.t_r;
        if (c.theta_r) p.theta_r = *c.theta_r;
        if (c.varphi) p.varphi = *c.varphi;
        summary["pulse_source"] = (c.t_r || c.theta_r || c.varphi) ? "optimizer_with_overrides" : "optimizer";
        summary["optimum"] = optimum_json(r);
    }
    summary["pulse"] = {{"t_r", p.t_r}, {"theta_r", p.theta_r}, {"varphi", p.varphi}};
    return p;
}

inline Json stats_json(const WindowStats& s) { return {{"mean", s.mean}, {"max", s.max}, {"min", s.min}, {"ripple", s.ripple}}; }

inline N2Options n2_options(const RunConfig& c) {
    N2Options o;
    o.n_samples = c.samples;
    return o;
}

inline void write_trace(OutputDir& out, const std::string& name, const ProtocolResult& r) {
    Csv csv({"t", "fidelity", "rqfi"});
    for (std::size_t k = 0; k < r.times.size(); ++k) csv.row(r.times[k], r.fidelity[k], r.rqfi[k]);
    out.write(name, csv.str());
}

inline Json wigner_json(const WignerMap& m) {
    return {{"min", m.values.minCoeff()}, {"max", m.values.maxCoeff()}, {"integral", m.integral()}};
}

inline void write_wigner(OutputDir& out, const std::string& name, const WignerMap& m) {
    Csv csv({"theta", "phi", "w"});
    for (std::size_t i = 0; i < m.theta_grid.size(); ++i)
        for (std::size_t j = 0; j < m.phi_grid.size(); ++j)
            csv.row(m.theta_grid[i], m.phi_grid[j], m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out.write(name, csv.str());
}

inline void run_simulate_n2(const RunConfig& c, OutputDir& out, Json& s) {
    const PulseParams p = resolve_pulse(c, s);
    const ProtocolResult r = run_n2(SpinQuantumNumber(c.twice_i), c.eta, c.bound, p, c.effective_gamma(), n2_options(c));
    write_trace(out, "fidelity.csv", r);
    s["post_pulse_fidelity"] = stats_json(post_pulse_stats(r));
    s["post_pulse_rqfi"] = stats_json(window_stats(r.times, r.rqfi, p.t_r));
    s["rqfi_direction"] = "bound axis (inferred default)";
}

inline void run_simulate_n4(const RunConfig& c, OutputDir& out, Json& s) {
    N4Options o;
    o.optimizer = optimizer_config(c);
    const N4Result r = run_n4(SpinQuantumNumber(c.twice_i), c.eta, o);
    Csv trace({"t", "fidelity_fixed", "fidelity_rotating", "rqfi"});
    for (std::size_t k = 0; k < r.trace.times.size(); ++k)
        trace.row(r.trace.times[k], r.trace.fidelity[k], r.fidelity_rotating[k], r.trace.rqfi[k]);
    out.write("n4_trace.csv", trace.str());
    const double span = kPeriod1 * o.spectrum.periods;
    Csv spec({"bin", "angular_frequency", "amplitude"});
    for (std::size_t k = 0; k < r.spectrum.size(); ++k) spec.row(k, kTwoPi * static_cast<double>(k) / span, r.spectrum[k]);
    out.write("n4_spectrum.csv", spec.str());
    s["pulses"] = Json::array({{{"t", r.t1}, {"axis", "x"}, {"angle", r.theta1}},
                               {{"t", r.t2}, {"axis", "y"}, {"angle", kPi / 2}},
                               {{"t", r.t3}, {"axis", "x"}, {"angle", r.theta3}}});
    s["restored_fidelity"] = r.restored_fidelity;
    s["rotor_anchor"] = r.rotor_anchor;
    s["omega2"] = r.omega2;
    s["dominant_bin"] = r.dominant_bin;
    s["expected_bin"] = r.expected_bin;
    s["fixed_swing"] = r.fixed_swing;
    s["rotating_variation"] = r.rotating_variation;
}

inline void run_optimize(const RunConfig& c, OutputDir& out, Json& s) {
    const OptimizationResult r = optimize(SpinQuantumNumber(c.twice_i), c.eta, c.bound, optimizer_config(c));
    Csv csv({"t_R", "theta_R", "varphi", "f_max", "f_ripple", "score"});
    csv.row(r.t_r, r.theta_r, r.varphi, r.score.f_max, r.score.f_ripple, r.score.score);
    out.write("optimum.csv", csv.str());
    s["optimum"] = optimum_json(r);
}

inline void run_sweep_eta(const RunConfig& c, OutputDir& out, Json& s) {
    std::vector<double> grid;
    for (int k = 0; k < c.eta_points; ++k)
        grid.push_back(c.eta_points == 1 ? c.eta_max : c.eta_min + (c.eta_max - c.eta_min) * k / (c.eta_points - 1));
    const auto rows = eta_sweep(SpinQuantumNumber(c.twice_i), grid, c.bound, optimizer_config(c));
    Csv csv({"eta", "t_R", "theta_R", "varphi", "f_max", "f_ripple"});
    Json arr = Json::array();
    for (const auto& r : rows) {
        csv.row(r.eta, r.t_r, r.theta_r, r.varphi, r.score.f_max, r.score.f_ripple);
        arr.push_back(optimum_json(r));
    }
    out.write("sweep_eta.csv", csv.str());
    s["rows"] = arr;
}

inline void run_sensitivity(const RunConfig& c, OutputDir& out, Json& s) {
    const PulseParams p = resolve_pulse(c, s);
    const SensitivityReport rep = sensitivity_scan(SpinQuantumNumber(c.twice_i), c.eta, c.bound, p, c.deviations, n2_options(c));
    Csv csv({"parameter", "deviation", "mean", "max", "min", "ripple"});
    Json arr = Json::array();
    const double base = rep.rows.front().stats.mean;
    for (const auto& row : rep.rows) {
        csv.row(to_string(row.parameter), row.deviation, row.stats.mean, row.stats.max, row.stats.min, row.stats.ripple);
        Json j{{"parameter", to_string(row.parameter)}, {"deviation", row.deviation}};
        j["stats"] = stats_json(row.stats);
        j["mean_shift"] = row.stats.mean - base;
        arr.push_back(j);
    }
    out.write("sensitivity.csv", csv.str());
    s["angular_offset_convention"] = rep.angular_offset_convention;
    s["rows"] = arr;
}

inline void run_portrait(const RunConfig& c, OutputDir& out, Json& s) {
    const SpinQuantumNumber spin(c.twice_i);
    const auto rows = classical::portrait_dataset(c.eta, spin, classical::default_seeds(c.seeds_phi, c.seeds_p), c.flow_time, c.flow_dt);
    Csv csv({"trajectory", "t", "phi", "p_phi", "speed"});
    for (const auto& r : rows) csv.row(r.trajectory_id, r.t, r.phi, r.p_phi, r.speed);
    out.write("portrait.csv", csv.str());
    Csv fp({"site", "phi", "p_phi", "kind", "jacobian_det", "jacobian_trace"});
    Json arr = Json::array();
    for (const auto& f : classical::fixed_points(c.eta, spin)) {
        fp.row(classical::to_string(f.site), f.location.phi, f.location.p_phi, classical::to_string(f.kind), f.jacobian_det, f.jacobian_trace);
        arr.push_back({{"site", classical::to_string(f.site)},
                       {"phi", std::isnan(f.location.phi) ? Json(nullptr) : Json(f.location.phi)},
                       {"p_phi", f.location.p_phi},
                       {"kind", classical::to_string(f.kind)}});
    }
    out.write("fixed_points.csv", fp.str());
    s["trajectories"] = c.seeds_phi * c.seeds_p;
    s["rows"] = rows.size();
    s["fixed_points"] = arr;
}

inline void run_wigner(const RunConfig& c, OutputDir& out, Json& s) {
    const PulseParams p = resolve_pulse(c, s);
    const ProtocolResult r = run_n2(SpinQuantumNumber(c.twice_i), c.eta, c.bound, p, c.effective_gamma(), n2_options(c));
    Json snaps = Json::array();
    for (const auto& snap : r.snapshots) {
        const WignerMap m = wigner_map(snap.rho, c.wigner_theta, c.wigner_phi);
        write_wigner(out, "wigner_" + snap.label + ".csv", m);
        Json j{{"label", snap.label}, {"time", snap.time}};
        j["wigner"] = wigner_json(m);
        snaps.push_back(j);
    }
    s["snapshots"] = snaps;
}

inline void run_harmonic_map(const RunConfig& c, OutputDir& out, Json& s) {
    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i < c.css_theta; ++i)
        for (int j = 0; j < c.css_phi; ++j) grid.emplace_back(kPi * i / (c.css_theta - 1), kTwoPi * j / c.css_phi);
    // the axis states, reported separately
    const std::vector<std::pair<std::string, std::pair<double, double>>> named{
        {"+X", {kPi / 2, 0.0}}, {"+Y", {kPi / 2, kPi / 2}}, {"+Z", {0.0, 0.0}}, {"-Z", {kPi, 0.0}}};
    for (const auto& [name, tp] : named) grid.push_back(tp);
    const auto pts = harmonic_ratio(grid);
    Csv csv({"theta", "phi", "a1", "a2", "ratio", "status"});
    const std::size_t n_map = grid.size() - named.size();
    for (std::size_t k = 0; k < n_map; ++k)
        csv.row(pts[k].theta, pts[k].phi, pts[k].a1, pts[k].a2, pts[k].ratio, to_string(pts[k].status));
    out.write("harmonic_map.csv", csv.str());
    Json axes = Json::object();
    for (std::size_t k = 0; k < named.size(); ++k) {
        const auto& pt = pts[n_map + k];
        axes[named[k].first] = {{"a1", pt.a1},
                                {"a2", pt.a2},
                                {"ratio", std::isfinite(pt.ratio) ? Json(pt.ratio) : Json(nullptr)},
                                {"status", to_string(pt.status)}};
    }
    s["note"] = "fixed to I = 5/2, eta = 1";
    s["axis_states"] = axes;
}

inline void run_decoherence(const RunConfig& c, OutputDir& out, Json& s) {
    const SpinQuantumNumber spin(c.twice_i);
    const PulseParams p = resolve_pulse(c, s);
    std::vector<double> gammas{0.0};
    gammas.insert(gammas.end(), c.gammas.begin(), c.gammas.end());
    const auto runs = decoherence_series(spin, c.eta, c.bound, p, gammas, n2_options(c));
    Csv csv({"gamma", "t", "fidelity", "rqfi"});
    Json arr = Json::array();
    for (std::size_t g = 0; g < runs.size(); ++g) {
        const auto& r = runs[g];
        double dev = 0.0;
        for (std::size_t k = 0; k < r.times.size(); ++k) {
            csv.row(gammas[g], r.times[k], r.fidelity[k], r.rqfi[k]);
            dev = std::max(dev, std::abs(r.fidelity[k] - runs[0].fidelity[k]));
        }
        const WignerMap m = wigner_map(r.snapshots.back().rho, c.wigner_theta, c.wigner_phi);
        Json j{{"gamma", gammas[g]}, {"max_abs_deviation_from_coherent", dev}, {"final_fidelity", r.fidelity.back()}};
        j["post_pulse_fidelity"] = stats_json(post_pulse_stats(r));
        j["final_wigner"] = wigner_json(m);
        arr.push_back(j);
    }
    out.write("decoherence.csv", csv.str());
    s["runs"] = arr;
}

inline void run_decay_scan(const RunConfig& c, OutputDir& out, Json& s) {
    std::vector<SpinQuantumNumber> spins;
    for (int t : c.spins) spins.emplace_back(t);
    DecayWindowOptions o;
    o.samples = c.decay_samples;
    const TauScaling ts = tau_scaling(spins, c.eta, c.effective_gamma(), o, optimizer_config(c));
    Csv series({"twice_i", "t", "fidelity"});
    Csv fits({"twice_i", "tau", "f0", "f_sat", "residual", "boundary", "window", "t_R", "theta_R", "varphi"});
    Json arr = Json::array();
    for (const auto& m : ts.points) {
        for (std::size_t k = 0; k < m.times.size(); ++k) series.row(m.spin.twice(), m.times[k], m.fidelity[k]);
        fits.row(m.spin.twice(), m.fit.tau, m.fit.f0, m.fit.f_sat, m.fit.residual, std::string(m.fit.boundary ? "true" : "false"),
                 m.window, m.params.t_r, m.params.theta_r, m.params.varphi);
        arr.push_back({{"twice_i", m.spin.twice()},
                       {"tau", m.fit.tau},
                       {"gamma_tau", c.effective_gamma() * m.fit.tau},
                       {"boundary", m.fit.boundary},
                       {"window", m.window},
                       {"iterations", m.iterations}});
    }
    out.write("decay_series.csv", series.str());
    out.write("decay_fits.csv", fits.str());
    Json excluded = Json::array();
    for (auto sp : ts.excluded) excluded.push_back(sp.twice());
    s["fits"] = arr;
    s["excluded"] = excluded;
    s["exponent"] = ts.exponent;
    s["intercept"] = ts.intercept;
}

} // namespace detail

// Runs the command, writing CSV files, summary.json (deterministic) and
// manifest.json (timestamps and checksums) into config.out.
inline RunManifest execute(const RunConfig& config) {
    validate(config);
    RunManifest manifest;
    manifest.config = config_json(config);
    manifest.started_utc = utc_now();
    OutputDir out(config.out);

    Json summary;
    summary["artifact_version"] = kArtifactVersion;
    summary["config"] = manifest.config;
    Json results = Json::object();
    switch (config.command) {
    case Command::SimulateN2: detail::run_simulate_n2(config, out, results); break;
    case Command::SimulateN4: detail::run_simulate_n4(config, out, results); break;
    case Command::Optimize: detail::run_optimize(config, out, results); break;
    case Command::SweepEta: detail::run_sweep_eta(config, out, results); break;
    case Command::Sensitivity: detail::run_sensitivity(config, out, results); break;
    case Command::Portrait: detail::run_portrait(config, out, results); break;
    case Command::Wigner: detail::run_wigner(config, out, results); break;
    case Command::HarmonicMap: detail::run_harmonic_map(config, out, results); break;
    case Command::Decoherence: detail::run_decoherence(config, out, results); break;
    case Command::DecayScan: detail::run_decay_scan(config, out, results); break;
    }
    summary["results"] = results;
    out.write("summary.json", summary.dump(2) + "\n");

    manifest.files = out.files();
    manifest.finished_utc = utc_now();
    Json m;
    m["artifact_version"] = manifest.artifact_version;
    m["config"] = manifest.config;
    m["started_utc"] = manifest.started_utc;
    m["finished_utc"] = manifest.finished_utc;
    Json files = Json::array();
    for (const auto& f : manifest.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    m["files"] = files;
    std::ofstream mf(out.root() / "manifest.json", std::ios::binary);
    mf << m.dump(2) << "\n";
    if (!mf) throw std::runtime_error("cannot write manifest.json");
    return manifest;
}

} // namespace qcat::cli

#endif // QCAT_CLI_EXECUTE_HPP
