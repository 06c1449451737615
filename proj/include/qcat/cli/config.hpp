#ifndef QCAT_CLI_CONFIG_HPP
#define QCAT_CLI_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qcat/spin_core.hpp"

namespace qcat::cli {

// Bad command line or config file. Maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

enum class Command { SimulateN2, SimulateN4, Optimize, SweepEta, Sensitivity, Portrait, Wigner, HarmonicMap, Decoherence, DecayScan };

inline const std::vector<std::pair<Command, std::string>>& command_names() {
    static const std::vector<std::pair<Command, std::string>> names{
        {Command::SimulateN2, "simulate-n2"}, {Command::SimulateN4, "simulate-n4"}, {Command::Optimize, "optimize"},
        {Command::SweepEta, "sweep-eta"},     {Command::Sensitivity, "sensitivity"}, {Command::Portrait, "portrait"},
        {Command::Wigner, "wigner"},          {Command::HarmonicMap, "harmonic-map"}, {Command::Decoherence, "decoherence"},
        {Command::DecayScan, "decay-scan"}};
    return names;
}

inline std::string to_string(Command c) {
    for (const auto& [cmd, name] : command_names())
        if (cmd == c) return name;
    return "unknown";
}

inline std::string accepted_commands() {
    std::string s;
    for (const auto& [cmd, name] : command_names()) s += (s.empty() ? "" : ", ") + name;
    return s;
}

inline Command command_from_string(const std::string& s) {
    for (const auto& [cmd, name] : command_names())
        if (name == s) return cmd;
    throw UsageError("unknown command '" + s + "' (accepted: " + accepted_commands() + ")");
}

struct RunConfig {
    Command command = Command::SimulateN2;
    int twice_i = 5;
    double eta = 1.0;
    CatBound bound = CatBound::Polar;
    std::optional<double> gamma;  // 0 by default, 1e-2 for decay-scan

    // pulse overrides; missing values come from the optimizer
    std::optional<double> t_r;
    std::optional<double> theta_r;
    std::optional<double> varphi;

    // optimizer grid
    double trmax = 2.0;
    int n_tr = 400;
    int n_theta = 91;
    int n_window = 500;

    int samples = 1001;  // trace samples on [0, 10 t_R]
    double eta_min = 0.05;
    double eta_max = 1.0;
    int eta_points = 20;
    std::vector<double> deviations{0.05, -0.05, 0.10, -0.10};
    std::vector<double> gammas{1e-4, 1e-3, 1e-2};
    std::vector<int> spins{2, 3, 4, 5, 6, 7, 8, 9};
    int wigner_theta = 61;
    int wigner_phi = 120;
    int css_theta = 19;
    int css_phi = 36;
    int seeds_phi = 12;
    int seeds_p = 9;
    double flow_time = 2.0;
    double flow_dt = 1e-3;
    int decay_samples = 2000;

    std::string out = "qcat_out";

    double effective_gamma() const { return gamma.value_or(command == Command::DecayScan ? 1e-2 : 0.0); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value, const std::string& accepted) {
    throw UsageError("key '" + key + "': invalid value '" + value + "' (accepted: " + accepted + ")");
}

inline double parse_double(const std::string& key, const std::string& value, const std::string& accepted) {
    const std::string v = trim(value);
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) bad_value(key, value, accepted);
    return x;
}

inline int parse_int(const std::string& key, const std::string& value, const std::string& accepted) {
    const std::string v = trim(value);
    int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, value, accepted);
    return x;
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
}

struct Range {
    double lo, hi;
    bool lo_open = false;
    std::string text;
    bool contains(double x) const { return (lo_open ? x > lo : x >= lo) && x <= hi; }
};

inline double ranged_double(const std::string& key, const std::string& value, const Range& r) {
    const double x = parse_double(key, value, r.text);
    if (!r.contains(x)) bad_value(key, value, r.text);
    return x;
}

inline int ranged_int(const std::string& key, const std::string& value, int lo, int hi, std::string text = "") {
    if (text.empty()) text = "integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    const int x = parse_int(key, value, text);
    if (x < lo || x > hi) bad_value(key, value, text);
    return x;
}

} // namespace detail

struct KeySpec {
    std::string name;
    std::string accepted;
    std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<KeySpec>& config_keys() {
    using namespace detail;
    static const Range unit{0.0, 1.0, false, "real in [0, 1]"};
    static const Range positive{0.0, 1e6, true, "real in (0, 1e6]"};
    static const Range nonneg{0.0, 1e6, false, "real in [0, 1e6]"};
    static const Range angle{-1e3, 1e3, false, "real in [-1000, 1000] (radians)"};
    static const Range deviation{-0.5, 0.5, false, "comma-separated reals in [-0.5, 0.5]"};
    static const std::vector<KeySpec> keys{
        {"command", accepted_commands(), [](RunConfig& c, const std::string& v) { c.command = command_from_string(trim(v)); }},
        {"twice_i", "integer in [2, 9] (I = 1 ... 9/2; I = 1/2 has no quadrupole moment)",
         [](RunConfig& c, const std::string& v) {
             c.twice_i = ranged_int("twice_i", v, 2, 9, "integer in [2, 9] (I = 1 ... 9/2; I = 1/2 has no quadrupole moment)");
         }},
        {"eta", unit.text, [](RunConfig& c, const std::string& v) { c.eta = ranged_double("eta", v, unit); }},
        {"bound", "polar, equator, x_axis",
         [](RunConfig& c, const std::string& v) {
             try {
                 c.bound = cat_bound_from_string(trim(v));
             } catch (const DomainError&) {
                 bad_value("bound", v, "polar, equator, x_axis");
             }
         }},
        {"gamma", nonneg.text, [](RunConfig& c, const std::string& v) { c.gamma = ranged_double("gamma", v, nonneg); }},
        {"t_r", positive.text, [](RunConfig& c, const std::string& v) { c.t_r = ranged_double("t_r", v, positive); }},
        {"theta_r", angle.text, [](RunConfig& c, const std::string& v) { c.theta_r = ranged_double("theta_r", v, angle); }},
        {"varphi", angle.text, [](RunConfig& c, const std::string& v) { c.varphi = ranged_double("varphi", v, angle); }},
        {"trmax", "real in (0, 100]",
         [](RunConfig& c, const std::string& v) { c.trmax = ranged_double("trmax", v, {0.0, 100.0, true, "real in (0, 100]"}); }},
        {"n_tr", "integer in [1, 100000]", [](RunConfig& c, const std::string& v) { c.n_tr = ranged_int("n_tr", v, 1, 100000); }},
        {"n_theta", "integer in [2, 100000]", [](RunConfig& c, const std::string& v) { c.n_theta = ranged_int("n_theta", v, 2, 100000); }},
        {"n_window", "integer in [500, 1000000]",
         [](RunConfig& c, const std::string& v) { c.n_window = ranged_int("n_window", v, 500, 1000000); }},
        {"samples", "integer in [2, 1000000]", [](RunConfig& c, const std::string& v) { c.samples = ranged_int("samples", v, 2, 1000000); }},
        {"eta_min", "real in (0, 1]",
         [](RunConfig& c, const std::string& v) { c.eta_min = ranged_double("eta_min", v, {0.0, 1.0, true, "real in (0, 1]"}); }},
        {"eta_max", "real in (0, 1]",
         [](RunConfig& c, const std::string& v) { c.eta_max = ranged_double("eta_max", v, {0.0, 1.0, true, "real in (0, 1]"}); }},
        {"eta_points", "integer in [1, 1000]", [](RunConfig& c, const std::string& v) { c.eta_points = ranged_int("eta_points", v, 1, 1000); }},
        {"deviations", deviation.text,
         [](RunConfig& c, const std::string& v) {
             c.deviations.clear();
             for (const auto& p : split_list(v)) c.deviations.push_back(ranged_double("deviations", p, deviation));
             if (c.deviations.empty()) bad_value("deviations", v, deviation.text);
         }},
        {"gammas", "comma-separated reals in [0, 1e6]",
         [](RunConfig& c, const std::string& v) {
             c.gammas.clear();
             for (const auto& p : split_list(v))
                 c.gammas.push_back(ranged_double("gammas", p, {0.0, 1e6, false, "comma-separated reals in [0, 1e6]"}));
             if (c.gammas.empty()) bad_value("gammas", v, "comma-separated reals in [0, 1e6]");
         }},
        {"spins", "comma-separated twice_I integers in [2, 9], at least 4 distinct",
         [](RunConfig& c, const std::string& v) {
             c.spins.clear();
             for (const auto& p : split_list(v)) c.spins.push_back(ranged_int("spins", p, 2, 9));
         }},
        {"wigner_theta", "integer in [2, 2000]",
         [](RunConfig& c, const std::string& v) { c.wigner_theta = ranged_int("wigner_theta", v, 2, 2000); }},
        {"wigner_phi", "integer in [2, 4000]", [](RunConfig& c, const std::string& v) { c.wigner_phi = ranged_int("wigner_phi", v, 2, 4000); }},
        {"css_theta", "integer in [2, 1000]", [](RunConfig& c, const std::string& v) { c.css_theta = ranged_int("css_theta", v, 2, 1000); }},
        {"css_phi", "integer in [1, 1000]", [](RunConfig& c, const std::string& v) { c.css_phi = ranged_int("css_phi", v, 1, 1000); }},
        {"seeds_phi", "integer in [1, 1000]", [](RunConfig& c, const std::string& v) { c.seeds_phi = ranged_int("seeds_phi", v, 1, 1000); }},
        {"seeds_p", "integer in [1, 1000]", [](RunConfig& c, const std::string& v) { c.seeds_p = ranged_int("seeds_p", v, 1, 1000); }},
        {"flow_time", "real in (0, 1e4]",
         [](RunConfig& c, const std::string& v) { c.flow_time = ranged_double("flow_time", v, {0.0, 1e4, true, "real in (0, 1e4]"}); }},
        {"flow_dt", "real in (0, 1]",
         [](RunConfig& c, const std::string& v) { c.flow_dt = ranged_double("flow_dt", v, {0.0, 1.0, true, "real in (0, 1]"}); }},
        {"decay_samples", "integer in [10, 1000000]",
         [](RunConfig& c, const std::string& v) { c.decay_samples = ranged_int("decay_samples", v, 10, 1000000); }},
        {"out", "directory path",
         [](RunConfig& c, const std::string& v) {
             if (trim(v).empty()) bad_value("out", v, "non-empty directory path");
             c.out = trim(v);
         }},
    };
    return keys;
}

inline const KeySpec& find_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return k;
    throw UsageError("unknown key '" + name + "'");
}

// key = value lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::stringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(number) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        find_key(key);
        entries.emplace_back(key, detail::trim(line.substr(eq + 1)));
    }
    return entries;
}

inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return read_config_text(ss.str());
}

// Cross-key checks that need the whole configuration.
inline void validate(const RunConfig& c) {
    if (c.eta_min > c.eta_max) throw UsageError("key 'eta_min': must not exceed eta_max");
    const bool needs_optimizer = c.command == Command::Optimize || c.command == Command::SweepEta ||
                                 ((c.command == Command::SimulateN2 || c.command == Command::Sensitivity || c.command == Command::Wigner ||
                                   c.command == Command::Decoherence) &&
                                  !(c.t_r && c.theta_r));
    if (needs_optimizer && c.bound == CatBound::XAxis)
        throw UsageError("key 'bound': x_axis cannot be optimized (accepted: polar, equator, or give t_r and theta_r)");
    if (needs_optimizer && c.eta == 0.0 && c.command != Command::SweepEta)
        throw UsageError("key 'eta': the optimizer needs eta in (0, 1]");
    if (c.command == Command::DecayScan) {
        if (!(c.effective_gamma() > 0.0)) throw UsageError("key 'gamma': decay-scan needs gamma in (0, 1e6]");
        std::vector<int> s = c.spins;
        std::sort(s.begin(), s.end());
        if (std::unique(s.begin(), s.end()) - s.begin() < 4) throw UsageError("key 'spins': need at least 4 distinct twice_I values in [2, 9]");
        if (c.eta == 0.0) throw UsageError("key 'eta': decay-scan needs eta in (0, 1]");
    }
}

// File entries first, then overrides in order; later values win.
inline RunConfig build_config(const std::vector<std::pair<std::string, std::string>>& file_entries,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig c;
    for (const auto& [k, v] : file_entries) find_key(k).set(c, v);
    for (const auto& [k, v] : overrides) find_key(k).set(c, v);
    validate(c);
    return c;
}

} // namespace qcat::cli

#endif // QCAT_CLI_CONFIG_HPP
