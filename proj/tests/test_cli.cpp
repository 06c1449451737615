#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "gtest/gtest.h"

#include "qcat/cli/execute.hpp"

using namespace qcat;
using namespace qcat::cli;
namespace fs = std::filesystem;

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qcat_cli_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string usage_message(const Entries& file, const Entries& overrides) {
    try {
        build_config(file, overrides);
    } catch (const UsageError& e) {
        return e.what();
    }
    return "";
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(QCAT_CLI_BINARY) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig quick(Command c, const fs::path& out) {
    RunConfig cfg;
    cfg.command = c;
    cfg.twice_i = 2;
    cfg.n_tr = 20;
    cfg.n_theta = 11;
    cfg.samples = 51;
    cfg.seeds_phi = 3;
    cfg.seeds_p = 2;
    cfg.flow_time = 0.1;
    cfg.flow_dt = 0.01;
    cfg.out = out.string();
    return cfg;
}

} // namespace

TEST(cli_config, defaults_for_simulate_n2) {
    const RunConfig c = build_config({}, {{"command", "simulate-n2"}});
    EXPECT_EQ(c.command, Command::SimulateN2);
    EXPECT_EQ(c.twice_i, 5);
    EXPECT_EQ(c.eta, 1.0);
    EXPECT_EQ(c.bound, CatBound::Polar);
    EXPECT_EQ(c.effective_gamma(), 0.0);
    EXPECT_FALSE(c.t_r.has_value());
}

TEST(cli_config, range_errors_name_key_and_range) {
    const std::string eta = usage_message({}, {{"eta", "1.5"}});
    EXPECT_NE(eta.find("'eta'"), std::string::npos);
    EXPECT_NE(eta.find("[0, 1]"), std::string::npos);
    const std::string spin = usage_message({{"twice_i", "1"}}, {});
    EXPECT_NE(spin.find("'twice_i'"), std::string::npos);
    EXPECT_NE(spin.find("[2, 9]"), std::string::npos);
    EXPECT_NE(usage_message({}, {{"eta", "abc"}}).find("'eta'"), std::string::npos);
    EXPECT_NE(usage_message({}, {{"eta", "nan"}}).find("'eta'"), std::string::npos);
    EXPECT_NE(usage_message({}, {{"bound", "diagonal"}}).find("x_axis"), std::string::npos);
    EXPECT_NE(usage_message({}, {{"command", "plot"}}).find("simulate-n2"), std::string::npos);
}

TEST(cli_config, unknown_keys_rejected) {
    EXPECT_THROW(read_config_text("eta = 0.5\nfrobnicate = 3\n"), UsageError);
    EXPECT_THROW(read_config_text("eta 0.5\n"), UsageError);
    EXPECT_THROW(build_config({}, {{"nope", "1"}}), UsageError);
}

TEST(cli_config, file_parsing_and_flag_precedence) {
    const Entries file = read_config_text("# showcase\ncommand = sensitivity\n twice_i=3 \neta = 0.3  # biaxiality\n\ngammas = 1e-3, 2e-3\n");
    ASSERT_EQ(file.size(), 4u);
    const RunConfig from_file = build_config(file, {});
    EXPECT_EQ(from_file.command, Command::Sensitivity);
    EXPECT_EQ(from_file.twice_i, 3);
    EXPECT_EQ(from_file.eta, 0.3);
    EXPECT_EQ(from_file.gammas, (std::vector<double>{1e-3, 2e-3}));
    const RunConfig overridden = build_config(file, {{"eta", "0.7"}});
    EXPECT_EQ(overridden.eta, 0.7);
    EXPECT_EQ(overridden.twice_i, 3);
}

TEST(cli_config, cross_key_checks) {
    EXPECT_EQ(build_config({}, {{"command", "decay-scan"}}).effective_gamma(), 1e-2);
    EXPECT_THROW(build_config({}, {{"command", "decay-scan"}, {"gamma", "0"}}), UsageError);
    EXPECT_THROW(build_config({}, {{"command", "decay-scan"}, {"spins", "2,3,3,4"}}), UsageError);
    EXPECT_THROW(build_config({}, {{"command", "optimize"}, {"bound", "x_axis"}}), UsageError);
    EXPECT_NO_THROW(build_config({}, {{"command", "simulate-n2"}, {"bound", "x_axis"}, {"t_r", "0.2"}, {"theta_r", "0.7"}}));
    EXPECT_THROW(build_config({}, {{"eta_min", "0.8"}, {"eta_max", "0.5"}}), UsageError);
}

TEST(cli_execute, sha256_known_vector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(cli_execute, manifest_lists_every_file_with_checksum) {
    const fs::path dir = scratch_dir("manifest");
    const RunManifest m = execute(quick(Command::Portrait, dir));
    std::set<std::string> on_disk;
    for (const auto& e : fs::directory_iterator(dir)) on_disk.insert(e.path().filename().string());
    on_disk.erase("manifest.json");
    std::set<std::string> listed;
    for (const auto& f : m.files) {
        listed.insert(f.path);
        const std::string content = slurp(dir / f.path);
        EXPECT_EQ(f.sha256, sha256_hex(content)) << f.path;
        EXPECT_EQ(f.bytes, content.size());
    }
    EXPECT_EQ(on_disk, listed);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["files"].size(), m.files.size());
    EXPECT_TRUE(manifest.contains("started_utc"));
    fs::remove_all(dir);
}

TEST(cli_execute, rerun_replaces_previous_outputs_and_refuses_foreign_files) {
    const fs::path dir = scratch_dir("rerun");
    execute(quick(Command::Portrait, dir));
    EXPECT_NO_THROW(execute(quick(Command::Optimize, dir)));
    EXPECT_FALSE(fs::exists(dir / "portrait.csv"));
    EXPECT_TRUE(fs::exists(dir / "optimum.csv"));
    std::ofstream(dir / "notes.txt") << "mine";
    EXPECT_THROW(execute(quick(Command::Optimize, dir)), UsageError);
    fs::remove_all(dir);
}

TEST(cli_execute, summaries_are_deterministic) {
    const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    execute(quick(Command::SimulateN2, a));
    execute(quick(Command::SimulateN2, b));
    EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
    EXPECT_EQ(slurp(a / "fidelity.csv"), slurp(b / "fidelity.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(cli_execute, csv_schemas) {
    const fs::path dir = scratch_dir("schema");
    execute(quick(Command::SimulateN2, dir));
    const std::string trace = slurp(dir / "fidelity.csv");
    EXPECT_EQ(trace.substr(0, trace.find('\n')), "t,fidelity,rqfi");
    EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 52);
    RunConfig sweep = quick(Command::SweepEta, dir);
    sweep.eta_min = 0.5;
    sweep.eta_points = 3;
    execute(sweep);
    const std::string rows = slurp(dir / "sweep_eta.csv");
    EXPECT_EQ(rows.substr(0, rows.find('\n')), "eta,t_R,theta_R,varphi,f_max,f_ripple");
    EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 4);
    fs::remove_all(dir);
}

TEST(cli_binary, exit_codes) {
    const fs::path dir = scratch_dir("binary");
    EXPECT_EQ(run_binary("portrait --twice-i 2 --seeds-phi 2 --seeds-p 2 --flow-time 0.05 --flow-dt 0.01 --out " + dir.string()), 0);
    EXPECT_TRUE(fs::exists(dir / "portrait.csv"));
    EXPECT_EQ(run_binary("simulate-n2 --eta 1.5 --out " + dir.string()), 2);
    EXPECT_EQ(run_binary("simulate-n2 --twice-i 1 --out " + dir.string()), 2);
    EXPECT_EQ(run_binary("--out " + dir.string()), 2);
    EXPECT_EQ(run_binary("portrait --no-such-flag 1"), 2);
    EXPECT_EQ(run_binary("--config /nonexistent/qcat.cfg"), 2);
    fs::remove_all(dir);
}
