#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "qcat/cli/execute.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kNumerical = 3 };

std::string dashed(std::string key) {
    for (char& ch : key)
        if (ch == '_') ch = '-';
    return key;
}

} // namespace

int main(int argc, char** argv) {
    using namespace qcat::cli;
    CLI::App app{"Cat-state stabilization in quadrupolar spins: simulations, scans and datasets."};
    app.set_help_flag("-h,--help", "Show help");

    std::string command;
    std::string config_path;
    app.add_option("command", command, "One of: " + accepted_commands());
    app.add_option("--config", config_path, "key = value configuration file");

    // one flag per config key, e.g. twice_i -> --twice-i
    std::map<std::string, std::string> flag_values;
    std::vector<std::pair<std::string, CLI::Option*>> flags;
    for (const auto& key : config_keys()) {
        if (key.name == "command") continue;
        auto* opt = app.add_option("--" + dashed(key.name), flag_values[key.name], key.accepted);
        flags.emplace_back(key.name, opt);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        std::vector<std::pair<std::string, std::string>> file_entries;
        if (!config_path.empty()) file_entries = read_config_file(config_path);
        std::vector<std::pair<std::string, std::string>> overrides;
        if (!command.empty()) overrides.emplace_back("command", command);
        for (const auto& [name, opt] : flags)
            if (opt->count() > 0) overrides.emplace_back(name, flag_values[name]);
        bool has_command = !command.empty();
        for (const auto& [k, v] : file_entries) has_command = has_command || k == "command";
        if (!has_command) throw UsageError("no command given (accepted: " + accepted_commands() + ")");

        const RunConfig config = build_config(file_entries, overrides);
        const RunManifest m = execute(config);
        std::cout << "wrote " << m.files.size() + 1 << " files to " << config.out << "\n";
        return kOk;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const qcat::DomainError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const qcat::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
