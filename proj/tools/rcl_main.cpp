// rcl: consensus chains, learning simulation and the sentiment market from
// one config document per run. See README.md for the config schema.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rcl/io.hpp"
#include "rcl/version.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;
constexpr int kExitVerificationFailed = 4;

int effective_max_agents() {
    if (const char* env = std::getenv("RCL_MAX_N")) {
        const long value = std::strtol(env, nullptr, 10);
        if (value < 2) throw rcl::ConfigError("RCL_MAX_N must be an integer >= 2");
        return static_cast<int>(value);
    }
    return rcl::markov::kDefaultMaxAgents;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"social-learning consensus laboratory"};
    app.set_version_flag("--version", std::string("rcl ") + rcl::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string format_name;
    std::optional<std::uint64_t> seed;
    int threads = 1;

    for (const char* name :
         {"matrix", "absorb", "simulate", "sweep", "lemmas", "market", "example"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "path to the JSON config document");
        sub->add_option("--out", out_path, "output file (default: stdout)");
        sub->add_option("--format", format_name, "csv or json (default: per command)");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "worker threads (results are seed-deterministic)")
            ->check(CLI::PositiveNumber);
    }

    CLI11_PARSE(app, argc, argv);
    const std::string cmd_name = app.get_subcommands().front()->get_name();

    try {
        const rcl::io::Command cmd = rcl::io::command_from_string(cmd_name);
        rcl::io::RunConfig cfg;
        if (!config_path.empty()) {
            cfg = rcl::io::parse_config_file(config_path);
        } else if (cmd != rcl::io::Command::Example) {
            throw rcl::ConfigError("--config is required for '" + cmd_name + "'");
        } else {
            cfg.canonical = nlohmann::json::object();
        }

        rcl::io::RunOptions opts;
        opts.seed_override = seed;
        opts.threads = threads;
        opts.max_agents = effective_max_agents();

        const rcl::io::ResultRecord record = rcl::io::run_command(cmd, cfg, opts);

        rcl::io::Format format = record.default_format;
        if (cfg.output_format.has_value()) format = *cfg.output_format;
        if (!format_name.empty()) format = rcl::io::format_from_string(format_name);

        std::string target = out_path;
        if (target.empty() && cfg.output_path.has_value()) target = *cfg.output_path;
        if (target.empty()) {
            rcl::io::emit(record, format, std::cout);
        } else {
            std::ofstream out(target, std::ios::binary);
            if (!out) throw rcl::NumericalError("cannot open output file '" + target + "'");
            rcl::io::emit(record, format, out);
            if (!out.good()) throw rcl::NumericalError("error writing '" + target + "'");
        }

        if (record.verification_failed) {
            std::cerr << cmd_name << ": verification failed\n";
            return kExitVerificationFailed;
        }
        return 0;
    } catch (const rcl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const rcl::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumericalError;
    }
}
