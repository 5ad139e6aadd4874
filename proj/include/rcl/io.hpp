#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcl/market.hpp"
#include "rcl/markov.hpp"
#include "rcl/sim.hpp"

// Configuration ingestion, command dispatch and machine-readable emission.
// One config document describes one run; every emitted record embeds the
// canonical form of the document that produced it.
namespace rcl::io {

enum class Command { Matrix, Absorb, Simulate, Sweep, Lemmas, Market, Example };

Command command_from_string(const std::string& name);
std::string to_string(Command cmd);

enum class Format { Csv, Json };

Format format_from_string(const std::string& name);

struct SimulateSpec {
    markov::Environment env;
    sim::SimulationConfig cfg;
};

struct SweepSpec {
    markov::Frequency freq;
    double c;
    std::vector<int> n_list;
};

struct LemmasSpec {
    markov::Frequency freq;
    int n_agents;
    double tolerance;
};

struct MarketSpec {
    market::SentimentMarketSpec spec;
    sim::SimulationConfig cfg;
    long record_replication;
};

struct RunConfig {
    enum class Payload { None, Environment, Simulation, Sweep, Lemmas, Market };
    Payload payload = Payload::None;
    std::optional<markov::Environment> env;
    std::optional<SimulateSpec> simulate;
    std::optional<SweepSpec> sweep;
    std::optional<LemmasSpec> lemmas;
    std::optional<MarketSpec> market;
    std::optional<std::string> output_path;
    std::optional<Format> output_format;
    nlohmann::json canonical;  // schema-validated document with defaults applied
};

// Schema-validated parse; unknown keys are rejected with their field path.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Payload of one run: a table (CSV-oriented) and/or a report object. The
// JSON emission always carries the full payload under "data".
struct ResultRecord {
    nlohmann::json meta;
    std::vector<std::string> columns;               // empty when report-only
    std::vector<std::vector<std::string>> rows;     // cells pre-formatted
    nlohmann::json data;
    Format default_format = Format::Json;
    bool verification_failed = false;  // acceptance-style mismatch (exit 4)
};

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
    int max_agents = markov::kDefaultMaxAgents;  // RCL_MAX_N
};

ResultRecord run_command(Command cmd, const RunConfig& cfg, const RunOptions& opts = {});

// CSV: '#'-prefixed meta lines, a header row, then 12-significant-digit
// cells. JSON: a single object {"meta": ..., "data": ...}. Byte-stable for
// identical records.
void emit(const ResultRecord& record, Format format, std::ostream& out);

// Fixed notation with 12 digits after the point for |x| in [0.1, 1e15) and
// zero, scientific with 12 digits otherwise.
std::string format_number(double x);

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace rcl::io
