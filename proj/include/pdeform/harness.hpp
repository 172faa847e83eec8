#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdeform/protocols.hpp"
#include "pdeform/setup.hpp"

namespace pdeform {

inline constexpr int kSetupSchemaVersion = 1;
inline constexpr int kResultSchemaVersion = 1;

// YAML setup files. Errors carry "source:line:column" positions.
SetupSpec parse_setup(const std::string& path);
SetupSpec parse_setup_string(const std::string& text, const std::string& source = "<string>");
DemonSpec parse_demon(const std::string& path);
std::string emit_setup(const SetupSpec& spec);
// FNV-1a over the canonical emitted form.
std::uint64_t setup_hash(const SetupSpec& spec);
std::string setup_hash_hex(const SetupSpec& spec);

DemonChannel demon_channel(const SetupSpec& spec, const DemonSpec& demon);
// exp(-i t sum H_k) over the pre-evolution interactions.
Matrix pre_evolution_unitary(const SetupSpec& spec);

struct ScenarioResult {
    std::string scenario;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> verdicts;  // one per row
    std::vector<std::string> notes;     // one per row, may be empty strings
    std::map<std::string, double> summary;
    std::map<std::string, std::string> metadata;

    void add_row(std::vector<double> values, bool satisfied, std::string note = {});
    void add_row(std::vector<double> values, std::string verdict, std::string note = {});
    bool all_satisfied() const;
    std::vector<double> column(const std::string& name) const;
};

struct RunOptions {
    std::uint64_t seed = 1;
    double tol = 1e-9;
    int trials = -1;  // scenario default when negative
    std::string data_dir;
    std::optional<std::string> setup_path;
};

const std::vector<std::string>& scenario_names();
std::string default_data_dir();
std::string bundled_setup_path(const std::string& file, const RunOptions& options = {});

ScenarioResult run_scenario(const std::string& name, const RunOptions& options = {});

enum class OutputFormat { Csv, Json };
OutputFormat parse_format(const std::string& text);
std::string results_to_csv(const ScenarioResult& r);
std::string results_to_json(const ScenarioResult& r);
ScenarioResult results_from_json(const std::string& text);
void emit_results(const ScenarioResult& r, OutputFormat format, const std::string& path);

} // namespace pdeform
