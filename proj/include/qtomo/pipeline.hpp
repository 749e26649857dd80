#pragma once

// Stage-file pipeline: state -> dataset -> moments -> checks -> reconstruction,
// plus an aggregate report. Every stage is a pure function of its inputs and
// the RunConfig, so identical configs give byte-identical artifacts.

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtomo/photon_stats.hpp"
#include "qtomo/reconstruction.hpp"
#include "qtomo/uncertainty_check.hpp"

namespace qtomo {

struct RunConfig {
    StateDescriptor state;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;

    std::string schedule = "all";
    std::size_t shots_per_phase = 100000;
    NoiseModel noise;
    std::optional<std::uint64_t> bootstrap_seed;  // default: derived from seed
    BootstrapOptions bootstrap;
    RadonOptions radon;

    PhaseSet mode_phases;
    ReportOptions report;
    int moment_degree = 4;

    ReconstructionOptions reconstruction;
    std::vector<std::array<double, 2>> tomogram_phases{{0.0, 0.0}};
    bool reconstruct_wigner = true;

    std::string out_dir = "qtomo_out";

    BootstrapOptions effective_bootstrap() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys take their defaults; unknown keys and a schema_version other
/// than the current one are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Reads a JSON file and checks its schema_version.
nlohmann::json read_json_file(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

// State artifact: {"schema_version", "descriptor", "gaussian"?, "physicality"?}.
nlohmann::json cmd_state(const StateDescriptor& desc);
StateDescriptor descriptor_from_state_file(const nlohmann::json& j);

HomodyneDataset cmd_sample(const State& state, const RunConfig& config);

std::unique_ptr<MomentSource> analytic_source(const State& state, const RunConfig& config);
std::unique_ptr<MomentSource> dataset_source(const HomodyneDataset& data, const RunConfig& config);

nlohmann::json cmd_moments(const MomentSource& src, const RunConfig& config);

struct CheckResult {
    FullReport report;
    nlohmann::json document;
};

CheckResult cmd_check(const MomentSource& src, const RunConfig& config, const std::string& source_label);

/// Writes tomogram CSVs (and the Wigner grid) into out_dir. When `truth` is
/// given, reconstruction errors against it are included.
nlohmann::json cmd_reconstruct(const MomentSource& src, const RunConfig& config, const std::string& out_dir,
                               const State* truth = nullptr);

struct PipelineReport {
    nlohmann::json document;
    int exit_code = 0;
};

/// Runs every stage for config.state, writing artifacts to config.out_dir.
PipelineReport cmd_report(const RunConfig& config);

/// 2 if any violation or discrepancy, 3 if any inconclusive, else 0.
int combine_exit_codes(std::initializer_list<int> codes);

}  // namespace qtomo
