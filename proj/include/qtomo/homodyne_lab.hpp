#pragma once

// Synthetic homodyne acquisition: phase schedules, seeded sampling of
// tomogram slices, JSONL persistence and plug-in moment estimators with
// bootstrap errors.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtomo/tomography.hpp"

namespace qtomo {

/// One outcome. Paired records (theta2/x2 set) hold simultaneous outcomes of
/// modes 1 and 2 at phases (theta, theta2).
struct HomodyneRecord {
    int mode = 1;
    double theta = 0.0;
    double x = 0.0;
    std::optional<double> theta2;
    std::optional<double> x2;

    bool paired() const { return theta2.has_value(); }
};

struct NoiseModel {
    double sigma = 0.0;  // additive Gaussian noise on every outcome
};

struct PhaseJob {
    int mode = 1;
    double theta = 0.0;
    std::optional<double> theta2;  // set for paired (joint) acquisition
    std::size_t count = 0;

    bool paired() const { return theta2.has_value(); }
};

/// Comma-separated tags: uncertainty, redundant, cubic, quartic, fgrid, joint,
/// all. Phases are kept as exact multiples of pi; jobs are sorted and unique.
std::vector<PhaseJob> make_phase_schedule(const std::string& list, std::size_t count);

nlohmann::json to_json(const std::vector<PhaseJob>& jobs);

struct HomodyneDataset {
    std::vector<HomodyneRecord> records;
    nlohmann::json metadata = nlohmann::json::object();  // seed, state, schedule, noise
};

/// splitmix64 step; used to derive independent per-job and per-replicate seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

std::vector<double> sample(const TomogramSlice& slice, std::size_t n, std::uint64_t seed,
                           const NoiseModel& noise = {});
std::vector<std::pair<double, double>> sample(const JointTomogram& joint, std::size_t n, std::uint64_t seed,
                                              const NoiseModel& noise = {});

/// Salt identifying a record group; bootstrap streams are keyed on it.
std::uint64_t group_salt(int mode, double theta, std::optional<double> theta2);

/// Runs every job of the schedule against the state. Job i uses
/// mix_seed(seed, i), so the output depends only on (state, schedule, seed).
HomodyneDataset acquire(const State& state, const std::vector<PhaseJob>& jobs, std::uint64_t seed,
                        const NoiseModel& noise = {}, const RadonOptions& radon = {}, std::size_t workers = 1);

/// JSONL, one record per line, doubles printed with 17 significant digits.
void write_jsonl(const std::string& path, const HomodyneDataset& data);
/// Reads records and, if present, the "<path>.meta.json" side file.
HomodyneDataset read_jsonl(const std::string& path);
void write_metadata(const std::string& path, const HomodyneDataset& data);

std::string meta_path(const std::string& jsonl_path);

struct BootstrapOptions {
    std::size_t replicates = 200;
    std::uint64_t seed = 0x5eed;
    std::size_t min_records = 30;
};

/// Plug-in <X^n> with a bootstrap standard error for one (mode, theta) group.
Estimate empirical_moment(const HomodyneDataset& data, int mode, double theta, int n,
                          const BootstrapOptions& opts = {});

/// Sums of features over bootstrap resamples: result[b][f] for b < replicates,
/// where row i of `features` (stride `width`) belongs to record i. Resample b
/// draws its indices from mix_seed(seed, b).
std::vector<std::vector<double>> bootstrap_sums(std::span<const double> features, std::size_t width,
                                                std::size_t replicates, std::uint64_t seed);

}  // namespace qtomo
