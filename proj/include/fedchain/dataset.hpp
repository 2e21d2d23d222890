#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fedchain {

// Columns picked as model input, as 1-based positions within the 26-column
// row (1 unit, 2 cycle, 3-5 op settings, 6-26 sensors 1-21). Kept as a
// single table so alternate selections can be tested.
inline constexpr std::array<int, 16> kDefaultFeatureColumns = {
    3, 4, 6, 7, 8, 11, 12, 13, 15, 16, 17, 18, 19, 21, 24, 25};

using FeatureVector = std::vector<double>;

struct RawRecord {
    int unit_id = 0;
    int cycle = 0;
    std::array<double, 3> op_settings{};
    std::array<double, 21> sensors{};
};

// Projects the selected columns out of a raw row, preserving listed order.
FeatureVector select_features(const RawRecord& record,
                              std::span<const int> columns = kDefaultFeatureColumns);

struct UnitSeries {
    int unit_id = 0;
    std::vector<int> cycles;
    std::vector<FeatureVector> features;
    std::vector<double> rul;  // filled by compute_rul_labels
    int final_rul = -1;       // test split: value from the RUL file
};

enum class Split { Train, Test };

struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct Dataset {
    Split split = Split::Train;
    std::vector<UnitSeries> units;
    std::optional<NormStats> norm;  // set once normalized

    std::size_t row_count() const;
    const UnitSeries* find_unit(int unit_id) const;
};

// Parses the standard whitespace-delimited triplet. Throws DataError with a
// line number for malformed rows and on test-unit/RUL-count mismatches.
std::pair<Dataset, Dataset> load_cmapss(const std::filesystem::path& train_path,
                                        const std::filesystem::path& test_path,
                                        const std::filesystem::path& rul_path,
                                        std::span<const int> columns = kDefaultFeatureColumns);

// label(unit, cycle t) = min(cycles_to_failure, cap). Test units count down
// to their RUL-file value instead of zero.
void compute_rul_labels(Dataset& dataset, int cap);

NormStats fit_norm_stats(const Dataset& train);

// (x - mean) / stddev per feature; zero-variance features pass through as 0.
// Test data must be normalized with train-fitted stats.
void normalize(Dataset& dataset, const NormStats& stats);

struct WorkerShard {
    int worker_id = 0;  // 1..K
    std::vector<int> units;
    std::vector<FeatureVector> xs;
    std::vector<double> ys;

    std::size_t sample_count() const { return xs.size(); }  // n_i
};

// Shuffles units by seed and deals them round-robin into K disjoint shards
// covering the whole dataset.
std::vector<WorkerShard> partition_workers(const Dataset& train, int worker_count,
                                           std::uint64_t seed);

// Moves a seeded fraction of units into a holdout set (monitor validation).
std::pair<Dataset, Dataset> split_units(const Dataset& dataset, double fraction,
                                        std::uint64_t seed);

// Flattened evaluation views.
struct EvalData {
    std::vector<FeatureVector> xs;
    std::vector<double> ys;
};
EvalData flatten(const Dataset& dataset);
EvalData last_cycle_rows(const Dataset& dataset);  // one row per unit

}  // namespace fedchain
