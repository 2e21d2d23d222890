#include "fedchain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedchain/errors.hpp"
#include "fedchain/rng.hpp"

namespace fedchain {

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& file, int line_no) {
    std::istringstream ss(line);
    std::vector<double> fields;
    std::string token;
    while (ss >> token) {
        try {
            std::size_t used = 0;
            fields.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw DataError(file + ":" + std::to_string(line_no) + ": non-numeric field '" +
                            token + "'");
        }
    }
    return fields;
}

Dataset load_split(const std::filesystem::path& path, Split split,
                   std::span<const int> columns) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    Dataset ds;
    ds.split = split;
    std::string line;
    int line_no = 0;
    UnitSeries* current = nullptr;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::vector<double> fields = parse_row(line, path.filename().string(), line_no);
        if (fields.size() != 26) {
            throw DataError(path.filename().string() + ":" + std::to_string(line_no) +
                            ": expected 26 fields, got " + std::to_string(fields.size()));
        }
        RawRecord rec;
        rec.unit_id = static_cast<int>(fields[0]);
        rec.cycle = static_cast<int>(fields[1]);
        if (rec.unit_id <= 0 || rec.cycle <= 0) {
            throw DataError(path.filename().string() + ":" + std::to_string(line_no) +
                            ": unit and cycle must be positive");
        }
        std::copy_n(fields.begin() + 2, 3, rec.op_settings.begin());
        std::copy_n(fields.begin() + 5, 21, rec.sensors.begin());

        if (current == nullptr || current->unit_id != rec.unit_id) {
            if (ds.find_unit(rec.unit_id) != nullptr) {
                throw DataError(path.filename().string() + ":" + std::to_string(line_no) +
                                ": unit " + std::to_string(rec.unit_id) +
                                " appears in two separate blocks");
            }
            ds.units.push_back(UnitSeries{rec.unit_id, {}, {}, {}, -1});
            current = &ds.units.back();
        }
        // cycles must start at 1 and strictly increase within a unit
        const bool first = current->cycles.empty();
        if ((first && rec.cycle != 1) || (!first && rec.cycle <= current->cycles.back())) {
            throw DataError(path.filename().string() + ":" + std::to_string(line_no) +
                            ": unit " + std::to_string(rec.unit_id) +
                            " has a non-increasing cycle " + std::to_string(rec.cycle));
        }
        current->cycles.push_back(rec.cycle);
        current->features.push_back(select_features(rec, columns));
    }
    if (ds.units.empty()) {
        throw DataError(path.string() + " contains no rows");
    }
    return ds;
}

std::vector<int> sorted_unit_positions(const Dataset& ds) {
    std::vector<int> order(ds.units.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return ds.units[static_cast<std::size_t>(a)].unit_id <
               ds.units[static_cast<std::size_t>(b)].unit_id;
    });
    return order;
}

}  // namespace

FeatureVector select_features(const RawRecord& record, std::span<const int> columns) {
    FeatureVector out;
    out.reserve(columns.size());
    for (int col : columns) {
        if (col < 3 || col > 26) {
            throw InvalidArgumentError("feature column " + std::to_string(col) +
                                       " outside the data columns 3..26");
        }
        if (col <= 5) {
            out.push_back(record.op_settings[static_cast<std::size_t>(col - 3)]);
        } else {
            out.push_back(record.sensors[static_cast<std::size_t>(col - 6)]);
        }
    }
    return out;
}

std::size_t Dataset::row_count() const {
    std::size_t n = 0;
    for (const UnitSeries& u : units) n += u.features.size();
    return n;
}

const UnitSeries* Dataset::find_unit(int unit_id) const {
    for (const UnitSeries& u : units) {
        if (u.unit_id == unit_id) return &u;
    }
    return nullptr;
}

std::pair<Dataset, Dataset> load_cmapss(const std::filesystem::path& train_path,
                                        const std::filesystem::path& test_path,
                                        const std::filesystem::path& rul_path,
                                        std::span<const int> columns) {
    Dataset train = load_split(train_path, Split::Train, columns);
    Dataset test = load_split(test_path, Split::Test, columns);

    std::ifstream rul_in(rul_path);
    if (!rul_in) {
        throw DataError("cannot open " + rul_path.string());
    }
    std::vector<int> final_ruls;
    std::string line;
    int line_no = 0;
    while (std::getline(rul_in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::vector<double> fields =
            parse_row(line, rul_path.filename().string(), line_no);
        if (fields.size() != 1 || fields[0] < 0) {
            throw DataError(rul_path.filename().string() + ":" + std::to_string(line_no) +
                            ": expected one non-negative integer");
        }
        final_ruls.push_back(static_cast<int>(fields[0]));
    }
    if (final_ruls.size() != test.units.size()) {
        throw DataError(rul_path.filename().string() + " has " +
                        std::to_string(final_ruls.size()) + " entries for " +
                        std::to_string(test.units.size()) + " test units");
    }
    for (std::size_t i = 0; i < test.units.size(); ++i) {
        test.units[i].final_rul = final_ruls[i];
    }
    return {std::move(train), std::move(test)};
}

void compute_rul_labels(Dataset& dataset, int cap) {
    if (cap <= 0) {
        throw InvalidArgumentError("RUL cap must be positive");
    }
    for (UnitSeries& unit : dataset.units) {
        const int last = unit.cycles.back();
        const int tail = dataset.split == Split::Test ? unit.final_rul : 0;
        if (dataset.split == Split::Test && tail < 0) {
            throw DataError("test unit " + std::to_string(unit.unit_id) +
                            " is missing its final RUL");
        }
        unit.rul.resize(unit.cycles.size());
        for (std::size_t i = 0; i < unit.cycles.size(); ++i) {
            unit.rul[i] = std::min(tail + last - unit.cycles[i], cap);
        }
    }
}

NormStats fit_norm_stats(const Dataset& train) {
    const std::size_t dim = train.units.front().features.front().size();
    NormStats stats;
    stats.mean.assign(dim, 0.0);
    stats.stddev.assign(dim, 0.0);
    std::size_t n = 0;
    for (const UnitSeries& unit : train.units) {
        for (const FeatureVector& x : unit.features) {
            for (std::size_t j = 0; j < dim; ++j) stats.mean[j] += x[j];
            ++n;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) stats.mean[j] /= static_cast<double>(n);
    for (const UnitSeries& unit : train.units) {
        for (const FeatureVector& x : unit.features) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = x[j] - stats.mean[j];
                stats.stddev[j] += d * d;
            }
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        stats.stddev[j] = std::sqrt(stats.stddev[j] / static_cast<double>(n));
        // constant columns accumulate ~1e-13 of summation residue; treat them as flat
        if (stats.stddev[j] < 1e-9 * std::max(1.0, std::abs(stats.mean[j]))) {
            stats.stddev[j] = 0.0;
        }
    }
    return stats;
}

void normalize(Dataset& dataset, const NormStats& stats) {
    for (UnitSeries& unit : dataset.units) {
        for (FeatureVector& x : unit.features) {
            if (x.size() != stats.mean.size()) {
                throw DimensionError("feature dimension does not match the fitted stats");
            }
            for (std::size_t j = 0; j < x.size(); ++j) {
                x[j] = stats.stddev[j] == 0.0 ? 0.0 : (x[j] - stats.mean[j]) / stats.stddev[j];
            }
        }
    }
    dataset.norm = stats;
}

std::vector<WorkerShard> partition_workers(const Dataset& train, int worker_count,
                                           std::uint64_t seed) {
    if (worker_count < 1 || static_cast<std::size_t>(worker_count) > train.units.size()) {
        throw InvalidArgumentError("worker count " + std::to_string(worker_count) +
                                   " outside 1.." + std::to_string(train.units.size()));
    }
    std::vector<int> order = sorted_unit_positions(train);
    Rng rng(seed);
    shuffle(order, rng);

    std::vector<WorkerShard> shards(static_cast<std::size_t>(worker_count));
    for (int k = 0; k < worker_count; ++k) {
        shards[static_cast<std::size_t>(k)].worker_id = k + 1;
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        const UnitSeries& unit = train.units[static_cast<std::size_t>(order[i])];
        WorkerShard& shard = shards[i % static_cast<std::size_t>(worker_count)];
        shard.units.push_back(unit.unit_id);
        for (std::size_t r = 0; r < unit.features.size(); ++r) {
            shard.xs.push_back(unit.features[r]);
            shard.ys.push_back(unit.rul[r]);
        }
    }
    return shards;
}

std::pair<Dataset, Dataset> split_units(const Dataset& dataset, double fraction,
                                        std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw InvalidArgumentError("holdout fraction must lie in (0, 1)");
    }
    std::vector<int> order = sorted_unit_positions(dataset);
    Rng rng(seed);
    shuffle(order, rng);
    const std::size_t holdout_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size()))));
    if (holdout_count >= order.size()) {
        throw InvalidArgumentError("holdout fraction leaves no training units");
    }

    Dataset rest;
    rest.split = dataset.split;
    Dataset holdout;
    holdout.split = dataset.split;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const UnitSeries& unit = dataset.units[static_cast<std::size_t>(order[i])];
        (i < holdout_count ? holdout : rest).units.push_back(unit);
    }
    auto by_id = [](const UnitSeries& a, const UnitSeries& b) { return a.unit_id < b.unit_id; };
    std::sort(rest.units.begin(), rest.units.end(), by_id);
    std::sort(holdout.units.begin(), holdout.units.end(), by_id);
    rest.norm = dataset.norm;
    holdout.norm = dataset.norm;
    return {std::move(rest), std::move(holdout)};
}

EvalData flatten(const Dataset& dataset) {
    EvalData out;
    for (const UnitSeries& unit : dataset.units) {
        for (std::size_t i = 0; i < unit.features.size(); ++i) {
            out.xs.push_back(unit.features[i]);
            out.ys.push_back(unit.rul[i]);
        }
    }
    return out;
}

EvalData last_cycle_rows(const Dataset& dataset) {
    EvalData out;
    for (const UnitSeries& unit : dataset.units) {
        out.xs.push_back(unit.features.back());
        out.ys.push_back(unit.rul.back());
    }
    return out;
}

}  // namespace fedchain
