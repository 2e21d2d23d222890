#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedchain/bytes.hpp"
#include "fedchain/dataset.hpp"

namespace fedchain {

inline constexpr std::uint8_t kWeightsFormatVersion = 1;

// The parameter vector exchanged between workers and the aggregator.
struct ModelWeights {
    std::vector<double> w;
    double bias = 0.0;
    std::uint8_t version = kWeightsFormatVersion;

    std::size_t dim() const { return w.size(); }
    bool operator==(const ModelWeights&) const = default;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 30;
    double epsilon = 2.0;     // insensitivity width, in RUL cycles
    double reg_lambda = 1e-4;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

// Weights uniform in [-0.01, 0.01] under the seed; bias as given (callers
// usually pass the mean train label).
ModelWeights init_weights(std::size_t dim, std::uint64_t seed, double bias = 0.0);

// Per-sample loss max(0, |y - (w.x + b)| - epsilon), mean-reduced, plus
// (lambda/2)|w|^2.
double epsilon_insensitive_loss(const ModelWeights& weights,
                                std::span<const FeatureVector> xs,
                                std::span<const double> ys, double epsilon, double lambda);

// Mean subgradient of the loss above: (d/dw, d/dbias).
std::pair<std::vector<double>, double> loss_subgradient(const ModelWeights& weights,
                                                        std::span<const FeatureVector> xs,
                                                        std::span<const double> ys,
                                                        double epsilon, double lambda);

// Minibatch subgradient descent for cfg.epochs over the shard. Epoch order
// is reshuffled from cfg.seed, so training is bit-reproducible. Throws
// TrainingError naming the step if the loss goes non-finite.
ModelWeights train_local(const ModelWeights& start, const WorkerShard& shard,
                         const TrainConfig& cfg);

// y_hat = clamp(w.x + bias, 0, cap), mirroring the label range.
std::vector<double> predict(const ModelWeights& weights, std::span<const FeatureVector> xs,
                            double cap);

double rmse(std::span<const double> predictions, std::span<const double> actuals);

// Canonical layout: "FCW1", 1-byte version, u32 LE dimension, then dim+1
// IEEE-754 doubles LE (w then bias). Equal models give equal bytes, hence
// equal content hashes.
Bytes serialize_weights(const ModelWeights& weights);
ModelWeights deserialize_weights(std::span<const std::uint8_t> bytes);

}  // namespace fedchain
