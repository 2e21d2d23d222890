#include "fedchain/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "fedchain/errors.hpp"
#include "fedchain/rng.hpp"

namespace fedchain {

namespace {

constexpr char kMagic[4] = {'F', 'C', 'W', '1'};

double dot(const std::vector<double>& w, const FeatureVector& x) {
    if (w.size() != x.size()) {
        throw DimensionError("weight dimension " + std::to_string(w.size()) +
                             " does not match feature dimension " + std::to_string(x.size()));
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * x[j];
    return acc;
}

bool all_finite(const ModelWeights& m) {
    if (!std::isfinite(m.bias)) return false;
    return std::all_of(m.w.begin(), m.w.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

ModelWeights init_weights(std::size_t dim, std::uint64_t seed, double bias) {
    if (dim < 1) {
        throw InvalidArgumentError("weight dimension must be at least 1");
    }
    Rng rng(seed);
    ModelWeights m;
    m.w.resize(dim);
    for (double& v : m.w) {
        v = uniform_real(rng, -0.01, 0.01);
    }
    m.bias = bias;
    return m;
}

double epsilon_insensitive_loss(const ModelWeights& weights,
                                std::span<const FeatureVector> xs,
                                std::span<const double> ys, double epsilon, double lambda) {
    if (xs.empty() || xs.size() != ys.size()) {
        throw InvalidArgumentError("loss needs equal, non-zero sample counts");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double residual = ys[i] - (dot(weights.w, xs[i]) + weights.bias);
        sum += std::max(0.0, std::abs(residual) - epsilon);
    }
    const double reg =
        0.5 * lambda * std::inner_product(weights.w.begin(), weights.w.end(),
                                          weights.w.begin(), 0.0);
    return sum / static_cast<double>(xs.size()) + reg;
}

std::pair<std::vector<double>, double> loss_subgradient(const ModelWeights& weights,
                                                        std::span<const FeatureVector> xs,
                                                        std::span<const double> ys,
                                                        double epsilon, double lambda) {
    if (xs.empty() || xs.size() != ys.size()) {
        throw InvalidArgumentError("subgradient needs equal, non-zero sample counts");
    }
    std::vector<double> grad_w(weights.w.size(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double residual = ys[i] - (dot(weights.w, xs[i]) + weights.bias);
        if (std::abs(residual) <= epsilon) continue;  // inside the dead zone
        const double sign = residual > 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < grad_w.size(); ++j) {
            grad_w[j] += sign * xs[i][j];
        }
        grad_b += sign;
    }
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    for (std::size_t j = 0; j < grad_w.size(); ++j) {
        grad_w[j] = grad_w[j] * inv_n + lambda * weights.w[j];
    }
    return {std::move(grad_w), grad_b * inv_n};
}

ModelWeights train_local(const ModelWeights& start, const WorkerShard& shard,
                         const TrainConfig& cfg) {
    if (shard.xs.empty()) {
        throw InvalidArgumentError("worker shard is empty");
    }
    if (!shard.xs.front().empty() && shard.xs.front().size() != start.dim()) {
        throw DimensionError("start weights do not match the shard's feature dimension");
    }
    if (cfg.learning_rate <= 0.0 || cfg.batch_size == 0 || cfg.epochs < 0 ||
        cfg.epsilon < 0.0 || cfg.reg_lambda < 0.0) {
        throw InvalidArgumentError("training config values must be positive");
    }

    ModelWeights weights = start;
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(shard.xs.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<FeatureVector> batch_x;
    std::vector<double> batch_y;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
            const std::size_t end = std::min(off + cfg.batch_size, order.size());
            batch_x.clear();
            batch_y.clear();
            for (std::size_t i = off; i < end; ++i) {
                batch_x.push_back(shard.xs[order[i]]);
                batch_y.push_back(shard.ys[order[i]]);
            }
            const auto [grad_w, grad_b] =
                loss_subgradient(weights, batch_x, batch_y, cfg.epsilon, cfg.reg_lambda);
            for (std::size_t j = 0; j < weights.w.size(); ++j) {
                weights.w[j] -= cfg.learning_rate * grad_w[j];
            }
            weights.bias -= cfg.learning_rate * grad_b;
            if (!all_finite(weights)) {
                throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(off / cfg.batch_size));
            }
        }
    }
    return weights;
}

std::vector<double> predict(const ModelWeights& weights, std::span<const FeatureVector> xs,
                            double cap) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const FeatureVector& x : xs) {
        out.push_back(std::clamp(dot(weights.w, x) + weights.bias, 0.0, cap));
    }
    return out;
}

double rmse(std::span<const double> predictions, std::span<const double> actuals) {
    if (predictions.empty() || predictions.size() != actuals.size()) {
        throw InvalidArgumentError("rmse needs equal, non-zero lengths");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - actuals[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(predictions.size()));
}

Bytes serialize_weights(const ModelWeights& weights) {
    if (!all_finite(weights)) {
        throw SerializationError("refusing to serialize non-finite weights");
    }
    Bytes out;
    out.reserve(4 + 1 + 4 + (weights.w.size() + 1) * 8);
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(weights.version);
    append_u32_le(out, static_cast<std::uint32_t>(weights.w.size()));
    auto put_double = [&out](double v) {
        append_u64_le(out, std::bit_cast<std::uint64_t>(v));
    };
    for (double v : weights.w) put_double(v);
    put_double(weights.bias);
    return out;
}

ModelWeights deserialize_weights(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 9) {
        throw SerializationError("truncated weight blob: " + std::to_string(bytes.size()) +
                                 " bytes");
    }
    if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
        throw SerializationError("bad magic in weight blob");
    }
    const std::uint8_t version = bytes[4];
    if (version != kWeightsFormatVersion) {
        throw SerializationError("unsupported weight format version " +
                                 std::to_string(version));
    }
    const std::uint32_t dim = read_u32_le(bytes.subspan(5, 4));
    const std::size_t expected = 9 + (static_cast<std::size_t>(dim) + 1) * 8;
    if (bytes.size() != expected) {
        throw SerializationError("truncated weight blob: expected " +
                                 std::to_string(expected) + " bytes, got " +
                                 std::to_string(bytes.size()));
    }
    ModelWeights m;
    m.version = version;
    m.w.resize(dim);
    std::size_t off = 9;
    auto take_double = [&bytes, &off]() {
        const double v = std::bit_cast<double>(read_u64_le(bytes.subspan(off, 8)));
        off += 8;
        return v;
    };
    for (std::uint32_t j = 0; j < dim; ++j) m.w[j] = take_double();
    m.bias = take_double();
    return m;
}

}  // namespace fedchain
