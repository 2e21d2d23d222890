#include <doctest.h>

#include <cmath>

#include "fedchain/errors.hpp"
#include "fedchain/model.hpp"
#include "fedchain/rng.hpp"
#include "support.hpp"

using namespace fedchain;

namespace {

ModelWeights random_model(Rng& rng, std::size_t dim) {
    ModelWeights m;
    m.w.resize(dim);
    for (double& v : m.w) v = uniform_real(rng, -50, 50);
    m.bias = uniform_real(rng, -50, 50);
    return m;
}

WorkerShard single_sample_shard(double y) {
    WorkerShard shard;
    shard.worker_id = 1;
    shard.units = {1};
    shard.xs = {FeatureVector(4, 0.0)};
    shard.ys = {y};
    return shard;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("init_weights is deterministic, bounded and sized") {
    const ModelWeights a = init_weights(16, 5, 60.0);
    const ModelWeights b = init_weights(16, 5, 60.0);
    const ModelWeights c = init_weights(16, 6, 60.0);
    CHECK(a == b);
    CHECK(a.w != c.w);
    CHECK(a.w.size() == 16);
    CHECK(a.bias == 60.0);
    for (double v : a.w) {
        CHECK(std::abs(v) <= 0.01);
    }
    CHECK_THROWS_AS(init_weights(0, 1), InvalidArgumentError);
}

TEST_CASE("d=16 weight blob is exactly 145 bytes") {
    const ModelWeights m = init_weights(16, 1);
    CHECK(serialize_weights(m).size() == 4 + 1 + 4 + 17 * 8);
}

TEST_CASE("serialization round-trips bit-exactly for 1000 random models") {
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t dim = 1 + static_cast<std::size_t>(uniform_u64(rng, 32));
        const ModelWeights m = random_model(rng, dim);
        const Bytes blob = serialize_weights(m);
        CHECK(deserialize_weights(blob) == m);
    }
}

TEST_CASE("equal models serialize to equal bytes") {
    Rng rng(22);
    const ModelWeights m = random_model(rng, 16);
    ModelWeights copy = m;
    CHECK(serialize_weights(m) == serialize_weights(copy));
}

TEST_CASE("corrupt blobs are rejected") {
    const ModelWeights m = init_weights(4, 2);
    Bytes blob = serialize_weights(m);

    Bytes bad_magic = blob;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(deserialize_weights(bad_magic), doctest::Contains("magic"),
                         SerializationError);

    Bytes bad_version = blob;
    bad_version[4] = 9;
    CHECK_THROWS_WITH_AS(deserialize_weights(bad_version), doctest::Contains("version"),
                         SerializationError);

    Bytes truncated(blob.begin(), blob.end() - 3);
    CHECK_THROWS_AS(deserialize_weights(truncated), SerializationError);
    CHECK_THROWS_AS(deserialize_weights(Bytes{1, 2, 3}), SerializationError);
}

TEST_CASE("rmse basics") {
    const std::vector<double> a = {1, 2, 3};
    CHECK(rmse(a, a) == 0.0);
    const std::vector<double> zeros = {0, 0};
    const std::vector<double> target = {3, 4};
    CHECK(rmse(zeros, target) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
    CHECK_THROWS_AS(rmse({}, {}), InvalidArgumentError);
    const std::vector<double> shorter = {1};
    CHECK_THROWS_AS(rmse(shorter, target), InvalidArgumentError);
}

TEST_CASE("predict clamps into [0, cap]") {
    ModelWeights constant;
    constant.w.assign(16, 0.0);
    constant.bias = 60.0;
    std::vector<FeatureVector> xs(5, FeatureVector(16, 1.0));
    for (double p : predict(constant, xs, 125)) {
        CHECK(p == 60.0);  // in range, unchanged
    }
    constant.bias = -10.0;
    for (double p : predict(constant, xs, 125)) {
        CHECK(p == 0.0);  // lower clamp
    }
    constant.bias = 500.0;
    for (double p : predict(constant, xs, 125)) {
        CHECK(p == 125.0);  // upper clamp
    }
    ModelWeights wrong;
    wrong.w.assign(3, 0.0);
    CHECK_THROWS_AS(predict(wrong, xs, 125), DimensionError);
}

TEST_CASE("loss reduces to the regularizer inside the tube") {
    ModelWeights m;
    m.w = {1.0, -2.0};
    m.bias = 0.0;
    const std::vector<FeatureVector> xs = {{1.0, 0.5}, {0.0, 1.0}};
    const std::vector<double> ys = {0.0, -2.0};  // both residuals exactly 0
    const double lambda = 0.3;
    CHECK(epsilon_insensitive_loss(m, xs, ys, 1.0, lambda) ==
          doctest::Approx(0.5 * lambda * 5.0).epsilon(1e-12));
}

TEST_CASE("perturbing a prediction within the tube keeps hinge loss at zero") {
    Rng rng(23);
    for (int i = 0; i < 50; ++i) {
        ModelWeights m;
        m.w = {uniform_real(rng, -2, 2)};
        m.bias = uniform_real(rng, -2, 2);
        const std::vector<FeatureVector> xs = {{uniform_real(rng, -2, 2)}};
        const double eps = 2.0;
        // target inside the tube around the prediction
        const double pred = m.w[0] * xs[0][0] + m.bias;
        const std::vector<double> ys = {pred + uniform_real(rng, -eps, eps)};
        CHECK(epsilon_insensitive_loss(m, xs, ys, eps, 0.0) == 0.0);
    }
}

TEST_CASE("subgradient matches central finite differences away from kinks") {
    Rng rng(24);
    int checked = 0;
    while (checked < 20) {
        const std::size_t dim = 1 + static_cast<std::size_t>(uniform_u64(rng, 4));
        ModelWeights m = random_model(rng, dim);
        std::vector<FeatureVector> xs;
        std::vector<double> ys;
        for (int s = 0; s < 5; ++s) {
            FeatureVector x(dim);
            for (double& v : x) v = uniform_real(rng, -3, 3);
            xs.push_back(x);
            ys.push_back(uniform_real(rng, -100, 100));
        }
        const double eps = 2.0;
        const double lambda = 1e-3;
        if (test::near_hinge_kink(m, xs, ys, eps)) continue;
        ++checked;
        CHECK(test::fd_gradient_error(m, xs, ys, eps, lambda) < 1e-5);
    }
}

TEST_CASE("zero epochs return the start weights unchanged") {
    const WorkerShard shard = single_sample_shard(5.0);
    ModelWeights start = init_weights(4, 3, 1.0);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK(train_local(start, shard, cfg) == start);
}

TEST_CASE("bias converges monotonically toward a single target") {
    // x = 0-vector, y = 5, eps = 0, lambda = 0: each step moves bias by lr
    const WorkerShard shard = single_sample_shard(5.0);
    ModelWeights start;
    start.w.assign(4, 0.0);
    start.bias = 0.0;
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epsilon = 0.0;
    cfg.reg_lambda = 0.0;
    cfg.batch_size = 1;
    double prev = 0.0;
    for (int epochs = 1; epochs <= 10; ++epochs) {
        cfg.epochs = epochs;
        const ModelWeights out = train_local(start, shard, cfg);
        CHECK(out.bias > prev);           // monotone toward 5
        CHECK(out.bias <= 5.0 + 1e-12);   // never overshoots by more than one step
        CHECK(out.bias == doctest::Approx(0.1 * epochs).epsilon(1e-12));
        prev = out.bias;
    }
    cfg.epochs = 200;
    CHECK(train_local(start, shard, cfg).bias == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("training under a fixed seed is bit-reproducible") {
    Rng rng(25);
    WorkerShard shard;
    shard.worker_id = 1;
    for (int i = 0; i < 64; ++i) {
        FeatureVector x(8);
        for (double& v : x) v = uniform_real(rng, -2, 2);
        shard.xs.push_back(x);
        shard.ys.push_back(uniform_real(rng, 0, 100));
    }
    const ModelWeights start = init_weights(8, 1, 50.0);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 77;
    const ModelWeights first = train_local(start, shard, cfg);
    CHECK(first == train_local(start, shard, cfg));
    cfg.seed = 78;
    CHECK(first != train_local(start, shard, cfg));
}

TEST_CASE("training loss does not increase on a learnable shard") {
    Rng rng(26);
    WorkerShard shard;
    FeatureVector truth = {3.0, -2.0, 1.0, 0.5};
    for (int i = 0; i < 256; ++i) {
        FeatureVector x(4);
        for (double& v : x) v = uniform_real(rng, -1, 1);
        double y = 50.0 + normal(rng) * 0.5;
        for (std::size_t j = 0; j < 4; ++j) y += truth[j] * x[j];
        shard.xs.push_back(x);
        shard.ys.push_back(y);
    }
    const ModelWeights start = init_weights(4, 9, 50.0);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.epochs = 30;
    const ModelWeights trained = train_local(start, shard, cfg);
    const double before =
        epsilon_insensitive_loss(start, shard.xs, shard.ys, cfg.epsilon, cfg.reg_lambda);
    const double after =
        epsilon_insensitive_loss(trained, shard.xs, shard.ys, cfg.epsilon, cfg.reg_lambda);
    CHECK(after <= before);
}

TEST_CASE("divergence raises a training error naming the step") {
    WorkerShard shard = single_sample_shard(5.0);
    shard.xs[0] = FeatureVector(4, 1.0);
    ModelWeights start = init_weights(4, 4, 0.0);
    TrainConfig cfg;
    cfg.learning_rate = 1e300;
    cfg.reg_lambda = 1.0;
    cfg.epochs = 50;
    cfg.batch_size = 1;
    CHECK_THROWS_WITH_AS(train_local(start, shard, cfg), doctest::Contains("epoch"),
                         TrainingError);
}

TEST_CASE("empty shard is rejected") {
    WorkerShard shard;
    CHECK_THROWS_AS(train_local(init_weights(4, 1), shard, TrainConfig{}),
                    InvalidArgumentError);
}

}  // TEST_SUITE
