#pragma once

// Shared test scaffolding: temp directories, chain tampering, and the
// independent oracles the suites check the implementation against.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "fedchain/federation.hpp"
#include "fedchain/ledger.hpp"
#include "fedchain/model.hpp"
#include "fedchain/rng.hpp"

namespace fedchain::test {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fedchain-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Flips one random byte of one random block to a different value and returns
// the tampered height. Every mutable byte of the block is a candidate: header
// fields, the sealed hash, tx ids, senders, nonces, payloads, applied flags.
inline std::uint64_t tamper_chain(Chain& chain, Rng& rng) {
    const std::size_t height = static_cast<std::size_t>(
        uniform_u64(rng, chain.blocks.size()));
    Block& block = chain.blocks[height];

    std::vector<std::uint8_t*> bytes;
    auto add_span = [&bytes](std::uint8_t* data, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) bytes.push_back(data + i);
    };
    add_span(reinterpret_cast<std::uint8_t*>(&block.header.height), 8);
    add_span(block.header.prev_hash.data(), block.header.prev_hash.size());
    add_span(block.header.tx_root.data(), block.header.tx_root.size());
    add_span(reinterpret_cast<std::uint8_t*>(&block.header.miner), 4);
    add_span(reinterpret_cast<std::uint8_t*>(&block.header.timestamp), 8);
    add_span(reinterpret_cast<std::uint8_t*>(&block.header.nonce), 8);
    add_span(reinterpret_cast<std::uint8_t*>(&block.header.difficulty), 4);
    add_span(block.hash.data(), block.hash.size());
    for (std::size_t t = 0; t < block.transactions.size(); ++t) {
        Transaction& tx = block.transactions[t];
        add_span(tx.sender.bytes.data(), tx.sender.bytes.size());
        add_span(reinterpret_cast<std::uint8_t*>(&tx.nonce), 8);
        add_span(tx.tx_id.data(), tx.tx_id.size());
        add_span(&block.applied[t], 1);
        switch (tx.kind) {
            case TxKind::UpdateModelHash: {
                auto& p = std::get<UpdateModelHashPayload>(tx.payload);
                add_span(p.ciphertext.data(), p.ciphertext.size());
                break;
            }
            case TxKind::PublishGlobalModel: {
                auto& p = std::get<PublishGlobalModelPayload>(tx.payload);
                add_span(reinterpret_cast<std::uint8_t*>(p.cid.data()), p.cid.size());
                break;
            }
            case TxKind::TokenTransfer: {
                auto& p = std::get<TokenTransferPayload>(tx.payload);
                add_span(p.to.bytes.data(), p.to.bytes.size());
                add_span(reinterpret_cast<std::uint8_t*>(&p.amount), 8);
                break;
            }
        }
    }

    std::uint8_t* target = bytes[static_cast<std::size_t>(uniform_u64(rng, bytes.size()))];
    std::uint8_t replacement = static_cast<std::uint8_t>(uniform_u64(rng, 256));
    while (replacement == *target) {
        replacement = static_cast<std::uint8_t>(uniform_u64(rng, 256));
    }
    *target = replacement;
    return height;
}

// Central finite-difference check of loss_subgradient. Returns the worst
// relative error over all weight coordinates and the bias. Differences below
// the roundoff floor (machine eps * |loss| / step) are indistinguishable
// from finite-difference noise and count as zero.
inline double fd_gradient_error(const ModelWeights& m, const std::vector<FeatureVector>& xs,
                                const std::vector<double>& ys, double epsilon,
                                double lambda, double fd_step = 1e-6) {
    const auto [grad_w, grad_b] = loss_subgradient(m, xs, ys, epsilon, lambda);
    const double loss_scale =
        std::max(1.0, std::abs(epsilon_insensitive_loss(m, xs, ys, epsilon, lambda)));
    const double noise_floor = 16.0 * 2.220446049250313e-16 * loss_scale / fd_step;

    double worst = 0.0;
    auto probe = [&](double analytic, auto nudge) {
        ModelWeights lo = m, hi = m;
        nudge(lo, -fd_step);
        nudge(hi, fd_step);
        const double fd = (epsilon_insensitive_loss(hi, xs, ys, epsilon, lambda) -
                           epsilon_insensitive_loss(lo, xs, ys, epsilon, lambda)) /
                          (2 * fd_step);
        const double diff = std::abs(fd - analytic);
        if (diff < noise_floor) return;
        worst = std::max(worst, diff / std::max(std::abs(fd), std::abs(analytic)));
    };
    for (std::size_t j = 0; j < m.w.size(); ++j) {
        probe(grad_w[j], [j](ModelWeights& w, double d) { w.w[j] += d; });
    }
    probe(grad_b, [](ModelWeights& w, double d) { w.bias += d; });
    return worst;
}

// Probes stay away from hinge kinks: every |residual| - epsilon is bounded
// away from zero, so the loss is smooth across the fd_step neighbourhood.
inline bool near_hinge_kink(const ModelWeights& m, const std::vector<FeatureVector>& xs,
                            const std::vector<double>& ys, double epsilon,
                            double margin = 1e-3) {
    for (std::size_t s = 0; s < xs.size(); ++s) {
        double pred = m.bias;
        for (std::size_t j = 0; j < m.w.size(); ++j) pred += m.w[j] * xs[s][j];
        if (std::abs(std::abs(ys[s] - pred) - epsilon) < margin) return true;
    }
    return false;
}

// Brute-force weighted mean, written independently of aggregate().
inline ModelWeights oracle_weighted_mean(const std::vector<WorkerUpdate>& updates,
                                         const std::vector<double>& coefficients) {
    ModelWeights out;
    out.w.assign(updates.front().weights.dim(), 0.0);
    out.bias = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        for (std::size_t j = 0; j < out.w.size(); ++j) {
            out.w[j] += coefficients[i] * updates[i].weights.w[j];
        }
        out.bias += coefficients[i] * updates[i].weights.bias;
    }
    return out;
}

}  // namespace fedchain::test
