#include "fedchain/federation.hpp"

#include <algorithm>

#include "fedchain/errors.hpp"

namespace fedchain {

Weighting weighting_from_name(const std::string& name) {
    if (name == "sample_proportional") return Weighting::SampleProportional;
    if (name == "paper_literal") return Weighting::PaperLiteral;
    if (name == "uniform") return Weighting::Uniform;
    throw InvalidArgumentError("unknown weighting mode: " + name);
}

std::string weighting_name(Weighting w) {
    switch (w) {
        case Weighting::SampleProportional: return "sample_proportional";
        case Weighting::PaperLiteral: return "paper_literal";
        case Weighting::Uniform: return "uniform";
    }
    return "unknown";
}

ModelWeights aggregate(std::vector<WorkerUpdate> updates, Weighting weighting) {
    if (updates.empty()) {
        throw InvalidArgumentError("aggregate needs at least one update");
    }
    const std::size_t dim = updates.front().weights.dim();
    for (const WorkerUpdate& u : updates) {
        if (u.weights.dim() != dim) {
            throw DimensionError("update dimensions differ: " + std::to_string(dim) + " vs " +
                                 std::to_string(u.weights.dim()));
        }
        if (u.sample_count == 0) {
            throw InvalidArgumentError("worker " + std::to_string(u.worker_id) +
                                       " reports an empty shard");
        }
    }
    std::sort(updates.begin(), updates.end(),
              [](const WorkerUpdate& a, const WorkerUpdate& b) {
                  return a.worker_id < b.worker_id;
              });

    const double k = static_cast<double>(updates.size());
    double total = 0.0;
    for (const WorkerUpdate& u : updates) {
        total += static_cast<double>(u.sample_count);
    }

    ModelWeights out;
    out.w.assign(dim, 0.0);
    out.bias = 0.0;
    out.version = updates.front().weights.version;
    for (const WorkerUpdate& u : updates) {
        double coeff = 0.0;
        switch (weighting) {
            case Weighting::SampleProportional:
                coeff = static_cast<double>(u.sample_count) / total;
                break;
            case Weighting::PaperLiteral:
                coeff = static_cast<double>(u.sample_count) / k;
                break;
            case Weighting::Uniform:
                coeff = 1.0 / k;
                break;
        }
        for (std::size_t j = 0; j < dim; ++j) {
            out.w[j] += coeff * u.weights.w[j];
        }
        out.bias += coeff * u.weights.bias;
    }
    return out;
}

VerificationVerdict verify_update(int worker_id, const ModelWeights& candidate,
                                  const ModelWeights& incumbent, const EvalData& validation,
                                  double cap) {
    if (validation.xs.empty()) {
        throw InvalidArgumentError("validation set is empty");
    }
    VerificationVerdict verdict;
    verdict.worker_id = worker_id;
    verdict.rmse_before = rmse(predict(incumbent, validation.xs, cap), validation.ys);
    verdict.rmse_after = rmse(predict(candidate, validation.xs, cap), validation.ys);
    verdict.accepted = verdict.rmse_after < verdict.rmse_before;  // ties reject
    return verdict;
}

std::optional<Digest32> reward_accepted(VerificationVerdict& verdict, Ledger& ledger,
                                        const Address& worker, std::uint64_t amount) {
    if (!verdict.accepted) {
        return std::nullopt;
    }
    const Address treasury = ledger.policy().treasury;
    const Transaction tx = Transaction::make_transfer(
        treasury, ledger.next_nonce(treasury), worker, amount, /*mint=*/true);
    verdict.reward_tx_id = ledger.submit(tx);
    return verdict.reward_tx_id;
}

}  // namespace fedchain
