#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedchain/dataset.hpp"
#include "fedchain/ledger.hpp"
#include "fedchain/model.hpp"

namespace fedchain {

enum class Weighting {
    SampleProportional,  // n_i / sum(n_j), the convex combination
    PaperLiteral,        // n_i / K, coefficients need not sum to 1
    Uniform,             // 1 / K
};

Weighting weighting_from_name(const std::string& name);
std::string weighting_name(Weighting w);

struct FederationConfig {
    int worker_count = 4;  // K
    Weighting weighting = Weighting::SampleProportional;
    int rounds_max = 20;
    double convergence_tol = 0.0;  // RMSE delta; 0 never triggers early stop
    double validation_fraction = 0.1;
    std::uint64_t reward_amount = 1;
};

struct WorkerUpdate {
    int worker_id = 0;
    ModelWeights weights;
    std::uint64_t sample_count = 0;  // n_i
};

// Coordinate-wise weighted mean of (w, bias). Summation order is fixed by
// worker_id, so shuffling the list leaves the result bit-identical.
ModelWeights aggregate(std::vector<WorkerUpdate> updates, Weighting weighting);

struct VerificationVerdict {
    int worker_id = 0;
    bool accepted = false;
    double rmse_before = 0.0;  // incumbent global on the validation set
    double rmse_after = 0.0;   // candidate on the validation set
    std::optional<Digest32> reward_tx_id;
};

// The monitor's gate: accept iff the candidate's validation RMSE is strictly
// below the incumbent's. Pure function of its inputs.
VerificationVerdict verify_update(int worker_id, const ModelWeights& candidate,
                                  const ModelWeights& incumbent, const EvalData& validation,
                                  double cap);

// Submits a treasury-to-worker mint for an accepted verdict and records the
// tx id on it. Rejected verdicts submit nothing.
std::optional<Digest32> reward_accepted(VerificationVerdict& verdict, Ledger& ledger,
                                        const Address& worker, std::uint64_t amount);

}  // namespace fedchain
