#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedchain/blobstore.hpp"
#include "fedchain/crypto.hpp"
#include "fedchain/dataset.hpp"
#include "fedchain/federation.hpp"
#include "fedchain/ledger.hpp"
#include "fedchain/model.hpp"

namespace fedchain {

struct RunConfig {
    std::string subset = "FD001";
    std::filesystem::path data_dir;
    std::filesystem::path output_dir;  // empty: keep everything in memory
    std::uint64_t seed = 42;
    std::uint32_t difficulty = 12;
    std::size_t block_capacity = 64;
    std::uint32_t miner_count = 3;
    bool random_miner_order = false;  // default: round-robin
    unsigned rsa_bits = 1024;
    int rul_cap = 125;
    bool mine_per_upload = false;  // mine after every upload instead of batching per round
    TrainConfig train;
    FederationConfig federation;
};

// Flat key = value file; '#' starts a comment. Unknown keys are rejected.
RunConfig parse_run_config(const std::filesystem::path& path);

struct WorkerRoundEntry {
    int worker_id = 0;
    ContentHash local_hash;   // worker's serialized weights in the blob store
    Digest32 upload_tx_id{};  // on-chain anchor of the encrypted hash link
    VerificationVerdict verdict;
};

struct RoundRecord {
    int round_index = 0;
    std::vector<WorkerRoundEntry> workers;
    std::string global_hash;       // cid published this round
    double validation_rmse = 0.0;  // adopted global on the monitor's holdout
    double test_rmse = 0.0;        // adopted global, last cycle of each test unit
    std::uint64_t tokens_total = 0;
    std::vector<std::uint64_t> block_heights;  // blocks mined this round
};

struct RunReport {
    std::string subset;
    int rounds_executed = 0;
    bool converged = false;
    double initial_validation_rmse = 0.0;
    double initial_test_rmse = 0.0;
    std::vector<RoundRecord> rounds;
    double final_test_rmse = 0.0;  // last-cycle metric
    double final_test_rmse_all_rows = 0.0;
    std::uint64_t total_minted = 0;
    std::uint64_t block_count = 0;
    std::map<int, std::uint64_t> worker_balances;
};

// Reference RMSE per subset, printed beside measured results in summaries.
std::optional<double> reference_rmse(const std::string& subset);

// One full simulation: data, shards, keys, chain, store and the round loop.
// Everything is derived from the config seed, so a rerun with the same
// config reproduces the chain export and final weights byte for byte.
class Simulation {
public:
    explicit Simulation(RunConfig config);

    // One protocol round: train, store, anchor, mine, verify, reward,
    // aggregate, publish, mine, adopt. Module errors abort the round with
    // a RunError naming the step; mined blocks are never rolled back.
    RoundRecord run_round();

    // Rounds until the validation RMSE delta stays below convergence_tol for
    // three consecutive rounds or rounds_max is reached. Writes the run
    // artifacts when output_dir is set (partial outputs flushed on abort).
    RunReport run();

    const RunConfig& config() const { return config_; }
    const Ledger& ledger() const { return ledger_; }
    const BlobStore& store() const { return store_; }
    const KeyPair& keys() const { return keys_; }
    const ModelWeights& global_weights() const { return global_; }
    const Dataset& test_data() const { return test_; }
    const EvalData& validation_data() const { return validation_; }
    const std::vector<WorkerShard>& shards() const { return shards_; }

    double validation_rmse(const ModelWeights& weights) const;
    double test_rmse_last_cycle(const ModelWeights& weights) const;
    double test_rmse_all_rows(const ModelWeights& weights) const;

private:
    void mine_pending(RoundRecord& record);
    RunReport build_report() const;
    void write_outputs(const RunReport& report) const;

    RunConfig config_;
    Dataset train_;  // worker-visible portion, normalized
    Dataset test_;
    EvalData validation_;
    EvalData test_last_cycle_;
    EvalData test_all_rows_;
    std::vector<WorkerShard> shards_;
    KeyPair keys_;
    BlobStore store_;
    Ledger ledger_;
    ModelWeights global_;
    double initial_validation_rmse_ = 0.0;
    double initial_test_rmse_ = 0.0;
    std::vector<RoundRecord> records_;
    int rounds_done_ = 0;
    bool converged_ = false;
};

// Re-reads a completed (or aborted) run directory: recomputes the RMSE from
// the prediction CSVs, cross-checks token balances against the chain export
// and returns a human-readable summary. Throws MissingArtifactError naming
// any absent file.
std::string report_from_dir(const std::filesystem::path& run_dir);

}  // namespace fedchain
