#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fedchain/address.hpp"
#include "fedchain/bytes.hpp"
#include "fedchain/contract.hpp"
#include "fedchain/sha256.hpp"

namespace fedchain {

using MinerId = std::uint32_t;

enum class TxKind : std::uint8_t {
    UpdateModelHash = 1,
    PublishGlobalModel = 2,
    TokenTransfer = 3,
};

struct UpdateModelHashPayload {
    Bytes ciphertext;  // encrypted hash link, opaque to the chain
    bool operator==(const UpdateModelHashPayload&) const = default;
};

struct PublishGlobalModelPayload {
    std::string cid;  // plaintext content hash, openly retrievable
    bool operator==(const PublishGlobalModelPayload&) const = default;
};

struct TokenTransferPayload {
    Address to;
    std::uint64_t amount = 0;
    bool mint = false;
    bool operator==(const TokenTransferPayload&) const = default;
};

struct Transaction {
    TxKind kind{};
    Address sender;
    std::uint64_t nonce = 0;  // per-sender sequence number
    std::variant<UpdateModelHashPayload, PublishGlobalModelPayload, TokenTransferPayload>
        payload;
    Digest32 tx_id{};  // digest of canonical_bytes()

    Bytes canonical_bytes() const;
    static Digest32 compute_id(const Transaction& tx);

    static Transaction make_update(const Address& sender, std::uint64_t nonce,
                                   Bytes ciphertext);
    static Transaction make_publish(const Address& sender, std::uint64_t nonce,
                                    std::string cid);
    static Transaction make_transfer(const Address& sender, std::uint64_t nonce,
                                     const Address& to, std::uint64_t amount, bool mint);

    bool operator==(const Transaction&) const = default;
};

struct BlockHeader {
    std::uint64_t height = 0;
    Digest32 prev_hash{};  // genesis links to 32 zero bytes
    Digest32 tx_root{};    // digest over the ordered tx ids
    MinerId miner = 0;
    std::uint64_t timestamp = 0;  // logical tick, not wall clock
    std::uint64_t nonce = 0;
    std::uint32_t difficulty = 0;  // required leading zero bits

    Bytes canonical_bytes() const;
    Digest32 hash() const;

    bool operator==(const BlockHeader&) const = default;
};

struct Block {
    BlockHeader header;
    Digest32 hash{};  // sealed header hash; validation recomputes and compares
    std::vector<Transaction> transactions;
    std::vector<std::uint8_t> applied;  // 1 if the tx changed state, 0 if it failed a guard

    bool operator==(const Block&) const = default;
};

struct Chain {
    std::vector<Block> blocks;
    std::vector<Transaction> mempool;  // submission order
};

struct LedgerConfig {
    std::uint32_t difficulty = 12;
    std::size_t block_capacity = 64;
    std::uint64_t nonce_budget = std::uint64_t{1} << 32;
    MinerId miner_count = 3;
    bool random_miner_order = false;
    std::uint64_t miner_seed = 0;
};

Digest32 compute_tx_root(const std::vector<Transaction>& txs);

// Single canonical chain with PoW sealing. One writer: submissions and
// mining mutate state through this class only; reads take const refs.
class Ledger {
public:
    Ledger(LedgerConfig config, ContractPolicy policy);

    // Appends to the mempool. Throws DuplicateTxError for an already-seen
    // tx_id and BadNonceError when the nonce is not the sender's next one.
    Digest32 submit(const Transaction& tx);

    // Drains up to block_capacity mempool txs FIFO, seals them with PoW and
    // applies their contract calls in order. Nonce search starts at 0.
    const Block& mine_block(MinerId miner);
    const Block& mine_block(MinerId miner, std::uint32_t difficulty);

    // Round-robin by default; seeded random order when configured.
    MinerId next_miner();

    std::uint64_t next_nonce(const Address& sender) const;

    const Chain& chain() const { return chain_; }
    const ContractState& state() const { return state_; }
    const LedgerConfig& config() const { return config_; }
    const ContractPolicy& policy() const { return policy_; }
    std::size_t mempool_size() const { return chain_.mempool.size(); }
    std::uint64_t height() const { return chain_.blocks.size() - 1; }

private:
    LedgerConfig config_;
    ContractPolicy policy_;
    Chain chain_;
    ContractState state_;
    std::map<Address, std::uint64_t> next_nonce_;
    std::set<Digest32> seen_tx_ids_;
    std::uint64_t tick_ = 0;
    std::uint64_t miner_cursor_ = 0;
};

// Applies a transaction to the state; returns false (and leaves the state
// untouched) when a contract guard rejects it.
bool apply_transaction(ContractState& state, const ContractPolicy& policy,
                       const Transaction& tx, std::uint64_t block_height);

// Replays every committed transaction from genesis onto a fresh state.
// Guard failures are recorded, not thrown.
struct ReplayResult {
    ContractState state;
    std::vector<std::vector<std::uint8_t>> applied;  // per block, per tx
};
ReplayResult replay_chain(const Chain& chain, const ContractPolicy& policy);

struct ValidationReport {
    bool ok = true;
    std::optional<std::uint64_t> height;  // first failing block
    std::string what;
};

// Full validation: linkage, PoW, root/id recomputation, capacity, nonce
// sequences, and contract replay. Failures are reported, not thrown.
ValidationReport validate_chain(const Chain& chain, const LedgerConfig& config,
                                const ContractPolicy& policy);

nlohmann::json export_chain(const Chain& chain, const LedgerConfig& config,
                            const ContractPolicy& policy);

struct ChainDocument {
    Chain chain;
    LedgerConfig config;
    ContractPolicy policy;
};
ChainDocument import_chain(const nlohmann::json& doc);

}  // namespace fedchain
