#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedchain/address.hpp"
#include "fedchain/bytes.hpp"

namespace fedchain {

// Roles the contract guards against: only the treasury mints, only the
// monitor publishes global models.
struct ContractPolicy {
    Address treasury;
    Address monitor;
};

enum class EventKind : std::uint8_t {
    ModelUploaded,
    RewardMinted,
    TokenTransferred,
    GlobalPublished,
};

struct ContractEvent {
    EventKind kind;
    Address address;       // uploader, reward recipient, or publisher
    std::uint64_t value;   // upload index or token amount
    std::string hash;      // stored hash-link string (uploads and publishes)
    std::uint64_t block_height;

    bool operator==(const ContractEvent&) const = default;
};

// Deterministic registry state. Mutated only while transactions are applied
// during block mining; everything else reads snapshots.
struct ContractState {
    // (address, upload index 1..count) -> stored hash-link string.
    // Worker uploads store the ciphertext hex; the vector is index-1-based.
    std::map<Address, std::vector<std::string>> model_hashes;
    std::map<Address, std::uint64_t> upload_counts;
    std::map<Address, std::uint64_t> balances;
    std::vector<std::string> global_model_history;
    std::vector<ContractEvent> event_log;
    std::uint64_t total_minted = 0;

    bool operator==(const ContractState&) const = default;
};

// Increments the sender's upload count and stores the payload (hex) at the
// new index. Throws InvalidAddressError for the zero sender ("Invalid
// address" guard) and EmptyPayloadError for empty payloads.
void apply_update_model_hash(ContractState& state, const Address& sender,
                             std::span<const std::uint8_t> hash_payload,
                             std::uint64_t block_height);

// Read-only; reads are unguarded. Throws NotFoundError for absent entries.
std::string get_model_hash(const ContractState& state, const Address& address,
                           std::uint64_t index);

// Treasury senders mint (supply grows); anyone else needs balance. A mint
// attempt from a non-treasury sender throws UnauthorizedMintError.
void apply_token_transfer(ContractState& state, const ContractPolicy& policy,
                          const Address& from, const Address& to, std::uint64_t amount,
                          bool mint, std::uint64_t block_height);

// Only the monitor may publish. Appends to global_model_history.
void apply_publish_global(ContractState& state, const ContractPolicy& policy,
                          const Address& sender, const std::string& hash,
                          std::uint64_t block_height);

std::uint64_t balance_sum(const ContractState& state);

nlohmann::json state_to_json(const ContractState& state);

}  // namespace fedchain
