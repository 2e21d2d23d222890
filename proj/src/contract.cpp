#include "fedchain/contract.hpp"

#include "fedchain/errors.hpp"

namespace fedchain {

void apply_update_model_hash(ContractState& state, const Address& sender,
                             std::span<const std::uint8_t> hash_payload,
                             std::uint64_t block_height) {
    if (sender.is_zero()) {
        throw InvalidAddressError("Invalid address");
    }
    if (hash_payload.empty()) {
        throw EmptyPayloadError("empty model hash payload");
    }
    // mirrors the registry's timeUploaded + 1 indexing: first upload lands at 1
    auto& slots = state.model_hashes[sender];
    slots.push_back(to_hex(hash_payload));
    state.upload_counts[sender] = slots.size();
    state.event_log.push_back(ContractEvent{EventKind::ModelUploaded, sender, slots.size(),
                                            slots.back(), block_height});
}

std::string get_model_hash(const ContractState& state, const Address& address,
                           std::uint64_t index) {
    auto it = state.model_hashes.find(address);
    if (it == state.model_hashes.end() || index == 0 || index > it->second.size()) {
        throw NotFoundError("no model hash for " + address.hex() + " at index " +
                            std::to_string(index));
    }
    return it->second[index - 1];
}

void apply_token_transfer(ContractState& state, const ContractPolicy& policy,
                          const Address& from, const Address& to, std::uint64_t amount,
                          bool mint, std::uint64_t block_height) {
    if (mint) {
        if (from != policy.treasury) {
            throw UnauthorizedMintError("mint attempted by non-treasury " + from.hex());
        }
        state.balances[to] += amount;
        state.total_minted += amount;
        state.event_log.push_back(
            ContractEvent{EventKind::RewardMinted, to, amount, {}, block_height});
        return;
    }
    auto it = state.balances.find(from);
    const std::uint64_t have = it == state.balances.end() ? 0 : it->second;
    if (have < amount) {
        throw InsufficientBalanceError("balance " + std::to_string(have) + " below transfer of " +
                                       std::to_string(amount));
    }
    if (amount > 0) {
        it->second -= amount;
        state.balances[to] += amount;
    }
    state.event_log.push_back(
        ContractEvent{EventKind::TokenTransferred, to, amount, {}, block_height});
}

void apply_publish_global(ContractState& state, const ContractPolicy& policy,
                          const Address& sender, const std::string& hash,
                          std::uint64_t block_height) {
    if (sender != policy.monitor) {
        throw UnauthorizedPublisherError("publish attempted by non-monitor " + sender.hex());
    }
    state.global_model_history.push_back(hash);
    state.event_log.push_back(
        ContractEvent{EventKind::GlobalPublished, sender, state.global_model_history.size(),
                      hash, block_height});
}

std::uint64_t balance_sum(const ContractState& state) {
    std::uint64_t sum = 0;
    for (const auto& [addr, amount] : state.balances) {
        sum += amount;
    }
    return sum;
}

nlohmann::json state_to_json(const ContractState& state) {
    nlohmann::json uploads = nlohmann::json::object();
    for (const auto& [addr, slots] : state.model_hashes) {
        uploads[addr.hex()] = slots;
    }
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [addr, count] : state.upload_counts) {
        counts[addr.hex()] = count;
    }
    nlohmann::json balances = nlohmann::json::object();
    for (const auto& [addr, amount] : state.balances) {
        balances[addr.hex()] = amount;
    }
    nlohmann::json events = nlohmann::json::array();
    for (const ContractEvent& ev : state.event_log) {
        const char* kind = nullptr;
        switch (ev.kind) {
            case EventKind::ModelUploaded: kind = "model_uploaded"; break;
            case EventKind::RewardMinted: kind = "reward_minted"; break;
            case EventKind::TokenTransferred: kind = "token_transferred"; break;
            case EventKind::GlobalPublished: kind = "global_published"; break;
        }
        events.push_back({{"kind", kind},
                          {"address", ev.address.hex()},
                          {"value", ev.value},
                          {"hash", ev.hash},
                          {"block_height", ev.block_height}});
    }
    return {{"model_hashes", std::move(uploads)},
            {"upload_counts", std::move(counts)},
            {"balances", std::move(balances)},
            {"global_model_history", state.global_model_history},
            {"events", std::move(events)},
            {"total_minted", state.total_minted}};
}

}  // namespace fedchain
