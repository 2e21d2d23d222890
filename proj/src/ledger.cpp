#include "fedchain/ledger.hpp"

#include "fedchain/errors.hpp"
#include "fedchain/rng.hpp"

namespace fedchain {

namespace {

const char* tx_kind_name(TxKind kind) {
    switch (kind) {
        case TxKind::UpdateModelHash: return "update_model_hash";
        case TxKind::PublishGlobalModel: return "publish_global";
        case TxKind::TokenTransfer: return "token_transfer";
    }
    return "unknown";
}

TxKind tx_kind_from_name(const std::string& name) {
    if (name == "update_model_hash") return TxKind::UpdateModelHash;
    if (name == "publish_global") return TxKind::PublishGlobalModel;
    if (name == "token_transfer") return TxKind::TokenTransfer;
    throw ParseError("unknown transaction kind: " + name);
}

}  // namespace

Bytes Transaction::canonical_bytes() const {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(kind));
    out.insert(out.end(), sender.bytes.begin(), sender.bytes.end());
    append_u64_le(out, nonce);
    switch (kind) {
        case TxKind::UpdateModelHash: {
            const auto& p = std::get<UpdateModelHashPayload>(payload);
            append_u32_le(out, static_cast<std::uint32_t>(p.ciphertext.size()));
            out.insert(out.end(), p.ciphertext.begin(), p.ciphertext.end());
            break;
        }
        case TxKind::PublishGlobalModel: {
            const auto& p = std::get<PublishGlobalModelPayload>(payload);
            append_u32_le(out, static_cast<std::uint32_t>(p.cid.size()));
            out.insert(out.end(), p.cid.begin(), p.cid.end());
            break;
        }
        case TxKind::TokenTransfer: {
            const auto& p = std::get<TokenTransferPayload>(payload);
            out.insert(out.end(), p.to.bytes.begin(), p.to.bytes.end());
            append_u64_le(out, p.amount);
            out.push_back(p.mint ? 1 : 0);
            break;
        }
    }
    return out;
}

Digest32 Transaction::compute_id(const Transaction& tx) {
    return sha256(tx.canonical_bytes());
}

Transaction Transaction::make_update(const Address& sender, std::uint64_t nonce,
                                     Bytes ciphertext) {
    Transaction tx;
    tx.kind = TxKind::UpdateModelHash;
    tx.sender = sender;
    tx.nonce = nonce;
    tx.payload = UpdateModelHashPayload{std::move(ciphertext)};
    tx.tx_id = compute_id(tx);
    return tx;
}

Transaction Transaction::make_publish(const Address& sender, std::uint64_t nonce,
                                      std::string cid) {
    Transaction tx;
    tx.kind = TxKind::PublishGlobalModel;
    tx.sender = sender;
    tx.nonce = nonce;
    tx.payload = PublishGlobalModelPayload{std::move(cid)};
    tx.tx_id = compute_id(tx);
    return tx;
}

Transaction Transaction::make_transfer(const Address& sender, std::uint64_t nonce,
                                       const Address& to, std::uint64_t amount, bool mint) {
    Transaction tx;
    tx.kind = TxKind::TokenTransfer;
    tx.sender = sender;
    tx.nonce = nonce;
    tx.payload = TokenTransferPayload{to, amount, mint};
    tx.tx_id = compute_id(tx);
    return tx;
}

Bytes BlockHeader::canonical_bytes() const {
    Bytes out;
    append_u64_le(out, height);
    out.insert(out.end(), prev_hash.begin(), prev_hash.end());
    out.insert(out.end(), tx_root.begin(), tx_root.end());
    append_u32_le(out, miner);
    append_u64_le(out, timestamp);
    append_u32_le(out, difficulty);
    append_u64_le(out, nonce);
    return out;
}

Digest32 BlockHeader::hash() const {
    return sha256(canonical_bytes());
}

Digest32 compute_tx_root(const std::vector<Transaction>& txs) {
    Bytes concat;
    concat.reserve(txs.size() * 32);
    for (const Transaction& tx : txs) {
        concat.insert(concat.end(), tx.tx_id.begin(), tx.tx_id.end());
    }
    return sha256(concat);
}

bool apply_transaction(ContractState& state, const ContractPolicy& policy,
                       const Transaction& tx, std::uint64_t block_height) {
    try {
        switch (tx.kind) {
            case TxKind::UpdateModelHash: {
                const auto& p = std::get<UpdateModelHashPayload>(tx.payload);
                apply_update_model_hash(state, tx.sender, p.ciphertext, block_height);
                break;
            }
            case TxKind::PublishGlobalModel: {
                const auto& p = std::get<PublishGlobalModelPayload>(tx.payload);
                apply_publish_global(state, policy, tx.sender, p.cid, block_height);
                break;
            }
            case TxKind::TokenTransfer: {
                const auto& p = std::get<TokenTransferPayload>(tx.payload);
                apply_token_transfer(state, policy, tx.sender, p.to, p.amount, p.mint,
                                     block_height);
                break;
            }
        }
    } catch (const ContractError&) {
        return false;  // failed txs stay in the block but change nothing
    }
    return true;
}

Ledger::Ledger(LedgerConfig config, ContractPolicy policy)
    : config_(config), policy_(policy) {
    mine_block(0);  // genesis
}

Digest32 Ledger::submit(const Transaction& tx) {
    if (Transaction::compute_id(tx) != tx.tx_id) {
        throw InvalidArgumentError("transaction id does not match its contents");
    }
    if (seen_tx_ids_.contains(tx.tx_id)) {
        throw DuplicateTxError("transaction " + digest_hex(tx.tx_id) + " already submitted");
    }
    const std::uint64_t expected = next_nonce(tx.sender);
    if (tx.nonce != expected) {
        throw BadNonceError("sender " + tx.sender.hex() + " expected nonce " +
                            std::to_string(expected) + ", got " + std::to_string(tx.nonce));
    }
    chain_.mempool.push_back(tx);
    seen_tx_ids_.insert(tx.tx_id);
    next_nonce_[tx.sender] = expected + 1;
    return tx.tx_id;
}

const Block& Ledger::mine_block(MinerId miner) {
    return mine_block(miner, config_.difficulty);
}

const Block& Ledger::mine_block(MinerId miner, std::uint32_t difficulty) {
    Block block;
    block.header.height = chain_.blocks.size();
    block.header.prev_hash =
        chain_.blocks.empty() ? Digest32{} : chain_.blocks.back().hash;
    block.header.miner = miner;
    block.header.timestamp = tick_++;
    block.header.difficulty = difficulty;

    const std::size_t take = std::min(config_.block_capacity, chain_.mempool.size());
    block.transactions.assign(chain_.mempool.begin(),
                              chain_.mempool.begin() + static_cast<std::ptrdiff_t>(take));
    chain_.mempool.erase(chain_.mempool.begin(),
                         chain_.mempool.begin() + static_cast<std::ptrdiff_t>(take));
    block.header.tx_root = compute_tx_root(block.transactions);

    // lowest qualifying nonce, counting up from 0
    block.header.nonce = 0;
    for (;;) {
        const Digest32 candidate = block.header.hash();
        if (leading_zero_bits(candidate) >= static_cast<int>(difficulty)) {
            block.hash = candidate;
            break;
        }
        if (block.header.nonce >= config_.nonce_budget) {
            throw NonceBudgetError("no qualifying nonce within budget at difficulty " +
                                   std::to_string(difficulty));
        }
        ++block.header.nonce;
    }

    block.applied.reserve(block.transactions.size());
    for (const Transaction& tx : block.transactions) {
        block.applied.push_back(
            apply_transaction(state_, policy_, tx, block.header.height) ? 1 : 0);
    }

    chain_.blocks.push_back(std::move(block));
    return chain_.blocks.back();
}

MinerId Ledger::next_miner() {
    const MinerId count = config_.miner_count == 0 ? 1 : config_.miner_count;
    if (config_.random_miner_order) {
        const std::uint64_t draw =
            derive_seed(config_.miner_seed, "miner-pick", miner_cursor_++);
        return static_cast<MinerId>(draw % count);
    }
    return static_cast<MinerId>(miner_cursor_++ % count);
}

std::uint64_t Ledger::next_nonce(const Address& sender) const {
    auto it = next_nonce_.find(sender);
    return it == next_nonce_.end() ? 0 : it->second;
}

ReplayResult replay_chain(const Chain& chain, const ContractPolicy& policy) {
    ReplayResult result;
    for (const Block& block : chain.blocks) {
        std::vector<std::uint8_t> flags;
        flags.reserve(block.transactions.size());
        for (const Transaction& tx : block.transactions) {
            flags.push_back(
                apply_transaction(result.state, policy, tx, block.header.height) ? 1 : 0);
        }
        result.applied.push_back(std::move(flags));
    }
    return result;
}

ValidationReport validate_chain(const Chain& chain, const LedgerConfig& config,
                                const ContractPolicy& policy) {
    auto fail = [](std::uint64_t height, std::string what) {
        return ValidationReport{false, height, std::move(what)};
    };
    if (chain.blocks.empty()) {
        return ValidationReport{false, std::nullopt, "chain has no genesis block"};
    }

    ContractState state;
    std::map<Address, std::uint64_t> expected_nonce;
    std::set<Digest32> seen_ids;

    for (std::size_t h = 0; h < chain.blocks.size(); ++h) {
        const Block& block = chain.blocks[h];
        if (block.header.height != h) {
            return fail(h, "header height does not match chain position");
        }
        const Digest32 recomputed = block.header.hash();
        if (recomputed != block.hash) {
            return fail(h, "stored block hash does not match header contents");
        }
        if (leading_zero_bits(recomputed) < static_cast<int>(block.header.difficulty)) {
            return fail(h, "block hash misses the difficulty target");
        }
        const Digest32 expected_prev = h == 0 ? Digest32{} : chain.blocks[h - 1].hash;
        if (block.header.prev_hash != expected_prev) {
            return fail(h, "prev_hash does not link to the previous block");
        }
        if (block.transactions.size() > config.block_capacity) {
            return fail(h, "block exceeds transaction capacity");
        }
        if (block.applied.size() != block.transactions.size()) {
            return fail(h, "applied flags do not line up with transactions");
        }
        for (std::size_t t = 0; t < block.transactions.size(); ++t) {
            const Transaction& tx = block.transactions[t];
            if (Transaction::compute_id(tx) != tx.tx_id) {
                return fail(h, "transaction " + std::to_string(t) +
                                   " id does not recompute from its contents");
            }
            if (!seen_ids.insert(tx.tx_id).second) {
                return fail(h, "transaction " + std::to_string(t) + " is a duplicate");
            }
            std::uint64_t& nonce = expected_nonce[tx.sender];
            if (tx.nonce != nonce) {
                return fail(h, "transaction " + std::to_string(t) + " breaks its sender's nonce sequence");
            }
            ++nonce;
        }
        if (compute_tx_root(block.transactions) != block.header.tx_root) {
            return fail(h, "tx_root does not recompute from the transaction list");
        }
        for (std::size_t t = 0; t < block.transactions.size(); ++t) {
            const std::uint8_t derived =
                apply_transaction(state, policy, block.transactions[t], h) ? 1 : 0;
            if (derived != block.applied[t]) {
                return fail(h, "replay outcome of transaction " + std::to_string(t) +
                                   " differs from the recorded flag");
            }
        }
    }
    return ValidationReport{};
}

nlohmann::json export_chain(const Chain& chain, const LedgerConfig& config,
                            const ContractPolicy& policy) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const Block& block : chain.blocks) {
        nlohmann::json txs = nlohmann::json::array();
        for (std::size_t t = 0; t < block.transactions.size(); ++t) {
            const Transaction& tx = block.transactions[t];
            nlohmann::json j = {{"kind", tx_kind_name(tx.kind)},
                                {"sender", tx.sender.hex()},
                                {"nonce", tx.nonce},
                                {"tx_id", digest_hex(tx.tx_id)},
                                {"applied", block.applied[t] != 0}};
            switch (tx.kind) {
                case TxKind::UpdateModelHash:
                    j["ciphertext"] =
                        to_hex(std::get<UpdateModelHashPayload>(tx.payload).ciphertext);
                    break;
                case TxKind::PublishGlobalModel:
                    j["cid"] = std::get<PublishGlobalModelPayload>(tx.payload).cid;
                    break;
                case TxKind::TokenTransfer: {
                    const auto& p = std::get<TokenTransferPayload>(tx.payload);
                    j["to"] = p.to.hex();
                    j["amount"] = p.amount;
                    j["mint"] = p.mint;
                    break;
                }
            }
            txs.push_back(std::move(j));
        }
        blocks.push_back({{"header",
                           {{"height", block.header.height},
                            {"prev_hash", digest_hex(block.header.prev_hash)},
                            {"tx_root", digest_hex(block.header.tx_root)},
                            {"miner", block.header.miner},
                            {"timestamp", block.header.timestamp},
                            {"nonce", block.header.nonce},
                            {"difficulty", block.header.difficulty}}},
                          {"hash", digest_hex(block.hash)},
                          {"transactions", std::move(txs)}});
    }
    return {{"format", "fedchain-chain-v1"},
            {"config",
             {{"difficulty", config.difficulty},
              {"block_capacity", config.block_capacity},
              {"treasury", policy.treasury.hex()},
              {"monitor", policy.monitor.hex()}}},
            {"blocks", std::move(blocks)}};
}

ChainDocument import_chain(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "fedchain-chain-v1") {
            throw ParseError("unsupported chain export format");
        }
        ChainDocument out;
        const auto& cfg = doc.at("config");
        out.config.difficulty = cfg.at("difficulty").get<std::uint32_t>();
        out.config.block_capacity = cfg.at("block_capacity").get<std::size_t>();
        out.policy.treasury = Address::parse(cfg.at("treasury").get<std::string>());
        out.policy.monitor = Address::parse(cfg.at("monitor").get<std::string>());

        for (const auto& jb : doc.at("blocks")) {
            Block block;
            const auto& jh = jb.at("header");
            block.header.height = jh.at("height").get<std::uint64_t>();
            block.header.prev_hash = digest_from_hex(jh.at("prev_hash").get<std::string>());
            block.header.tx_root = digest_from_hex(jh.at("tx_root").get<std::string>());
            block.header.miner = jh.at("miner").get<MinerId>();
            block.header.timestamp = jh.at("timestamp").get<std::uint64_t>();
            block.header.nonce = jh.at("nonce").get<std::uint64_t>();
            block.header.difficulty = jh.at("difficulty").get<std::uint32_t>();
            block.hash = digest_from_hex(jb.at("hash").get<std::string>());

            for (const auto& jt : jb.at("transactions")) {
                Transaction tx;
                tx.kind = tx_kind_from_name(jt.at("kind").get<std::string>());
                tx.sender = Address::parse(jt.at("sender").get<std::string>());
                tx.nonce = jt.at("nonce").get<std::uint64_t>();
                switch (tx.kind) {
                    case TxKind::UpdateModelHash:
                        tx.payload = UpdateModelHashPayload{
                            from_hex(jt.at("ciphertext").get<std::string>())};
                        break;
                    case TxKind::PublishGlobalModel:
                        tx.payload =
                            PublishGlobalModelPayload{jt.at("cid").get<std::string>()};
                        break;
                    case TxKind::TokenTransfer:
                        tx.payload = TokenTransferPayload{
                            Address::parse(jt.at("to").get<std::string>()),
                            jt.at("amount").get<std::uint64_t>(), jt.at("mint").get<bool>()};
                        break;
                }
                tx.tx_id = digest_from_hex(jt.at("tx_id").get<std::string>());
                block.applied.push_back(jt.at("applied").get<bool>() ? 1 : 0);
                block.transactions.push_back(std::move(tx));
            }
            out.chain.blocks.push_back(std::move(block));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed chain export: ") + e.what());
    }
}

}  // namespace fedchain
