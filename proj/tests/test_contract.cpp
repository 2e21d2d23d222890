#include <doctest.h>

#include "fedchain/contract.hpp"
#include "fedchain/errors.hpp"
#include "fedchain/ledger.hpp"
#include "fedchain/rng.hpp"
#include "support.hpp"

using namespace fedchain;

namespace {

const ContractPolicy kPolicy{treasury_address(), monitor_address()};
const Address kA = worker_address(1);
const Address kB = worker_address(2);

}  // namespace

TEST_SUITE("contract") {

TEST_CASE("first upload lands at index 1") {
    ContractState state;
    apply_update_model_hash(state, kA, to_bytes("payload"), 3);
    CHECK(state.upload_counts.at(kA) == 1);
    CHECK(get_model_hash(state, kA, 1) == to_hex(to_bytes("payload")));
    REQUIRE(state.event_log.size() == 1);
    CHECK(state.event_log[0].kind == EventKind::ModelUploaded);
    CHECK(state.event_log[0].value == 1);
    CHECK(state.event_log[0].block_height == 3);
}

TEST_CASE("zero-address uploads are rejected with the invalid-address guard") {
    ContractState state;
    CHECK_THROWS_WITH_AS(apply_update_model_hash(state, Address::zero(), to_bytes("x"), 0),
                         "Invalid address", InvalidAddressError);
    CHECK(state.event_log.empty());
}

TEST_CASE("empty payloads are rejected") {
    ContractState state;
    CHECK_THROWS_AS(apply_update_model_hash(state, kA, {}, 0), EmptyPayloadError);
}

TEST_CASE("interleaved uploads keep per-address indices contiguous") {
    ContractState state;
    apply_update_model_hash(state, kA, to_bytes("a1"), 0);
    apply_update_model_hash(state, kA, to_bytes("a2"), 0);
    apply_update_model_hash(state, kB, to_bytes("b1"), 1);
    CHECK(state.upload_counts.at(kA) == 2);
    CHECK(state.upload_counts.at(kB) == 1);
    CHECK(get_model_hash(state, kA, 1) == to_hex(to_bytes("a1")));
    CHECK(get_model_hash(state, kA, 2) == to_hex(to_bytes("a2")));
    CHECK(get_model_hash(state, kB, 1) == to_hex(to_bytes("b1")));
}

TEST_CASE("reads are unguarded and report not-found") {
    ContractState state;
    apply_update_model_hash(state, kA, to_bytes("only"), 0);
    CHECK_THROWS_AS(get_model_hash(state, kA, 2), NotFoundError);
    CHECK_THROWS_AS(get_model_hash(state, kA, 0), NotFoundError);
    CHECK_THROWS_AS(get_model_hash(state, Address::zero(), 1), NotFoundError);
}

TEST_CASE("treasury mints one token to a worker") {
    ContractState state;
    apply_token_transfer(state, kPolicy, treasury_address(), kA, 1, true, 7);
    CHECK(state.balances.at(kA) == 1);
    CHECK(state.total_minted == 1);
    REQUIRE(state.event_log.size() == 1);
    CHECK(state.event_log[0].kind == EventKind::RewardMinted);
}

TEST_CASE("zero transfer is a no-op success") {
    ContractState state;
    apply_token_transfer(state, kPolicy, kA, kB, 0, false, 0);
    CHECK(balance_sum(state) == 0);
    CHECK(state.event_log.size() == 1);  // applied, just moved nothing
}

TEST_CASE("insufficient balance rejects the transfer") {
    ContractState state;
    CHECK_THROWS_AS(apply_token_transfer(state, kPolicy, kA, kB, 1, false, 0),
                    InsufficientBalanceError);
}

TEST_CASE("non-treasury mint attempts are unauthorized") {
    ContractState state;
    CHECK_THROWS_AS(apply_token_transfer(state, kPolicy, kA, kB, 1, true, 0),
                    UnauthorizedMintError);
}

TEST_CASE("earned tokens can move between workers") {
    ContractState state;
    apply_token_transfer(state, kPolicy, treasury_address(), kA, 3, true, 0);
    apply_token_transfer(state, kPolicy, kA, kB, 2, false, 1);
    CHECK(state.balances.at(kA) == 1);
    CHECK(state.balances.at(kB) == 2);
    CHECK(balance_sum(state) == state.total_minted);
}

TEST_CASE("only the monitor publishes global models") {
    ContractState state;
    apply_publish_global(state, kPolicy, monitor_address(), "cid:aa", 4);
    CHECK(state.global_model_history == std::vector<std::string>{"cid:aa"});
    CHECK_THROWS_AS(apply_publish_global(state, kPolicy, kA, "cid:bb", 5),
                    UnauthorizedPublisherError);
    apply_publish_global(state, kPolicy, monitor_address(), "cid:cc", 6);
    CHECK(state.global_model_history ==
          std::vector<std::string>{"cid:aa", "cid:cc"});  // order preserved
}

TEST_CASE("replay determinism: same sequence, bit-identical state") {
    auto run_sequence = [] {
        ContractState state;
        apply_update_model_hash(state, kA, to_bytes("w"), 1);
        apply_token_transfer(state, kPolicy, treasury_address(), kA, 1, true, 1);
        apply_publish_global(state, kPolicy, monitor_address(), "cid:g", 2);
        return state;
    };
    const ContractState first = run_sequence();
    const ContractState second = run_sequence();
    CHECK(first == second);
    CHECK(state_to_json(first).dump() == state_to_json(second).dump());
}

TEST_CASE("property: event log length equals applied transaction count") {
    ContractState state;
    Rng rng(11);
    int applied = 0;
    for (int i = 0; i < 200; ++i) {
        const int op = static_cast<int>(uniform_u64(rng, 4));
        try {
            switch (op) {
                case 0:
                    apply_update_model_hash(
                        state, uniform_u64(rng, 4) == 0 ? Address::zero() : kA,
                        to_bytes("p" + std::to_string(i)), static_cast<std::uint64_t>(i));
                    break;
                case 1:
                    apply_token_transfer(state, kPolicy,
                                         uniform_u64(rng, 2) == 0 ? treasury_address() : kB,
                                         kA, uniform_u64(rng, 3), true,
                                         static_cast<std::uint64_t>(i));
                    break;
                case 2:
                    apply_token_transfer(state, kPolicy, kA, kB, uniform_u64(rng, 3), false,
                                         static_cast<std::uint64_t>(i));
                    break;
                default:
                    apply_publish_global(state, kPolicy,
                                         uniform_u64(rng, 2) == 0 ? monitor_address() : kB,
                                         "cid:x", static_cast<std::uint64_t>(i));
                    break;
            }
            ++applied;
        } catch (const ContractError&) {
            // guard rejections must not touch the log
        }
    }
    CHECK(state.event_log.size() == static_cast<std::size_t>(applied));
    CHECK(balance_sum(state) == state.total_minted);
}

TEST_CASE("property: upload indices form a gapless prefix") {
    ContractState state;
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        const Address sender = worker_address(1 + static_cast<int>(uniform_u64(rng, 3)));
        apply_update_model_hash(state, sender, to_bytes("u" + std::to_string(i)),
                                static_cast<std::uint64_t>(i));
    }
    for (const auto& [addr, count] : state.upload_counts) {
        CHECK(state.model_hashes.at(addr).size() == count);
        for (std::uint64_t idx = 1; idx <= count; ++idx) {
            CHECK_NOTHROW(get_model_hash(state, addr, idx));
        }
        CHECK_THROWS_AS(get_model_hash(state, addr, count + 1), NotFoundError);
    }
}

}  // TEST_SUITE
