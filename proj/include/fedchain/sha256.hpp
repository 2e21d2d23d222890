#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fedchain {

using Digest32 = std::array<std::uint8_t, 32>;

// Project-wide 256-bit content digest (SHA-256). Every hash in the system --
// blob ids, tx ids, block hashes, address derivation -- goes through here so
// exports stay reproducible within a build.
Digest32 sha256(std::span<const std::uint8_t> data);
Digest32 sha256(std::string_view text);

// Leading zero bits of the digest, MSB first. Used by the proof-of-work check.
int leading_zero_bits(const Digest32& d);

std::string digest_hex(const Digest32& d);
Digest32 digest_from_hex(std::string_view hex);

// 64-bit sub-seed for a labelled consumer (worker RNG, encryption nonces,
// partition shuffle, ...). Each consumer gets an independent deterministic
// stream derived from the run seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace fedchain
