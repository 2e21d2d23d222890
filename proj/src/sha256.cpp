#include "fedchain/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "fedchain/bytes.hpp"
#include "fedchain/errors.hpp"

namespace fedchain {

Digest32 sha256(std::span<const std::uint8_t> data) {
    Digest32 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    return out;
}

Digest32 sha256(std::string_view text) {
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int leading_zero_bits(const Digest32& d) {
    int bits = 0;
    for (std::uint8_t byte : d) {
        if (byte == 0) {
            bits += 8;
            continue;
        }
        for (int mask = 0x80; mask != 0; mask >>= 1) {
            if (byte & mask) return bits;
            ++bits;
        }
    }
    return bits;
}

std::string digest_hex(const Digest32& d) {
    return to_hex(d);
}

Digest32 digest_from_hex(std::string_view hex) {
    const Bytes raw = from_hex(hex);
    if (raw.size() != 32) {
        throw ParseError("digest must be 32 bytes, got " + std::to_string(raw.size()));
    }
    Digest32 out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t a, std::uint64_t b) {
    Bytes buf;
    buf.reserve(label.size() + 25);
    append_u64_le(buf, base);
    buf.push_back(':');
    buf.insert(buf.end(), label.begin(), label.end());
    append_u64_le(buf, a);
    append_u64_le(buf, b);
    const Digest32 d = sha256(buf);
    std::uint64_t seed = 0;
    for (int i = 7; i >= 0; --i) {
        seed = (seed << 8) | d[static_cast<std::size_t>(i)];
    }
    return seed;
}

}  // namespace fedchain
