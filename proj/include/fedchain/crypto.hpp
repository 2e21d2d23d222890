#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedchain/bytes.hpp"
#include "fedchain/rng.hpp"

namespace fedchain {

// RSA key material. The operator (monitor) holds the private key; workers
// only ever see the public key.
struct PublicKey {
    mpz_class n;
    mpz_class e;
    unsigned bits = 0;
};

struct PrivateKey {
    mpz_class n;
    mpz_class e;
    mpz_class d;
    mpz_class p;
    mpz_class q;
    unsigned bits = 0;
};

struct KeyPair {
    PublicKey pub;
    PrivateKey priv;
};

// Ordered modulus-sized chunks. Each chunk, read as a big-endian integer,
// is strictly less than the modulus.
struct Ciphertext {
    std::vector<Bytes> chunks;

    std::size_t chunk_count() const { return chunks.size(); }

    // Wire form: chunks concatenated. Splitting needs the key size back.
    Bytes concat() const;
    static Ciphertext split(std::span<const std::uint8_t> wire, unsigned key_bits);
};

inline constexpr std::size_t kDefaultMaxMessageLen = 4096;

// Bytes of payload that fit in one padded block for the given key size.
std::size_t chunk_payload_capacity(unsigned bits);

// Deterministic under the seed. bits must be even and >= 512; prime factors
// are Miller-Rabin tested with composite survival probability <= 2^-80.
KeyPair generate_keypair(unsigned bits, std::uint64_t seed);

// Randomized padding: two encryptions of the same message generally differ.
// Messages longer than one block are split into chunks; each chunk's padding
// carries an integrity tag checked on decrypt.
Ciphertext encrypt(std::span<const std::uint8_t> message, const PublicKey& key, Rng& rng,
                   std::size_t max_message_len = kDefaultMaxMessageLen);
Ciphertext encrypt(std::string_view message, const PublicKey& key, Rng& rng,
                   std::size_t max_message_len = kDefaultMaxMessageLen);

// Throws IntegrityError for tampered or wrong-key ciphertexts; never returns
// garbage silently.
Bytes decrypt(const Ciphertext& ciphertext, const PrivateKey& key);

// Key files: small self-describing text format (field names + hex values).
void save_public_key(const PublicKey& key, const std::filesystem::path& path);
void save_private_key(const PrivateKey& key, const std::filesystem::path& path);
PublicKey load_public_key(const std::filesystem::path& path);
PrivateKey load_private_key(const std::filesystem::path& path);

}  // namespace fedchain
