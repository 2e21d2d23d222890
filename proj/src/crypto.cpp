#include "fedchain/crypto.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "fedchain/errors.hpp"
#include "fedchain/sha256.hpp"

namespace fedchain {

namespace {

// 40 Miller-Rabin rounds: composite survival <= 4^-40 = 2^-80.
constexpr int kMillerRabinRounds = 40;

// Padded block layout (k = modulus length in bytes, big-endian):
//   [0]        0x00                      keeps the block value below n
//   [1]        0x02                      format marker
//   [2..18)    16-byte random nonce
//   [18..20)   payload length, u16 BE
//   [20..20+L) payload
//   ...        zero fill
//   [k-32..k)  SHA-256 over (marker, nonce, chunk index, chunk count, length, payload)
constexpr std::size_t kNonceLen = 16;
constexpr std::size_t kTagLen = 32;
constexpr std::size_t kOverhead = 2 + kNonceLen + 2 + kTagLen;

std::size_t modulus_bytes(unsigned bits) {
    return (static_cast<std::size_t>(bits) + 7) / 8;
}

mpz_class bytes_to_mpz(std::span<const std::uint8_t> data) {
    mpz_class x;
    if (!data.empty()) {
        mpz_import(x.get_mpz_t(), data.size(), 1, 1, 0, 0, data.data());
    }
    return x;
}

Bytes mpz_to_bytes(const mpz_class& x, std::size_t width) {
    Bytes out(width, 0);
    std::size_t count = 0;
    if (x != 0) {
        const std::size_t need = (mpz_sizeinbase(x.get_mpz_t(), 2) + 7) / 8;
        if (need > width) {
            throw Error("integer does not fit in " + std::to_string(width) + " bytes");
        }
        mpz_export(out.data() + (width - need), &count, 1, 1, 0, 0, x.get_mpz_t());
    }
    return out;
}

// Uniform integer with exactly `bits` bits of headroom, top two bits and the
// low bit forced so the product of two such primes lands on the target size.
mpz_class random_prime(Rng& rng, unsigned bits) {
    for (;;) {
        const Bytes raw = random_bytes(rng, (bits + 7) / 8);
        mpz_class c = bytes_to_mpz(raw);
        mpz_fdiv_r_2exp(c.get_mpz_t(), c.get_mpz_t(), bits);
        mpz_setbit(c.get_mpz_t(), bits - 1);
        mpz_setbit(c.get_mpz_t(), bits - 2);
        mpz_setbit(c.get_mpz_t(), 0);
        // incremental search keeps the draw deterministic under the seed
        for (unsigned step = 0; step < 64 * bits; ++step) {
            if (mpz_probab_prime_p(c.get_mpz_t(), kMillerRabinRounds) > 0) {
                return c;
            }
            c += 2;
            if (mpz_sizeinbase(c.get_mpz_t(), 2) > bits) break;  // ran off the top
        }
    }
}

Digest32 chunk_tag(std::span<const std::uint8_t> nonce, std::uint32_t index,
                   std::uint32_t count, std::uint16_t len,
                   std::span<const std::uint8_t> payload) {
    Bytes preimage;
    preimage.reserve(1 + nonce.size() + 10 + payload.size());
    preimage.push_back(0x02);
    preimage.insert(preimage.end(), nonce.begin(), nonce.end());
    append_u32_be(preimage, index);
    append_u32_be(preimage, count);
    append_u16_be(preimage, len);
    preimage.insert(preimage.end(), payload.begin(), payload.end());
    return sha256(preimage);
}

void write_key_fields(std::ostream& out, const std::map<std::string, const mpz_class*>& fields,
                      unsigned bits) {
    out << "bits = " << bits << "\n";
    for (const auto& [name, value] : fields) {
        out << name << " = 0x" << value->get_str(16) << "\n";
    }
}

std::map<std::string, std::string> read_key_file(const std::filesystem::path& path,
                                                 std::string_view expected_magic) {
    std::ifstream in(path);
    if (!in) {
        throw NotFoundError("cannot open key file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != expected_magic) {
        throw ParseError("bad key file header in " + path.string());
    }
    std::map<std::string, std::string> fields;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("malformed key file line: " + line);
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        fields[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return fields;
}

mpz_class parse_mpz_field(const std::map<std::string, std::string>& fields,
                          const std::string& name, const std::filesystem::path& path) {
    auto it = fields.find(name);
    if (it == fields.end()) {
        throw ParseError("key file " + path.string() + " is missing field " + name);
    }
    mpz_class v;
    if (v.set_str(it->second, 0) != 0) {
        throw ParseError("key file " + path.string() + " has a malformed " + name);
    }
    return v;
}

}  // namespace

Bytes Ciphertext::concat() const {
    Bytes out;
    for (const Bytes& chunk : chunks) {
        out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
}

Ciphertext Ciphertext::split(std::span<const std::uint8_t> wire, unsigned key_bits) {
    const std::size_t k = modulus_bytes(key_bits);
    if (wire.empty() || wire.size() % k != 0) {
        throw IntegrityError("ciphertext length " + std::to_string(wire.size()) +
                             " is not a multiple of the modulus size");
    }
    Ciphertext ct;
    for (std::size_t off = 0; off < wire.size(); off += k) {
        ct.chunks.emplace_back(wire.begin() + static_cast<std::ptrdiff_t>(off),
                               wire.begin() + static_cast<std::ptrdiff_t>(off + k));
    }
    return ct;
}

std::size_t chunk_payload_capacity(unsigned bits) {
    const std::size_t k = modulus_bytes(bits);
    if (k <= kOverhead) {
        throw InvalidArgumentError("key size " + std::to_string(bits) +
                                   " leaves no room for payload");
    }
    return k - kOverhead;
}

KeyPair generate_keypair(unsigned bits, std::uint64_t seed) {
    if (bits < 512 || bits % 2 != 0) {
        throw InvalidArgumentError("key size must be even and >= 512, got " +
                                   std::to_string(bits));
    }
    Rng rng(seed);
    const mpz_class e = 65537;
    for (;;) {
        const mpz_class p = random_prime(rng, bits / 2);
        mpz_class q = random_prime(rng, bits / 2);
        while (q == p) {
            q = random_prime(rng, bits / 2);
        }
        const mpz_class n = p * q;
        if (mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;
        const mpz_class phi = (p - 1) * (q - 1);
        mpz_class g;
        mpz_gcd(g.get_mpz_t(), e.get_mpz_t(), phi.get_mpz_t());
        if (g != 1) continue;
        mpz_class d;
        if (mpz_invert(d.get_mpz_t(), e.get_mpz_t(), phi.get_mpz_t()) == 0) continue;
        return KeyPair{PublicKey{n, e, bits}, PrivateKey{n, e, d, p, q, bits}};
    }
}

Ciphertext encrypt(std::span<const std::uint8_t> message, const PublicKey& key, Rng& rng,
                   std::size_t max_message_len) {
    if (message.size() > max_message_len) {
        throw MessageTooLongError("message of " + std::to_string(message.size()) +
                                  " bytes exceeds limit of " + std::to_string(max_message_len));
    }
    const std::size_t k = modulus_bytes(key.bits);
    const std::size_t capacity = chunk_payload_capacity(key.bits);
    const std::size_t count =
        message.empty() ? 1 : (message.size() + capacity - 1) / capacity;

    Ciphertext ct;
    ct.chunks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t off = i * capacity;
        const std::size_t len = std::min(capacity, message.size() - off);
        const auto payload = message.subspan(off, len);
        const Bytes nonce = random_bytes(rng, kNonceLen);

        Bytes block(k, 0);
        block[1] = 0x02;
        std::copy(nonce.begin(), nonce.end(), block.begin() + 2);
        block[2 + kNonceLen] = static_cast<std::uint8_t>(len >> 8);
        block[2 + kNonceLen + 1] = static_cast<std::uint8_t>(len & 0xff);
        std::copy(payload.begin(), payload.end(), block.begin() + 2 + kNonceLen + 2);
        const Digest32 tag =
            chunk_tag(nonce, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(count),
                      static_cast<std::uint16_t>(len), payload);
        std::copy(tag.begin(), tag.end(), block.end() - static_cast<std::ptrdiff_t>(kTagLen));

        const mpz_class m = bytes_to_mpz(block);
        mpz_class c;
        mpz_powm(c.get_mpz_t(), m.get_mpz_t(), key.e.get_mpz_t(), key.n.get_mpz_t());
        ct.chunks.push_back(mpz_to_bytes(c, k));
    }
    return ct;
}

Ciphertext encrypt(std::string_view message, const PublicKey& key, Rng& rng,
                   std::size_t max_message_len) {
    return encrypt(std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(message.data()), message.size()),
                   key, rng, max_message_len);
}

Bytes decrypt(const Ciphertext& ciphertext, const PrivateKey& key) {
    const std::size_t k = modulus_bytes(key.bits);
    const std::size_t capacity = chunk_payload_capacity(key.bits);
    const std::uint32_t count = static_cast<std::uint32_t>(ciphertext.chunks.size());
    if (count == 0) {
        throw IntegrityError("empty ciphertext");
    }

    Bytes message;
    for (std::uint32_t i = 0; i < count; ++i) {
        const Bytes& chunk = ciphertext.chunks[i];
        if (chunk.size() != k) {
            throw IntegrityError("chunk " + std::to_string(i) + " has wrong size");
        }
        const mpz_class c = bytes_to_mpz(chunk);
        if (c >= key.n) {
            throw IntegrityError("chunk " + std::to_string(i) + " is not below the modulus");
        }
        mpz_class m;
        mpz_powm(m.get_mpz_t(), c.get_mpz_t(), key.d.get_mpz_t(), key.n.get_mpz_t());
        const Bytes block = mpz_to_bytes(m, k);

        if (block[0] != 0x00 || block[1] != 0x02) {
            throw IntegrityError("padding marker check failed");
        }
        const auto nonce = std::span<const std::uint8_t>(block).subspan(2, kNonceLen);
        const std::size_t len = (static_cast<std::size_t>(block[2 + kNonceLen]) << 8) |
                                block[2 + kNonceLen + 1];
        if (len > capacity) {
            throw IntegrityError("padding length field out of range");
        }
        const auto payload =
            std::span<const std::uint8_t>(block).subspan(2 + kNonceLen + 2, len);
        for (std::size_t z = 2 + kNonceLen + 2 + len; z < k - kTagLen; ++z) {
            if (block[z] != 0) {
                throw IntegrityError("padding fill is not zero");
            }
        }
        const Digest32 expected =
            chunk_tag(nonce, i, count, static_cast<std::uint16_t>(len), payload);
        if (!std::equal(expected.begin(), expected.end(),
                        block.end() - static_cast<std::ptrdiff_t>(kTagLen))) {
            throw IntegrityError("integrity tag mismatch");
        }
        message.insert(message.end(), payload.begin(), payload.end());
    }
    return message;
}

void save_public_key(const PublicKey& key, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write key file: " + path.string());
    }
    out << "fedchain-rsa-public-v1\n";
    write_key_fields(out, {{"n", &key.n}, {"e", &key.e}}, key.bits);
}

void save_private_key(const PrivateKey& key, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write key file: " + path.string());
    }
    out << "fedchain-rsa-private-v1\n";
    write_key_fields(out, {{"d", &key.d}, {"e", &key.e}, {"n", &key.n},
                           {"p", &key.p}, {"q", &key.q}},
                     key.bits);
}

PublicKey load_public_key(const std::filesystem::path& path) {
    const auto fields = read_key_file(path, "fedchain-rsa-public-v1");
    PublicKey key;
    key.n = parse_mpz_field(fields, "n", path);
    key.e = parse_mpz_field(fields, "e", path);
    auto it = fields.find("bits");
    key.bits = it == fields.end() ? 0 : static_cast<unsigned>(std::stoul(it->second));
    if (key.bits == 0 || mpz_sizeinbase(key.n.get_mpz_t(), 2) != key.bits) {
        throw ParseError("key file " + path.string() + " bits field does not match modulus");
    }
    return key;
}

PrivateKey load_private_key(const std::filesystem::path& path) {
    const auto fields = read_key_file(path, "fedchain-rsa-private-v1");
    PrivateKey key;
    key.n = parse_mpz_field(fields, "n", path);
    key.e = parse_mpz_field(fields, "e", path);
    key.d = parse_mpz_field(fields, "d", path);
    key.p = parse_mpz_field(fields, "p", path);
    key.q = parse_mpz_field(fields, "q", path);
    auto it = fields.find("bits");
    key.bits = it == fields.end() ? 0 : static_cast<unsigned>(std::stoul(it->second));
    if (key.bits == 0 || mpz_sizeinbase(key.n.get_mpz_t(), 2) != key.bits) {
        throw ParseError("key file " + path.string() + " bits field does not match modulus");
    }
    if (key.p * key.q != key.n) {
        throw ParseError("key file " + path.string() + " factors do not multiply to n");
    }
    return key;
}

}  // namespace fedchain
