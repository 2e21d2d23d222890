#include <doctest.h>

#include "fedchain/blobstore.hpp"
#include "fedchain/crypto.hpp"
#include "fedchain/errors.hpp"
#include "support.hpp"

using namespace fedchain;

namespace {

// one shared 1024-bit pair; keygen is the slow part of this suite
const KeyPair& test_keys() {
    static const KeyPair pair = generate_keypair(1024, 12345);
    return pair;
}

}  // namespace

TEST_SUITE("crypto") {

TEST_CASE("keypair modulus has exactly the requested bits") {
    const KeyPair& pair = test_keys();
    CHECK(mpz_sizeinbase(pair.pub.n.get_mpz_t(), 2) == 1024);
    CHECK(pair.pub.bits == 1024);
    // sanity: d inverts e modulo phi(n), so a raw roundtrip must hold
    mpz_class m = 424242, c, back;
    mpz_powm(c.get_mpz_t(), m.get_mpz_t(), pair.pub.e.get_mpz_t(), pair.pub.n.get_mpz_t());
    mpz_powm(back.get_mpz_t(), c.get_mpz_t(), pair.priv.d.get_mpz_t(), pair.priv.n.get_mpz_t());
    CHECK(back == m);
}

TEST_CASE("same seed reproduces the keypair, different seed does not") {
    const KeyPair a = generate_keypair(512, 77);
    const KeyPair b = generate_keypair(512, 77);
    const KeyPair c = generate_keypair(512, 78);
    CHECK(a.pub.n == b.pub.n);
    CHECK(a.priv.d == b.priv.d);
    CHECK(a.pub.n != c.pub.n);
}

TEST_CASE("invalid key sizes are rejected") {
    CHECK_THROWS_AS(generate_keypair(511, 1), InvalidArgumentError);
    CHECK_THROWS_AS(generate_keypair(510, 1), InvalidArgumentError);
    CHECK_THROWS_AS(generate_keypair(1023, 1), InvalidArgumentError);
}

TEST_CASE("cid-shaped link roundtrips and ciphertext is randomized") {
    const KeyPair& pair = test_keys();
    const std::string link = ContentHash::of(to_bytes("some weights")).render();
    REQUIRE(link.size() == 68);

    Rng rng(1);
    const Ciphertext c1 = encrypt(link, pair.pub, rng);
    const Ciphertext c2 = encrypt(link, pair.pub, rng);
    CHECK(c1.chunk_count() == 1);  // 68 chars fit one 1024-bit block
    CHECK(c1.chunks != c2.chunks);  // random padding

    CHECK(bytes_to_string(decrypt(c1, pair.priv)) == link);
    CHECK(bytes_to_string(decrypt(c2, pair.priv)) == link);
}

TEST_CASE("empty message roundtrips") {
    const KeyPair& pair = test_keys();
    Rng rng(2);
    const Ciphertext ct = encrypt(std::string_view{}, pair.pub, rng);
    CHECK(ct.chunk_count() == 1);
    CHECK(decrypt(ct, pair.priv).empty());
}

TEST_CASE("roundtrip oracle: random messages across chunk boundaries") {
    const KeyPair& pair = test_keys();
    const std::size_t capacity = chunk_payload_capacity(1024);
    Rng rng(3);
    for (int i = 0; i < 60; ++i) {
        const std::size_t len = 1 + static_cast<std::size_t>(uniform_u64(rng, 512));
        const Bytes message = random_bytes(rng, len);
        const Ciphertext ct = encrypt(message, pair.pub, rng);
        CHECK(ct.chunk_count() == (len + capacity - 1) / capacity);
        CHECK(decrypt(ct, pair.priv) == message);
    }
    // exact boundary lengths
    for (const std::size_t len : {capacity, capacity + 1, 2 * capacity}) {
        const Bytes message = random_bytes(rng, len);
        CHECK(decrypt(encrypt(message, pair.pub, rng), pair.priv) == message);
    }
}

TEST_CASE("chunk integers stay below the modulus") {
    const KeyPair& pair = test_keys();
    Rng rng(4);
    const Bytes message = random_bytes(rng, 300);
    const Ciphertext ct = encrypt(message, pair.pub, rng);
    for (const Bytes& chunk : ct.chunks) {
        CHECK(chunk.size() == 128);
        mpz_class v;
        mpz_import(v.get_mpz_t(), chunk.size(), 1, 1, 0, 0, chunk.data());
        CHECK(v < pair.pub.n);
    }
}

TEST_CASE("message too long is rejected") {
    const KeyPair& pair = test_keys();
    Rng rng(5);
    const Bytes message = random_bytes(rng, kDefaultMaxMessageLen + 1);
    CHECK_THROWS_AS(encrypt(message, pair.pub, rng), MessageTooLongError);
}

TEST_CASE("tamper oracle: 100 random byte flips all raise integrity errors") {
    const KeyPair& pair = test_keys();
    Rng rng(6);
    int detected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Bytes message = random_bytes(rng, 1 + uniform_u64(rng, 200));
        Ciphertext ct = encrypt(message, pair.pub, rng);
        Bytes& chunk = ct.chunks[uniform_u64(rng, ct.chunks.size())];
        const std::size_t pos = uniform_u64(rng, chunk.size());
        const std::uint8_t flip = static_cast<std::uint8_t>(1 + uniform_u64(rng, 255));
        chunk[pos] ^= flip;
        try {
            const Bytes out = decrypt(ct, pair.priv);
            if (out != message) ++detected;  // silent garbage would not count
        } catch (const IntegrityError&) {
            ++detected;
        }
    }
    CHECK(detected == 100);
}

TEST_CASE("decrypting with the wrong private key fails") {
    const KeyPair& pair = test_keys();
    const KeyPair other = generate_keypair(1024, 999);
    Rng rng(7);
    const Ciphertext ct = encrypt(std::string_view("cid:ff"), pair.pub, rng);
    CHECK_THROWS_AS(decrypt(ct, other.priv), IntegrityError);
}

TEST_CASE("reordering chunks of a multi-chunk message is detected") {
    const KeyPair& pair = test_keys();
    Rng rng(8);
    const Bytes message = random_bytes(rng, 2 * chunk_payload_capacity(1024));
    Ciphertext ct = encrypt(message, pair.pub, rng);
    REQUIRE(ct.chunk_count() == 2);
    std::swap(ct.chunks[0], ct.chunks[1]);
    CHECK_THROWS_AS(decrypt(ct, pair.priv), IntegrityError);
}

TEST_CASE("ciphertext wire form splits back losslessly") {
    const KeyPair& pair = test_keys();
    Rng rng(9);
    const Bytes message = random_bytes(rng, 150);
    const Ciphertext ct = encrypt(message, pair.pub, rng);
    const Bytes wire = ct.concat();
    const Ciphertext back = Ciphertext::split(wire, 1024);
    CHECK(back.chunks == ct.chunks);
    CHECK_THROWS_AS(Ciphertext::split(Bytes(127, 0), 1024), IntegrityError);
}

TEST_CASE("key files roundtrip through disk") {
    test::TempDir dir("keys");
    const KeyPair pair = generate_keypair(512, 4242);
    save_public_key(pair.pub, dir.path() / "public.key");
    save_private_key(pair.priv, dir.path() / "private.key");

    const PublicKey pub = load_public_key(dir.path() / "public.key");
    const PrivateKey priv = load_private_key(dir.path() / "private.key");
    CHECK(pub.n == pair.pub.n);
    CHECK(pub.e == pair.pub.e);
    CHECK(priv.d == pair.priv.d);

    Rng rng(10);
    const Bytes message = to_bytes("through the files");
    CHECK(decrypt(encrypt(message, pub, rng), priv) == message);
}

}  // TEST_SUITE
