#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>

#include "fedchain/bytes.hpp"
#include "fedchain/sha256.hpp"

namespace fedchain {

// Content-addressed blob identifier, rendered as "cid:" + 64 lowercase hex
// chars (68 chars total).
struct ContentHash {
    Digest32 digest{};

    static ContentHash of(std::span<const std::uint8_t> payload);
    static ContentHash parse(std::string_view rendered);
    std::string render() const;

    auto operator<=>(const ContentHash&) const = default;
};

struct BlobRecord {
    ContentHash hash;
    Bytes payload;
    std::uint64_t stored_at = 0;  // logical tick of first insertion
};

// In-process stand-in for an external content-addressed store. The chain
// only ever carries the rendered hash; the payload lives here.
//
// Thread-safe: put/get may be called from parallel worker tasks; interleaved
// puts of identical payloads return one hash and store one copy.
class BlobStore {
public:
    BlobStore() = default;
    explicit BlobStore(std::uint64_t byte_budget) : byte_budget_(byte_budget) {}

    BlobStore(const BlobStore&) = delete;
    BlobStore& operator=(const BlobStore&) = delete;

    // Stores payload and returns its content hash. Idempotent: identical
    // bytes return the same hash and are not duplicated.
    // Throws StorageFullError when a non-zero byte budget would be exceeded.
    ContentHash put(std::span<const std::uint8_t> payload);

    // Throws NotFoundError for hashes never returned by put (a dangling
    // on-chain reference).
    Bytes get(const ContentHash& hash) const;
    bool contains(const ContentHash& hash) const;

    std::size_t count() const;
    std::uint64_t bytes_stored() const;

    // Persistence: one file per blob, named by the rendered hash, raw bytes.
    void dump_dir(const std::filesystem::path& dir) const;
    void load_dir(const std::filesystem::path& dir);

private:
    mutable std::mutex mutex_;
    std::map<ContentHash, BlobRecord> blobs_;
    std::uint64_t byte_budget_ = 0;  // 0 = unlimited
    std::uint64_t bytes_stored_ = 0;
    std::uint64_t tick_ = 0;
};

}  // namespace fedchain
