#include "fedchain/blobstore.hpp"

#include <fstream>

#include "fedchain/errors.hpp"

namespace fedchain {

namespace {
constexpr std::string_view kCidPrefix = "cid:";
}

ContentHash ContentHash::of(std::span<const std::uint8_t> payload) {
    return ContentHash{sha256(payload)};
}

ContentHash ContentHash::parse(std::string_view rendered) {
    if (rendered.size() != kCidPrefix.size() + 64 || !rendered.starts_with(kCidPrefix)) {
        throw ParseError("malformed content hash: " + std::string(rendered));
    }
    return ContentHash{digest_from_hex(rendered.substr(kCidPrefix.size()))};
}

std::string ContentHash::render() const {
    return std::string(kCidPrefix) + digest_hex(digest);
}

ContentHash BlobStore::put(std::span<const std::uint8_t> payload) {
    const ContentHash hash = ContentHash::of(payload);
    std::lock_guard lock(mutex_);
    auto it = blobs_.find(hash);
    if (it != blobs_.end()) {
        return hash;  // dedup: identical bytes, same hash, no second copy
    }
    if (byte_budget_ != 0 && bytes_stored_ + payload.size() > byte_budget_) {
        throw StorageFullError("blob store budget of " + std::to_string(byte_budget_) +
                               " bytes exceeded");
    }
    blobs_.emplace(hash, BlobRecord{hash, Bytes(payload.begin(), payload.end()), tick_++});
    bytes_stored_ += payload.size();
    return hash;
}

Bytes BlobStore::get(const ContentHash& hash) const {
    std::lock_guard lock(mutex_);
    auto it = blobs_.find(hash);
    if (it == blobs_.end()) {
        throw NotFoundError("no blob for " + hash.render());
    }
    return it->second.payload;
}

bool BlobStore::contains(const ContentHash& hash) const {
    std::lock_guard lock(mutex_);
    return blobs_.contains(hash);
}

std::size_t BlobStore::count() const {
    std::lock_guard lock(mutex_);
    return blobs_.size();
}

std::uint64_t BlobStore::bytes_stored() const {
    std::lock_guard lock(mutex_);
    return bytes_stored_;
}

void BlobStore::dump_dir(const std::filesystem::path& dir) const {
    std::lock_guard lock(mutex_);
    std::filesystem::create_directories(dir);
    for (const auto& [hash, record] : blobs_) {
        std::ofstream out(dir / hash.render(), std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write blob file under " + dir.string());
        }
        out.write(reinterpret_cast<const char*>(record.payload.data()),
                  static_cast<std::streamsize>(record.payload.size()));
    }
}

void BlobStore::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw NotFoundError("blob directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const ContentHash named = ContentHash::parse(entry.path().filename().string());
        std::ifstream in(entry.path(), std::ios::binary);
        Bytes payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const ContentHash stored = put(payload);
        if (stored != named) {
            throw IntegrityError("blob file " + entry.path().string() +
                                 " does not match its name");
        }
    }
}

}  // namespace fedchain
