#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedchain {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string bytes_to_string(std::span<const std::uint8_t> b) {
    return std::string(b.begin(), b.end());
}

void append_u16_be(Bytes& out, std::uint16_t v);
void append_u32_be(Bytes& out, std::uint32_t v);
void append_u32_le(Bytes& out, std::uint32_t v);
void append_u64_le(Bytes& out, std::uint64_t v);

std::uint32_t read_u32_le(std::span<const std::uint8_t> in);
std::uint64_t read_u64_le(std::span<const std::uint8_t> in);

}  // namespace fedchain
