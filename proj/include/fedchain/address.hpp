#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fedchain {

// 20-byte account identifier, hex-rendered. Simulation participants derive
// theirs from a human-readable label.
struct Address {
    std::array<std::uint8_t, 20> bytes{};

    static Address from_label(std::string_view label);
    static Address parse(std::string_view hex40);
    static Address zero() { return Address{}; }

    bool is_zero() const;
    std::string hex() const;

    auto operator<=>(const Address&) const = default;
};

// Well-known simulation roles.
Address treasury_address();
Address monitor_address();
Address worker_address(int worker_id);

}  // namespace fedchain
