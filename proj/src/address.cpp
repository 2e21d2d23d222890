#include "fedchain/address.hpp"

#include <algorithm>

#include "fedchain/bytes.hpp"
#include "fedchain/errors.hpp"
#include "fedchain/sha256.hpp"

namespace fedchain {

Address Address::from_label(std::string_view label) {
    const Digest32 digest = sha256("fedchain-addr:" + std::string(label));
    Address addr;
    std::copy_n(digest.begin(), addr.bytes.size(), addr.bytes.begin());
    return addr;
}

Address Address::parse(std::string_view hex40) {
    const Bytes raw = from_hex(hex40);
    if (raw.size() != 20) {
        throw ParseError("address must be 20 bytes, got " + std::to_string(raw.size()));
    }
    Address addr;
    std::copy(raw.begin(), raw.end(), addr.bytes.begin());
    return addr;
}

bool Address::is_zero() const {
    return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
}

std::string Address::hex() const {
    return to_hex(bytes);
}

Address treasury_address() {
    return Address::from_label("treasury");
}

Address monitor_address() {
    return Address::from_label("monitor");
}

Address worker_address(int worker_id) {
    return Address::from_label("worker-" + std::to_string(worker_id));
}

}  // namespace fedchain
