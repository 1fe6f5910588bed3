#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace scvm {

constexpr std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// 16 lowercase hex digits.
std::string to_hex(std::uint64_t value);

} // namespace scvm
