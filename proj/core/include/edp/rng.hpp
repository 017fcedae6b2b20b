#pragma once

#include <array>
#include <cstdint>

namespace edp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// each (key, counter) pair maps to one block of four 32-bit words.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// Two independent standard normals from one Philox block (Box–Muller).
std::array<double, 2> philox_normal_pair(PhiloxCounter counter, PhiloxKey key);

inline PhiloxKey philox_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace edp
