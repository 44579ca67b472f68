#pragma once

#include <cstdint>
#include <random>

namespace fedcox {

// Independent generator for (seed, stream, a, b). Streams never share state,
// so results do not depend on the order in which they are consumed.
std::mt19937_64 substream(std::uint64_t seed, std::uint32_t stream, std::uint64_t a = 0,
                          std::uint64_t b = 0);

}  // namespace fedcox
