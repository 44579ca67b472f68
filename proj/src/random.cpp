#include "fedcox/random.hpp"

namespace fedcox {

std::mt19937_64 substream(std::uint64_t seed, std::uint32_t stream, std::uint64_t a,
                          std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream,
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace fedcox
