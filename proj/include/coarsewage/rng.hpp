#ifndef COARSEWAGE_RNG_HPP
#define COARSEWAGE_RNG_HPP

#include <cstdint>

namespace coarsewage {

/// splitmix64 step; used to derive independent substream seeds from
/// (master seed, block index) so generation order never matters.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
}

} // namespace coarsewage

#endif
