#pragma once

#include <cstdint>
#include <random>

namespace arp {

// All randomness derives from one root seed. Each consumer asks for its own
// stream id, so a component is reproducible without replaying the others.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t root, std::uint64_t stream = 0) {
  return std::mt19937_64(derive_seed(root, stream));
}

// Stream ids used by the library.
namespace streams {
inline constexpr std::uint64_t kShots = 1;
inline constexpr std::uint64_t kDrift = 2;
inline constexpr std::uint64_t kSpectrumShots = 3;
}  // namespace streams

}  // namespace arp
