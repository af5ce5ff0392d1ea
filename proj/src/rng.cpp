#include "popagg/rng.hpp"

namespace popagg::rng {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  state += kGolden;
  return mix(state);
}

std::uint64_t derive(std::uint64_t master, Stream stream, std::uint64_t replicate,
                     std::uint64_t draw) {
  std::uint64_t s = mix(master);
  const std::uint64_t parts[3] = {static_cast<std::uint64_t>(stream), replicate, draw};
  for (std::uint64_t k = 0; k < 3; ++k) s = mix(s ^ mix(parts[k] + (k + 1) * kGolden));
  return s;
}

std::uint64_t child(std::uint64_t seed, std::uint64_t index) {
  return mix(seed ^ mix(index + 4 * kGolden));
}

Engine make_engine(std::uint64_t seed) {
  std::uint64_t state = seed;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return Engine(seq);
}

}  // namespace popagg::rng
