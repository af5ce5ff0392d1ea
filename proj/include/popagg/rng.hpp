#pragma once

#include <cstdint>
#include <random>

namespace popagg::rng {

// Stream ids. A stream seed is a hash of (master seed, stream, replicate, draw),
// so no two parts of a run ever share a generator.
enum class Stream : std::uint64_t {
  Density = 1,
  TruthField = 2,
  TruthFrame = 3,
  Survey = 4,
  PosteriorTheta = 5,
  PosteriorResidual = 6,
  Frame = 7,
  Nugget = 8,
  Mse = 9,
  Replicate = 10,
};

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);

// splitmix64 finalizer applied to a counter chain:
//   s0 = mix(master), s_{k+1} = mix(s_k ^ mix(c_k + (k+1)·golden))
// over the components c = (stream, replicate, draw).
std::uint64_t derive(std::uint64_t master, Stream stream, std::uint64_t replicate = 0,
                     std::uint64_t draw = 0);

// Sub-seed of an already derived seed, for per-draw streams inside a module.
std::uint64_t child(std::uint64_t seed, std::uint64_t index);

Engine make_engine(std::uint64_t seed);

}  // namespace popagg::rng
