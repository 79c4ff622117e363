#pragma once

#include <cstdint>
#include <random>

namespace nlt {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Named RNG streams so every consumer (dataset generation, shuffling,
// augmentation, ...) draws from an independent, reproducible sequence.
enum class Stream : std::uint64_t {
    blobs = 1,
    noise = 2,
    ood_blobs = 3,
    test_blobs = 4,
    model_init = 5,
    shuffle = 6,
    augment = 7,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(master ^ (0x517cc1b727220a95ull * static_cast<std::uint64_t>(stream)));
    return splitmix64(h ^ index);
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
    return Rng(derive_seed(master, stream, index));
}

}  // namespace nlt
