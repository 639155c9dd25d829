#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spinlets {

/// The one generator type used across the library.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derive an independent stream seed from a user seed, a module tag and an index.
/// Identical arguments always give the same stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, stream, index));
}

}  // namespace spinlets
