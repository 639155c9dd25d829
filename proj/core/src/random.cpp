#include "spinlets/random.hpp"

namespace spinlets {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
    // FNV-1a over the tag keeps stream names stable across builds.
    std::uint64_t tag = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        tag ^= c;
        tag *= 0x100000001b3ULL;
    }
    return mix64(mix64(seed) ^ mix64(tag + index));
}

}  // namespace spinlets
