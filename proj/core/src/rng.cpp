#include "edgetune/rng.hpp"

#include <cmath>

namespace edgetune {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over the label bytes; stable across platforms.
std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

RngStream RngStream::substream(std::string_view label) const {
    return RngStream(mix(state_ ^ hash_label(label)));
}

std::uint64_t RngStream::next_u64() {
    state_ += kGamma;
    return mix(state_);
}

double RngStream::uniform() {
    // 53 high bits -> double in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    // Modulo bias is < 2^-53 for any n we ever use (grid sizes ~1e4).
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

double RngStream::gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngStream::exponential(double rate) {
    double u = uniform();
    return -std::log1p(-u) / rate;
}

}  // namespace edgetune
