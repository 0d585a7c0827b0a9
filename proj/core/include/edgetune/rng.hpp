#pragma once

#include <cstdint>
#include <string_view>

namespace edgetune {

// Deterministic splittable random stream (splitmix64 core). Every stochastic
// component takes one of these explicitly; identical seed + identical call
// sequence gives bit-identical results on every platform, which the CLI
// relies on for byte-identical re-runs.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    // Derives an independent stream from a label. Adding a new label never
    // perturbs draws taken from existing ones.
    RngStream substream(std::string_view label) const;

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();

    // Uniform integer in [0, n). Requires n > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double gaussian();

    // Exponential with the given rate (mean 1/rate).
    double exponential(double rate);

    std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_;
};

}  // namespace edgetune
