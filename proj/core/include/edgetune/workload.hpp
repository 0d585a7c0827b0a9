#pragma once

#include <string>
#include <vector>

#include "edgetune/rng.hpp"

namespace edgetune {

enum class ArrivalSource { Uniform, Poisson, Trace };

struct ArrivalStream {
    std::vector<double> timestamps_s;  // sorted, non-negative
    ArrivalSource source = ArrivalSource::Uniform;

    std::size_t size() const { return timestamps_s.size(); }
};

// Evenly spaced arrivals at 1/rate intervals, first at 1/rate, up to duration.
ArrivalStream uniform_stream(double rate_per_s, double duration_s);

// Exponential inter-arrival times with mean 1/rate, truncated at duration.
ArrivalStream poisson_stream(double rate_per_s, double duration_s, RngStream& rng);

// One timestamp (seconds) per line; blank lines skipped. When target_rate > 0
// the time axis is rescaled so the mean rate matches it.
ArrivalStream load_trace(const std::string& path, double target_rate_per_s = 0.0);

void save_trace(const ArrivalStream& stream, const std::string& path);

// Splits the stream into consecutive windows of window_s, ranks them by the
// variance of per-second arrival counts, and returns the max-variance window
// shifted to start at t = 0. Ties break toward the earliest window; a stream
// shorter than one window comes back whole.
ArrivalStream burstiest_segment(const ArrivalStream& stream, double window_s);

}  // namespace edgetune
