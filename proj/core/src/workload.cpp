#include "edgetune/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edgetune/device_profile.hpp"

namespace edgetune {

ArrivalStream uniform_stream(double rate_per_s, double duration_s) {
    if (rate_per_s <= 0) throw DataError("uniform_stream: rate must be > 0");
    ArrivalStream s;
    s.source = ArrivalSource::Uniform;
    const long n = static_cast<long>(std::floor(rate_per_s * duration_s + 1e-9));
    s.timestamps_s.reserve(n > 0 ? n : 0);
    for (long k = 1; k <= n; ++k) {
        s.timestamps_s.push_back(static_cast<double>(k) / rate_per_s);
    }
    return s;
}

ArrivalStream poisson_stream(double rate_per_s, double duration_s, RngStream& rng) {
    if (rate_per_s <= 0) throw DataError("poisson_stream: rate must be > 0");
    ArrivalStream s;
    s.source = ArrivalSource::Poisson;
    double t = 0.0;
    for (;;) {
        t += rng.exponential(rate_per_s);
        if (t > duration_s) break;
        s.timestamps_s.push_back(t);
    }
    return s;
}

ArrivalStream load_trace(const std::string& path, double target_rate_per_s) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trace file: " + path);
    ArrivalStream s;
    s.source = ArrivalSource::Trace;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // Trim whitespace; skip blank lines.
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(first, last - first + 1);
        std::size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != tok.size() || !std::isfinite(v) || v < 0.0) {
            std::ostringstream os;
            os << "trace parse error at " << path << ":" << lineno << ": '" << line << "'";
            throw DataError(os.str());
        }
        s.timestamps_s.push_back(v);
    }
    std::sort(s.timestamps_s.begin(), s.timestamps_s.end());
    if (target_rate_per_s > 0.0 && !s.timestamps_s.empty()) {
        const double span = s.timestamps_s.back();
        if (span > 0.0) {
            const double current_rate = static_cast<double>(s.timestamps_s.size()) / span;
            const double scale = current_rate / target_rate_per_s;
            for (double& t : s.timestamps_s) t *= scale;
        }
    }
    return s;
}

void save_trace(const ArrivalStream& stream, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace file: " + path);
    char buf[64];
    for (double t : stream.timestamps_s) {
        std::snprintf(buf, sizeof buf, "%.9g\n", t);
        out << buf;
    }
}

ArrivalStream burstiest_segment(const ArrivalStream& stream, double window_s) {
    if (window_s <= 0) throw DataError("burstiest_segment: window must be > 0");
    if (stream.timestamps_s.empty()) return stream;
    const double end = stream.timestamps_s.back();
    if (end <= window_s) return stream;

    const auto n_windows = static_cast<std::size_t>(std::ceil(end / window_s));
    double best_var = -1.0;
    std::size_t best_w = 0;
    for (std::size_t w = 0; w < n_windows; ++w) {
        const double w_start = static_cast<double>(w) * window_s;
        const double w_end = std::min(w_start + window_s, end);
        const auto n_bins =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(w_end - w_start)));
        std::vector<double> counts(n_bins, 0.0);
        for (double t : stream.timestamps_s) {
            if (t < w_start || t >= w_start + window_s) continue;
            auto bin = static_cast<std::size_t>((t - w_start));
            if (bin >= n_bins) bin = n_bins - 1;
            counts[bin] += 1.0;
        }
        double mean = 0.0;
        for (double c : counts) mean += c;
        mean /= static_cast<double>(n_bins);
        double var = 0.0;
        for (double c : counts) var += (c - mean) * (c - mean);
        var /= static_cast<double>(n_bins);
        if (var > best_var + 1e-12) {
            best_var = var;
            best_w = w;
        }
    }

    ArrivalStream out;
    out.source = stream.source;
    const double w_start = static_cast<double>(best_w) * window_s;
    for (double t : stream.timestamps_s) {
        if (t >= w_start && t < w_start + window_s) out.timestamps_s.push_back(t - w_start);
    }
    return out;
}

}  // namespace edgetune
