#pragma once

#include <optional>
#include <vector>

#include "edgetune/device_profile.hpp"
#include "edgetune/rng.hpp"

namespace edgetune {

// One simulated measurement. Latency covers the whole batch end-to-end
// (preprocess pipelined with compute); energy is per query.
struct Measurement {
    double latency_ms = 0.0;
    double energy_per_query_mj = 0.0;
    double noiseless_latency_ms = 0.0;  // exposed for testing only
};

// Internals of the latency/power law for one (profile, config) point.
// Exposed so the tuner's CPU phase and the tests can reason about the
// noiseless model without re-deriving it.
struct LatencyBreakdown {
    double preprocess_ms = 0.0;     // CPU stage for the batch
    double gpu_issue_ms = 0.0;      // SM-active time for the batch
    double mem_traffic_ms = 0.0;    // DRAM-bound time for the batch
    double compute_ms = 0.0;        // max(gpu_issue, mem_traffic)
    double latency_ms = 0.0;        // pipelined batch latency, noiseless
    double gpu_effective_mhz = 0.0; // governor outcome
    double gpu_demand_mhz = 0.0;    // governor request before the min/max clamp
    double mean_power_w = 0.0;      // average draw over the batch
};

LatencyBreakdown latency_breakdown(const DeviceProfile& profile,
                                   const HardwareConfig& config);

// Noisy measurement; deterministic given (profile, config, stream position).
Measurement measure(const DeviceProfile& profile, const HardwareConfig& config,
                    RngStream& rng);

// Same law with the noise term removed; needs no stream.
Measurement noiseless_measure(const DeviceProfile& profile, const HardwareConfig& config);

// Measurement with a fine-tune iteration time-sharing the device. Inference
// latency gains the profile's hidden linear interference term; power is the
// full-device draw for the combined duration.
Measurement measure_concurrent(const DeviceProfile& profile, const HardwareConfig& config,
                               const FinetuneSpec& ft, RngStream& rng);

Measurement noiseless_measure_concurrent(const DeviceProfile& profile,
                                         const HardwareConfig& config,
                                         const FinetuneSpec& ft);

// The hidden ground-truth latency added by co-locating one fine-tune
// iteration (what perf_model must recover from data).
double interference_inflation_ms(const DeviceProfile& profile, const FinetuneSpec& ft);

// Average power while a fine-tune iteration runs with no inference on device.
double finetune_solo_power_w(const DeviceProfile& profile, const HardwareConfig& config);

// Device draw when nothing runs: static plus the memory-frequency floor.
double idle_power_w(const DeviceProfile& profile, const HardwareConfig& config);

// Full Cartesian product of the grid. gpu_min sweeps the gpu list only when
// the profile enables min-frequency tuning (restricted to gpu_min <= gpu_max);
// otherwise it is pinned to the grid minimum.
std::vector<HardwareConfig> grid_enumerate(const DeviceProfile& profile);

struct ParetoPoint {
    double latency_ms = 0.0;
    double energy_mj = 0.0;
    HardwareConfig config;
};

struct GridSearchResult {
    HardwareConfig best_config;
    double best_energy_mj = 0.0;
    double best_latency_ms = 0.0;
    std::vector<ParetoPoint> pareto;  // sorted by latency ascending
    std::size_t evaluations = 0;
    double simulated_wall_time_s = 0.0;
};

// Exhaustive sweep: measures every config `replicas` times, averages, drops
// configs whose mean latency exceeds the SLO, returns the energy argmin and
// the latency/energy Pareto frontier of the feasible set.
// Throws InfeasibleSloError (carrying the minimum achievable latency) when
// nothing fits.
GridSearchResult grid_search_oracle(const DeviceProfile& profile, double slo_ms,
                                    int replicas, RngStream& rng);

// Same sweep on the noiseless law; the reference for near-optimality checks.
GridSearchResult noiseless_grid_optimum(const DeviceProfile& profile, double slo_ms);

}  // namespace edgetune
