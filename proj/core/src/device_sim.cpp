#include "edgetune/device_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace edgetune {

namespace {

double power_law(double coeff, double exponent, double freq_mhz) {
    return coeff * std::pow(freq_mhz / 1000.0, exponent);
}

void check_config(const DeviceProfile& p, const HardwareConfig& c) {
    if (!p.config_on_grid(c)) {
        std::ostringstream os;
        os << "configuration not on grid of profile " << p.name << ": cpu=" << c.cpu_freq
           << " gpu_min=" << c.gpu_min_freq << " gpu_max=" << c.gpu_max_freq
           << " mem=" << c.mem_freq << " batch=" << c.batch_size;
        throw InvalidConfigError(os.str());
    }
}

double noise_sigma(const DeviceProfile& p, int batch) {
    const int bmin = p.grid.batch_sizes.front();
    const int bmax = p.grid.batch_sizes.back();
    if (bmax == bmin) return p.noise_sigma_small_batch;
    const double t = static_cast<double>(batch - bmin) / static_cast<double>(bmax - bmin);
    return p.noise_sigma_small_batch + t * (p.noise_sigma_base - p.noise_sigma_small_batch);
}

Measurement from_breakdown(const DeviceProfile& p, const LatencyBreakdown& b, int batch,
                           double noise_factor) {
    Measurement m;
    m.noiseless_latency_ms = b.latency_ms;
    m.latency_ms = b.latency_ms * noise_factor;
    m.energy_per_query_mj = b.mean_power_w * m.latency_ms / batch;  // W*ms = mJ
    return m;
}

}  // namespace

LatencyBreakdown latency_breakdown(const DeviceProfile& p, const HardwareConfig& c) {
    check_config(p, c);
    const auto& w = p.workload;
    const double b = c.batch_size;

    LatencyBreakdown out;
    const double ref_cpu = p.grid.cpu_freqs.back();
    out.preprocess_ms = w.preprocess_ms_base * (ref_cpu / c.cpu_freq);

    // Governor: utilization is the SM-busy share of the serialized
    // compute+traffic time at the maximum clock; stalls count as idle.
    const double issue_at_max_s =
        w.flops_per_query_gflop / (p.compute_throughput_coeff * c.gpu_max_freq);
    const double traffic_s = w.bytes_per_query_gb / (p.mem_bandwidth_coeff * c.mem_freq);
    const double utilization = issue_at_max_s / (issue_at_max_s + traffic_s);
    out.gpu_demand_mhz =
        c.gpu_max_freq * std::min(1.0, utilization / p.governor_utilization_target);
    out.gpu_effective_mhz = std::clamp(out.gpu_demand_mhz, c.gpu_min_freq, c.gpu_max_freq);

    // Roofline at the effective clock.
    out.gpu_issue_ms =
        b * w.flops_per_query_gflop / (p.compute_throughput_coeff * out.gpu_effective_mhz) *
        1000.0;
    out.mem_traffic_ms = b * traffic_s * 1000.0;
    out.compute_ms = std::max(out.gpu_issue_ms, out.mem_traffic_ms);

    // Preprocessing is pipelined with compute; the faster stage amortizes.
    out.latency_ms = std::max(out.preprocess_ms, out.compute_ms) +
                     std::min(out.preprocess_ms, out.compute_ms) / b;

    // Mean power over the batch. CPU and GPU draw only while active; memory
    // power is background draw at its clock.
    const double cpu_frac = out.preprocess_ms / out.latency_ms;
    const double gpu_frac = out.gpu_issue_ms / out.latency_ms;
    out.mean_power_w =
        p.static_power_w +
        power_law(p.cpu_power_coeff, p.cpu_power_exponent, c.cpu_freq) * cpu_frac +
        power_law(p.gpu_power_coeff, p.gpu_power_exponent, out.gpu_effective_mhz) * gpu_frac +
        power_law(p.mem_power_coeff, p.mem_power_exponent, c.mem_freq);
    return out;
}

Measurement measure(const DeviceProfile& p, const HardwareConfig& c, RngStream& rng) {
    const LatencyBreakdown b = latency_breakdown(p, c);
    const double sigma = noise_sigma(p, c.batch_size);
    const double factor = std::exp(sigma * rng.gaussian());
    return from_breakdown(p, b, c.batch_size, factor);
}

Measurement noiseless_measure(const DeviceProfile& p, const HardwareConfig& c) {
    return from_breakdown(p, latency_breakdown(p, c), c.batch_size, 1.0);
}

double interference_inflation_ms(const DeviceProfile& p, const FinetuneSpec& ft) {
    if (ft.flops_per_iter_gflop <= 0.0) return 0.0;
    return p.interference_flops_ms_per_gflop * ft.flops_per_iter_gflop +
           p.interference_ai_ms_per_unit * ft.ai_flop_per_byte;
}

namespace {

Measurement concurrent_impl(const DeviceProfile& p, const HardwareConfig& c,
                            const FinetuneSpec& ft, double noise_factor) {
    const LatencyBreakdown b = latency_breakdown(p, c);
    if (ft.flops_per_iter_gflop <= 0.0)  // nothing co-located
        return from_breakdown(p, b, c.batch_size, noise_factor);
    const double inflated_ms = b.latency_ms + interference_inflation_ms(p, ft);
    // Time-sharing keeps the whole device busy: full GPU and CPU-share draw
    // for the union duration.
    const double power_w =
        p.static_power_w +
        power_law(p.cpu_power_coeff, p.cpu_power_exponent, c.cpu_freq) *
            (b.preprocess_ms / inflated_ms) +
        power_law(p.gpu_power_coeff, p.gpu_power_exponent, b.gpu_effective_mhz) +
        power_law(p.mem_power_coeff, p.mem_power_exponent, c.mem_freq);
    Measurement m;
    m.noiseless_latency_ms = inflated_ms;
    m.latency_ms = inflated_ms * noise_factor;
    m.energy_per_query_mj = power_w * m.latency_ms / c.batch_size;
    return m;
}

}  // namespace

Measurement measure_concurrent(const DeviceProfile& p, const HardwareConfig& c,
                               const FinetuneSpec& ft, RngStream& rng) {
    check_config(p, c);
    const double sigma = noise_sigma(p, c.batch_size);
    const double factor = std::exp(sigma * rng.gaussian());
    return concurrent_impl(p, c, ft, factor);
}

Measurement noiseless_measure_concurrent(const DeviceProfile& p, const HardwareConfig& c,
                                         const FinetuneSpec& ft) {
    check_config(p, c);
    return concurrent_impl(p, c, ft, 1.0);
}

double finetune_solo_power_w(const DeviceProfile& p, const HardwareConfig& c) {
    // Training saturates the GPU at the configured maximum clock.
    return p.static_power_w +
           power_law(p.gpu_power_coeff, p.gpu_power_exponent, c.gpu_max_freq) +
           power_law(p.mem_power_coeff, p.mem_power_exponent, c.mem_freq);
}

double idle_power_w(const DeviceProfile& p, const HardwareConfig& c) {
    return p.static_power_w +
           power_law(p.mem_power_coeff, p.mem_power_exponent, c.mem_freq);
}

std::vector<HardwareConfig> grid_enumerate(const DeviceProfile& p) {
    std::vector<HardwareConfig> out;
    const auto& g = p.grid;
    for (double cpu : g.cpu_freqs) {
        for (double gmax : g.gpu_freqs) {
            std::vector<double> gmins;
            if (p.gpu_min_tuning_enabled) {
                for (double gmin : g.gpu_freqs)
                    if (gmin <= gmax) gmins.push_back(gmin);
            } else {
                gmins.push_back(g.gpu_freqs.front());
            }
            for (double gmin : gmins) {
                for (double mem : g.mem_freqs) {
                    for (int batch : g.batch_sizes) {
                        out.push_back(HardwareConfig{cpu, gmin, gmax, mem, batch});
                    }
                }
            }
        }
    }
    return out;
}

namespace {

GridSearchResult sweep(const DeviceProfile& p, double slo_ms, int replicas,
                       RngStream* rng) {
    const auto configs = grid_enumerate(p);
    struct Avg {
        double latency = 0.0;
        double energy = 0.0;
    };
    std::vector<Avg> means(configs.size());
    std::size_t n_measurements = 0;
    double min_latency = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < configs.size(); ++i) {
        double lat = 0.0, en = 0.0;
        for (int r = 0; r < replicas; ++r) {
            const Measurement m =
                rng ? measure(p, configs[i], *rng) : noiseless_measure(p, configs[i]);
            lat += m.latency_ms;
            en += m.energy_per_query_mj;
            ++n_measurements;
        }
        means[i] = Avg{lat / replicas, en / replicas};
        min_latency = std::min(min_latency, means[i].latency);
    }

    GridSearchResult res;
    res.evaluations = n_measurements;
    res.simulated_wall_time_s = static_cast<double>(n_measurements) * p.eval_cost_s;

    std::size_t best = configs.size();
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (means[i].latency > slo_ms) continue;
        if (best == configs.size() || means[i].energy < means[best].energy) best = i;
        res.pareto.push_back(ParetoPoint{means[i].latency, means[i].energy, configs[i]});
    }
    if (best == configs.size()) {
        std::ostringstream os;
        os << "no configuration meets slo of " << slo_ms
           << " ms; minimum achievable latency is " << min_latency << " ms";
        throw InfeasibleSloError(os.str(), min_latency);
    }

    // Reduce to the non-dominated frontier, sorted by latency.
    std::sort(res.pareto.begin(), res.pareto.end(), [](const auto& a, const auto& b) {
        return a.latency_ms < b.latency_ms ||
               (a.latency_ms == b.latency_ms && a.energy_mj < b.energy_mj);
    });
    std::vector<ParetoPoint> frontier;
    double best_energy = std::numeric_limits<double>::infinity();
    for (const auto& pt : res.pareto) {
        if (pt.energy_mj < best_energy) {
            frontier.push_back(pt);
            best_energy = pt.energy_mj;
        }
    }
    res.pareto = std::move(frontier);
    res.best_config = configs[best];
    res.best_energy_mj = means[best].energy;
    res.best_latency_ms = means[best].latency;
    return res;
}

}  // namespace

GridSearchResult grid_search_oracle(const DeviceProfile& p, double slo_ms, int replicas,
                                    RngStream& rng) {
    if (replicas < 1) throw DataError("grid_search_oracle: replicas must be >= 1");
    return sweep(p, slo_ms, replicas, &rng);
}

GridSearchResult noiseless_grid_optimum(const DeviceProfile& p, double slo_ms) {
    return sweep(p, slo_ms, 1, nullptr);
}

}  // namespace edgetune
