#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "edgetune/device_sim.hpp"
#include "test_support.hpp"

using namespace edgetune;
namespace et = edgetune::testing;

namespace {

// Independent re-derivation of the noiseless latency/power law, kept apart
// from the library implementation on purpose.
struct RefModel {
    double preprocess_ms, gpu_issue_ms, mem_traffic_ms, latency_ms, power_w, f_eff;
};

RefModel reference_model(const DeviceProfile& p, const HardwareConfig& c) {
    RefModel r{};
    const auto& w = p.workload;
    r.preprocess_ms = w.preprocess_ms_base * (p.grid.cpu_freqs.back() / c.cpu_freq);
    const double issue_max_s =
        w.flops_per_query_gflop / (p.compute_throughput_coeff * c.gpu_max_freq);
    const double traffic_s = w.bytes_per_query_gb / (p.mem_bandwidth_coeff * c.mem_freq);
    const double util = issue_max_s / (issue_max_s + traffic_s);
    const double demand =
        c.gpu_max_freq * std::min(1.0, util / p.governor_utilization_target);
    r.f_eff = std::clamp(demand, c.gpu_min_freq, c.gpu_max_freq);
    r.gpu_issue_ms =
        c.batch_size * w.flops_per_query_gflop / (p.compute_throughput_coeff * r.f_eff) * 1e3;
    r.mem_traffic_ms = c.batch_size * traffic_s * 1e3;
    const double compute = std::max(r.gpu_issue_ms, r.mem_traffic_ms);
    r.latency_ms = std::max(r.preprocess_ms, compute) +
                   std::min(r.preprocess_ms, compute) / c.batch_size;
    auto pw = [](double coeff, double e, double f) { return coeff * std::pow(f / 1000.0, e); };
    r.power_w = p.static_power_w +
                pw(p.cpu_power_coeff, p.cpu_power_exponent, c.cpu_freq) *
                    (r.preprocess_ms / r.latency_ms) +
                pw(p.gpu_power_coeff, p.gpu_power_exponent, r.f_eff) *
                    (r.gpu_issue_ms / r.latency_ms) +
                pw(p.mem_power_coeff, p.mem_power_exponent, c.mem_freq);
    return r;
}

}  // namespace

TEST_CASE("noiseless measurement matches the closed form exactly") {
    for (const char* name : {"synthetic-tx2", "synthetic-orin"}) {
        const DeviceProfile p = with_workload(builtin_profile(name), workload_preset("b0"));
        const HardwareConfig c = p.default_max_config();  // mem max, gpu max, batch 1
        const Measurement m = noiseless_measure(p, c);
        const RefModel r = reference_model(p, c);
        CHECK(m.latency_ms == doctest::Approx(r.latency_ms).epsilon(1e-12));
        CHECK(m.noiseless_latency_ms == m.latency_ms);
        CHECK(m.energy_per_query_mj ==
              doctest::Approx(r.power_w * r.latency_ms / c.batch_size).epsilon(1e-12));
    }
}

TEST_CASE("measurement is deterministic at a given stream position") {
    const DeviceProfile p = et::tiny_profile(true);
    const HardwareConfig c = p.default_max_config();
    RngStream a(17), b(17);
    const Measurement ma = measure(p, c, a);
    const Measurement mb = measure(p, c, b);
    CHECK(ma.latency_ms == mb.latency_ms);
    CHECK(ma.energy_per_query_mj == mb.energy_per_query_mj);
}

TEST_CASE("log-normal noise tail guard") {
    const DeviceProfile p = et::tiny_profile(true);
    const HardwareConfig c = p.default_max_config();
    RngStream rng(23);
    const double noiseless = noiseless_measure(p, c).latency_ms;
    const double sigma = p.noise_sigma_small_batch;  // batch 1
    int below = 0;
    for (int i = 0; i < 5000; ++i) {
        const Measurement m = measure(p, c, rng);
        CHECK(m.latency_ms > 0.0);
        CHECK(m.energy_per_query_mj > 0.0);
        if (m.latency_ms < noiseless * std::exp(-4.0 * sigma)) ++below;
    }
    CHECK(below <= 2);  // P(Z < -4) ~ 3e-5
}

TEST_CASE("invalid configuration is rejected") {
    const DeviceProfile p = et::tiny_profile();
    HardwareConfig c = p.default_max_config();
    c.mem_freq = 123.0;
    RngStream rng(1);
    CHECK_THROWS_AS(measure(p, c, rng), InvalidConfigError);
    c = p.default_max_config();
    c.gpu_min_freq = p.grid.gpu_freqs.back();
    c.gpu_max_freq = p.grid.gpu_freqs.front();
    CHECK_THROWS_AS(measure(p, c, rng), InvalidConfigError);
}

TEST_CASE("noiseless latency is non-increasing in gpu_max and mem") {
    const DeviceProfile p = with_workload(builtin_profile("synthetic-orin"),
                                          workload_preset("b0"));
    for (int batch : {1, 8}) {
        HardwareConfig c = p.default_max_config();
        c.batch_size = batch;
        c.gpu_min_freq = p.grid.gpu_freqs.front();
        double prev = std::numeric_limits<double>::infinity();
        for (double g : p.grid.gpu_freqs) {
            c.gpu_max_freq = g;
            const double lat = noiseless_measure(p, c).latency_ms;
            CHECK(lat <= prev + 1e-9);
            prev = lat;
        }
        c = p.default_max_config();
        c.batch_size = batch;
        prev = std::numeric_limits<double>::infinity();
        for (double m : p.grid.mem_freqs) {
            c.mem_freq = m;
            const double lat = noiseless_measure(p, c).latency_ms;
            CHECK(lat <= prev + 1e-9);
            prev = lat;
        }
    }
}

TEST_CASE("cpu frequency only affects preprocessing") {
    DeviceProfile p = et::tiny_profile(true);
    p.workload.preprocess_ms_base = 0.0;
    for (int batch : p.grid.batch_sizes) {
        HardwareConfig c = p.default_max_config();
        c.batch_size = batch;
        Measurement first{};
        bool have = false;
        for (double cpu : p.grid.cpu_freqs) {
            c.cpu_freq = cpu;
            RngStream rng(99);  // same position for every cpu value
            const Measurement m = measure(p, c, rng);
            if (!have) {
                first = m;
                have = true;
            } else {
                CHECK(m.latency_ms == first.latency_ms);
                CHECK(m.energy_per_query_mj == first.energy_per_query_mj);
            }
        }
    }
}

TEST_CASE("energy-optimal memory frequency is interior for the b0 workload") {
    for (const char* name : {"synthetic-tx2", "synthetic-orin"}) {
        const DeviceProfile p = with_workload(builtin_profile(name), workload_preset("b0"));
        HardwareConfig c = p.default_max_config();
        double best_e = std::numeric_limits<double>::infinity();
        double best_m = 0.0;
        for (double m : p.grid.mem_freqs) {
            c.mem_freq = m;
            const double e = noiseless_measure(p, c).energy_per_query_mj;
            if (e < best_e) {
                best_e = e;
                best_m = m;
            }
        }
        CHECK(best_m > p.grid.mem_freqs.front());
        CHECK(best_m < p.grid.mem_freqs.back());
    }
}

TEST_CASE("raising gpu_min lowers energy until demand is met, then is flat") {
    // Expected shape derived by exhaustive sweep of the noiseless law over
    // the 13 gpu grid values, with the knee positions recomputed here from
    // the governor formula.
    const DeviceProfile p = with_workload(builtin_profile("synthetic-orin"),
                                          workload_preset("b0"));
    HardwareConfig c = p.default_max_config();
    c.gpu_min_freq = p.grid.gpu_freqs.front();
    const RefModel base = reference_model(p, c);
    const double f_demand = base.f_eff;  // min pinned at grid bottom -> demand wins
    // Crossover where the roofline flips to memory-bound:
    const double f_cross = p.workload.flops_per_query_gflop /
                           (p.compute_throughput_coeff *
                            (p.workload.bytes_per_query_gb /
                             (p.mem_bandwidth_coeff * c.mem_freq)));
    std::vector<double> energy;
    for (double g : p.grid.gpu_freqs) {
        c.gpu_min_freq = g;
        energy.push_back(noiseless_measure(p, c).energy_per_query_mj);
    }
    for (std::size_t i = 1; i < energy.size(); ++i) {
        const double g = p.grid.gpu_freqs[i];
        const double g_prev = p.grid.gpu_freqs[i - 1];
        if (g <= f_demand) {
            CHECK(energy[i] == doctest::Approx(energy[i - 1]).epsilon(1e-12));
        } else if (g_prev >= f_cross) {
            CHECK(energy[i] == doctest::Approx(energy[i - 1]).epsilon(1e-12));
        } else {
            CHECK(energy[i] < energy[i - 1] - 1e-9);
        }
    }
    CHECK(energy.back() < energy.front());  // the Table-4 direction
}

TEST_CASE("grid enumeration cardinalities") {
    CHECK(grid_enumerate(builtin_profile("synthetic-tx2")).size() == 5005);
    CHECK(grid_enumerate(builtin_profile("synthetic-orin")).size() == 1820);

    DeviceProfile one = et::tiny_profile();
    one.grid.cpu_freqs = {1000.0};
    one.grid.gpu_freqs = {600.0};
    one.grid.mem_freqs = {1600.0};
    one.grid.batch_sizes = {1};
    CHECK(grid_enumerate(one).size() == 1);
}

TEST_CASE("gpu_min tuning expands the enumeration to min<=max pairs") {
    DeviceProfile p = et::tiny_profile();
    p.gpu_min_tuning_enabled = true;
    // 3 gpu values -> 6 ordered (min,max) pairs; 2 cpu * 2 mem * 2 batch = 8
    CHECK(grid_enumerate(p).size() == 6 * 8);
    for (const auto& c : grid_enumerate(p)) CHECK(c.gpu_min_freq <= c.gpu_max_freq);
}

TEST_CASE("grid search oracle on the tiny profile") {
    const DeviceProfile p = et::tiny_profile(true);
    RngStream rng(5);
    const auto res =
        grid_search_oracle(p, std::numeric_limits<double>::infinity(), 3, rng);
    CHECK(res.evaluations == grid_enumerate(p).size() * 3);
    CHECK(res.simulated_wall_time_s ==
          doctest::Approx(static_cast<double>(res.evaluations) * p.eval_cost_s));
    CHECK(!res.pareto.empty());
    // frontier sorted by latency with strictly decreasing energy
    for (std::size_t i = 1; i < res.pareto.size(); ++i) {
        CHECK(res.pareto[i].latency_ms > res.pareto[i - 1].latency_ms);
        CHECK(res.pareto[i].energy_mj < res.pareto[i - 1].energy_mj);
    }
}

TEST_CASE("infeasible SLO carries the minimum achievable latency") {
    const DeviceProfile p = et::tiny_profile();
    RngStream rng(5);
    try {
        grid_search_oracle(p, 1e-6, 1, rng);
        FAIL("expected InfeasibleSloError");
    } catch (const InfeasibleSloError& e) {
        CHECK(e.min_latency_ms > 0.0);
        const auto noiseless = noiseless_grid_optimum(p, std::numeric_limits<double>::infinity());
        double min_lat = std::numeric_limits<double>::infinity();
        for (const auto& c : grid_enumerate(p))
            min_lat = std::min(min_lat, noiseless_measure(p, c).latency_ms);
        CHECK(e.min_latency_ms == doctest::Approx(min_lat));
        (void)noiseless;
    }
}

TEST_CASE("simulated tuning wall time matches the headline figures") {
    const DeviceProfile tx2 = builtin_profile("synthetic-tx2");
    const double hours = 5005.0 * tx2.eval_cost_s / 3600.0;
    CHECK(hours == doctest::Approx(13.9).epsilon(0.01));
    const DeviceProfile orin = builtin_profile("synthetic-orin");
    CHECK(1820.0 * orin.eval_cost_s / 3600.0 == doctest::Approx(5.06).epsilon(0.01));
}

TEST_CASE("concurrent measurement with zero fine-tune flops equals plain measure") {
    const DeviceProfile p = et::tiny_profile(true);
    const HardwareConfig c = p.default_max_config();
    FinetuneSpec none{};
    RngStream a(31), b(31);
    const Measurement plain = measure(p, c, a);
    const Measurement conc = measure_concurrent(p, c, none, b);
    CHECK(plain.latency_ms == conc.latency_ms);
    CHECK(plain.energy_per_query_mj == conc.energy_per_query_mj);
}

TEST_CASE("interference is linear in fine-tune flops") {
    const DeviceProfile p = et::tiny_profile();
    const HardwareConfig c = p.default_max_config();
    FinetuneSpec ft = p.default_finetune;
    ft.ai_flop_per_byte = 1e-12;  // isolate the flops term
    const double base = noiseless_measure(p, c).latency_ms;
    const double add1 = noiseless_measure_concurrent(p, c, ft).latency_ms - base;
    ft.flops_per_iter_gflop *= 2.0;
    const double add2 = noiseless_measure_concurrent(p, c, ft).latency_ms - base;
    CHECK(add2 == doctest::Approx(2.0 * add1).epsilon(1e-9));
}

TEST_CASE("profile inflation figure matches re-evaluation of the hidden law") {
    for (const char* name : {"synthetic-tx2", "synthetic-orin"}) {
        const DeviceProfile p = builtin_profile(name);
        const double expected =
            p.interference_flops_ms_per_gflop * p.default_finetune.flops_per_iter_gflop +
            p.interference_ai_ms_per_unit * p.default_finetune.ai_flop_per_byte;
        CHECK(p.default_finetune_inflation_ms == doctest::Approx(expected).epsilon(1e-12));
        CHECK(interference_inflation_ms(p, p.default_finetune) ==
              doctest::Approx(expected).epsilon(1e-12));
        const HardwareConfig c = p.default_max_config();
        const double measured = noiseless_measure_concurrent(p, c, p.default_finetune).latency_ms -
                                noiseless_measure(p, c).latency_ms;
        CHECK(measured == doctest::Approx(expected).epsilon(1e-9));
    }
}
