#pragma once

#include <string>

#include "edgetune/device_profile.hpp"

namespace edgetune::testing {

// A small, fast device for algorithm-level tests: 3 gpu x 2 mem x 2 cpu x 2
// batch = 24 enumerable configs (gpu_min pinned -> 12 per cpu).
inline DeviceProfile tiny_profile(bool noisy = false) {
    DeviceProfile p;
    p.name = "tiny";
    p.grid.cpu_freqs = {500.0, 1000.0};
    p.grid.gpu_freqs = {200.0, 600.0, 1000.0};
    p.grid.mem_freqs = {400.0, 1600.0};
    p.grid.batch_sizes = {1, 4};
    p.workload = ModelWorkloadSpec{"tiny-model", 0.5, 0.1, 0.5, 2.0};
    p.compute_throughput_coeff = 0.3;
    p.mem_bandwidth_coeff = 0.03;
    p.static_power_w = 3.0;
    p.gpu_power_coeff = 8.0;
    p.gpu_power_exponent = 1.0;
    p.mem_power_coeff = 1.0;
    p.mem_power_exponent = 1.8;
    p.cpu_power_coeff = 2.0;
    p.cpu_power_exponent = 1.5;
    p.governor_utilization_target = 0.7;
    p.noise_sigma_base = noisy ? 0.03 : 0.0;
    p.noise_sigma_small_batch = noisy ? 0.08 : 0.0;
    p.eval_cost_s = 10.0;
    p.rng_seed = 7;
    p.gpu_min_tuning_enabled = false;
    p.interference_flops_ms_per_gflop = 1.0;
    p.interference_ai_ms_per_unit = 2.0;
    p.default_finetune = derive_finetune_spec(p, 4, 3, 100);
    p.default_finetune_inflation_ms =
        p.interference_flops_ms_per_gflop * p.default_finetune.flops_per_iter_gflop +
        p.interference_ai_ms_per_unit * p.default_finetune.ai_flop_per_byte;
    p.validate();
    return p;
}

inline std::string source_dir() { return EDGETUNE_SOURCE_DIR; }

}  // namespace edgetune::testing
