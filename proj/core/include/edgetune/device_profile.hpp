#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace edgetune {

// Domain errors. The CLI maps these onto process exit codes.
class InvalidConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InfeasibleSloError : public std::runtime_error {
  public:
    InfeasibleSloError(const std::string& msg, double min_latency_ms)
        : std::runtime_error(msg), min_latency_ms(min_latency_ms) {}
    double min_latency_ms;
};

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Discrete knob values a device exposes. Lists are strictly increasing.
struct FrequencyGrid {
    std::vector<double> cpu_freqs;   // MHz
    std::vector<double> gpu_freqs;   // MHz, shared candidate set for min and max
    std::vector<double> mem_freqs;   // MHz
    std::vector<int> batch_sizes;

    void validate() const;
};

// One point in the tuning space.
struct HardwareConfig {
    double cpu_freq = 0.0;
    double gpu_min_freq = 0.0;
    double gpu_max_freq = 0.0;
    double mem_freq = 0.0;
    int batch_size = 0;

    bool operator==(const HardwareConfig&) const = default;
};

struct ModelWorkloadSpec {
    std::string name;
    double flops_per_query_gflop = 0.0;  // at batch 1
    double bytes_per_query_gb = 0.0;     // at batch 1
    double preprocess_ms_base = 0.0;     // CPU preprocessing at reference (max) CPU freq
    double params_millions = 0.0;        // documentation only

    void validate() const;
};

// One fine-tuning job: runs n_iterations, one iteration at a time.
struct FinetuneSpec {
    int batch_size = 0;
    int n_iterations = 0;
    int output_dim = 0;
    double flops_per_iter_gflop = 0.0;
    double ai_flop_per_byte = 0.0;
    double iter_duration_ms_standalone = 0.0;

    void validate() const;
};

// A synthetic device + model workload; the simulator's ground truth.
struct DeviceProfile {
    std::string name;
    FrequencyGrid grid;
    ModelWorkloadSpec workload;

    double compute_throughput_coeff = 0.0;  // GFLOP/s per MHz of effective GPU freq
    double mem_bandwidth_coeff = 0.0;       // GB/s per MHz of memory freq

    double static_power_w = 0.0;
    double gpu_power_coeff = 0.0;  // dynamic GPU power = coeff * (f/1000)^exponent W
    double gpu_power_exponent = 1.0;
    double mem_power_coeff = 0.0;
    double mem_power_exponent = 1.0;
    double cpu_power_coeff = 0.0;  // applies during preprocessing only
    double cpu_power_exponent = 1.0;

    double governor_utilization_target = 1.0;  // in (0, 1]
    double noise_sigma_base = 0.0;             // relative latency noise at max batch
    double noise_sigma_small_batch = 0.0;      // relative latency noise at batch 1
    double eval_cost_s = 0.0;                  // simulated wall-clock seconds per measurement
    std::uint64_t rng_seed = 0;

    bool gpu_min_tuning_enabled = false;

    // Hidden ground-truth interference law: co-located inference latency gains
    // interference_flops_ms_per_gflop * FLOPs_ft + interference_ai_ms_per_unit * AI_ft.
    double interference_flops_ms_per_gflop = 0.0;
    double interference_ai_ms_per_unit = 0.0;

    // A named fine-tune job shipped with the profile, plus its added latency
    // under the hidden law (listed so it can be checked by re-evaluation).
    FinetuneSpec default_finetune;
    double default_finetune_inflation_ms = 0.0;

    void validate() const;
    bool config_on_grid(const HardwareConfig& config) const;

    // All knobs at their grid maximum, gpu_min included, batch 1.
    HardwareConfig default_max_config() const;
};

// Built-in profiles. Names: "synthetic-tx2", "synthetic-orin".
DeviceProfile builtin_profile(const std::string& name);
std::vector<std::string> builtin_profile_names();

// Named model workloads: "b0", "b4", "b7" (EfficientNet-like scaling).
ModelWorkloadSpec workload_preset(const std::string& name);

// Same device, different model.
DeviceProfile with_workload(DeviceProfile profile, ModelWorkloadSpec workload);

// Builds a fine-tune job for the profile's workload. FLOPs scale with the
// fine-tune batch and the classifier head fraction (output_dim); bytes split
// into a per-sample activation part and a once-per-iteration weight part, so
// arithmetic intensity genuinely varies with batch size.
FinetuneSpec derive_finetune_spec(const DeviceProfile& profile, int ft_batch,
                                  int n_iterations, int output_dim);

// JSON (de)serialization of every DeviceProfile field.
DeviceProfile load_profile(const std::string& path);
void save_profile(const DeviceProfile& profile, const std::string& path);

// Resolves a --profile argument: a path to a JSON file, a builtin name, or a
// name looked up under dir (defaults to $EDGETUNE_PROFILE_DIR).
DeviceProfile resolve_profile(const std::string& name_or_path);

}  // namespace edgetune
