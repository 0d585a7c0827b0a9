#include "edgetune/device_profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace edgetune {

namespace {

using nlohmann::json;

void require(bool cond, const std::string& msg) {
    if (!cond) throw DataError(msg);
}

template <typename T>
bool strictly_increasing(const std::vector<T>& v) {
    return std::is_sorted(v.begin(), v.end()) &&
           std::adjacent_find(v.begin(), v.end()) == v.end();
}

bool contains(const std::vector<double>& v, double x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

void FrequencyGrid::validate() const {
    require(!cpu_freqs.empty() && !gpu_freqs.empty() && !mem_freqs.empty() &&
                !batch_sizes.empty(),
            "frequency grid: every knob list must be non-empty");
    require(strictly_increasing(cpu_freqs), "cpu_freqs must be strictly increasing");
    require(strictly_increasing(gpu_freqs), "gpu_freqs must be strictly increasing");
    require(strictly_increasing(mem_freqs), "mem_freqs must be strictly increasing");
    require(strictly_increasing(batch_sizes), "batch_sizes must be strictly increasing");
    require(batch_sizes.front() >= 1, "batch sizes must be positive");
}

void ModelWorkloadSpec::validate() const {
    require(flops_per_query_gflop > 0, "workload: flops_per_query must be > 0");
    require(bytes_per_query_gb > 0, "workload: bytes_per_query must be > 0");
    require(preprocess_ms_base >= 0, "workload: preprocess_ms_base must be >= 0");
    require(params_millions > 0, "workload: params_millions must be > 0");
}

void FinetuneSpec::validate() const {
    require(batch_size >= 1 && n_iterations >= 1 && output_dim >= 1,
            "finetune spec: integer fields must be >= 1");
    require(flops_per_iter_gflop > 0 && ai_flop_per_byte > 0 &&
                iter_duration_ms_standalone > 0,
            "finetune spec: real fields must be > 0");
}

void DeviceProfile::validate() const {
    grid.validate();
    workload.validate();
    require(compute_throughput_coeff > 0 && mem_bandwidth_coeff > 0,
            "profile: throughput coefficients must be > 0");
    require(static_power_w > 0 && gpu_power_coeff > 0 && mem_power_coeff > 0 &&
                cpu_power_coeff > 0,
            "profile: power coefficients must be > 0");
    auto exp_ok = [](double e) { return e >= 1.0 && e <= 3.0; };
    require(exp_ok(gpu_power_exponent) && exp_ok(mem_power_exponent) &&
                exp_ok(cpu_power_exponent),
            "profile: power exponents must lie in [1, 3]");
    require(governor_utilization_target > 0 && governor_utilization_target <= 1.0,
            "profile: governor_utilization_target must be in (0, 1]");
    auto sigma_ok = [](double s) { return s >= 0.0 && s < 0.5; };
    require(sigma_ok(noise_sigma_base) && sigma_ok(noise_sigma_small_batch),
            "profile: noise sigmas must lie in [0, 0.5)");
    require(eval_cost_s > 0, "profile: eval_cost_s must be > 0");
    require(interference_flops_ms_per_gflop > 0 && interference_ai_ms_per_unit > 0,
            "profile: interference coefficients must be > 0");
    default_finetune.validate();
}

bool DeviceProfile::config_on_grid(const HardwareConfig& c) const {
    return contains(grid.cpu_freqs, c.cpu_freq) &&
           contains(grid.gpu_freqs, c.gpu_min_freq) &&
           contains(grid.gpu_freqs, c.gpu_max_freq) &&
           contains(grid.mem_freqs, c.mem_freq) &&
           std::find(grid.batch_sizes.begin(), grid.batch_sizes.end(), c.batch_size) !=
               grid.batch_sizes.end() &&
           c.gpu_min_freq <= c.gpu_max_freq;
}

HardwareConfig DeviceProfile::default_max_config() const {
    return HardwareConfig{grid.cpu_freqs.back(), grid.gpu_freqs.back(),
                          grid.gpu_freqs.back(), grid.mem_freqs.back(), 1};
}

namespace {

// Real Jetson knob tables; endpoints per the hardware datasheets.
const std::vector<double> kJetsonGpuFreqs = {
    114.75, 216.75, 318.75, 420.75, 522.75,  624.75,  726.75,
    828.75, 930.75, 1032.75, 1134.75, 1236.75, 1300.5};

const std::vector<double> kTx2MemFreqs = {40.8,  68.0,   102.0,  204.0,  408.0, 665.6,
                                          800.0, 1062.4, 1331.2, 1600.0, 1866.0};

const std::vector<double> kTx2CpuFreqs = {345.6,  652.8,  960.0, 1267.2,
                                          1574.4, 1881.6, 2035.2};

const std::vector<double> kOrinMemFreqs = {204.0,  665.6,  1062.4, 1331.2,
                                           2133.0, 2666.0, 3199.0};

const std::vector<double> kOrinCpuFreqs = {729.6, 1036.8, 1497.6, 2201.6};

const std::vector<int> kBatchSizes = {1, 2, 4, 8, 16};

ModelWorkloadSpec workload_b0() {
    return ModelWorkloadSpec{"efficientnet-b0-like", 0.78, 0.28, 0.8, 5.3};
}

ModelWorkloadSpec workload_b4() {
    return ModelWorkloadSpec{"efficientnet-b4-like", 8.4, 1.1, 0.8, 19.0};
}

ModelWorkloadSpec workload_b7() {
    return ModelWorkloadSpec{"efficientnet-b7-like", 7.0, 0.9, 0.9, 66.0};
}

DeviceProfile make_synthetic_tx2();
DeviceProfile make_synthetic_orin();

json grid_to_json(const FrequencyGrid& g) {
    return json{{"cpu_freqs", g.cpu_freqs},
                {"gpu_freqs", g.gpu_freqs},
                {"mem_freqs", g.mem_freqs},
                {"batch_sizes", g.batch_sizes}};
}

FrequencyGrid grid_from_json(const json& j) {
    FrequencyGrid g;
    g.cpu_freqs = j.at("cpu_freqs").get<std::vector<double>>();
    g.gpu_freqs = j.at("gpu_freqs").get<std::vector<double>>();
    g.mem_freqs = j.at("mem_freqs").get<std::vector<double>>();
    g.batch_sizes = j.at("batch_sizes").get<std::vector<int>>();
    return g;
}

json workload_to_json(const ModelWorkloadSpec& w) {
    return json{{"name", w.name},
                {"flops_per_query_gflop", w.flops_per_query_gflop},
                {"bytes_per_query_gb", w.bytes_per_query_gb},
                {"preprocess_ms_base", w.preprocess_ms_base},
                {"params_millions", w.params_millions}};
}

ModelWorkloadSpec workload_from_json(const json& j) {
    ModelWorkloadSpec w;
    w.name = j.at("name").get<std::string>();
    w.flops_per_query_gflop = j.at("flops_per_query_gflop").get<double>();
    w.bytes_per_query_gb = j.at("bytes_per_query_gb").get<double>();
    w.preprocess_ms_base = j.at("preprocess_ms_base").get<double>();
    w.params_millions = j.at("params_millions").get<double>();
    return w;
}

json finetune_to_json(const FinetuneSpec& f) {
    return json{{"batch_size", f.batch_size},
                {"n_iterations", f.n_iterations},
                {"output_dim", f.output_dim},
                {"flops_per_iter_gflop", f.flops_per_iter_gflop},
                {"ai_flop_per_byte", f.ai_flop_per_byte},
                {"iter_duration_ms_standalone", f.iter_duration_ms_standalone}};
}

FinetuneSpec finetune_from_json(const json& j) {
    FinetuneSpec f;
    f.batch_size = j.at("batch_size").get<int>();
    f.n_iterations = j.at("n_iterations").get<int>();
    f.output_dim = j.at("output_dim").get<int>();
    f.flops_per_iter_gflop = j.at("flops_per_iter_gflop").get<double>();
    f.ai_flop_per_byte = j.at("ai_flop_per_byte").get<double>();
    f.iter_duration_ms_standalone = j.at("iter_duration_ms_standalone").get<double>();
    return f;
}

ModelWorkloadSpec workload_preset_impl(const std::string& name) {
    if (name == "b0") return workload_b0();
    if (name == "b4") return workload_b4();
    if (name == "b7") return workload_b7();
    throw DataError("unknown workload preset: " + name);
}

// Fraction of the network's layers touched when fine-tuning (top layers only).
constexpr double kFinetuneSliceFraction = 0.25;

namespace impl {

DeviceProfile finish(DeviceProfile p, int ft_batch, int ft_iters, int ft_output_dim) {
    p.default_finetune = derive_finetune_spec(p, ft_batch, ft_iters, ft_output_dim);
    p.default_finetune_inflation_ms =
        p.interference_flops_ms_per_gflop * p.default_finetune.flops_per_iter_gflop +
        p.interference_ai_ms_per_unit * p.default_finetune.ai_flop_per_byte;
    p.validate();
    return p;
}

}  // namespace impl

DeviceProfile make_synthetic_tx2() {
    DeviceProfile p;
    p.name = "synthetic-tx2";
    p.grid = FrequencyGrid{kTx2CpuFreqs, kJetsonGpuFreqs, kTx2MemFreqs, kBatchSizes};
    p.workload = workload_b4();
    p.compute_throughput_coeff = 0.13;
    p.mem_bandwidth_coeff = 0.024;
    p.static_power_w = 2.5;
    p.gpu_power_coeff = 6.0;
    p.gpu_power_exponent = 1.0;
    p.mem_power_coeff = 1.7;
    p.mem_power_exponent = 2.2;
    p.cpu_power_coeff = 1.8;
    p.cpu_power_exponent = 1.6;
    p.governor_utilization_target = 0.62;
    p.noise_sigma_base = 0.03;
    p.noise_sigma_small_batch = 0.08;
    p.eval_cost_s = 10.0;
    p.rng_seed = 2024;
    p.gpu_min_tuning_enabled = false;
    p.interference_flops_ms_per_gflop = 6.0;
    p.interference_ai_ms_per_unit = 7.0;
    return impl::finish(std::move(p), 8, 10, 100);
}

DeviceProfile make_synthetic_orin() {
    DeviceProfile p;
    p.name = "synthetic-orin";
    p.grid = FrequencyGrid{kOrinCpuFreqs, kJetsonGpuFreqs, kOrinMemFreqs, kBatchSizes};
    p.workload = workload_b7();
    p.compute_throughput_coeff = 0.4;
    p.mem_bandwidth_coeff = 0.04;
    p.static_power_w = 6.0;
    p.gpu_power_coeff = 12.0;
    p.gpu_power_exponent = 1.0;
    p.mem_power_coeff = 1.0;
    p.mem_power_exponent = 1.6;
    p.cpu_power_coeff = 3.0;
    p.cpu_power_exponent = 1.6;
    p.governor_utilization_target = 0.70;
    p.noise_sigma_base = 0.03;
    p.noise_sigma_small_batch = 0.08;
    p.eval_cost_s = 10.0;
    p.rng_seed = 2024;
    p.gpu_min_tuning_enabled = false;
    p.interference_flops_ms_per_gflop = 0.99;
    p.interference_ai_ms_per_unit = 3.5;
    return impl::finish(std::move(p), 64, 10, 1000);
}

}  // namespace

ModelWorkloadSpec workload_preset(const std::string& name) {
    return workload_preset_impl(name);
}

DeviceProfile with_workload(DeviceProfile profile, ModelWorkloadSpec workload) {
    workload.validate();
    profile.workload = std::move(workload);
    return profile;
}

FinetuneSpec derive_finetune_spec(const DeviceProfile& p, int ft_batch,
                                  int n_iterations, int output_dim) {
    require(ft_batch >= 1 && n_iterations >= 1 && output_dim >= 1,
            "finetune derivation: arguments must be >= 1");
    const auto& w = p.workload;
    const double fwd_bwd_passes = 3.0;  // forward + backward + weight update
    const double head_scale = 0.9 + 0.1 * static_cast<double>(output_dim) / 1000.0;
    const double flops = fwd_bwd_passes * w.flops_per_query_gflop * ft_batch *
                         kFinetuneSliceFraction * head_scale;
    const double act_bytes =
        fwd_bwd_passes * w.bytes_per_query_gb * ft_batch * kFinetuneSliceFraction;
    const double weight_bytes =
        fwd_bwd_passes * w.params_millions * 0.002 * kFinetuneSliceFraction;
    const double bytes = act_bytes + weight_bytes;

    const double gpu_s = flops / (p.compute_throughput_coeff * p.grid.gpu_freqs.back());
    const double mem_s = bytes / (p.mem_bandwidth_coeff * p.grid.mem_freqs.back());

    FinetuneSpec f;
    f.batch_size = ft_batch;
    f.n_iterations = n_iterations;
    f.output_dim = output_dim;
    f.flops_per_iter_gflop = flops;
    f.ai_flop_per_byte = flops / bytes;
    f.iter_duration_ms_standalone = std::max(gpu_s, mem_s) * 1000.0;
    return f;
}

DeviceProfile builtin_profile(const std::string& name) {
    if (name == "synthetic-tx2") return make_synthetic_tx2();
    if (name == "synthetic-orin") return make_synthetic_orin();
    throw DataError("unknown builtin profile: " + name);
}

std::vector<std::string> builtin_profile_names() {
    return {"synthetic-tx2", "synthetic-orin"};
}

DeviceProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open profile file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("profile parse error in " + path + ": " + e.what());
    }
    DeviceProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.grid = grid_from_json(j.at("grid"));
        p.workload = workload_from_json(j.at("workload"));
        p.compute_throughput_coeff = j.at("compute_throughput_coeff").get<double>();
        p.mem_bandwidth_coeff = j.at("mem_bandwidth_coeff").get<double>();
        p.static_power_w = j.at("static_power_w").get<double>();
        p.gpu_power_coeff = j.at("gpu_power_coeff").get<double>();
        p.gpu_power_exponent = j.at("gpu_power_exponent").get<double>();
        p.mem_power_coeff = j.at("mem_power_coeff").get<double>();
        p.mem_power_exponent = j.at("mem_power_exponent").get<double>();
        p.cpu_power_coeff = j.at("cpu_power_coeff").get<double>();
        p.cpu_power_exponent = j.at("cpu_power_exponent").get<double>();
        p.governor_utilization_target = j.at("governor_utilization_target").get<double>();
        p.noise_sigma_base = j.at("noise_sigma_base").get<double>();
        p.noise_sigma_small_batch = j.at("noise_sigma_small_batch").get<double>();
        p.eval_cost_s = j.at("eval_cost_s").get<double>();
        p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        p.gpu_min_tuning_enabled = j.at("gpu_min_tuning_enabled").get<bool>();
        p.interference_flops_ms_per_gflop =
            j.at("interference_flops_ms_per_gflop").get<double>();
        p.interference_ai_ms_per_unit = j.at("interference_ai_ms_per_unit").get<double>();
        p.default_finetune = finetune_from_json(j.at("default_finetune"));
        p.default_finetune_inflation_ms = j.at("default_finetune_inflation_ms").get<double>();
    } catch (const json::exception& e) {
        throw DataError("profile field error in " + path + ": " + e.what());
    }
    p.validate();
    return p;
}

void save_profile(const DeviceProfile& p, const std::string& path) {
    json j{{"name", p.name},
           {"grid", grid_to_json(p.grid)},
           {"workload", workload_to_json(p.workload)},
           {"compute_throughput_coeff", p.compute_throughput_coeff},
           {"mem_bandwidth_coeff", p.mem_bandwidth_coeff},
           {"static_power_w", p.static_power_w},
           {"gpu_power_coeff", p.gpu_power_coeff},
           {"gpu_power_exponent", p.gpu_power_exponent},
           {"mem_power_coeff", p.mem_power_coeff},
           {"mem_power_exponent", p.mem_power_exponent},
           {"cpu_power_coeff", p.cpu_power_coeff},
           {"cpu_power_exponent", p.cpu_power_exponent},
           {"governor_utilization_target", p.governor_utilization_target},
           {"noise_sigma_base", p.noise_sigma_base},
           {"noise_sigma_small_batch", p.noise_sigma_small_batch},
           {"eval_cost_s", p.eval_cost_s},
           {"rng_seed", p.rng_seed},
           {"gpu_min_tuning_enabled", p.gpu_min_tuning_enabled},
           {"interference_flops_ms_per_gflop", p.interference_flops_ms_per_gflop},
           {"interference_ai_ms_per_unit", p.interference_ai_ms_per_unit},
           {"default_finetune", finetune_to_json(p.default_finetune)},
           {"default_finetune_inflation_ms", p.default_finetune_inflation_ms}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write profile file: " + path);
    out << j.dump(2) << "\n";
}

DeviceProfile resolve_profile(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (fs::exists(name_or_path)) return load_profile(name_or_path);
    if (const char* dir = std::getenv("EDGETUNE_PROFILE_DIR")) {
        fs::path candidate = fs::path(dir) / (name_or_path + ".json");
        if (fs::exists(candidate)) return load_profile(candidate.string());
    }
    for (const auto& b : builtin_profile_names()) {
        if (name_or_path == b) return builtin_profile(b);
    }
    throw DataError("profile not found: " + name_or_path);
}

}  // namespace edgetune
