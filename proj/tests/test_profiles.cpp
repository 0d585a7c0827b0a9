#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "edgetune/device_profile.hpp"
#include "test_support.hpp"

using namespace edgetune;
namespace fs = std::filesystem;

TEST_CASE("builtin grids match the documented knob tables") {
    const DeviceProfile tx2 = builtin_profile("synthetic-tx2");
    CHECK(tx2.grid.gpu_freqs.front() == 114.75);
    CHECK(tx2.grid.gpu_freqs.back() == 1300.5);
    CHECK(tx2.grid.mem_freqs.front() == 40.8);
    CHECK(tx2.grid.mem_freqs.back() == 1866.0);
    CHECK(tx2.grid.gpu_freqs.size() == 13);
    CHECK(tx2.grid.mem_freqs.size() == 11);
    CHECK(tx2.grid.cpu_freqs.size() == 7);
    CHECK(tx2.grid.batch_sizes.size() == 5);

    const DeviceProfile orin = builtin_profile("synthetic-orin");
    CHECK(orin.grid.gpu_freqs.front() == 114.75);
    CHECK(orin.grid.gpu_freqs.back() == 1300.5);
    CHECK(orin.grid.mem_freqs.front() == 204.0);
    CHECK(orin.grid.mem_freqs.back() == 3199.0);
    CHECK(orin.grid.gpu_freqs.size() == 13);
    CHECK(orin.grid.mem_freqs.size() == 7);
    CHECK(orin.grid.cpu_freqs.size() == 4);
    CHECK(orin.grid.batch_sizes.size() == 5);

    CHECK_THROWS_AS(builtin_profile("nope"), DataError);
}

TEST_CASE("profile JSON round trip") {
    const DeviceProfile p = builtin_profile("synthetic-orin");
    const auto path = fs::temp_directory_path() / "edgetune_roundtrip.json";
    save_profile(p, path.string());
    const DeviceProfile q = load_profile(path.string());
    CHECK(q.name == p.name);
    CHECK(q.grid.gpu_freqs == p.grid.gpu_freqs);
    CHECK(q.grid.mem_freqs == p.grid.mem_freqs);
    CHECK(q.grid.cpu_freqs == p.grid.cpu_freqs);
    CHECK(q.grid.batch_sizes == p.grid.batch_sizes);
    CHECK(q.workload.name == p.workload.name);
    CHECK(q.workload.flops_per_query_gflop == p.workload.flops_per_query_gflop);
    CHECK(q.compute_throughput_coeff == p.compute_throughput_coeff);
    CHECK(q.governor_utilization_target == p.governor_utilization_target);
    CHECK(q.interference_flops_ms_per_gflop == p.interference_flops_ms_per_gflop);
    CHECK(q.default_finetune.flops_per_iter_gflop == p.default_finetune.flops_per_iter_gflop);
    CHECK(q.default_finetune_inflation_ms == p.default_finetune_inflation_ms);
    CHECK(q.rng_seed == p.rng_seed);
    fs::remove(path);
}

TEST_CASE("shipped profile files equal the builtins") {
    for (const auto& name : builtin_profile_names()) {
        const auto path = edgetune::testing::source_dir() + "/profiles/" + name + ".json";
        REQUIRE(fs::exists(path));
        const DeviceProfile file = load_profile(path);
        const DeviceProfile code = builtin_profile(name);
        CHECK(file.name == code.name);
        CHECK(file.grid.gpu_freqs == code.grid.gpu_freqs);
        CHECK(file.mem_bandwidth_coeff == code.mem_bandwidth_coeff);
        CHECK(file.static_power_w == code.static_power_w);
        CHECK(file.mem_power_coeff == code.mem_power_coeff);
        CHECK(file.default_finetune_inflation_ms == code.default_finetune_inflation_ms);
    }
}

TEST_CASE("resolve_profile handles names, paths, and the profile dir") {
    CHECK(resolve_profile("synthetic-tx2").name == "synthetic-tx2");
    const auto path = edgetune::testing::source_dir() + "/profiles/synthetic-orin.json";
    CHECK(resolve_profile(path).name == "synthetic-orin");
    setenv("EDGETUNE_PROFILE_DIR", (edgetune::testing::source_dir() + "/profiles").c_str(), 1);
    CHECK(resolve_profile("synthetic-orin").name == "synthetic-orin");
    unsetenv("EDGETUNE_PROFILE_DIR");
    CHECK_THROWS_AS(resolve_profile("missing-profile"), DataError);
}

TEST_CASE("validation rejects malformed profiles") {
    DeviceProfile p = edgetune::testing::tiny_profile();
    p.grid.mem_freqs = {1600.0, 400.0};
    CHECK_THROWS_AS(p.validate(), DataError);

    p = edgetune::testing::tiny_profile();
    p.gpu_power_exponent = 3.5;
    CHECK_THROWS_AS(p.validate(), DataError);

    p = edgetune::testing::tiny_profile();
    p.noise_sigma_small_batch = 0.5;
    CHECK_THROWS_AS(p.validate(), DataError);

    p = edgetune::testing::tiny_profile();
    p.governor_utilization_target = 0.0;
    CHECK_THROWS_AS(p.validate(), DataError);
}

TEST_CASE("derived fine-tune specs scale sensibly") {
    const DeviceProfile p = builtin_profile("synthetic-orin");
    const FinetuneSpec a = derive_finetune_spec(p, 8, 5, 1000);
    const FinetuneSpec b = derive_finetune_spec(p, 64, 5, 1000);
    CHECK(b.flops_per_iter_gflop == doctest::Approx(8.0 * a.flops_per_iter_gflop));
    // Weight traffic is paid once per iteration, so intensity grows with batch.
    CHECK(b.ai_flop_per_byte > a.ai_flop_per_byte);
    // Duration follows the roofline at max clocks.
    const double gpu_s = b.flops_per_iter_gflop /
                         (p.compute_throughput_coeff * p.grid.gpu_freqs.back());
    const double mem_s = (b.flops_per_iter_gflop / b.ai_flop_per_byte) /
                         (p.mem_bandwidth_coeff * p.grid.mem_freqs.back());
    CHECK(b.iter_duration_ms_standalone ==
          doctest::Approx(std::max(gpu_s, mem_s) * 1000.0).epsilon(1e-9));
    // Larger classifier head means more work.
    CHECK(derive_finetune_spec(p, 8, 5, 1000).flops_per_iter_gflop >
          derive_finetune_spec(p, 8, 5, 10).flops_per_iter_gflop);
}

TEST_CASE("workload presets") {
    CHECK(workload_preset("b0").name == "efficientnet-b0-like");
    CHECK(workload_preset("b4").params_millions == 19.0);
    CHECK(workload_preset("b7").params_millions == 66.0);
    CHECK_THROWS_AS(workload_preset("b9"), DataError);
    const DeviceProfile p =
        with_workload(builtin_profile("synthetic-orin"), workload_preset("b0"));
    CHECK(p.workload.name == "efficientnet-b0-like");
    CHECK(p.name == "synthetic-orin");
}
