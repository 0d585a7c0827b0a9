#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "edgetune/device_profile.hpp"
#include "edgetune/rng.hpp"

namespace edgetune {

// 2D convolution layer dimensions (input NCHW, output NKPQ, filter KCRS).
struct ConvLayerShape {
    long n = 1, c = 1, h = 1, w = 1;
    long k = 1, p = 1, q = 1;
    long r = 1, s = 1;

    void validate() const;
};

// FLOPs / arithmetic-intensity features of an inference+fine-tune pairing.
struct WorkloadFeatures {
    double flops_inf_gflop = 0.0;
    double ai_inf = 0.0;
    double flops_ft_gflop = 0.0;
    double ai_ft = 0.0;
    int batch_size = 1;

    void validate() const;
};

// The six non-negative coefficients of the linear latency predictor:
// latency = t0 + t1*flops_inf + t2*ai_inf + t3*flops_ft + t4*ai_ft + t5*batch.
struct PerfModelCoeffs {
    std::array<double, 6> theta{};
};

// MACs / (input + filter + output element traffic); exact rational form of
// the weight-reuse ratio for one conv layer.
double conv_arithmetic_intensity(const ConvLayerShape& shape);

// Total FLOPs with MACs counted as 2.
double conv_flops(const ConvLayerShape& shape);

// Non-negative least squares via Lawson-Hanson active sets on an arbitrary
// design matrix (row-major). Columns are scaled internally for conditioning
// and unscaled on output.
std::vector<double> nnls_solve(const std::vector<std::vector<double>>& a_rows,
                               const std::vector<double>& y);

// NNLS on the intercept column plus the five workload features.
PerfModelCoeffs nnls_fit(const std::vector<WorkloadFeatures>& rows,
                         const std::vector<double>& latencies_ms);

double predict(const PerfModelCoeffs& coeffs, const WorkloadFeatures& features);

// Aggregate inference features for a model-level workload at a batch size.
// Weight bytes are counted once per batch (reuse), activation bytes per query.
WorkloadFeatures inference_features(const ModelWorkloadSpec& workload, int batch_size);

// Samples co-located measurements over a spread of inference batch sizes,
// fine-tune batch sizes, and output dimensions. Returns aligned feature rows
// and measured latencies. The model holds for one hardware configuration, so
// samples are taken at base_config (default-max when absent) with only the
// batch dimension varied.
std::pair<std::vector<WorkloadFeatures>, std::vector<double>> collect_training_samples(
    const DeviceProfile& profile, int n, RngStream& rng,
    const std::optional<HardwareConfig>& base_config = std::nullopt);

// Layer-list file: CSV rows `n,c,h,w,k,p,q,r,s`. Aggregate model features sum
// FLOPs and traffic over layers and divide for the intensity.
std::vector<ConvLayerShape> load_layer_list(const std::string& path);
std::pair<double, double> aggregate_layer_features(
    const std::vector<ConvLayerShape>& layers);  // (total GFLOP, overall AI)

// Coefficients serialize as a JSON array of six reals.
void save_coeffs(const PerfModelCoeffs& coeffs, const std::string& path);
PerfModelCoeffs load_coeffs(const std::string& path);

}  // namespace edgetune
