#include "edgetune/perf_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edgetune/device_sim.hpp"
#include "json.hpp"

namespace edgetune {

void ConvLayerShape::validate() const {
    for (long v : {n, c, h, w, k, p, q, r, s})
        if (v < 1) throw DataError("conv shape: all fields must be >= 1");
}

void WorkloadFeatures::validate() const {
    if (flops_inf_gflop < 0 || ai_inf < 0 || flops_ft_gflop < 0 || ai_ft < 0)
        throw DataError("workload features: flops and ai must be >= 0");
    if (batch_size < 1) throw DataError("workload features: batch_size must be >= 1");
    if (flops_ft_gflop == 0 && ai_ft != 0)
        throw DataError("workload features: ai_ft must be 0 when flops_ft is 0");
}

double conv_arithmetic_intensity(const ConvLayerShape& sh) {
    sh.validate();
    const double macs = static_cast<double>(sh.n) * sh.k * sh.p * sh.q * sh.c * sh.r * sh.s;
    const double traffic = static_cast<double>(sh.n) * sh.c * sh.h * sh.w +
                           static_cast<double>(sh.k) * sh.c * sh.r * sh.s +
                           static_cast<double>(sh.n) * sh.k * sh.p * sh.q;
    return macs / traffic;
}

double conv_flops(const ConvLayerShape& sh) {
    sh.validate();
    return 2.0 * static_cast<double>(sh.n) * sh.k * sh.p * sh.q * sh.c * sh.r * sh.s;
}

std::vector<double> nnls_solve(const std::vector<std::vector<double>>& a_rows,
                               const std::vector<double>& y_in) {
    if (a_rows.empty()) throw DataError("nnls: need at least one row");
    if (a_rows.size() != y_in.size()) throw DataError("nnls: row/target count mismatch");
    const auto m = static_cast<Eigen::Index>(a_rows.size());
    const auto ncols = static_cast<Eigen::Index>(a_rows.front().size());
    if (ncols == 0) throw DataError("nnls: empty design matrix");

    Eigen::MatrixXd a(m, ncols);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& row = a_rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != ncols)
            throw DataError("nnls: ragged design matrix");
        for (Eigen::Index j = 0; j < ncols; ++j) {
            if (!std::isfinite(row[static_cast<std::size_t>(j)]))
                throw DataError("nnls: non-finite feature");
            a(i, j) = row[static_cast<std::size_t>(j)];
        }
        if (!std::isfinite(y_in[static_cast<std::size_t>(i)]))
            throw DataError("nnls: non-finite target");
        y[i] = y_in[static_cast<std::size_t>(i)];
    }

    // Column scaling for conditioning; solved coefficients are unscaled below.
    Eigen::VectorXd scale(ncols);
    for (Eigen::Index j = 0; j < ncols; ++j) {
        const double norm = a.col(j).cwiseAbs().maxCoeff();
        scale[j] = norm > 0 ? norm : 1.0;
        a.col(j) /= scale[j];
    }

    // Lawson-Hanson active set. `passive` marks coefficients free to be > 0.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ncols);
    std::vector<bool> passive(static_cast<std::size_t>(ncols), false);
    Eigen::VectorXd w = a.transpose() * (y - a * x);
    const double tol = 1e-10 * std::max(1.0, y.cwiseAbs().maxCoeff());

    for (Eigen::Index outer = 0; outer < 30 * ncols; ++outer) {
        Eigen::Index t = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < ncols; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w[j] > wmax) {
                wmax = w[j];
                t = j;
            }
        }
        if (t < 0) break;
        passive[static_cast<std::size_t>(t)] = true;

        for (Eigen::Index inner = 0; inner < 30 * ncols; ++inner) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index j = 0; j < ncols; ++j)
                if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
            Eigen::MatrixXd ap(m, static_cast<Eigen::Index>(idx.size()));
            for (std::size_t j = 0; j < idx.size(); ++j)
                ap.col(static_cast<Eigen::Index>(j)) = a.col(idx[j]);
            const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(y);

            bool all_positive = true;
            for (Eigen::Index j = 0; j < zp.size(); ++j)
                if (zp[j] <= tol) all_positive = false;
            if (all_positive) {
                x.setZero();
                for (std::size_t j = 0; j < idx.size(); ++j)
                    x[idx[j]] = zp[static_cast<Eigen::Index>(j)];
                break;
            }

            // Step toward zp only as far as non-negativity allows; coefficients
            // that hit zero leave the passive set.
            double alpha = 1.0;
            for (std::size_t j = 0; j < idx.size(); ++j) {
                const double zj = zp[static_cast<Eigen::Index>(j)];
                if (zj <= tol) {
                    const double xj = x[idx[j]];
                    if (xj - zj > 0) alpha = std::min(alpha, xj / (xj - zj));
                }
            }
            for (std::size_t j = 0; j < idx.size(); ++j) {
                x[idx[j]] += alpha * (zp[static_cast<Eigen::Index>(j)] - x[idx[j]]);
            }
            for (Eigen::Index j = 0; j < ncols; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
                    x[j] = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                }
            }
        }
        w = a.transpose() * (y - a * x);
    }

    std::vector<double> out(static_cast<std::size_t>(ncols));
    for (Eigen::Index j = 0; j < ncols; ++j)
        out[static_cast<std::size_t>(j)] = x[j] / scale[j];
    return out;
}

PerfModelCoeffs nnls_fit(const std::vector<WorkloadFeatures>& rows,
                         const std::vector<double>& latencies_ms) {
    std::vector<std::vector<double>> a;
    a.reserve(rows.size());
    for (const auto& r : rows) {
        r.validate();
        a.push_back({1.0, r.flops_inf_gflop, r.ai_inf, r.flops_ft_gflop, r.ai_ft,
                     static_cast<double>(r.batch_size)});
    }
    const std::vector<double> solution = nnls_solve(a, latencies_ms);
    PerfModelCoeffs out;
    std::copy(solution.begin(), solution.end(), out.theta.begin());
    return out;
}

double predict(const PerfModelCoeffs& c, const WorkloadFeatures& f) {
    return c.theta[0] + c.theta[1] * f.flops_inf_gflop + c.theta[2] * f.ai_inf +
           c.theta[3] * f.flops_ft_gflop + c.theta[4] * f.ai_ft +
           c.theta[5] * static_cast<double>(f.batch_size);
}

WorkloadFeatures inference_features(const ModelWorkloadSpec& w, int batch_size) {
    if (batch_size < 1) throw DataError("inference_features: batch must be >= 1");
    const double flops = w.flops_per_query_gflop * batch_size;
    // Weights travel once per batch; cap the reusable share of the per-query
    // traffic so tiny byte figures stay positive.
    const double weight_gb =
        std::min(w.params_millions * 0.002, 0.8 * w.bytes_per_query_gb);
    const double bytes =
        w.bytes_per_query_gb * batch_size - weight_gb * (batch_size - 1);
    WorkloadFeatures f;
    f.flops_inf_gflop = flops;
    f.ai_inf = flops / bytes;
    f.batch_size = batch_size;
    return f;
}

std::pair<std::vector<WorkloadFeatures>, std::vector<double>> collect_training_samples(
    const DeviceProfile& profile, int n, RngStream& rng,
    const std::optional<HardwareConfig>& base_config) {
    if (n < 6) throw DataError("collect_training_samples: need n >= 6");
    const HardwareConfig base =
        base_config ? *base_config : profile.default_max_config();
    static const int kFtBatches[] = {8, 16, 32, 64};
    static const int kOutputDims[] = {10, 100, 1000};

    std::vector<WorkloadFeatures> rows;
    std::vector<double> latencies;
    rows.reserve(static_cast<std::size_t>(n));
    const auto& batches = profile.grid.batch_sizes;

    for (int i = 0; i < n; ++i) {
        const int b_inf = batches[static_cast<std::size_t>(i) % batches.size()];
        const int b_ft = kFtBatches[(static_cast<std::size_t>(i) / batches.size()) %
                                    std::size(kFtBatches)];
        const int out_dim = kOutputDims[static_cast<std::size_t>(i) % std::size(kOutputDims)];
        const FinetuneSpec ft = derive_finetune_spec(profile, b_ft, 1, out_dim);

        HardwareConfig cfg = base;
        cfg.batch_size = b_inf;
        const Measurement m = measure_concurrent(profile, cfg, ft, rng);

        WorkloadFeatures f = inference_features(profile.workload, b_inf);
        f.flops_ft_gflop = ft.flops_per_iter_gflop;
        f.ai_ft = ft.ai_flop_per_byte;
        rows.push_back(f);
        latencies.push_back(m.latency_ms);
    }
    return {std::move(rows), std::move(latencies)};
}

std::vector<ConvLayerShape> load_layer_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open layer list: " + path);
    std::vector<ConvLayerShape> layers;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line.rfind("n,", 0) == 0) continue;  // header
        std::istringstream ss(line);
        ConvLayerShape sh;
        char comma;
        if (!(ss >> sh.n >> comma >> sh.c >> comma >> sh.h >> comma >> sh.w >> comma >>
              sh.k >> comma >> sh.p >> comma >> sh.q >> comma >> sh.r >> comma >> sh.s)) {
            std::ostringstream os;
            os << "layer list parse error at " << path << ":" << lineno;
            throw DataError(os.str());
        }
        sh.validate();
        layers.push_back(sh);
    }
    return layers;
}

std::pair<double, double> aggregate_layer_features(
    const std::vector<ConvLayerShape>& layers) {
    double flops = 0.0, traffic = 0.0;
    for (const auto& sh : layers) {
        const double f = conv_flops(sh);
        flops += f;
        traffic += 0.5 * f / conv_arithmetic_intensity(sh);  // MAC-based traffic
    }
    if (traffic <= 0) throw DataError("aggregate_layer_features: empty layer list");
    return {flops * 1e-9, 0.5 * (flops) / traffic};
}

void save_coeffs(const PerfModelCoeffs& c, const std::string& path) {
    nlohmann::json j = c.theta;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write coefficients file: " + path);
    out << j.dump() << "\n";
}

PerfModelCoeffs load_coeffs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open coefficients file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("coefficients parse error: " + std::string(e.what()));
    }
    if (!j.is_array() || j.size() != 6)
        throw DataError("coefficients file must hold a JSON array of six reals");
    PerfModelCoeffs c;
    for (std::size_t i = 0; i < 6; ++i) c.theta[i] = j[i].get<double>();
    return c;
}

}  // namespace edgetune
