#include "edgetune/cbo.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace edgetune {

void TuningProblem::validate() const {
    profile.validate();
    if (slo_ms <= 0) throw DataError("tuning problem: slo_ms must be > 0");
    if (near_optimal_tolerance <= 0 || near_optimal_tolerance >= 1)
        throw DataError("tuning problem: near_optimal_tolerance must be in (0, 1)");
    if (max_evals < 6) throw DataError("tuning problem: max_evals must be >= 6");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double expected_improvement(double mean, double stddev, double best_feasible, double xi) {
    const double z = best_feasible - mean - xi;
    if (stddev <= 0.0) return std::max(z, 0.0);
    const double u = z / stddev;
    const double ei = z * normal_cdf(u) + stddev * normal_pdf(u);
    return std::max(ei, 0.0);
}

double prob_feasible(double mean_latency, double stddev_latency, double slo_ms) {
    if (stddev_latency <= 0.0) return mean_latency <= slo_ms ? 1.0 : 0.0;
    return normal_cdf((slo_ms - mean_latency) / stddev_latency);
}

double acquisition(const GpModel& energy_model, const GpModel& latency_model,
                   const std::vector<double>& candidate,
                   std::optional<double> best_feasible_energy, const CboSettings& settings,
                   double slo_ms) {
    const auto [lat_mean, lat_std] = latency_model.posterior(candidate);
    const double pf = prob_feasible(lat_mean, lat_std, slo_ms);
    if (!best_feasible_energy) return pf;  // no incumbent: hunt for feasibility
    const auto [en_mean, en_std] = energy_model.posterior(candidate);
    // EI on the model's standardized scale, so xi carries the same meaning
    // regardless of energy units and the argmax is rescale-invariant.
    // EI on the model's standardized scale, so xi carries the same meaning
    // regardless of energy units and the argmax is rescale-invariant.
    const double y_std = energy_model.target_std();
    return pf * expected_improvement(en_mean / y_std, en_std / y_std,
                                     *best_feasible_energy / y_std, settings.xi);
}

std::pair<double, double> rs_expected_trials(int n_near_optimal, int n_total) {
    if (n_near_optimal <= 0 || n_near_optimal > n_total)
        throw DataError("rs_expected_trials: need 0 < near <= total");
    const double p = static_cast<double>(n_near_optimal) / static_cast<double>(n_total);
    return {1.0 / p, std::sqrt(1.0 - p) / p};
}

double choose_cpu_frequency(const DeviceProfile& profile) {
    // Lowest CPU clock that keeps preprocessing off the critical path at
    // default-max knobs and batch 1. Preprocessing energy grows with
    // frequency (exponent >= 1), so the lowest feasible clock wins.
    HardwareConfig probe = profile.default_max_config();
    for (double cpu : profile.grid.cpu_freqs) {
        probe.cpu_freq = cpu;
        const LatencyBreakdown b = latency_breakdown(profile, probe);
        if (b.preprocess_ms <= b.compute_ms) return cpu;
    }
    return profile.grid.cpu_freqs.back();
}

bool is_near_optimal(const DeviceProfile& profile, const HardwareConfig& config,
                     double slo_ms, double tolerance, const GridSearchResult& oracle) {
    const Measurement m = noiseless_measure(profile, config);
    return m.latency_ms <= slo_ms &&
           m.energy_per_query_mj <= (1.0 + tolerance) * oracle.best_energy_mj;
}

namespace {

// Index position of a value in its grid list.
template <typename T>
std::size_t grid_index(const std::vector<T>& values, T v) {
    return static_cast<std::size_t>(
        std::find(values.begin(), values.end(), v) - values.begin());
}

double normalized_index(std::size_t idx, std::size_t len) {
    return len > 1 ? static_cast<double>(idx) / static_cast<double>(len - 1) : 0.5;
}

// Tunable-knob embedding: grid indices scaled to [0,1] per dimension. The CPU
// knob is fixed by phase 1 and excluded; gpu_min appears only when tunable.
std::vector<double> featurize(const DeviceProfile& p, const HardwareConfig& c) {
    std::vector<double> f;
    if (p.gpu_min_tuning_enabled)
        f.push_back(normalized_index(grid_index(p.grid.gpu_freqs, c.gpu_min_freq),
                                     p.grid.gpu_freqs.size()));
    f.push_back(normalized_index(grid_index(p.grid.gpu_freqs, c.gpu_max_freq),
                                 p.grid.gpu_freqs.size()));
    f.push_back(normalized_index(grid_index(p.grid.mem_freqs, c.mem_freq),
                                 p.grid.mem_freqs.size()));
    f.push_back(normalized_index(grid_index(p.grid.batch_sizes, c.batch_size),
                                 p.grid.batch_sizes.size()));
    return f;
}

struct SearchState {
    std::vector<HardwareConfig> candidates;
    std::vector<std::vector<double>> features;
    std::vector<bool> tried;
};

// Least-squares linear trend over the feature space, ridge-stabilized so the
// first refits (n barely above d) stay well posed.
struct LinearTrend {
    Eigen::VectorXd beta;  // intercept first

    static LinearTrend fit(const std::vector<std::vector<double>>& xs,
                           const std::vector<double>& ys) {
        const auto n = static_cast<Eigen::Index>(xs.size());
        const auto d = static_cast<Eigen::Index>(xs.front().size());
        Eigen::MatrixXd a(n, d + 1);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, 0) = 1.0;
            for (Eigen::Index j = 0; j < d; ++j)
                a(i, j + 1) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            y[i] = ys[static_cast<std::size_t>(i)];
        }
        LinearTrend t;
        Eigen::MatrixXd ata = a.transpose() * a;
        ata.diagonal().array() += 1e-6;
        t.beta = ata.ldlt().solve(a.transpose() * y);
        return t;
    }

    double at(const std::vector<double>& x) const {
        double v = beta[0];
        for (std::size_t j = 0; j < x.size(); ++j)
            v += beta[static_cast<Eigen::Index>(j) + 1] * x[j];
        return v;
    }
};

TuningReport run_report_loop(const TuningProblem& problem, const CboSettings& settings,
                             const GridSearchResult* oracle_in, bool use_cbo) {
    problem.validate();
    if (settings.n_initial_random < 1)
        throw DataError("cbo settings: n_initial_random must be >= 1");
    if (settings.xi < 0) throw DataError("cbo settings: xi must be >= 0");
    const DeviceProfile& p = problem.profile;

    GridSearchResult oracle_local;
    const GridSearchResult* oracle = oracle_in;
    if (!oracle) {
        oracle_local = noiseless_grid_optimum(p, problem.slo_ms);
        oracle = &oracle_local;
    }

    RngStream root(settings.rng_seed);
    RngStream pick_rng = root.substream(use_cbo ? "cbo-pick" : "rs-pick");
    RngStream measure_rng = root.substream("measure");
    RngStream gp_rng = root.substream("gp-fit");

    const double cpu_star = use_cbo ? choose_cpu_frequency(p) : 0.0;

    SearchState st;
    for (const auto& c : grid_enumerate(p)) {
        if (use_cbo && c.cpu_freq != cpu_star) continue;
        if (!problem.batch_dimension_enabled && c.batch_size != p.grid.batch_sizes.front())
            continue;
        st.candidates.push_back(c);
        st.features.push_back(featurize(p, c));
    }
    st.tried.assign(st.candidates.size(), false);

    TuningReport report;
    report.cpu_freq_chosen = cpu_star;
    std::optional<double> best_feasible;
    std::size_t best_idx_in_obs = 0;
    std::optional<GpHyperparams> warm_energy, warm_latency;

    auto record = [&](std::size_t cand_idx) {
        st.tried[cand_idx] = true;
        const Measurement m = measure(p, st.candidates[cand_idx], measure_rng);
        Observation obs;
        obs.config = st.candidates[cand_idx];
        obs.latency_ms = m.latency_ms;
        obs.energy_mj = m.energy_per_query_mj;
        obs.feasible = m.latency_ms <= problem.slo_ms;
        report.evaluations.push_back(obs);
        if (obs.feasible && (!best_feasible || obs.energy_mj < *best_feasible)) {
            best_feasible = obs.energy_mj;
            best_idx_in_obs = report.evaluations.size() - 1;
        }
        if (!report.evals_to_near_optimal &&
            is_near_optimal(p, obs.config, problem.slo_ms, problem.near_optimal_tolerance,
                            *oracle)) {
            report.evals_to_near_optimal = static_cast<int>(report.evaluations.size());
        }
        return obs;
    };

    auto pick_random_untried = [&]() -> std::size_t {
        for (;;) {
            const auto i =
                static_cast<std::size_t>(pick_rng.uniform_index(st.candidates.size()));
            if (!st.tried[i]) return i;
        }
    };

    const int total = std::min<int>(problem.max_evals,
                                    static_cast<int>(st.candidates.size()));

    if (!use_cbo) {
        for (int i = 0; i < total; ++i) record(pick_random_untried());
    } else {
        // Latin-hypercube-on-grid seeding over the tunable dimensions,
        // maximin-selected over a fixed number of candidate designs so a
        // degenerate initial spread cannot sink a run.
        const std::size_t dims = st.features.front().size();
        const int n_init = std::min(total, settings.n_initial_random);
        std::vector<std::vector<double>> best_design;
        double best_sep = -1.0;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::vector<int>> strata(dims, std::vector<int>(n_init));
            for (auto& perm : strata) {
                std::iota(perm.begin(), perm.end(), 0);
                for (int i = n_init - 1; i > 0; --i) {
                    const auto j = static_cast<int>(pick_rng.uniform_index(i + 1));
                    std::swap(perm[i], perm[static_cast<std::size_t>(j)]);
                }
            }
            std::vector<std::vector<double>> design(n_init, std::vector<double>(dims));
            for (int s = 0; s < n_init; ++s)
                for (std::size_t d = 0; d < dims; ++d)
                    design[static_cast<std::size_t>(s)][d] =
                        (strata[d][static_cast<std::size_t>(s)] + pick_rng.uniform()) /
                        n_init;
            double sep = std::numeric_limits<double>::infinity();
            for (int a = 0; a < n_init; ++a)
                for (int b = a + 1; b < n_init; ++b) {
                    double dist = 0.0;
                    for (std::size_t d = 0; d < dims; ++d) {
                        const double r = design[static_cast<std::size_t>(a)][d] -
                                         design[static_cast<std::size_t>(b)][d];
                        dist += r * r;
                    }
                    sep = std::min(sep, dist);
                }
            if (sep > best_sep) {
                best_sep = sep;
                best_design = design;
            }
        }
        for (const auto& target : best_design) {
            // Snap to the nearest untried candidate in feature space.
            std::size_t best = st.candidates.size();
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < st.candidates.size(); ++i) {
                if (st.tried[i]) continue;
                double dist = 0.0;
                for (std::size_t d = 0; d < dims; ++d) {
                    const double r = st.features[i][d] - target[d];
                    dist += r * r;
                }
                if (dist < best_dist) {
                    best_dist = dist;
                    best = i;
                }
            }
            if (best == st.candidates.size()) break;
            record(best);
        }

        while (static_cast<int>(report.evaluations.size()) < total) {
            if (report.evaluations.size() < 2) {
                record(pick_random_untried());
                continue;
            }
            // Both surrogates model log targets: the grid spans almost an
            // order of magnitude and log compresses the corner regions that
            // otherwise dominate the predictive variance.
            std::vector<std::vector<double>> xs;
            std::vector<double> energies, latencies;
            xs.reserve(report.evaluations.size());
            for (const auto& o : report.evaluations) {
                xs.push_back(featurize(p, o.config));
                energies.push_back(std::log(o.energy_mj));
                latencies.push_back(std::log(o.latency_ms));
            }

            // A least-squares linear trend carries the per-axis cost
            // structure into unvisited regions (a product kernel alone keeps
            // re-discovering that far corners are expensive); the GPs model
            // the residuals.
            const LinearTrend energy_trend = LinearTrend::fit(xs, energies);
            const LinearTrend latency_trend = LinearTrend::fit(xs, latencies);
            std::vector<double> energy_resid = energies, latency_resid = latencies;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                energy_resid[i] -= energy_trend.at(xs[i]);
                latency_resid[i] -= latency_trend.at(xs[i]);
            }

            const GpModel energy_gp =
                GpModel::fit(xs, energy_resid, settings.gp_restarts, gp_rng,
                             settings.kernel, warm_energy ? &*warm_energy : nullptr);
            const GpModel latency_gp =
                GpModel::fit(xs, latency_resid, settings.gp_restarts, gp_rng,
                             settings.kernel, warm_latency ? &*warm_latency : nullptr);
            warm_energy = energy_gp.hyperparams();
            warm_latency = latency_gp.hyperparams();

            // Plug-in incumbent: the posterior mean at the best explored
            // feasible point. Raw noisy minima overstate the incumbent and
            // stall the improvement term.
            std::optional<double> incumbent;
            for (std::size_t i = 0; i < report.evaluations.size(); ++i) {
                if (!report.evaluations[i].feasible) continue;
                const double m = energy_trend.at(xs[i]) + energy_gp.posterior(xs[i]).first;
                if (!incumbent || m < *incumbent) incumbent = m;
            }

            const double log_slo = std::log(problem.slo_ms);
            std::size_t best_cand = st.candidates.size();
            double best_acq = -1.0;
            for (std::size_t i = 0; i < st.candidates.size(); ++i) {
                if (st.tried[i]) continue;
                const auto [lat_mu, lat_sd] = latency_gp.posterior(st.features[i]);
                const double pf = prob_feasible(latency_trend.at(st.features[i]) + lat_mu,
                                                lat_sd, log_slo);
                double a = pf;
                if (incumbent) {
                    const auto [en_mu, en_sd] = energy_gp.posterior(st.features[i]);
                    a = pf * expected_improvement(energy_trend.at(st.features[i]) + en_mu,
                                                  en_sd, *incumbent, settings.xi);
                }
                if (a > best_acq) {
                    best_acq = a;
                    best_cand = i;
                }
            }
            if (best_cand == st.candidates.size()) break;  // grid exhausted
            record(best_cand);
        }
    }

    report.simulated_wall_time_s =
        static_cast<double>(report.evaluations.size()) * p.eval_cost_s;
    if (best_feasible) {
        report.best_config = report.evaluations[best_idx_in_obs].config;
        report.best_energy_mj = *best_feasible;
    } else {
        report.feasibility_failure = true;
    }
    return report;
}

}  // namespace

TuningReport tune(const TuningProblem& problem, const CboSettings& settings,
                  const GridSearchResult* oracle) {
    return run_report_loop(problem, settings, oracle, true);
}

TuningReport random_search(const TuningProblem& problem, const CboSettings& settings,
                           const GridSearchResult* oracle) {
    return run_report_loop(problem, settings, oracle, false);
}

}  // namespace edgetune
