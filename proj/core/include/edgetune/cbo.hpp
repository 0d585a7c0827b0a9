#pragma once

#include <optional>
#include <vector>

#include "edgetune/device_sim.hpp"
#include "edgetune/gp.hpp"

namespace edgetune {

struct TuningProblem {
    DeviceProfile profile;
    double slo_ms = 0.0;
    int max_evals = 0;
    double near_optimal_tolerance = 0.05;
    bool batch_dimension_enabled = true;

    void validate() const;
};

struct CboSettings {
    double xi = 0.1;
    int n_initial_random = 5;
    std::uint64_t rng_seed = 0;
    int gp_restarts = 8;
    GpKernel kernel = GpKernel::SquaredExponential;
};

struct Observation {
    HardwareConfig config;
    double latency_ms = 0.0;
    double energy_mj = 0.0;
    bool feasible = false;
};

struct TuningReport {
    std::optional<HardwareConfig> best_config;
    double best_energy_mj = 0.0;
    std::vector<Observation> evaluations;
    std::optional<int> evals_to_near_optimal;  // 1-based attempt index
    double simulated_wall_time_s = 0.0;
    bool feasibility_failure = false;
    double cpu_freq_chosen = 0.0;  // phase-1 outcome
};

// Standard normal CDF / PDF used by the acquisition terms.
double normal_cdf(double z);
double normal_pdf(double z);

// Expected improvement for minimization with exploration margin xi:
// z = best_feasible - mean - xi, EI = z*Phi(z/s) + s*phi(z/s); max(z,0) at s=0.
double expected_improvement(double mean, double stddev, double best_feasible, double xi);

// Probability the latency constraint holds: Phi((slo - mean)/stddev);
// degenerates to the indicator when stddev = 0.
double prob_feasible(double mean_latency, double stddev_latency, double slo_ms);

// Constrained acquisition: PF * EI. With no feasible incumbent yet the EI
// factor is dropped and the search is driven by feasibility alone.
double acquisition(const GpModel& energy_model, const GpModel& latency_model,
                   const std::vector<double>& candidate,
                   std::optional<double> best_feasible_energy, const CboSettings& settings,
                   double slo_ms);

// Two-phase tuner: a closed-form CPU-frequency phase, then constrained
// Bayesian optimization over the remaining knobs on the discrete grid.
// An oracle optimum may be supplied to avoid recomputing the exhaustive
// reference; otherwise it is computed fresh.
TuningReport tune(const TuningProblem& problem, const CboSettings& settings,
                  const GridSearchResult* oracle = nullptr);

// Uniform sampling without replacement over the same grid; same report shape.
TuningReport random_search(const TuningProblem& problem, const CboSettings& settings,
                           const GridSearchResult* oracle = nullptr);

// Geometric-distribution expectation for random search: p = near/total,
// mean = 1/p, stddev = sqrt(1-p)/p.
std::pair<double, double> rs_expected_trials(int n_near_optimal, int n_total);

// The phase-1 rule: lowest CPU frequency whose preprocessing time stays off
// the pipeline critical path at default-max knobs and batch 1.
double choose_cpu_frequency(const DeviceProfile& profile);

// Noiseless near-optimality test used for evals_to_near_optimal: feasible
// under the SLO and within tolerance of the oracle's noiseless optimum.
bool is_near_optimal(const DeviceProfile& profile, const HardwareConfig& config,
                     double slo_ms, double tolerance, const GridSearchResult& oracle);

}  // namespace edgetune
