#pragma once

#include <Eigen/Dense>
#include <vector>

#include "edgetune/device_profile.hpp"
#include "edgetune/rng.hpp"

namespace edgetune {

enum class GpKernel { SquaredExponential, Matern52 };

struct GpHyperparams {
    std::vector<double> lengthscales;  // one per input dimension, > 0
    double signal_variance = 1.0;      // > 0
    double noise_variance = 0.0;       // >= 0
};

class IllConditionedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Gaussian-process posterior over a scalar target. Inputs are min-max
// normalized to [0,1]^d internally, targets standardized to zero mean / unit
// variance; posterior() undoes both. Immutable once built, safe to share.
class GpModel {
  public:
    // Maximum-likelihood fit: multi-start gradient ascent on the log marginal
    // likelihood in log-hyperparameter space. Deterministic given the stream
    // position. Requires >= 2 points of equal dimension.
    static GpModel fit(const std::vector<std::vector<double>>& inputs,
                       const std::vector<double>& targets, int restarts, RngStream& rng,
                       GpKernel kernel = GpKernel::SquaredExponential,
                       const GpHyperparams* warm_start = nullptr);

    // Builds the posterior for explicitly chosen hyperparameters (normalized
    // input / standardized target scale). Used by tests and as the fit's
    // inner step.
    static GpModel with_hyperparams(const std::vector<std::vector<double>>& inputs,
                                    const std::vector<double>& targets,
                                    const GpHyperparams& hp,
                                    GpKernel kernel = GpKernel::SquaredExponential);

    // Predictive mean and standard deviation in original target units.
    std::pair<double, double> posterior(const std::vector<double>& query) const;

    // Log marginal likelihood of the (standardized) training targets.
    double log_marginal_likelihood() const { return lml_; }

    const GpHyperparams& hyperparams() const { return hp_; }
    std::size_t dimension() const { return d_; }
    std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }

    // Normalization constants (exposed for diagnostics/tests).
    double target_mean() const { return y_mean_; }
    double target_std() const { return y_std_; }

  private:
    GpModel() = default;
    void factorize();
    Eigen::VectorXd kernel_column(const Eigen::VectorXd& q) const;

    GpKernel kernel_ = GpKernel::SquaredExponential;
    GpHyperparams hp_;
    std::size_t d_ = 0;
    Eigen::MatrixXd x_;        // normalized inputs, one row per point
    Eigen::VectorXd y_;        // standardized targets
    Eigen::MatrixXd chol_l_;   // lower-triangular factor of K + noise*I (+jitter)
    Eigen::VectorXd weights_;  // (K + noise*I)^-1 y
    double jitter_ = 0.0;
    double lml_ = 0.0;
    std::vector<double> in_lo_, in_hi_;  // per-dimension input bounds
    double y_mean_ = 0.0, y_std_ = 1.0;
};

// Hyperparameter search bounds on the normalized scale.
struct GpFitBounds {
    double lengthscale_lo = 1e-2, lengthscale_hi = 10.0;
    double signal_lo = 1e-3, signal_hi = 1e3;
    double noise_lo = 1e-8, noise_hi = 1.0;
};

}  // namespace edgetune
