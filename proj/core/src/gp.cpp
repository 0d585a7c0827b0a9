#include "edgetune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace edgetune {

namespace {

constexpr double kJitterLadder[] = {0.0, 1e-6, 1e-4, 1e-3};
constexpr double kDuplicateNoiseFloor = 1e-6;

double sqdist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
              const std::vector<double>& ls) {
    double s = 0.0;
    for (int d = 0; d < a.size(); ++d) {
        const double r = (a[d] - b[d]) / ls[d];
        s += r * r;
    }
    return s;
}

double kernel_value(GpKernel k, double r2, double signal) {
    if (k == GpKernel::SquaredExponential) return signal * std::exp(-0.5 * r2);
    // Matern 5/2 in terms of the scaled distance r.
    const double r = std::sqrt(r2);
    const double a = std::sqrt(5.0) * r;
    return signal * (1.0 + a + 5.0 * r2 / 3.0) * std::exp(-a);
}

}  // namespace

GpModel GpModel::with_hyperparams(const std::vector<std::vector<double>>& inputs,
                                  const std::vector<double>& targets,
                                  const GpHyperparams& hp, GpKernel kernel) {
    if (inputs.size() < 2) throw DataError("gp: need at least 2 training points");
    if (inputs.size() != targets.size())
        throw DataError("gp: input/target count mismatch");
    const std::size_t d = inputs.front().size();
    for (const auto& x : inputs)
        if (x.size() != d) throw DataError("gp: inconsistent input dimension");
    if (hp.lengthscales.size() != d)
        throw DataError("gp: lengthscale count must match input dimension");

    GpModel m;
    m.kernel_ = kernel;
    m.hp_ = hp;
    m.d_ = d;

    // Min-max normalize inputs. A dimension with zero range maps to 0.
    m.in_lo_.assign(d, 0.0);
    m.in_hi_.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double lo = inputs[0][j], hi = inputs[0][j];
        for (const auto& x : inputs) {
            lo = std::min(lo, x[j]);
            hi = std::max(hi, x[j]);
        }
        m.in_lo_[j] = lo;
        m.in_hi_[j] = hi;
    }
    const auto n = static_cast<Eigen::Index>(inputs.size());
    m.x_.resize(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double range = m.in_hi_[j] - m.in_lo_[j];
            m.x_(i, static_cast<Eigen::Index>(j)) =
                range > 0 ? (inputs[i][j] - m.in_lo_[j]) / range : 0.0;
        }
    }

    // Standardize targets.
    double mean = 0.0;
    for (double y : targets) mean += y;
    mean /= static_cast<double>(targets.size());
    double var = 0.0;
    for (double y : targets) var += (y - mean) * (y - mean);
    var /= static_cast<double>(targets.size());
    m.y_mean_ = mean;
    m.y_std_ = var > 0 ? std::sqrt(var) : 1.0;
    m.y_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        m.y_[i] = (targets[static_cast<std::size_t>(i)] - m.y_mean_) / m.y_std_;

    // Exact duplicate inputs need an observation-noise floor to stay SPD.
    bool has_duplicates = false;
    for (Eigen::Index i = 0; i < n && !has_duplicates; ++i)
        for (Eigen::Index j = i + 1; j < n && !has_duplicates; ++j)
            if ((m.x_.row(i) - m.x_.row(j)).norm() == 0.0) has_duplicates = true;
    if (has_duplicates)
        m.hp_.noise_variance = std::max(m.hp_.noise_variance, kDuplicateNoiseFloor);

    m.factorize();
    return m;
}

void GpModel::factorize() {
    const Eigen::Index n = x_.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = kernel_value(
                kernel_, sqdist(x_.row(i), x_.row(j), hp_.lengthscales), hp_.signal_variance);
            k(i, j) = v;
            k(j, i) = v;
        }
    }

    for (double jitter : kJitterLadder) {
        Eigen::MatrixXd kn = k;
        kn.diagonal().array() += hp_.noise_variance + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(kn);
        if (llt.info() == Eigen::Success) {
            jitter_ = jitter;
            chol_l_ = llt.matrixL();
            weights_ = llt.solve(y_);
            double logdet = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(chol_l_(i, i));
            lml_ = -0.5 * y_.dot(weights_) - logdet -
                   0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
            return;
        }
    }
    throw IllConditionedError(
        "gp: kernel matrix not positive definite after jitter escalation");
}

Eigen::VectorXd GpModel::kernel_column(const Eigen::VectorXd& q) const {
    const Eigen::Index n = x_.rows();
    Eigen::VectorXd k(n);
    const Eigen::RowVectorXd qr = q.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        k[i] = kernel_value(kernel_, sqdist(x_.row(i), qr, hp_.lengthscales),
                            hp_.signal_variance);
    return k;
}

std::pair<double, double> GpModel::posterior(const std::vector<double>& query) const {
    if (query.size() != d_) throw DataError("gp: query dimension mismatch");
    Eigen::VectorXd q(static_cast<Eigen::Index>(d_));
    for (std::size_t j = 0; j < d_; ++j) {
        const double range = in_hi_[j] - in_lo_[j];
        q[static_cast<Eigen::Index>(j)] = range > 0 ? (query[j] - in_lo_[j]) / range : 0.0;
    }
    const Eigen::VectorXd ks = kernel_column(q);
    const double mean_std = ks.dot(weights_);
    const Eigen::VectorXd v = chol_l_.triangularView<Eigen::Lower>().solve(ks);
    double var_std = hp_.signal_variance - v.squaredNorm();
    if (var_std < 0.0) var_std = 0.0;
    return {mean_std * y_std_ + y_mean_, std::sqrt(var_std) * y_std_};
}

namespace {

struct NormalizedData {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    bool has_duplicates = false;
};

NormalizedData normalize_for_fit(const std::vector<std::vector<double>>& inputs,
                                 const std::vector<double>& targets) {
    const std::size_t d = inputs.front().size();
    const auto n = static_cast<Eigen::Index>(inputs.size());
    NormalizedData nd;
    nd.x.resize(n, static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
        double lo = inputs[0][j], hi = inputs[0][j];
        for (const auto& x : inputs) {
            lo = std::min(lo, x[j]);
            hi = std::max(hi, x[j]);
        }
        const double range = hi - lo;
        for (Eigen::Index i = 0; i < n; ++i)
            nd.x(i, static_cast<Eigen::Index>(j)) =
                range > 0 ? (inputs[static_cast<std::size_t>(i)][j] - lo) / range : 0.0;
    }
    double mean = 0.0;
    for (double y : targets) mean += y;
    mean /= static_cast<double>(targets.size());
    double var = 0.0;
    for (double y : targets) var += (y - mean) * (y - mean);
    var /= static_cast<double>(targets.size());
    const double y_std = var > 0 ? std::sqrt(var) : 1.0;
    nd.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        nd.y[i] = (targets[static_cast<std::size_t>(i)] - mean) / y_std;
    for (Eigen::Index i = 0; i < n && !nd.has_duplicates; ++i)
        for (Eigen::Index j = i + 1; j < n && !nd.has_duplicates; ++j)
            if ((nd.x.row(i) - nd.x.row(j)).norm() == 0.0) nd.has_duplicates = true;
    return nd;
}

// Log marginal likelihood and its gradient w.r.t. log-hyperparameters
// theta = (log l_1..d, log signal, log noise). Returns -inf when the kernel
// matrix is not SPD even after the jitter ladder.
struct LmlEval {
    double value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
};

LmlEval eval_lml(const NormalizedData& nd, GpKernel kernel, const Eigen::VectorXd& theta,
                 bool want_grad) {
    const Eigen::Index n = nd.x.rows();
    const auto d = static_cast<std::size_t>(nd.x.cols());
    std::vector<double> ls(d);
    for (std::size_t j = 0; j < d; ++j) ls[j] = std::exp(theta[static_cast<Eigen::Index>(j)]);
    const double signal = std::exp(theta[static_cast<Eigen::Index>(d)]);
    const double noise = std::exp(theta[static_cast<Eigen::Index>(d) + 1]);

    Eigen::MatrixXd kf(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = kernel_value(kernel, sqdist(nd.x.row(i), nd.x.row(j), ls), signal);
            kf(i, j) = v;
            kf(j, i) = v;
        }

    LmlEval out;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double used_jitter = 0.0;
    for (double jitter : kJitterLadder) {
        Eigen::MatrixXd kn = kf;
        kn.diagonal().array() += noise + jitter;
        llt.compute(kn);
        if (llt.info() == Eigen::Success) {
            used_jitter = jitter;
            break;
        }
        if (jitter == kJitterLadder[std::size(kJitterLadder) - 1]) return out;
    }

    const Eigen::VectorXd alpha = llt.solve(nd.y);
    double logdet = 0.0;
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(l(i, i));
    out.value = -0.5 * nd.y.dot(alpha) - logdet -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (!want_grad) return out;

    if (kernel == GpKernel::Matern52) {
        // Central finite differences; the Matern path is cold.
        out.grad.resize(theta.size());
        const double h = 1e-5;
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[k] += h;
            tm[k] -= h;
            const double fp = eval_lml(nd, kernel, tp, false).value;
            const double fm = eval_lml(nd, kernel, tm, false).value;
            out.grad[k] = (fp - fm) / (2.0 * h);
        }
        return out;
    }

    // d LML / d theta_k = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta_k)
    Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd outer = alpha * alpha.transpose();
    outer -= kinv;
    out.grad.resize(theta.size());
    for (std::size_t j = 0; j < d; ++j) {
        // dK/dlog l_j = Kf .* sq_j where sq_j(i,k) = (x_ij - x_kj)^2 / l_j^2
        double acc = 0.0;
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) {
                const double diff =
                    (nd.x(a, static_cast<Eigen::Index>(j)) - nd.x(b, static_cast<Eigen::Index>(j))) /
                    ls[j];
                acc += outer(a, b) * kf(a, b) * diff * diff;
            }
        out.grad[static_cast<Eigen::Index>(j)] = 0.5 * acc;
    }
    out.grad[static_cast<Eigen::Index>(d)] = 0.5 * (outer.cwiseProduct(kf)).sum();
    out.grad[static_cast<Eigen::Index>(d) + 1] = 0.5 * noise * outer.trace();
    (void)used_jitter;
    return out;
}

Eigen::VectorXd clamp_theta(Eigen::VectorXd theta, std::size_t d, const GpFitBounds& b,
                            double noise_lo) {
    for (std::size_t j = 0; j < d; ++j) {
        auto k = static_cast<Eigen::Index>(j);
        theta[k] = std::clamp(theta[k], std::log(b.lengthscale_lo), std::log(b.lengthscale_hi));
    }
    auto ks = static_cast<Eigen::Index>(d);
    theta[ks] = std::clamp(theta[ks], std::log(b.signal_lo), std::log(b.signal_hi));
    theta[ks + 1] = std::clamp(theta[ks + 1], std::log(noise_lo), std::log(b.noise_hi));
    return theta;
}

}  // namespace

GpModel GpModel::fit(const std::vector<std::vector<double>>& inputs,
                     const std::vector<double>& targets, int restarts, RngStream& rng,
                     GpKernel kernel, const GpHyperparams* warm_start) {
    if (inputs.size() < 2) throw DataError("gp: need at least 2 training points");
    if (inputs.size() != targets.size())
        throw DataError("gp: input/target count mismatch");
    const std::size_t d = inputs.front().size();
    for (const auto& x : inputs)
        if (x.size() != d) throw DataError("gp: inconsistent input dimension");
    if (restarts < 1) restarts = 1;

    const NormalizedData nd = normalize_for_fit(inputs, targets);
    const GpFitBounds bounds;
    const double noise_lo =
        nd.has_duplicates ? std::max(bounds.noise_lo, kDuplicateNoiseFloor) : bounds.noise_lo;

    const auto nparams = static_cast<Eigen::Index>(d) + 2;
    Eigen::VectorXd best_theta;
    double best_lml = -std::numeric_limits<double>::infinity();

    for (int s = 0; s < restarts; ++s) {
        Eigen::VectorXd theta(nparams);
        if (s == 0 && warm_start && warm_start->lengthscales.size() == d) {
            for (std::size_t j = 0; j < d; ++j)
                theta[static_cast<Eigen::Index>(j)] = std::log(warm_start->lengthscales[j]);
            theta[static_cast<Eigen::Index>(d)] = std::log(warm_start->signal_variance);
            theta[static_cast<Eigen::Index>(d) + 1] =
                std::log(std::max(warm_start->noise_variance, noise_lo));
        } else if (s == 0) {
            for (std::size_t j = 0; j < d; ++j)
                theta[static_cast<Eigen::Index>(j)] = std::log(0.3);
            theta[static_cast<Eigen::Index>(d)] = 0.0;          // signal = 1
            theta[static_cast<Eigen::Index>(d) + 1] = std::log(1e-4);
        } else {
            for (std::size_t j = 0; j < d; ++j)
                theta[static_cast<Eigen::Index>(j)] =
                    std::log(bounds.lengthscale_lo) +
                    rng.uniform() * std::log(bounds.lengthscale_hi / bounds.lengthscale_lo);
            theta[static_cast<Eigen::Index>(d)] =
                std::log(bounds.signal_lo) +
                rng.uniform() * std::log(bounds.signal_hi / bounds.signal_lo);
            theta[static_cast<Eigen::Index>(d) + 1] =
                std::log(noise_lo) + rng.uniform() * std::log(bounds.noise_hi / noise_lo);
        }
        theta = clamp_theta(theta, d, bounds, noise_lo);

        LmlEval cur = eval_lml(nd, kernel, theta, true);
        if (cur.value > best_lml) {
            best_lml = cur.value;
            best_theta = theta;
        }
        if (!std::isfinite(cur.value)) continue;

        double step = 0.1;
        for (int iter = 0; iter < 80 && step > 1e-5; ++iter) {
            Eigen::VectorXd g = cur.grad;
            const double gn = g.norm();
            if (!std::isfinite(gn) || gn < 1e-9) break;
            if (gn > 10.0) g *= 10.0 / gn;
            const Eigen::VectorXd cand = clamp_theta(theta + step * g, d, bounds, noise_lo);
            // Value-only probe; the gradient is recomputed on acceptance.
            const double cv = eval_lml(nd, kernel, cand, false).value;
            if (cv > cur.value) {
                theta = cand;
                cur = eval_lml(nd, kernel, theta, true);
                step = std::min(step * 1.5, 2.0);
                if (cur.value > best_lml) {
                    best_lml = cur.value;
                    best_theta = theta;
                }
            } else {
                step *= 0.5;
            }
        }
    }

    if (!best_theta.size())
        throw IllConditionedError("gp: no hyperparameter start produced a finite likelihood");

    GpHyperparams hp;
    hp.lengthscales.resize(d);
    for (std::size_t j = 0; j < d; ++j)
        hp.lengthscales[j] = std::exp(best_theta[static_cast<Eigen::Index>(j)]);
    hp.signal_variance = std::exp(best_theta[static_cast<Eigen::Index>(d)]);
    hp.noise_variance = std::exp(best_theta[static_cast<Eigen::Index>(d) + 1]);
    return with_hyperparams(inputs, targets, hp, kernel);
}

}  // namespace edgetune
