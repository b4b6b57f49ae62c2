#include "morphoscale/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace morphoscale {

namespace {

void check_kernel(const Kernel& kernel) {
    if (!(kernel.signal_variance > 0.0) || !std::isfinite(kernel.signal_variance)) {
        throw std::invalid_argument("gp: signal_variance must be positive and finite");
    }
    if (!(kernel.length_scale > 0.0) || !std::isfinite(kernel.length_scale)) {
        throw std::invalid_argument("gp: length_scale must be positive and finite");
    }
    if (kernel.noise_variance < 0.0 || !std::isfinite(kernel.noise_variance)) {
        throw std::invalid_argument("gp: noise_variance must be >= 0 and finite");
    }
}

double rbf(double xa, double xb, const Kernel& kernel) {
    const double d = (xa - xb) / kernel.length_scale;
    return kernel.signal_variance * std::exp(-0.5 * d * d);
}

}  // namespace

GPFit::GPFit(std::vector<double> x, std::vector<double> y, Kernel kernel)
    : x_(std::move(x)), kernel_(kernel) {
    check_kernel(kernel_);
    if (x_.empty() || x_.size() != y.size()) {
        throw std::invalid_argument("gp_fit: need matching non-empty x and y");
    }
    for (const auto v : x_) {
        if (!std::isfinite(v)) throw std::invalid_argument("gp_fit: non-finite input");
    }
    for (const auto v : y) {
        if (!std::isfinite(v)) throw std::invalid_argument("gp_fit: non-finite target");
    }
    if (kernel_.noise_variance == 0.0) {
        for (std::size_t i = 0; i < x_.size(); ++i) {
            for (std::size_t j = i + 1; j < x_.size(); ++j) {
                if (x_[i] == x_[j]) {
                    throw std::invalid_argument(
                        "gp_fit: duplicate inputs with zero noise make the kernel matrix "
                        "singular");
                }
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(x_.size());
    y_ = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double k = rbf(x_[static_cast<std::size_t>(i)],
                                 x_[static_cast<std::size_t>(j)], kernel_);
            gram(i, j) = k;
            gram(j, i) = k;
        }
        gram(i, i) += kernel_.noise_variance;
    }

    double jitter = 0.0;
    for (;;) {
        Eigen::MatrixXd attempt = gram;
        if (jitter > 0.0) {
            attempt.diagonal().array() += jitter;
        }
        llt_.compute(attempt);
        if (llt_.info() == Eigen::Success) break;
        jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
        if (jitter > 1e-6) {
            throw std::runtime_error(
                "gp_fit: Cholesky factorization failed beyond the 1e-6 jitter budget");
        }
    }
    jitter_ = jitter;
    weights_ = llt_.solve(y_);
}

GPPrediction GPFit::predict(const std::vector<double>& x_star) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    GPPrediction prediction;
    prediction.mean.resize(x_star.size());
    prediction.variance.resize(x_star.size());

    const double prior_variance = kernel_.signal_variance + kernel_.noise_variance;
    Eigen::VectorXd cross(n);
    for (std::size_t s = 0; s < x_star.size(); ++s) {
        if (!std::isfinite(x_star[s])) {
            throw std::invalid_argument("gp_predict: non-finite query point");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            cross(i) = rbf(x_star[s], x_[static_cast<std::size_t>(i)], kernel_);
        }
        prediction.mean[s] = cross.dot(weights_);
        const Eigen::VectorXd solved = llt_.solve(cross);
        const double reduction = cross.dot(solved);
        prediction.variance[s] = std::max(prior_variance - reduction, 0.0);
    }
    return prediction;
}

double GPFit::log_marginal_likelihood() const {
    const auto n = static_cast<double>(x_.size());
    const Eigen::MatrixXd& chol = llt_.matrixLLT();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < chol.rows(); ++i) {
        log_det += 2.0 * std::log(chol(i, i));
    }
    return -0.5 * y_.dot(weights_) - 0.5 * log_det - 0.5 * n * std::log(2.0 * M_PI);
}

GPFit gp_fit(const std::vector<double>& x, const std::vector<double>& y,
             const Kernel& kernel) {
    return GPFit(x, y, kernel);
}

GPPrediction gp_predict(const GPFit& fit, const std::vector<double>& x_star) {
    return fit.predict(x_star);
}

Kernel select_kernel(const std::vector<double>& x, const std::vector<double>& y,
                     double length_scale, int signal_grid_points,
                     int noise_grid_points) {
    if (signal_grid_points < 2 || noise_grid_points < 2) {
        throw std::invalid_argument("select_kernel: need at least 2 grid points per axis");
    }
    const double signal_lo = 1e-3, signal_hi = 10.0;
    const double noise_lo = 1e-6, noise_hi = 1.0;

    Kernel best;
    best.length_scale = length_scale;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < signal_grid_points; ++i) {
        const double fs = static_cast<double>(i) / (signal_grid_points - 1);
        const double signal =
            std::exp(std::log(signal_lo) + fs * (std::log(signal_hi) - std::log(signal_lo)));
        for (int j = 0; j < noise_grid_points; ++j) {
            const double fn = static_cast<double>(j) / (noise_grid_points - 1);
            const double noise =
                std::exp(std::log(noise_lo) + fn * (std::log(noise_hi) - std::log(noise_lo)));
            Kernel candidate{signal, length_scale, noise};
            double lml;
            try {
                lml = GPFit(x, y, candidate).log_marginal_likelihood();
            } catch (const std::exception&) {
                continue;  // ill-conditioned grid point
            }
            if (lml > best_lml) {
                best_lml = lml;
                best = candidate;
            }
        }
    }
    if (!std::isfinite(best_lml)) {
        throw std::runtime_error("select_kernel: no grid point produced a valid fit");
    }
    return best;
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean_of: empty input");
    double sum = 0.0;
    for (const auto v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double sd_of(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double mean = mean_of(values);
    double ss = 0.0;
    for (const auto v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

std::vector<double> StandardizedGP::standardize(const std::vector<double>& y,
                                                double mean, double scale) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - mean) / scale;
    return out;
}

StandardizedGP::StandardizedGP(const std::vector<double>& x,
                               const std::vector<double>& y, Kernel kernel)
    : y_mean_(mean_of(y)),
      y_scale_(sd_of(y) > 0.0 ? sd_of(y) : 1.0),
      fit_(x, standardize(y, y_mean_, y_scale_), kernel) {}

GPPrediction StandardizedGP::predict(const std::vector<double>& x_star) const {
    GPPrediction prediction = fit_.predict(x_star);
    for (auto& m : prediction.mean) m = m * y_scale_ + y_mean_;
    for (auto& v : prediction.variance) v *= y_scale_ * y_scale_;
    return prediction;
}

}  // namespace morphoscale
