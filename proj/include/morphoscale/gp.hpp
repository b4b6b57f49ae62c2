#pragma once
// Gaussian process regression on 1-D inputs with an RBF + white noise
// kernel, as used for the train-vs-test overfitting trend.
//
//   k(x, x') = signal_variance * exp(-(x - x')^2 / (2 l^2))
//              + noise_variance * [x == x' observation]
//
// The prior mean is zero on y as given. The fit caches a Cholesky
// factorization of K + noise I; on factorization failure a diagonal jitter
// of 1e-10 is added and escalated x10 up to 1e-6 before giving up. The
// length scale is interpreted in the caller's x units and is never rescaled.

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace morphoscale {

struct Kernel {
    double signal_variance = 1.0;
    double length_scale = 0.6;
    double noise_variance = 0.0;
};

struct GPPrediction {
    std::vector<double> mean;
    std::vector<double> variance;  // includes the noise term (observation variance)
};

class GPFit {
public:
    // Throws std::invalid_argument on invalid kernels, size mismatches, or
    // duplicate inputs with zero noise (exactly singular); throws
    // std::runtime_error if factorization fails beyond the jitter budget.
    GPFit(std::vector<double> x, std::vector<double> y, Kernel kernel);

    GPPrediction predict(const std::vector<double>& x_star) const;
    double log_marginal_likelihood() const;

    const Kernel& kernel() const { return kernel_; }
    double jitter_used() const { return jitter_; }
    std::size_t size() const { return x_.size(); }

private:
    std::vector<double> x_;
    Kernel kernel_;
    Eigen::VectorXd y_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd weights_;  // (K + noise I)^-1 y
    double jitter_ = 0.0;
};

GPFit gp_fit(const std::vector<double>& x, const std::vector<double>& y,
             const Kernel& kernel);
GPPrediction gp_predict(const GPFit& fit, const std::vector<double>& x_star);

// Choose signal and noise variance by maximizing the log marginal likelihood
// over log-spaced grids (signal in [1e-3, 10], noise in [1e-6, 1]); the
// length scale stays fixed.
Kernel select_kernel(const std::vector<double>& x, const std::vector<double>& y,
                     double length_scale, int signal_grid_points = 17,
                     int noise_grid_points = 25);

// Convenience wrapper that maps y to zero mean / unit variance internally
// and maps predictions back. Kernel variances are interpreted in
// standardized units.
class StandardizedGP {
public:
    StandardizedGP(const std::vector<double>& x, const std::vector<double>& y,
                   Kernel kernel);

    GPPrediction predict(const std::vector<double>& x_star) const;

    double y_mean() const { return y_mean_; }
    double y_scale() const { return y_scale_; }
    const GPFit& fit() const { return fit_; }

private:
    static std::vector<double> standardize(const std::vector<double>& y, double mean,
                                           double scale);
    double y_mean_;
    double y_scale_;
    GPFit fit_;
};

double mean_of(const std::vector<double>& values);
double sd_of(const std::vector<double>& values);  // population sd; 0 for n < 2

}  // namespace morphoscale
