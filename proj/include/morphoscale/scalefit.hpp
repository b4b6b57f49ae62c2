#pragma once
// Bayesian fit of the linear scaling law (test loss vs. log dataset size)
// with an affine-invariant ensemble sampler.
//
// Model: loss_j ~ Normal(m * log(N_j) + b, sigma), sigma fixed
// (homoskedastic seed-to-seed scatter). Priors are flat boxes. The sampler
// is the Goodman-Weare stretch move: draw z with density proportional to
// 1/sqrt(z) on [1/a, a] (inverse CDF z = ((a-1)u + 1)^2 / a), propose
// Y = X' + z (X - X') against a walker X' from the complementary
// half-ensemble, and accept with probability min(1, z^(d-1) p(Y)/p(X)).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "morphoscale/rng.hpp"

namespace morphoscale {

struct RunObservation {
    std::string family;
    std::string variant;
    std::int64_t parameter_count = 0;
    std::int64_t dataset_size = 0;   // labelled images
    std::int64_t seed = 0;
    double test_loss = 0.0;
};

enum class LogBase { Ten, Natural };
double apply_log_base(double x, LogBase base);
const char* log_base_name(LogBase base);

// Flat prior box; log prior is 0 inside, -inf outside.
struct PriorBox {
    double m_lo = -10.0, m_hi = 10.0;
    double b_lo = -100.0, b_hi = 100.0;

    bool contains(double m, double b) const;
};

double log_posterior(double m, double b, const std::vector<RunObservation>& data,
                     double sigma, const PriorBox& priors,
                     LogBase log_base = LogBase::Ten);

using LogProbFn = std::function<double(std::span<const double>)>;

struct StretchResult {
    std::vector<double> proposal;
    double z = 0.0;
    double log_prob_proposal = 0.0;
    bool accepted = false;
};

// One stretch move for `walker` against the complementary `partner`.
// log_prob_walker is the cached density at `walker`.
StretchResult stretch_move(std::span<const double> walker,
                           std::span<const double> partner, double a,
                           const LogProbFn& log_prob, double log_prob_walker,
                           Rng& rng);

struct EnsembleConfig {
    int walkers = 32;        // even, >= 2*dim + 2
    int steps = 2000;
    int burn_in = -1;        // < 0 means 20% of steps
    double stretch_a = 2.0;
    std::uint64_t seed = 0;
};

struct PosteriorSamples {
    int dim = 0;
    int walkers = 0;
    int steps_post = 0;                 // retained steps after burn-in
    std::vector<double> chain;          // steps_post * walkers * dim, step-major
    double acceptance_fraction = 0.0;
    std::vector<double> autocorr_time;  // per parameter, in ensemble steps
    double ess = 0.0;
    bool short_chain_warning = false;   // chain shorter than 50 autocorr times

    std::size_t size() const {
        return static_cast<std::size_t>(steps_post) * static_cast<std::size_t>(walkers);
    }
    double at(std::size_t sample, int param) const;
    std::vector<double> param_column(int param) const;
};

// Run the ensemble from an explicit point cloud (one position per walker).
// Every initial walker must have finite log probability.
PosteriorSamples run_ensemble(const LogProbFn& log_prob,
                              const std::vector<std::vector<double>>& init,
                              const EnsembleConfig& config);

struct QuantileSummary {
    double median = 0.0, q05 = 0.0, q95 = 0.0;
};

struct PosteriorSummary {
    QuantileSummary m;
    QuantileSummary b;
    double sigma = 0.0;
    double acceptance_fraction = 0.0;
    double ess = 0.0;
    std::size_t n_samples = 0;
    bool short_chain_warning = false;
};

struct FitConfig {
    double sigma = 0.052;
    LogBase log_base = LogBase::Ten;
    PriorBox priors;
    EnsembleConfig ensemble;
};

struct FitResult {
    PosteriorSummary summary;
    PosteriorSamples samples;
};

// Quantile summary of a 2-D (m, b) sample set; also usable on samples read
// back from a CSV.
PosteriorSummary summarize_samples(const PosteriorSamples& samples, double sigma);

// Raw samples CSV with header "m,b".
std::string samples_to_csv(const PosteriorSamples& samples);
PosteriorSamples samples_from_csv(std::istream& in);
PosteriorSamples load_samples_file(const std::string& path);

// Requires >= 2 distinct dataset sizes (throws std::invalid_argument
// otherwise: single-size data cannot identify the gradient). Walkers start
// in a small Gaussian ball around the least-squares solution.
FitResult fit_scaling_law(const std::vector<RunObservation>& data,
                          const FitConfig& config);

// "m (q05, q95), b (q05, q95)" with two decimals.
std::string format_summary(const PosteriorSummary& summary);

struct PredictiveBand {
    std::vector<double> draws;
    double mean = 0.0, q05 = 0.0, q95 = 0.0;
};

// One Normal(m s + b, sigma) draw per posterior sample, s = log(dataset_size).
PredictiveBand posterior_predictive(const PosteriorSamples& samples,
                                    double dataset_size, double sigma,
                                    LogBase log_base, Rng& rng);

struct NoiseEstimate {
    double sigma = 0.0;
    long dof = 0;           // pooled denominator, sum of (n_g - 1)
    int groups_used = 0;    // groups with >= 2 seeds
    bool zero_variance = false;
};

// Pooled standard deviation of within-(family, variant, dataset_size)
// residuals. Throws when no group has replication.
NoiseEstimate estimate_noise_sigma(const std::vector<RunObservation>& data);

// Quantile with linear interpolation between order statistics
// (h = (n - 1) p). Sorts a copy.
double quantile(std::vector<double> values, double p);

// Ordinary least squares (m, b) on (log N, loss).
std::pair<double, double> least_squares_fit(const std::vector<RunObservation>& data,
                                            LogBase log_base);

}  // namespace morphoscale
