#include "morphoscale/scalefit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace morphoscale {

double apply_log_base(double x, LogBase base) {
    return base == LogBase::Ten ? std::log10(x) : std::log(x);
}

const char* log_base_name(LogBase base) {
    return base == LogBase::Ten ? "10" : "e";
}

bool PriorBox::contains(double m, double b) const {
    return m >= m_lo && m <= m_hi && b >= b_lo && b <= b_hi;
}

double log_posterior(double m, double b, const std::vector<RunObservation>& data,
                     double sigma, const PriorBox& priors, LogBase log_base) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("log_posterior: sigma must be > 0");
    }
    if (data.empty()) {
        throw std::invalid_argument("log_posterior: empty data");
    }
    if (!priors.contains(m, b)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double log_norm = -0.5 * std::log(2.0 * M_PI * sigma * sigma);
    double total = 0.0;
    for (const auto& obs : data) {
        const double predicted =
            m * apply_log_base(static_cast<double>(obs.dataset_size), log_base) + b;
        const double r = (obs.test_loss - predicted) / sigma;
        total += log_norm - 0.5 * r * r;
    }
    return total;
}

StretchResult stretch_move(std::span<const double> walker,
                           std::span<const double> partner, double a,
                           const LogProbFn& log_prob, double log_prob_walker,
                           Rng& rng) {
    if (!(a > 1.0)) {
        throw std::invalid_argument("stretch_move: requires a > 1");
    }
    if (walker.size() != partner.size() || walker.empty()) {
        throw std::invalid_argument("stretch_move: dimension mismatch");
    }
    const auto dim = walker.size();

    // z ~ g(z) proportional to 1/sqrt(z) on [1/a, a]
    const double u = rng.uniform();
    const double s = (a - 1.0) * u + 1.0;
    const double z = s * s / a;

    StretchResult result;
    result.z = z;
    result.proposal.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        result.proposal[i] = partner[i] + z * (walker[i] - partner[i]);
    }
    result.log_prob_proposal = log_prob(result.proposal);

    const double log_ratio = (static_cast<double>(dim) - 1.0) * std::log(z) +
                             result.log_prob_proposal - log_prob_walker;
    if (log_ratio >= 0.0) {
        result.accepted = true;
    } else {
        result.accepted = std::log(rng.uniform()) < log_ratio;
    }
    return result;
}

double PosteriorSamples::at(std::size_t sample, int param) const {
    return chain[sample * static_cast<std::size_t>(dim) + static_cast<std::size_t>(param)];
}

std::vector<double> PosteriorSamples::param_column(int param) const {
    std::vector<double> column(size());
    for (std::size_t s = 0; s < size(); ++s) column[s] = at(s, param);
    return column;
}

namespace {

// Integrated autocorrelation time of one parameter, in ensemble steps.
// Per-walker autocovariances are averaged across the ensemble, then summed
// with Sokal's adaptive window (smallest T with T >= c * tau(T), c = 5).
double integrated_autocorr_time(const PosteriorSamples& samples, int param) {
    const int n = samples.steps_post;
    const int w = samples.walkers;
    if (n < 4) return 1.0;

    double mean = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) mean += samples.at(s, param);
    mean /= static_cast<double>(samples.size());

    auto value = [&](int step, int walker) {
        return samples.chain[(static_cast<std::size_t>(step) * w + walker) * samples.dim +
                             param] -
               mean;
    };

    auto autocov = [&](int lag) {
        double acc = 0.0;
        for (int walker = 0; walker < w; ++walker) {
            for (int t = 0; t + lag < n; ++t) {
                acc += value(t, walker) * value(t + lag, walker);
            }
        }
        return acc / (static_cast<double>(w) * static_cast<double>(n - lag));
    };

    const double c0 = autocov(0);
    if (!(c0 > 0.0)) return 1.0;

    const double window_c = 5.0;
    double tau = 1.0;
    for (int lag = 1; lag < n; ++lag) {
        tau += 2.0 * autocov(lag) / c0;
        if (static_cast<double>(lag) >= window_c * tau) break;
    }
    return std::max(tau, 1.0);
}

}  // namespace

PosteriorSamples run_ensemble(const LogProbFn& log_prob,
                              const std::vector<std::vector<double>>& init,
                              const EnsembleConfig& config) {
    const int walkers = static_cast<int>(init.size());
    if (walkers < 4 || walkers % 2 != 0) {
        throw std::invalid_argument("run_ensemble: walker count must be even and >= 4");
    }
    const int dim = static_cast<int>(init.front().size());
    if (dim < 1) {
        throw std::invalid_argument("run_ensemble: empty parameter vector");
    }
    if (walkers < 2 * dim + 2) {
        throw std::invalid_argument("run_ensemble: need at least 2*dim + 2 walkers");
    }
    if (config.steps < 1) {
        throw std::invalid_argument("run_ensemble: steps must be >= 1");
    }
    const int burn_in = config.burn_in >= 0 ? config.burn_in : config.steps / 5;
    if (burn_in >= config.steps) {
        throw std::invalid_argument("run_ensemble: burn-in must be < steps");
    }

    std::vector<std::vector<double>> positions = init;
    std::vector<double> log_probs(walkers);
    for (int i = 0; i < walkers; ++i) {
        if (static_cast<int>(positions[i].size()) != dim) {
            throw std::invalid_argument("run_ensemble: ragged initial point cloud");
        }
        log_probs[i] = log_prob(positions[i]);
        if (!std::isfinite(log_probs[i])) {
            throw std::invalid_argument(
                "run_ensemble: initial walker " + std::to_string(i) +
                " has non-finite log probability");
        }
    }

    PosteriorSamples samples;
    samples.dim = dim;
    samples.walkers = walkers;
    samples.steps_post = config.steps - burn_in;
    samples.chain.resize(static_cast<std::size_t>(samples.steps_post) * walkers * dim);

    Rng rng(config.seed);
    const int half = walkers / 2;
    std::int64_t accepted = 0;

    for (int step = 0; step < config.steps; ++step) {
        // update each half against the frozen complementary half
        for (int side = 0; side < 2; ++side) {
            const int begin = side == 0 ? 0 : half;
            const int end = side == 0 ? half : walkers;
            const int other_begin = side == 0 ? half : 0;
            for (int wi = begin; wi < end; ++wi) {
                const int partner =
                    other_begin + static_cast<int>(rng.uniform_int(0, half - 1));
                const auto result =
                    stretch_move(positions[wi], positions[partner], config.stretch_a,
                                 log_prob, log_probs[wi], rng);
                if (result.accepted) {
                    positions[wi] = result.proposal;
                    log_probs[wi] = result.log_prob_proposal;
                    ++accepted;
                }
            }
        }
        if (step >= burn_in) {
            const std::size_t base =
                static_cast<std::size_t>(step - burn_in) * walkers * dim;
            for (int wi = 0; wi < walkers; ++wi) {
                for (int d = 0; d < dim; ++d) {
                    samples.chain[base + static_cast<std::size_t>(wi) * dim + d] =
                        positions[wi][d];
                }
            }
        }
    }

    samples.acceptance_fraction =
        static_cast<double>(accepted) /
        (static_cast<double>(config.steps) * static_cast<double>(walkers));

    samples.autocorr_time.resize(dim);
    double max_tau = 1.0;
    for (int d = 0; d < dim; ++d) {
        samples.autocorr_time[d] = integrated_autocorr_time(samples, d);
        max_tau = std::max(max_tau, samples.autocorr_time[d]);
    }
    samples.ess = static_cast<double>(samples.size()) / max_tau;
    samples.short_chain_warning = static_cast<double>(samples.steps_post) < 50.0 * max_tau;

    return samples;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw std::invalid_argument("quantile: empty sample");
    }
    if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument("quantile: p must be in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - std::floor(h);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::pair<double, double> least_squares_fit(const std::vector<RunObservation>& data,
                                            LogBase log_base) {
    if (data.size() < 2) {
        throw std::invalid_argument("least_squares_fit: need at least 2 observations");
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& obs : data) {
        const double x = apply_log_base(static_cast<double>(obs.dataset_size), log_base);
        sx += x;
        sy += obs.test_loss;
        sxx += x * x;
        sxy += x * obs.test_loss;
    }
    const double n = static_cast<double>(data.size());
    const double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-12) {
        throw std::invalid_argument(
            "least_squares_fit: dataset sizes are degenerate (single distinct size)");
    }
    const double m = (n * sxy - sx * sy) / denom;
    const double b = (sy - m * sx) / n;
    return {m, b};
}

FitResult fit_scaling_law(const std::vector<RunObservation>& data,
                          const FitConfig& config) {
    if (data.size() < 2) {
        throw std::invalid_argument("fit_scaling_law: need at least 2 observations");
    }
    std::set<std::int64_t> sizes;
    for (const auto& obs : data) sizes.insert(obs.dataset_size);
    if (sizes.size() < 2) {
        throw std::invalid_argument(
            "fit_scaling_law: non-identifiable, all runs share one dataset size");
    }

    const auto [m0, b0] = least_squares_fit(data, config.log_base);

    const LogProbFn posterior = [&data, &config](std::span<const double> params) {
        return log_posterior(params[0], params[1], data, config.sigma, config.priors,
                             config.log_base);
    };

    // small Gaussian ball around the least-squares solution, clamped into the
    // prior box
    Rng init_rng(derive_seed(config.ensemble.seed, 0x494e4954ull));
    std::vector<std::vector<double>> init(static_cast<std::size_t>(config.ensemble.walkers));
    const double m_scale = std::max(1e-4, 1e-3 * std::max(1.0, std::fabs(m0)));
    const double b_scale = std::max(1e-4, 1e-3 * std::max(1.0, std::fabs(b0)));
    for (auto& point : init) {
        const double m = std::clamp(m0 + m_scale * init_rng.normal(), config.priors.m_lo,
                                    config.priors.m_hi);
        const double b = std::clamp(b0 + b_scale * init_rng.normal(), config.priors.b_lo,
                                    config.priors.b_hi);
        point = {m, b};
    }

    FitResult result;
    result.samples = run_ensemble(posterior, init, config.ensemble);
    result.summary = summarize_samples(result.samples, config.sigma);
    return result;
}

PosteriorSummary summarize_samples(const PosteriorSamples& samples, double sigma) {
    if (samples.dim != 2) {
        throw std::invalid_argument("summarize_samples: expected 2 parameters (m, b)");
    }
    if (samples.size() == 0) {
        throw std::invalid_argument("summarize_samples: empty sample set");
    }
    PosteriorSummary summary;
    const auto m_column = samples.param_column(0);
    const auto b_column = samples.param_column(1);
    summary.m = {quantile(m_column, 0.5), quantile(m_column, 0.05),
                 quantile(m_column, 0.95)};
    summary.b = {quantile(b_column, 0.5), quantile(b_column, 0.05),
                 quantile(b_column, 0.95)};
    summary.sigma = sigma;
    summary.acceptance_fraction = samples.acceptance_fraction;
    summary.ess = samples.ess;
    summary.n_samples = samples.size();
    summary.short_chain_warning = samples.short_chain_warning;
    return summary;
}

std::string format_summary(const PosteriorSummary& summary) {
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "%.2f (%.2f, %.2f), %.2f (%.2f, %.2f)",
                  summary.m.median, summary.m.q05, summary.m.q95, summary.b.median,
                  summary.b.q05, summary.b.q95);
    return buffer;
}

PredictiveBand posterior_predictive(const PosteriorSamples& samples,
                                    double dataset_size, double sigma,
                                    LogBase log_base, Rng& rng) {
    if (samples.size() == 0) {
        throw std::invalid_argument("posterior_predictive: empty sample set");
    }
    if (!(dataset_size >= 1.0)) {
        throw std::invalid_argument("posterior_predictive: dataset_size must be >= 1");
    }
    if (!(sigma >= 0.0)) {
        throw std::invalid_argument("posterior_predictive: sigma must be >= 0");
    }
    const double x = apply_log_base(dataset_size, log_base);
    PredictiveBand band;
    band.draws.resize(samples.size());
    double sum = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const double mu = samples.at(s, 0) * x + samples.at(s, 1);
        band.draws[s] = sigma > 0.0 ? rng.normal(mu, sigma) : mu;
        sum += band.draws[s];
    }
    band.mean = sum / static_cast<double>(band.draws.size());
    band.q05 = quantile(band.draws, 0.05);
    band.q95 = quantile(band.draws, 0.95);
    return band;
}

std::string samples_to_csv(const PosteriorSamples& samples) {
    if (samples.dim != 2) {
        throw std::invalid_argument("samples_to_csv: expected 2 parameters (m, b)");
    }
    std::string out = "m,b\n";
    char buffer[80];
    for (std::size_t s = 0; s < samples.size(); ++s) {
        std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g\n", samples.at(s, 0),
                      samples.at(s, 1));
        out += buffer;
    }
    return out;
}

PosteriorSamples samples_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("m,b", 0) != 0) {
        throw std::runtime_error("samples CSV must start with header 'm,b'");
    }
    PosteriorSamples samples;
    samples.dim = 2;
    samples.walkers = 1;  // flattened; chain structure is not preserved
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double m, b;
        if (std::sscanf(line.c_str(), "%lf,%lf", &m, &b) != 2) {
            throw std::runtime_error("samples CSV: cannot parse row '" + line + "'");
        }
        samples.chain.push_back(m);
        samples.chain.push_back(b);
        ++rows;
    }
    if (rows == 0) {
        throw std::runtime_error("samples CSV has no rows");
    }
    samples.steps_post = static_cast<int>(rows);
    samples.autocorr_time = {1.0, 1.0};
    samples.ess = static_cast<double>(rows);
    return samples;
}

PosteriorSamples load_samples_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open samples file '" + path + "'");
    }
    return samples_from_csv(in);
}

NoiseEstimate estimate_noise_sigma(const std::vector<RunObservation>& data) {
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::vector<double>>
        groups;
    for (const auto& obs : data) {
        groups[{obs.family, obs.variant, obs.dataset_size}].push_back(obs.test_loss);
    }
    double ss = 0.0;
    long dof = 0;
    int used = 0;
    for (const auto& [key, losses] : groups) {
        (void)key;
        if (losses.size() < 2) continue;
        double mean = 0.0;
        for (const auto v : losses) mean += v;
        mean /= static_cast<double>(losses.size());
        for (const auto v : losses) ss += (v - mean) * (v - mean);
        dof += static_cast<long>(losses.size()) - 1;
        ++used;
    }
    if (used == 0) {
        throw std::invalid_argument(
            "estimate_noise_sigma: no (family, variant, dataset_size) group has >= 2 seeds");
    }
    NoiseEstimate estimate;
    estimate.sigma = std::sqrt(ss / static_cast<double>(dof));
    estimate.dof = dof;
    estimate.groups_used = used;
    estimate.zero_variance = estimate.sigma == 0.0;
    return estimate;
}

}  // namespace morphoscale
