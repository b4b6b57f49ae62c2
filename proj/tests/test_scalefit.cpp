#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "morphoscale/scalefit.hpp"
#include "support.hpp"

using namespace morphoscale;

namespace {

RunObservation obs(std::int64_t dataset_size, double loss, std::int64_t seed = 0,
                   const std::string& family = "ConvNeXT",
                   const std::string& variant = "nano") {
    RunObservation o;
    o.family = family;
    o.variant = variant;
    o.parameter_count = 15000000;
    o.dataset_size = dataset_size;
    o.seed = seed;
    o.test_loss = loss;
    return o;
}

// the published upstream fit for the ConvNeXT family; used as generator
// parameters for recovery experiments, never re-derived
constexpr double kM = -0.84;
constexpr double kB = 23.91;
constexpr double kSigma = 0.052;

std::vector<RunObservation> synthetic_runs(double m, double b, double sigma,
                                           const std::vector<std::int64_t>& sizes,
                                           int seeds, Rng& rng) {
    std::vector<RunObservation> data;
    for (const auto n : sizes) {
        for (int s = 0; s < seeds; ++s) {
            const double mu = m * std::log10(static_cast<double>(n)) + b;
            data.push_back(obs(n, sigma > 0.0 ? rng.normal(mu, sigma) : mu, s));
        }
    }
    return data;
}

LogProbFn standard_normal_2d() {
    return [](std::span<const double> x) {
        return -0.5 * (x[0] * x[0] + x[1] * x[1]);
    };
}

std::vector<std::vector<double>> ball_init(int walkers, double cx, double cy,
                                           double radius, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> init;
    init.reserve(static_cast<std::size_t>(walkers));
    for (int i = 0; i < walkers; ++i) {
        init.push_back({cx + radius * rng.normal(), cy + radius * rng.normal()});
    }
    return init;
}

}  // namespace

TEST_CASE("log posterior: zero residual gives the bare normalization") {
    const std::vector<RunObservation> data{
        obs(492000, kM * std::log10(492000.0) + kB)};
    const double sigma = kSigma;
    const double expected = -0.5 * std::log(2.0 * M_PI * sigma * sigma);
    CHECK(log_posterior(kM, kB, data, sigma, PriorBox{}) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log posterior: translation symmetry in intercept") {
    Rng rng(42);
    auto data = synthetic_runs(kM, kB, kSigma, {61500, 123000, 246000, 492000}, 3, rng);
    const double base = log_posterior(kM, kB, data, kSigma, PriorBox{});
    const double c = 1.75;
    for (auto& o : data) o.test_loss += c;
    CHECK(log_posterior(kM, kB + c, data, kSigma, PriorBox{}) ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("log posterior: published-fit arithmetic has zero residual") {
    // -0.84 * log10(492000) + 23.91 = 19.128749...
    const double predicted = kM * std::log10(492000.0) + kB;
    CHECK(predicted == doctest::Approx(19.129).epsilon(1e-4));
    const std::vector<RunObservation> data{obs(492000, predicted)};
    CHECK(log_posterior(kM, kB, data, kSigma, PriorBox{}) ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI * kSigma * kSigma)).epsilon(1e-12));
}

TEST_CASE("log posterior: prior support and input validation") {
    const std::vector<RunObservation> data{obs(1000, 10.0)};
    CHECK(std::isinf(log_posterior(11.0, 0.0, data, 1.0, PriorBox{})));
    CHECK(std::isinf(log_posterior(0.0, 101.0, data, 1.0, PriorBox{})));
    CHECK_THROWS_AS(log_posterior(0.0, 0.0, data, 0.0, PriorBox{}), std::invalid_argument);
    CHECK_THROWS_AS(log_posterior(0.0, 0.0, {}, 1.0, PriorBox{}), std::invalid_argument);
}

TEST_CASE("doubling residual distances strictly decreases the log posterior") {
    Rng rng(5);
    const auto data = synthetic_runs(kM, kB, kSigma, {61500, 123000, 246000}, 3, rng);
    const auto [m_ls, b_ls] = least_squares_fit(data, LogBase::Ten);
    auto doubled = data;
    for (auto& o : doubled) {
        const double on_line = m_ls * std::log10(static_cast<double>(o.dataset_size)) + b_ls;
        o.test_loss = on_line + 2.0 * (o.test_loss - on_line);
    }
    CHECK(log_posterior(m_ls, b_ls, doubled, kSigma, PriorBox{}) <
          log_posterior(m_ls, b_ls, data, kSigma, PriorBox{}));
}

TEST_CASE("stretch move: proposal lies on the line through walker and partner") {
    Rng rng(7);
    const std::vector<double> walker{1.0, -2.0};
    const std::vector<double> partner{0.5, 3.0};
    const auto lp = standard_normal_2d();
    for (int trial = 0; trial < 200; ++trial) {
        const auto result = stretch_move(walker, partner, 2.0, lp, lp(walker), rng);
        CHECK(result.z >= 0.5);
        CHECK(result.z <= 2.0);
        for (std::size_t i = 0; i < walker.size(); ++i) {
            const double expected = partner[i] + result.z * (walker[i] - partner[i]);
            CHECK(result.proposal[i] == doctest::Approx(expected).epsilon(1e-15));
        }
    }
    CHECK_THROWS_AS(stretch_move(walker, partner, 1.0, lp, lp(walker), rng),
                    std::invalid_argument);
}

TEST_CASE("stretch move z follows the 1/sqrt(z) density") {
    Rng rng(8);
    const double a = 2.0;
    const std::vector<double> walker{0.0};
    const std::vector<double> partner{1.0};
    const LogProbFn flat = [](std::span<const double>) { return 0.0; };
    const std::size_t n = 100000;
    std::vector<double> zs;
    zs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        zs.push_back(stretch_move(walker, partner, a, flat, 0.0, rng).z);
    }
    // CDF of g(z) ~ 1/sqrt(z) on [1/a, a]: (sqrt(z) - sqrt(1/a)) / (sqrt(a) - sqrt(1/a))
    const auto cdf = [a](double z) {
        return (std::sqrt(z) - std::sqrt(1.0 / a)) / (std::sqrt(a) - std::sqrt(1.0 / a));
    };
    const double d = testsupport::ks_statistic(zs, cdf);
    CHECK(d < testsupport::ks_critical_value(0.001, n));
}

TEST_CASE("ensemble recovers a 2-D standard normal") {
    EnsembleConfig config;
    config.walkers = 32;
    config.steps = 3000;
    config.burn_in = 600;
    config.seed = 99;
    const auto samples =
        run_ensemble(standard_normal_2d(), ball_init(32, 0.0, 0.0, 0.5, 1), config);

    CHECK(samples.acceptance_fraction > 0.2);
    CHECK(samples.acceptance_fraction < 0.9);
    for (int d = 0; d < 2; ++d) {
        const auto column = samples.param_column(d);
        double mean = 0.0;
        for (const auto v : column) mean += v;
        mean /= static_cast<double>(column.size());
        double var = 0.0;
        for (const auto v : column) var += (v - mean) * (v - mean);
        var /= static_cast<double>(column.size());
        CHECK(std::fabs(mean) < 0.05);
        CHECK(std::fabs(var - 1.0) < 0.08);
    }
    CHECK(samples.ess > 100.0);
}

TEST_CASE("flat target on the unit box never leaves the box") {
    const LogProbFn boxed = [](std::span<const double> x) {
        if (x[0] < 0.0 || x[0] > 1.0 || x[1] < 0.0 || x[1] > 1.0) {
            return -std::numeric_limits<double>::infinity();
        }
        return 0.0;
    };
    EnsembleConfig config;
    config.walkers = 16;
    config.steps = 500;
    config.burn_in = 100;
    config.seed = 3;
    const auto samples = run_ensemble(boxed, ball_init(16, 0.5, 0.5, 0.05, 2), config);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        CHECK(samples.at(s, 0) >= 0.0);
        CHECK(samples.at(s, 0) <= 1.0);
        CHECK(samples.at(s, 1) >= 0.0);
        CHECK(samples.at(s, 1) <= 1.0);
    }
}

TEST_CASE("same seed gives identical chains") {
    EnsembleConfig config;
    config.walkers = 8;
    config.steps = 200;
    config.burn_in = 50;
    config.seed = 12;
    const auto init = ball_init(8, 0.0, 0.0, 0.3, 4);
    const auto s1 = run_ensemble(standard_normal_2d(), init, config);
    const auto s2 = run_ensemble(standard_normal_2d(), init, config);
    CHECK(s1.chain == s2.chain);
    CHECK(s1.acceptance_fraction == s2.acceptance_fraction);
}

TEST_CASE("ensemble rejects bad configurations") {
    const auto lp = standard_normal_2d();
    EnsembleConfig config;
    config.walkers = 7;  // odd
    CHECK_THROWS_AS(run_ensemble(lp, ball_init(7, 0, 0, 0.1, 1), config),
                    std::invalid_argument);
    config.walkers = 4;  // < 2*dim + 2
    CHECK_THROWS_AS(run_ensemble(lp, ball_init(4, 0, 0, 0.1, 1), config),
                    std::invalid_argument);
    config.walkers = 8;
    config.steps = 100;
    config.burn_in = 100;  // >= steps
    CHECK_THROWS_AS(run_ensemble(lp, ball_init(8, 0, 0, 0.1, 1), config),
                    std::invalid_argument);
    // non-finite initialization
    const LogProbFn never = [](std::span<const double>) {
        return -std::numeric_limits<double>::infinity();
    };
    config.burn_in = 10;
    CHECK_THROWS_AS(run_ensemble(never, ball_init(8, 0, 0, 0.1, 1), config),
                    std::invalid_argument);
}

TEST_CASE("affine invariance of the stretch move chain") {
    // y = diag(4, 0.25) x: power-of-two scaling is exact in binary floating
    // point, so the transformed target under the same random stream must
    // reproduce the transformed chain bit for bit (same proposals, same z,
    // same acceptance decisions).
    const double l00 = 4.0, l11 = 0.25;
    const auto lp1 = standard_normal_2d();
    const LogProbFn lp2 = [&](std::span<const double> y) {
        const double x0 = y[0] / l00;
        const double x1 = y[1] / l11;
        return -0.5 * (x0 * x0 + x1 * x1);
    };
    EnsembleConfig config;
    config.walkers = 10;
    config.steps = 300;
    config.burn_in = 0;
    config.seed = 21;

    const auto init1 = ball_init(10, 0.1, -0.2, 0.4, 9);
    std::vector<std::vector<double>> init2;
    for (const auto& p : init1) {
        init2.push_back({l00 * p[0], l11 * p[1]});
    }
    const auto s1 = run_ensemble(lp1, init1, config);
    const auto s2 = run_ensemble(lp2, init2, config);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t s = 0; s < s1.size(); ++s) {
        CHECK(s2.at(s, 0) == l00 * s1.at(s, 0));
        CHECK(s2.at(s, 1) == l11 * s1.at(s, 1));
    }
}

TEST_CASE("posterior mean matches least squares under flat priors") {
    Rng rng(77);
    const auto data = synthetic_runs(kM, kB, kSigma, {61500, 123000, 246000, 492000}, 3, rng);
    FitConfig config;
    config.ensemble.steps = 4000;
    config.ensemble.burn_in = 800;
    config.ensemble.seed = 5;
    const auto result = fit_scaling_law(data, config);
    const auto [m_ls, b_ls] = least_squares_fit(data, LogBase::Ten);

    const auto m_column = result.samples.param_column(0);
    double m_mean = 0.0;
    for (const auto v : m_column) m_mean += v;
    m_mean /= static_cast<double>(m_column.size());
    double m_var = 0.0;
    for (const auto v : m_column) m_var += (v - m_mean) * (v - m_mean);
    m_var /= static_cast<double>(m_column.size());
    const double mc_se = std::sqrt(m_var / result.samples.ess);
    CHECK(std::fabs(m_mean - m_ls) < 3.0 * mc_se + 1e-4);
}

TEST_CASE("zero-noise data concentrates the posterior on the true line") {
    Rng rng(31);
    const auto data =
        synthetic_runs(kM, kB, 0.0, {61500, 123000, 246000, 492000}, 3, rng);
    FitConfig config;
    config.sigma = 1e-4;
    config.ensemble.steps = 3000;
    config.ensemble.burn_in = 600;
    config.ensemble.seed = 17;
    const auto result = fit_scaling_law(data, config);
    CHECK(std::fabs(result.summary.m.median - kM) < 0.01);
    CHECK(std::fabs(result.summary.b.median - kB) < 0.01);
}

TEST_CASE("recovery from published-parameter synthetic data") {
    Rng rng(2025);
    const auto data =
        synthetic_runs(kM, kB, kSigma, {61500, 123000, 246000, 492000}, 3, rng);
    FitConfig config;
    config.ensemble.steps = 1500;
    config.ensemble.burn_in = 300;
    config.ensemble.seed = 1;
    const auto result = fit_scaling_law(data, config);
    // sd of the slope estimate here is ~0.045; a single draw gets a 3.5 sigma
    // sanity bound, the 45-of-50 repetition gate lives in the acceptance suite
    CHECK(std::fabs(result.summary.m.median - kM) < 0.16);
    CHECK(result.summary.m.q05 <= result.summary.m.median);
    CHECK(result.summary.m.median <= result.summary.m.q95);
    CHECK(result.summary.b.q05 <= result.summary.b.median);
    CHECK(result.summary.b.median <= result.summary.b.q95);
}

TEST_CASE("single dataset size is non-identifiable") {
    Rng rng(3);
    std::vector<RunObservation> data;
    for (int s = 0; s < 5; ++s) data.push_back(obs(123000, 19.9 + 0.01 * s, s));
    CHECK_THROWS_AS(fit_scaling_law(data, FitConfig{}), std::invalid_argument);
}

TEST_CASE("fit is deterministic under a fixed seed") {
    Rng rng(4);
    const auto data = synthetic_runs(kM, kB, kSigma, {123000, 492000}, 3, rng);
    FitConfig config;
    config.ensemble.steps = 400;
    config.ensemble.burn_in = 100;
    config.ensemble.seed = 77;
    const auto r1 = fit_scaling_law(data, config);
    const auto r2 = fit_scaling_law(data, config);
    CHECK(r1.samples.chain == r2.samples.chain);
    CHECK(r1.summary.m.median == r2.summary.m.median);
}

TEST_CASE("posterior predictive bands") {
    // degenerate posterior: every sample at (m0, b0)
    PosteriorSamples degenerate;
    degenerate.dim = 2;
    degenerate.walkers = 1;
    degenerate.steps_post = 500;
    for (int i = 0; i < 500; ++i) {
        degenerate.chain.push_back(kM);
        degenerate.chain.push_back(kB);
    }
    degenerate.ess = 500.0;

    Rng rng(6);
    const double n = 246000.0;
    const double line = kM * std::log10(n) + kB;
    const auto band = posterior_predictive(degenerate, n, 1e-6, LogBase::Ten, rng);
    CHECK(band.q05 == doctest::Approx(line).epsilon(1e-5));
    CHECK(band.q95 == doctest::Approx(line).epsilon(1e-5));
    CHECK(band.mean == doctest::Approx(19.382).epsilon(1e-3));

    // predictive variance is at least sigma^2 (law of total variance)
    PosteriorSamples spread = degenerate;
    Rng jitter_rng(7);
    for (std::size_t i = 0; i < spread.chain.size(); i += 2) {
        spread.chain[i] += 0.02 * jitter_rng.normal();
        spread.chain[i + 1] += 0.1 * jitter_rng.normal();
    }
    const double sigma = 0.052;
    const auto noisy = posterior_predictive(spread, n, sigma, LogBase::Ten, rng);
    double mean = 0.0;
    for (const auto v : noisy.draws) mean += v;
    mean /= static_cast<double>(noisy.draws.size());
    double var = 0.0;
    for (const auto v : noisy.draws) var += (v - mean) * (v - mean);
    var /= static_cast<double>(noisy.draws.size());
    CHECK(var > sigma * sigma * 0.8);

    CHECK_THROWS_AS(posterior_predictive(degenerate, 0.5, sigma, LogBase::Ten, rng),
                    std::invalid_argument);
}

TEST_CASE("noise estimation") {
    SUBCASE("identical replicates give zero with a warning") {
        std::vector<RunObservation> data{obs(1000, 20.0, 0), obs(1000, 20.0, 1),
                                         obs(1000, 20.0, 2)};
        const auto estimate = estimate_noise_sigma(data);
        CHECK(estimate.sigma == 0.0);
        CHECK(estimate.zero_variance);
    }

    SUBCASE("two-point closed form") {
        std::vector<RunObservation> data{obs(1000, 19.0, 0), obs(1000, 19.1, 1)};
        const auto estimate = estimate_noise_sigma(data);
        CHECK(estimate.sigma == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(estimate.dof == 1);
    }

    SUBCASE("recovers an injected sigma from many groups") {
        Rng rng(11);
        std::vector<RunObservation> data;
        for (int g = 0; g < 200; ++g) {
            const double base = 18.0 + 0.01 * g;
            for (int s = 0; s < 3; ++s) {
                data.push_back(obs(1000 + g, base + rng.normal(0.0, 0.052), s));
            }
        }
        const auto estimate = estimate_noise_sigma(data);
        CHECK(estimate.sigma > 0.047);
        CHECK(estimate.sigma < 0.057);
        CHECK(estimate.groups_used == 200);
        CHECK(estimate.dof == 400);
    }

    SUBCASE("no replication is an error") {
        std::vector<RunObservation> data{obs(1000, 19.0, 0), obs(2000, 18.5, 0)};
        CHECK_THROWS_AS(estimate_noise_sigma(data), std::invalid_argument);
    }
}

TEST_CASE("quantile interpolation and summary formatting fixture") {
    // 21 sorted values put q05 at index 1, the median at 10, q95 at 19
    auto ramp = [](double q05, double median, double q95) {
        std::vector<double> v(21);
        v[0] = q05 - 0.03;
        v[1] = q05;
        for (int i = 2; i < 10; ++i) {
            v[i] = q05 + (median - q05) * static_cast<double>(i - 1) / 9.0;
        }
        v[10] = median;
        for (int i = 11; i < 19; ++i) {
            v[i] = median + (q95 - median) * static_cast<double>(i - 10) / 9.0;
        }
        v[19] = q95;
        v[20] = q95 + 0.03;
        return v;
    };
    const auto m_values = ramp(-1.07, -0.95, -0.84);
    const auto b_values = ramp(24.20, 24.84, 25.50);

    PosteriorSamples samples;
    samples.dim = 2;
    samples.walkers = 1;
    samples.steps_post = 21;
    for (int i = 0; i < 21; ++i) {
        samples.chain.push_back(m_values[static_cast<std::size_t>(i)]);
        samples.chain.push_back(b_values[static_cast<std::size_t>(i)]);
    }
    samples.ess = 21.0;

    const auto summary = summarize_samples(samples, kSigma);
    CHECK(format_summary(summary) == "-0.95 (-1.07, -0.84), 24.84 (24.20, 25.50)");

    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({5.0}, 0.0) == 5.0);
    CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(quantile({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("samples CSV round trip") {
    PosteriorSamples samples;
    samples.dim = 2;
    samples.walkers = 1;
    samples.steps_post = 3;
    samples.chain = {-0.84, 23.91, -0.85, 23.95, -0.83, 23.88};
    samples.ess = 3.0;
    const auto text = samples_to_csv(samples);
    std::istringstream in(text);
    const auto parsed = samples_from_csv(in);
    REQUIRE(parsed.size() == 3);
    for (std::size_t s = 0; s < 3; ++s) {
        CHECK(parsed.at(s, 0) == samples.at(s, 0));
        CHECK(parsed.at(s, 1) == samples.at(s, 1));
    }
    std::istringstream bad("x,y\n1,2\n");
    CHECK_THROWS(samples_from_csv(bad));
}

TEST_CASE("log base configuration") {
    CHECK(apply_log_base(1000.0, LogBase::Ten) == doctest::Approx(3.0));
    CHECK(apply_log_base(std::exp(2.0), LogBase::Natural) == doctest::Approx(2.0));
    const std::vector<RunObservation> data{obs(100, 2.0), obs(10000, 1.0)};
    const auto [m10, b10] = least_squares_fit(data, LogBase::Ten);
    CHECK(m10 == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(b10 == doctest::Approx(3.0).epsilon(1e-12));
    const auto [me, be] = least_squares_fit(data, LogBase::Natural);
    CHECK(me == doctest::Approx(-0.5 / std::log(10.0)).epsilon(1e-12));
    (void)be;
}
