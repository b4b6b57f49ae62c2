#include "morphoscale/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace morphoscale {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t ordinal) {
    std::uint64_t state = base + (ordinal + 1) * 0x9E3779B97F4A7C15ull;
    splitmix64(state);
    return splitmix64(state);
}

double Rng::uniform() {
    // 2^53 = 9007199254740992
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) {
        throw std::invalid_argument("uniform_int: lo > hi");
    }
    const std::uint64_t range =
        static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (range == 0) {  // full 64-bit range
        return static_cast<std::int64_t>(next_u64());
    }
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() / range * range;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % range);
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
}

double Rng::normal(double mean, double sd) {
    return mean + sd * normal();
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw std::invalid_argument("gamma: requires shape > 0");
    }
    if (shape < 1.0) {
        double u = uniform();
        while (u == 0.0) u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> Rng::dirichlet(std::span<const double> alpha) {
    if (alpha.empty()) {
        throw std::invalid_argument("dirichlet: empty alpha");
    }
    std::vector<double> draws(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        draws[i] = gamma(alpha[i]);
        sum += draws[i];
    }
    if (sum <= 0.0) {
        // all gamma draws underflowed; fall back to the uniform simplex point
        const double w = 1.0 / static_cast<double>(alpha.size());
        for (auto& d : draws) d = w;
        return draws;
    }
    for (auto& d : draws) d /= sum;
    return draws;
}

std::size_t Rng::categorical(std::span<const double> weights) {
    if (weights.empty()) {
        throw std::invalid_argument("categorical: empty weights");
    }
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw std::invalid_argument("categorical: weights must be finite and >= 0");
        }
        total += w;
    }
    if (total <= 0.0) {
        throw std::invalid_argument("categorical: weights sum to zero");
    }
    const double r = uniform() * total;
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) last_positive = i;
        cum += weights[i];
        if (r < cum) return i;
    }
    return last_positive;
}

}  // namespace morphoscale
