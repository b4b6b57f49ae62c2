#pragma once
// Deterministic random variate generation.
//
// Engine: std::mt19937_64, whose output sequence is specified exactly by the
// C++ standard and so is identical across platforms and compilers. The
// variate transforms are implemented here rather than via
// std::*_distribution (whose algorithms are implementation-defined), which
// makes every stream a pure function of the seed:
//   uniform     high 53 bits of one engine draw, mapped to [0, 1)
//   uniform_int unbiased rejection sampling
//   normal      Marsaglia polar method (pairs cached)
//   gamma       Marsaglia-Tsang squeeze for shape >= 1, with the
//               U^(1/shape) boost below 1
//   dirichlet   normalized gamma draws
// Substream seeds are derived with the splitmix64 finalizer so that
// per-galaxy / per-walker streams are independent of evaluation order.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace morphoscale {

// One step of the splitmix64 generator (advances state, returns output).
std::uint64_t splitmix64(std::uint64_t& state);

// Seed for the substream identified by (base, ordinal).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t ordinal);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer on [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    double normal();
    double normal(double mean, double sd);

    // Gamma(shape, scale 1), shape > 0.
    double gamma(double shape);

    std::vector<double> dirichlet(std::span<const double> alpha);

    // Index draw proportional to non-negative weights (need not be normalized).
    std::size_t categorical(std::span<const double> weights);

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace morphoscale
