#include "morphoscale/dirmult.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "morphoscale/special.hpp"

namespace morphoscale {

VoteCounts VoteCounts::from_counts(std::vector<std::int64_t> counts) {
    VoteCounts votes;
    votes.total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    votes.k = std::move(counts);
    return votes;
}

std::int64_t MultiCampaignVotes::question_total(const QuestionSlice& slice) const {
    std::int64_t total = 0;
    for (std::size_t i = slice.begin; i < slice.end; ++i) total += counts.at(i);
    return total;
}

namespace {

void check_inputs(std::span<const std::int64_t> k, std::span<const double> alpha) {
    if (k.size() != alpha.size()) {
        throw std::invalid_argument("dirmult: k and alpha lengths differ (" +
                                    std::to_string(k.size()) + " vs " +
                                    std::to_string(alpha.size()) + ")");
    }
    if (k.empty()) {
        throw std::invalid_argument("dirmult: empty vote vector");
    }
    for (const auto c : k) {
        if (c < 0) throw std::invalid_argument("dirmult: negative vote count");
    }
    for (const auto a : alpha) {
        if (!(a > kMinAlpha) || !std::isfinite(a)) {
            throw std::invalid_argument(
                "dirmult: concentrations must be finite and > 1e-12");
        }
    }
}

void check_struct(const VoteCounts& votes, const Concentrations& conc) {
    const auto sum =
        std::accumulate(votes.k.begin(), votes.k.end(), std::int64_t{0});
    if (sum != votes.total) {
        throw std::invalid_argument("dirmult: stored total " +
                                    std::to_string(votes.total) +
                                    " does not match sum(k) = " + std::to_string(sum));
    }
    check_inputs(votes.k, conc.alpha);
}

}  // namespace

double log_dirmult(std::span<const std::int64_t> k, std::span<const double> alpha,
                   bool include_coefficient) {
    check_inputs(k, alpha);
    std::int64_t n = 0;
    for (const auto c : k) n += c;
    if (n == 0) return 0.0;  // p(no answers | alpha, N=0) = 1 for every alpha

    double alpha_sum = 0.0;
    double log_like = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        alpha_sum += alpha[i];
        log_like += log_gamma(static_cast<double>(k[i]) + alpha[i]) - log_gamma(alpha[i]);
        if (include_coefficient) {
            log_like -= log_gamma(static_cast<double>(k[i]) + 1.0);
        }
    }
    log_like += log_gamma(alpha_sum) - log_gamma(static_cast<double>(n) + alpha_sum);
    if (include_coefficient) {
        log_like += log_gamma(static_cast<double>(n) + 1.0);
    }
    return log_like;
}

double log_dirmult(const VoteCounts& votes, const Concentrations& conc,
                   bool include_coefficient) {
    check_struct(votes, conc);
    return log_dirmult(std::span<const std::int64_t>(votes.k),
                       std::span<const double>(conc.alpha), include_coefficient);
}

void grad_log_dirmult_into(std::span<const std::int64_t> k,
                           std::span<const double> alpha, std::span<double> out) {
    check_inputs(k, alpha);
    if (out.size() != k.size()) {
        throw std::invalid_argument("dirmult: gradient output length mismatch");
    }
    std::int64_t n = 0;
    for (const auto c : k) n += c;
    if (n == 0) {
        for (auto& g : out) g = 0.0;  // exact zeros, by construction
        return;
    }
    double alpha_sum = 0.0;
    for (const auto a : alpha) alpha_sum += a;
    const double common = digamma(alpha_sum) - digamma(static_cast<double>(n) + alpha_sum);
    for (std::size_t i = 0; i < k.size(); ++i) {
        out[i] = common + digamma(static_cast<double>(k[i]) + alpha[i]) - digamma(alpha[i]);
    }
}

std::vector<double> grad_log_dirmult(std::span<const std::int64_t> k,
                                     std::span<const double> alpha) {
    std::vector<double> grad(k.size(), 0.0);
    grad_log_dirmult_into(k, alpha, grad);
    return grad;
}

std::vector<double> grad_log_dirmult(const VoteCounts& votes, const Concentrations& conc) {
    check_struct(votes, conc);
    return grad_log_dirmult(std::span<const std::int64_t>(votes.k),
                            std::span<const double>(conc.alpha));
}

namespace {

void check_global_sizes(const MultiCampaignVotes& votes,
                        const MultiCampaignConcentrations& conc,
                        const GlobalAnswerIndex& index) {
    if (votes.counts.size() != index.total() || conc.alpha.size() != index.total()) {
        throw std::invalid_argument(
            "multi-campaign vectors must have length " + std::to_string(index.total()) +
            " (got counts " + std::to_string(votes.counts.size()) + ", alpha " +
            std::to_string(conc.alpha.size()) + ")");
    }
}

}  // namespace

double multi_task_log_likelihood(const MultiCampaignVotes& votes,
                                 const MultiCampaignConcentrations& conc,
                                 const GlobalAnswerIndex& index,
                                 bool include_coefficient) {
    check_global_sizes(votes, conc, index);
    double total = 0.0;
    for (const auto& slice : index.question_slices()) {
        if (votes.question_total(slice) == 0) continue;  // contributes exactly 0
        const std::span<const std::int64_t> k(votes.counts.data() + slice.begin,
                                              slice.size());
        const std::span<const double> alpha(conc.alpha.data() + slice.begin,
                                            slice.size());
        total += log_dirmult(k, alpha, include_coefficient);
    }
    return total;
}

std::vector<double> multi_task_gradient(const MultiCampaignVotes& votes,
                                        const MultiCampaignConcentrations& conc,
                                        const GlobalAnswerIndex& index) {
    check_global_sizes(votes, conc, index);
    std::vector<double> grad(index.total(), 0.0);
    for (const auto& slice : index.question_slices()) {
        if (votes.question_total(slice) == 0) continue;  // slice stays bit-exact zero
        const std::span<const std::int64_t> k(votes.counts.data() + slice.begin,
                                              slice.size());
        const std::span<const double> alpha(conc.alpha.data() + slice.begin,
                                            slice.size());
        grad_log_dirmult_into(k, alpha,
                              std::span<double>(grad.data() + slice.begin, slice.size()));
    }
    return grad;
}

double mean_negative_log_likelihood(const GalaxyBatch& batch,
                                    const GlobalAnswerIndex& index,
                                    bool include_coefficient) {
    if (batch.empty()) {
        throw std::invalid_argument("mean_negative_log_likelihood: empty batch");
    }
    double sum = 0.0;
    for (const auto& [votes, conc] : batch) {
        sum += multi_task_log_likelihood(votes, conc, index, include_coefficient);
    }
    return -sum / static_cast<double>(batch.size());
}

}  // namespace morphoscale
