#pragma once
// Analytic Dirichlet-Multinomial log-likelihood, its gradient in the
// concentrations, the multi-question sum, and multi-campaign masking.
//
// For one question with counts k (total N = sum k) and concentrations alpha
// (A = sum alpha):
//
//   log L = log N! - sum_i log k_i!          (multinomial coefficient)
//         + log Gamma(A) - log Gamma(N + A)
//         + sum_i [log Gamma(k_i + alpha_i) - log Gamma(alpha_i)]
//
//   d log L / d alpha_i
//         = psi(A) - psi(N + A) + psi(k_i + alpha_i) - psi(alpha_i)
//
// Everything is computed in log-gamma space; there are no factorials. A
// question with N = 0 has likelihood exactly 1 (log 0.0) and a bit-exact
// zero gradient, which is what makes joint training across campaigns with
// sparse supervision work: unanswered questions never touch the gradients.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "morphoscale/schema.hpp"

namespace morphoscale {

// Concentrations at or below this are rejected, never clamped.
inline constexpr double kMinAlpha = 1e-12;

// Vote counts for a single question: one count per answer.
struct VoteCounts {
    std::vector<std::int64_t> k;
    std::int64_t total = 0;  // invariant: total == sum(k)

    static VoteCounts from_counts(std::vector<std::int64_t> counts);
};

// Strictly positive Dirichlet concentrations for a single question.
struct Concentrations {
    std::vector<double> alpha;
};

// Global vote-count vector, one slot per answer of every question of every
// campaign, laid out by a GlobalAnswerIndex.
struct MultiCampaignVotes {
    std::vector<std::int64_t> counts;

    std::int64_t question_total(const QuestionSlice& slice) const;
};

// Global concentration vector matching the same layout. Every answer is
// always predicted; only answered questions contribute to the loss.
struct MultiCampaignConcentrations {
    std::vector<double> alpha;
};

// Span-level core. N is derived as sum(k). Throws std::invalid_argument on
// mismatched lengths, negative counts, or alpha <= kMinAlpha / non-finite.
double log_dirmult(std::span<const std::int64_t> k, std::span<const double> alpha,
                   bool include_coefficient = true);
double log_dirmult(const VoteCounts& votes, const Concentrations& conc,
                   bool include_coefficient = true);

std::vector<double> grad_log_dirmult(std::span<const std::int64_t> k,
                                     std::span<const double> alpha);
std::vector<double> grad_log_dirmult(const VoteCounts& votes, const Concentrations& conc);
// Writes the gradient into out (same length as k); used by the global sweep.
void grad_log_dirmult_into(std::span<const std::int64_t> k,
                           std::span<const double> alpha, std::span<double> out);

// Sum of per-question log-likelihoods over the whole index. Questions with
// N = 0 contribute exactly 0.
double multi_task_log_likelihood(const MultiCampaignVotes& votes,
                                 const MultiCampaignConcentrations& conc,
                                 const GlobalAnswerIndex& index,
                                 bool include_coefficient = true);

// Gradient of the sum, length index.total(). Slices of unanswered questions
// are constructed as zeros, never computed-and-rounded.
std::vector<double> multi_task_gradient(const MultiCampaignVotes& votes,
                                        const MultiCampaignConcentrations& conc,
                                        const GlobalAnswerIndex& index);

using GalaxyBatch =
    std::vector<std::pair<MultiCampaignVotes, MultiCampaignConcentrations>>;

// -(1/B) * sum of multi_task_log_likelihood over the batch. Throws on an
// empty batch.
double mean_negative_log_likelihood(const GalaxyBatch& batch,
                                    const GlobalAnswerIndex& index,
                                    bool include_coefficient = true);

}  // namespace morphoscale
