#pragma once
// Desk-scale trainer: a linear head maps per-galaxy feature vectors to
// multi-campaign concentrations through a positivity link, trained by
// mini-batch gradient descent on the masked Dirichlet-Multinomial loss.
//
// Link: alpha = 1 + (cap - 1) * tanh(softplus(z) / (cap - 1)), a smooth,
// strictly increasing map from the reals onto (1, cap); it tracks
// 1 + softplus(z) for moderate z and saturates at the cap. Bounded
// concentrations keep the digamma gradients tame.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "morphoscale/dirmult.hpp"
#include "morphoscale/schema.hpp"

namespace morphoscale {

double softplus(double z);
double logistic(double z);

double concentration_link(double z, double cap = 100.0);
double concentration_link_grad(double z, double cap = 100.0);

struct LinearHead {
    Eigen::MatrixXd weights;  // feature_dim x answer_dim
    Eigen::VectorXd bias;     // answer_dim
    double alpha_cap = 100.0;

    static LinearHead zeros(int feature_dim, int answer_dim);

    int feature_dim() const { return static_cast<int>(weights.rows()); }
    int answer_dim() const { return static_cast<int>(weights.cols()); }
};

// alpha = link(W^T x + c); throws on non-finite features or length mismatch.
MultiCampaignConcentrations forward(const LinearHead& head,
                                    const std::vector<double>& features);

struct TrainExample {
    std::vector<double> features;
    MultiCampaignVotes votes;
};

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 50;
    int batch_size = 32;
    double weight_decay = 0.0;  // decoupled: W <- (1 - lr*wd) W - lr*grad
    std::uint64_t rng_seed = 0;
};

struct HeadGradient {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

// Gradient of the mean negative log-likelihood over the examples
// (multinomial coefficient omitted: it is constant in the parameters).
// Answer columns of unanswered questions receive bit-exact zeros.
HeadGradient loss_gradient(const LinearHead& head,
                           const std::vector<TrainExample>& examples,
                           const GlobalAnswerIndex& index);

struct TrainResult {
    LinearHead head;
    // mean NLL (coefficient included) over the full dataset; entry 0 is the
    // pre-training value, entry e the value after epoch e.
    std::vector<double> epoch_mean_nll;
};

// Deterministic under config.rng_seed (batch order comes from a seeded
// shuffle). Throws std::runtime_error if the loss goes non-finite.
TrainResult train(LinearHead head, const std::vector<TrainExample>& dataset,
                  const GlobalAnswerIndex& index, const TrainConfig& config);

struct EvaluationReport {
    double mean_nll = 0.0;  // coefficient included
    // "campaign/question" -> mean |alpha_i/sum(alpha) - k_i/N| over answered
    // galaxies and answers
    std::map<std::string, double> per_question_calibration;
    double mean_calibration = 0.0;  // over questions with any answers
};

EvaluationReport evaluate(const LinearHead& head,
                          const std::vector<TrainExample>& dataset,
                          const GlobalAnswerIndex& index);

double dataset_mean_nll(const LinearHead& head,
                        const std::vector<TrainExample>& dataset,
                        const GlobalAnswerIndex& index,
                        bool include_coefficient = true);

}  // namespace morphoscale
