#include "morphoscale/toytrain.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "morphoscale/rng.hpp"

namespace morphoscale {

double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double concentration_link(double z, double cap) {
    if (!(cap > 1.0)) {
        throw std::invalid_argument("concentration_link: cap must be > 1");
    }
    const double range = cap - 1.0;
    const double alpha = 1.0 + range * std::tanh(softplus(z) / range);
    // keep the open interval (1, cap) even where 1 + tiny rounds to 1
    return std::max(alpha, std::nextafter(1.0, 2.0));
}

double concentration_link_grad(double z, double cap) {
    if (!(cap > 1.0)) {
        throw std::invalid_argument("concentration_link: cap must be > 1");
    }
    const double range = cap - 1.0;
    const double t = std::tanh(softplus(z) / range);
    return (1.0 - t * t) * logistic(z);
}

LinearHead LinearHead::zeros(int feature_dim, int answer_dim) {
    if (feature_dim < 1 || answer_dim < 1) {
        throw std::invalid_argument("LinearHead: dimensions must be >= 1");
    }
    LinearHead head;
    head.weights = Eigen::MatrixXd::Zero(feature_dim, answer_dim);
    head.bias = Eigen::VectorXd::Zero(answer_dim);
    return head;
}

namespace {

Eigen::VectorXd raw_outputs(const LinearHead& head, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != head.feature_dim()) {
        throw std::invalid_argument("forward: feature length " +
                                    std::to_string(features.size()) + " != head input " +
                                    std::to_string(head.feature_dim()));
    }
    for (const auto f : features) {
        if (!std::isfinite(f)) {
            throw std::invalid_argument("forward: non-finite feature");
        }
    }
    const Eigen::Map<const Eigen::VectorXd> x(features.data(),
                                              static_cast<Eigen::Index>(features.size()));
    return head.weights.transpose() * x + head.bias;
}

}  // namespace

MultiCampaignConcentrations forward(const LinearHead& head,
                                    const std::vector<double>& features) {
    const Eigen::VectorXd z = raw_outputs(head, features);
    MultiCampaignConcentrations conc;
    conc.alpha.resize(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        conc.alpha[static_cast<std::size_t>(i)] = concentration_link(z(i), head.alpha_cap);
    }
    return conc;
}

HeadGradient loss_gradient(const LinearHead& head,
                           const std::vector<TrainExample>& examples,
                           const GlobalAnswerIndex& index) {
    if (examples.empty()) {
        throw std::invalid_argument("loss_gradient: empty example set");
    }
    HeadGradient grad;
    grad.weights = Eigen::MatrixXd::Zero(head.feature_dim(), head.answer_dim());
    grad.bias = Eigen::VectorXd::Zero(head.answer_dim());

    for (const auto& example : examples) {
        const Eigen::VectorXd z = raw_outputs(head, example.features);
        MultiCampaignConcentrations conc;
        conc.alpha.resize(static_cast<std::size_t>(z.size()));
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            conc.alpha[static_cast<std::size_t>(i)] =
                concentration_link(z(i), head.alpha_cap);
        }
        const auto dll_dalpha = multi_task_gradient(example.votes, conc, index);

        // dNLL/dz_i = -dlogL/dalpha_i * link'(z_i); masked slices stay zero
        Eigen::VectorXd dz = Eigen::VectorXd::Zero(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (dll_dalpha[ui] != 0.0) {
                dz(i) = -dll_dalpha[ui] * concentration_link_grad(z(i), head.alpha_cap);
            }
        }
        const Eigen::Map<const Eigen::VectorXd> x(
            example.features.data(), static_cast<Eigen::Index>(example.features.size()));
        grad.weights.noalias() += x * dz.transpose();
        grad.bias += dz;
    }
    const double inv = 1.0 / static_cast<double>(examples.size());
    grad.weights *= inv;
    grad.bias *= inv;
    return grad;
}

double dataset_mean_nll(const LinearHead& head,
                        const std::vector<TrainExample>& dataset,
                        const GlobalAnswerIndex& index, bool include_coefficient) {
    if (dataset.empty()) {
        throw std::invalid_argument("dataset_mean_nll: empty dataset");
    }
    double sum = 0.0;
    for (const auto& example : dataset) {
        const auto conc = forward(head, example.features);
        sum += multi_task_log_likelihood(example.votes, conc, index, include_coefficient);
    }
    return -sum / static_cast<double>(dataset.size());
}

TrainResult train(LinearHead head, const std::vector<TrainExample>& dataset,
                  const GlobalAnswerIndex& index, const TrainConfig& config) {
    if (dataset.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (!(config.learning_rate >= 0.0)) {
        throw std::invalid_argument("train: learning_rate must be >= 0");
    }
    if (config.epochs < 1 || config.batch_size < 1) {
        throw std::invalid_argument("train: epochs and batch_size must be >= 1");
    }
    if (config.weight_decay < 0.0) {
        throw std::invalid_argument("train: weight_decay must be >= 0");
    }
    for (const auto& example : dataset) {
        if (example.votes.counts.size() != index.total() ||
            static_cast<int>(example.features.size()) != head.feature_dim()) {
            throw std::invalid_argument("train: example dimensions do not match");
        }
    }

    TrainResult result;
    result.epoch_mean_nll.reserve(static_cast<std::size_t>(config.epochs) + 1);
    result.epoch_mean_nll.push_back(dataset_mean_nll(head, dataset, index));

    Rng rng(config.rng_seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<TrainExample> batch;
            batch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
            const auto grad = loss_gradient(head, batch, index);
            if (config.weight_decay > 0.0) {
                head.weights *= 1.0 - config.learning_rate * config.weight_decay;
                head.bias *= 1.0 - config.learning_rate * config.weight_decay;
            }
            head.weights.noalias() -= config.learning_rate * grad.weights;
            head.bias -= config.learning_rate * grad.bias;
        }
        const double nll = dataset_mean_nll(head, dataset, index);
        if (!std::isfinite(nll)) {
            throw std::runtime_error(
                "train: diverged at epoch " + std::to_string(epoch + 1) +
                "; last finite mean NLL was " +
                std::to_string(result.epoch_mean_nll.back()));
        }
        result.epoch_mean_nll.push_back(nll);
    }
    result.head = std::move(head);
    return result;
}

EvaluationReport evaluate(const LinearHead& head,
                          const std::vector<TrainExample>& dataset,
                          const GlobalAnswerIndex& index) {
    if (dataset.empty()) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    EvaluationReport report;
    report.mean_nll = dataset_mean_nll(head, dataset, index);

    std::map<std::string, std::pair<double, std::int64_t>> accum;  // sum, count
    for (const auto& example : dataset) {
        const auto conc = forward(head, example.features);
        for (const auto& slice : index.question_slices()) {
            const auto n = example.votes.question_total(slice);
            if (n == 0) continue;
            double alpha_sum = 0.0;
            for (std::size_t i = slice.begin; i < slice.end; ++i) {
                alpha_sum += conc.alpha[i];
            }
            double abs_err = 0.0;
            for (std::size_t i = slice.begin; i < slice.end; ++i) {
                const double predicted = conc.alpha[i] / alpha_sum;
                const double observed = static_cast<double>(example.votes.counts[i]) /
                                        static_cast<double>(n);
                abs_err += std::fabs(predicted - observed);
            }
            auto& [sum, count] = accum[slice.campaign_id + "/" + slice.question_id];
            sum += abs_err / static_cast<double>(slice.size());
            ++count;
        }
    }
    double total = 0.0;
    for (const auto& [label, pair] : accum) {
        const double mean = pair.first / static_cast<double>(pair.second);
        report.per_question_calibration[label] = mean;
        total += mean;
    }
    report.mean_calibration =
        accum.empty() ? 0.0 : total / static_cast<double>(accum.size());
    return report;
}

}  // namespace morphoscale
