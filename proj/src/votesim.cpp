#include "morphoscale/votesim.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace morphoscale {

namespace {

std::vector<double> resolve_rho(const Question& question, const GroundTruthGalaxy& truth,
                                const SimulationConfig& config, Rng& rng) {
    const auto alpha_it = truth.alpha_star.find(question.id);
    const auto rho_it = truth.fixed_rho.find(question.id);

    if (config.rho_mode == RhoMode::FixedRho && rho_it != truth.fixed_rho.end()) {
        const auto& rho = rho_it->second;
        if (rho.size() != question.answers.size()) {
            throw std::invalid_argument("fixed rho for question '" + question.id +
                                        "' has wrong length");
        }
        double sum = 0.0;
        for (const auto p : rho) {
            if (p < 0.0 || !std::isfinite(p)) {
                throw std::invalid_argument("fixed rho for question '" + question.id +
                                            "' must be non-negative and finite");
            }
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("fixed rho for question '" + question.id +
                                        "' must sum to 1");
        }
        return rho;
    }

    if (alpha_it == truth.alpha_star.end()) {
        throw std::invalid_argument("ground truth for galaxy '" + truth.galaxy_id +
                                    "' is missing question '" + question.id + "'");
    }
    const auto& alpha = alpha_it->second;
    if (alpha.size() != question.answers.size()) {
        throw std::invalid_argument("alpha_star for question '" + question.id +
                                    "' has wrong length");
    }
    for (const auto a : alpha) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw std::invalid_argument("alpha_star for question '" + question.id +
                                        "' must be positive and finite");
        }
    }

    if (config.rho_mode == RhoMode::SampleRhoPerGalaxy) {
        return rng.dirichlet(alpha);
    }
    // FixedRho without an explicit rho: the Dirichlet mean alpha / sum(alpha)
    double sum = 0.0;
    for (const auto a : alpha) sum += a;
    std::vector<double> rho(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) rho[i] = alpha[i] / sum;
    return rho;
}

}  // namespace

SimulatedGalaxy sample_galaxy_votes(const Campaign& campaign,
                                    const GroundTruthGalaxy& truth,
                                    const SimulationConfig& config,
                                    const GlobalAnswerIndex& index, Rng& rng) {
    if (truth.campaign_id != campaign.id) {
        throw std::invalid_argument("ground truth for galaxy '" + truth.galaxy_id +
                                    "' names campaign '" + truth.campaign_id +
                                    "', not '" + campaign.id + "'");
    }

    SimulatedGalaxy out;
    out.galaxy_id = truth.galaxy_id;
    out.campaign_id = campaign.id;
    out.votes.counts.assign(index.total(), 0);
    out.rho_used.assign(index.total(), 0.0);

    const auto order = question_order(campaign);

    // realized rho per question, resolved in topological order so the draw
    // sequence is stable
    std::unordered_map<std::string, std::vector<double>> rho;
    for (const auto& qid : order) {
        const Question* q = campaign.find_question(qid);
        rho.emplace(qid, resolve_rho(*q, truth, config, rng));
        const auto& slice = index.slice_of(campaign.id, qid);
        const auto& r = rho.at(qid);
        for (std::size_t i = 0; i < r.size(); ++i) out.rho_used[slice.begin + i] = r[i];
    }

    int volunteers = config.volunteers_at_root;
    if (config.volunteers_range) {
        const auto [lo, hi] = *config.volunteers_range;
        if (lo < 1 || hi < lo) {
            throw std::invalid_argument("volunteers_range must satisfy 1 <= lo <= hi");
        }
        volunteers = static_cast<int>(rng.uniform_int(lo, hi));
    }
    if (volunteers < 1) {
        throw std::invalid_argument("volunteers_at_root must be >= 1");
    }
    out.volunteers = volunteers;

    // answer id -> local position, per question
    std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> answer_pos;
    for (const auto& q : campaign.questions) {
        auto& pos = answer_pos[q.id];
        for (std::size_t i = 0; i < q.answers.size(); ++i) pos.emplace(q.answers[i].id, i);
    }

    for (int v = 0; v < volunteers; ++v) {
        // trials this volunteer owes each question; roots get one apiece
        std::unordered_map<std::string, int> trials;
        for (const auto& root : campaign.roots) ++trials[root];
        for (const auto& qid : order) {
            const auto it = trials.find(qid);
            if (it == trials.end() || it->second == 0) continue;
            const Question* q = campaign.find_question(qid);
            const auto& slice = index.slice_of(campaign.id, qid);
            const auto& r = rho.at(qid);
            for (int t = 0; t < it->second; ++t) {
                const std::size_t pick = rng.categorical(r);
                ++out.votes.counts[slice.begin + pick];
                const auto& child = q->answers[pick].child_question;
                if (child) ++trials[*child];
            }
        }
    }

    return out;
}

std::vector<SimulatedGalaxy> sample_dataset(const std::vector<Campaign>& campaigns,
                                            const std::vector<GroundTruthGalaxy>& truths,
                                            const SimulationConfig& config,
                                            const GlobalAnswerIndex& index) {
    std::unordered_map<std::string, const Campaign*> by_id;
    for (const auto& c : campaigns) by_id.emplace(c.id, &c);

    std::vector<SimulatedGalaxy> dataset;
    dataset.reserve(truths.size());
    for (std::size_t g = 0; g < truths.size(); ++g) {
        const auto it = by_id.find(truths[g].campaign_id);
        if (it == by_id.end()) {
            throw std::invalid_argument("ground truth for galaxy '" +
                                        truths[g].galaxy_id +
                                        "' names unknown campaign '" +
                                        truths[g].campaign_id + "'");
        }
        Rng galaxy_rng(derive_seed(config.rng_seed, g));
        dataset.push_back(
            sample_galaxy_votes(*it->second, truths[g], config, index, galaxy_rng));
    }
    return dataset;
}

std::vector<double> make_features(const SimulatedGalaxy& galaxy, double noise_sd,
                                  Rng& rng) {
    if (noise_sd < 0.0) {
        throw std::invalid_argument("make_features: noise_sd must be >= 0");
    }
    std::vector<double> features(galaxy.rho_used.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        features[i] = galaxy.rho_used[i] + (noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0);
    }
    return features;
}

}  // namespace morphoscale
