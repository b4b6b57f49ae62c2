#pragma once
// Synthetic volunteer votes over campaign decision trees.
//
// Each volunteer is walked through the tree individually: they answer every
// root question, and each chosen answer enqueues its follow-up question.
// That guarantees exact count conservation: a question's trial total always
// equals the summed votes on the answers that trigger it (plus the root
// allocation), matching the real labelling process.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "morphoscale/dirmult.hpp"
#include "morphoscale/rng.hpp"
#include "morphoscale/schema.hpp"

namespace morphoscale {

// Per-question ground truth for one galaxy. alpha_star drives the Dirichlet
// draw of the per-galaxy answer probabilities; fixed_rho, when present for a
// question, is used directly in FixedRho mode.
struct GroundTruthGalaxy {
    std::string galaxy_id;
    std::string campaign_id;
    std::map<std::string, std::vector<double>> alpha_star;
    std::map<std::string, std::vector<double>> fixed_rho;
};

enum class RhoMode {
    FixedRho,            // fixed_rho if given, else alpha_star normalized
    SampleRhoPerGalaxy,  // rho ~ Dirichlet(alpha_star), fresh per galaxy
};

struct SimulationConfig {
    int volunteers_at_root = 40;
    std::uint64_t rng_seed = 0;
    RhoMode rho_mode = RhoMode::SampleRhoPerGalaxy;
    // When set, the per-galaxy root volunteer count is drawn uniformly from
    // this inclusive range instead of volunteers_at_root.
    std::optional<std::pair<int, int>> volunteers_range;
};

struct SimulatedGalaxy {
    std::string galaxy_id;
    std::string campaign_id;
    MultiCampaignVotes votes;       // global layout, zero outside own campaign
    std::vector<double> rho_used;   // realized rho, global layout, zero elsewhere
    int volunteers = 0;             // root volunteer count for this galaxy
};

// Simulate one galaxy. The rng is the galaxy's own substream.
SimulatedGalaxy sample_galaxy_votes(const Campaign& campaign,
                                    const GroundTruthGalaxy& truth,
                                    const SimulationConfig& config,
                                    const GlobalAnswerIndex& index, Rng& rng);

// Simulate a dataset. Deterministic for a fixed config.rng_seed: each galaxy
// gets the substream derive_seed(rng_seed, position), so results do not
// depend on evaluation order.
std::vector<SimulatedGalaxy> sample_dataset(const std::vector<Campaign>& campaigns,
                                            const std::vector<GroundTruthGalaxy>& truths,
                                            const SimulationConfig& config,
                                            const GlobalAnswerIndex& index);

// Feature vector for the toy trainer: the galaxy's realized rho in global
// layout plus iid N(0, noise_sd) noise on every component.
std::vector<double> make_features(const SimulatedGalaxy& galaxy, double noise_sd,
                                  Rng& rng);

}  // namespace morphoscale
