#pragma once
// JSON-lines readers and writers for galaxy vote records, ground truth
// sidecars, and feature vectors, plus the global-concentration document.
//
// Vote records: one galaxy per line,
//   {"galaxy_id": ..., "campaign_id": ..., "votes": {question: {answer: count}}}
// Questions absent from "votes" have N = 0; all other campaigns are zero by
// construction. Writers emit questions and answers in declaration order, so
// output bytes depend only on the data.

#include <iosfwd>
#include <string>
#include <vector>

#include "morphoscale/dirmult.hpp"
#include "morphoscale/schema.hpp"
#include "morphoscale/votesim.hpp"

namespace morphoscale {

struct GalaxyVotesRecord {
    std::string galaxy_id;
    std::string campaign_id;
    MultiCampaignVotes votes;  // global layout
};

void write_votes_jsonl(std::ostream& out, const std::vector<SimulatedGalaxy>& galaxies,
                       const GlobalAnswerIndex& index);
std::vector<GalaxyVotesRecord> read_votes_jsonl(std::istream& in,
                                                const GlobalAnswerIndex& index);
std::vector<GalaxyVotesRecord> load_votes_file(const std::string& path,
                                               const GlobalAnswerIndex& index);

// Ground-truth sidecar: {"galaxy_id", "campaign_id", "alpha_star": {q: [..]},
// "rho": {q: [..]}?}. The writer adds the realized per-galaxy rho so tests
// can score predictions against it.
void write_truth_jsonl(std::ostream& out, const std::vector<SimulatedGalaxy>& galaxies,
                       const std::vector<GroundTruthGalaxy>& truths,
                       const GlobalAnswerIndex& index);
std::vector<GroundTruthGalaxy> read_truth_jsonl(std::istream& in);
std::vector<GroundTruthGalaxy> load_truth_file(const std::string& path);

// Feature vectors: {"galaxy_id", "features": [..]}.
struct GalaxyFeatures {
    std::string galaxy_id;
    std::vector<double> features;
};
void write_features_jsonl(std::ostream& out, const std::vector<GalaxyFeatures>& rows);
std::vector<GalaxyFeatures> read_features_jsonl(std::istream& in);
std::vector<GalaxyFeatures> load_features_file(const std::string& path);

// Global concentrations: {"campaign": {"question": [alpha...]}}; every
// question of every campaign in the index must be present.
MultiCampaignConcentrations parse_concentrations_json(const std::string& text,
                                                      const GlobalAnswerIndex& index);
MultiCampaignConcentrations load_concentrations_file(const std::string& path,
                                                     const GlobalAnswerIndex& index);

}  // namespace morphoscale
