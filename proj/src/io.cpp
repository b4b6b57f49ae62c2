#include "morphoscale/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace morphoscale {

namespace {

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file '" + path + "'");
    }
    return in;
}

}  // namespace

void write_votes_jsonl(std::ostream& out, const std::vector<SimulatedGalaxy>& galaxies,
                       const GlobalAnswerIndex& index) {
    for (const auto& g : galaxies) {
        nlohmann::ordered_json line;
        line["galaxy_id"] = g.galaxy_id;
        line["campaign_id"] = g.campaign_id;
        auto votes = nlohmann::ordered_json::object();
        for (const auto& slice : index.question_slices()) {
            if (slice.campaign_id != g.campaign_id) continue;
            if (g.votes.question_total(slice) == 0) continue;  // absent means N = 0
            auto per_answer = nlohmann::ordered_json::object();
            for (std::size_t i = slice.begin; i < slice.end; ++i) {
                per_answer[index.key_of(i).answer_id] = g.votes.counts[i];
            }
            votes[slice.question_id] = std::move(per_answer);
        }
        line["votes"] = std::move(votes);
        out << line.dump() << "\n";
    }
}

std::vector<GalaxyVotesRecord> read_votes_jsonl(std::istream& in,
                                                const GlobalAnswerIndex& index) {
    std::vector<GalaxyVotesRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("votes line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        GalaxyVotesRecord rec;
        rec.galaxy_id = j.at("galaxy_id").get<std::string>();
        rec.campaign_id = j.at("campaign_id").get<std::string>();
        rec.votes.counts.assign(index.total(), 0);
        for (const auto& [qid, answers] : j.at("votes").items()) {
            for (const auto& [aid, count] : answers.items()) {
                const auto c = count.get<std::int64_t>();
                if (c < 0) {
                    throw std::runtime_error("votes line " + std::to_string(line_no) +
                                             ": negative count for " + qid + "/" + aid);
                }
                std::size_t pos;
                try {
                    pos = index.index_of({rec.campaign_id, qid, aid});
                } catch (const std::out_of_range&) {
                    throw std::runtime_error("votes line " + std::to_string(line_no) +
                                             ": unknown answer " + rec.campaign_id +
                                             "/" + qid + "/" + aid);
                }
                rec.votes.counts[pos] = c;
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<GalaxyVotesRecord> load_votes_file(const std::string& path,
                                               const GlobalAnswerIndex& index) {
    auto in = open_or_throw(path);
    return read_votes_jsonl(in, index);
}

void write_truth_jsonl(std::ostream& out, const std::vector<SimulatedGalaxy>& galaxies,
                       const std::vector<GroundTruthGalaxy>& truths,
                       const GlobalAnswerIndex& index) {
    if (galaxies.size() != truths.size()) {
        throw std::invalid_argument("write_truth_jsonl: galaxy/truth count mismatch");
    }
    for (std::size_t g = 0; g < galaxies.size(); ++g) {
        const auto& sim = galaxies[g];
        const auto& truth = truths[g];
        nlohmann::ordered_json line;
        line["galaxy_id"] = sim.galaxy_id;
        line["campaign_id"] = sim.campaign_id;
        auto alpha_star = nlohmann::ordered_json::object();
        auto rho = nlohmann::ordered_json::object();
        for (const auto& slice : index.question_slices()) {
            if (slice.campaign_id != sim.campaign_id) continue;
            const auto it = truth.alpha_star.find(slice.question_id);
            if (it != truth.alpha_star.end()) {
                alpha_star[slice.question_id] = it->second;
            }
            std::vector<double> r(sim.rho_used.begin() + static_cast<long>(slice.begin),
                                  sim.rho_used.begin() + static_cast<long>(slice.end));
            rho[slice.question_id] = std::move(r);
        }
        line["alpha_star"] = std::move(alpha_star);
        line["rho"] = std::move(rho);
        out << line.dump() << "\n";
    }
}

std::vector<GroundTruthGalaxy> read_truth_jsonl(std::istream& in) {
    std::vector<GroundTruthGalaxy> truths;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("truth line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        GroundTruthGalaxy truth;
        truth.galaxy_id = j.at("galaxy_id").get<std::string>();
        truth.campaign_id = j.at("campaign_id").get<std::string>();
        if (j.contains("alpha_star")) {
            for (const auto& [qid, values] : j["alpha_star"].items()) {
                truth.alpha_star[qid] = values.get<std::vector<double>>();
            }
        }
        if (j.contains("rho")) {
            for (const auto& [qid, values] : j["rho"].items()) {
                truth.fixed_rho[qid] = values.get<std::vector<double>>();
            }
        }
        truths.push_back(std::move(truth));
    }
    return truths;
}

std::vector<GroundTruthGalaxy> load_truth_file(const std::string& path) {
    auto in = open_or_throw(path);
    return read_truth_jsonl(in);
}

void write_features_jsonl(std::ostream& out, const std::vector<GalaxyFeatures>& rows) {
    for (const auto& row : rows) {
        nlohmann::ordered_json line;
        line["galaxy_id"] = row.galaxy_id;
        line["features"] = row.features;
        out << line.dump() << "\n";
    }
}

std::vector<GalaxyFeatures> read_features_jsonl(std::istream& in) {
    std::vector<GalaxyFeatures> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("features line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
        GalaxyFeatures row;
        row.galaxy_id = j.at("galaxy_id").get<std::string>();
        row.features = j.at("features").get<std::vector<double>>();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<GalaxyFeatures> load_features_file(const std::string& path) {
    auto in = open_or_throw(path);
    return read_features_jsonl(in);
}

MultiCampaignConcentrations parse_concentrations_json(const std::string& text,
                                                      const GlobalAnswerIndex& index) {
    const auto doc = nlohmann::json::parse(text);
    MultiCampaignConcentrations conc;
    conc.alpha.assign(index.total(), 0.0);
    for (const auto& slice : index.question_slices()) {
        if (!doc.contains(slice.campaign_id) ||
            !doc[slice.campaign_id].contains(slice.question_id)) {
            throw std::runtime_error("concentrations document is missing " +
                                     slice.campaign_id + "/" + slice.question_id);
        }
        const auto values =
            doc[slice.campaign_id][slice.question_id].get<std::vector<double>>();
        if (values.size() != slice.size()) {
            throw std::runtime_error("concentrations for " + slice.campaign_id + "/" +
                                     slice.question_id + " have wrong length");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            conc.alpha[slice.begin + i] = values[i];
        }
    }
    return conc;
}

MultiCampaignConcentrations load_concentrations_file(const std::string& path,
                                                     const GlobalAnswerIndex& index) {
    auto in = open_or_throw(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_concentrations_json(buffer.str(), index);
}

}  // namespace morphoscale
