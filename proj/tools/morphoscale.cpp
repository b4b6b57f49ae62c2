// morphoscale: command-line front end for the crowd-label loss, the vote
// simulator, the scaling-law fitter, GP regression, and run aggregation.
//
// Exit codes: 0 success, 1 validation/data error, 2 usage error. Every
// subcommand echoes its resolved configuration to stderr; stdout and output
// files carry only machine-readable results, byte-stable under a fixed seed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "morphoscale/dirmult.hpp"
#include "morphoscale/gp.hpp"
#include "morphoscale/io.hpp"
#include "morphoscale/rng.hpp"
#include "morphoscale/runstore.hpp"
#include "morphoscale/scalefit.hpp"
#include "morphoscale/schema.hpp"
#include "morphoscale/toytrain.hpp"
#include "morphoscale/votesim.hpp"

namespace ms = morphoscale;
using ordered_json = nlohmann::ordered_json;

namespace {

// post-parse argument problems that should exit with the usage code
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void echo_config(const std::string& subcommand, const ordered_json& config) {
    ordered_json line;
    line["subcommand"] = subcommand;
    line["config"] = config;
    std::cerr << "config " << line.dump() << "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file '" + path + "'");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("failed writing output file '" + path + "'");
    }
}

void emit(const std::optional<std::string>& path, const std::string& text) {
    if (path) {
        write_text_file(*path, text);
    } else {
        std::cout << text;
    }
}

ms::LogBase parse_log_base(const std::string& name) {
    if (name == "10") return ms::LogBase::Ten;
    if (name == "e") return ms::LogBase::Natural;
    throw UsageError("--log-base must be '10' or 'e'");
}

std::string format_double(double value, const char* fmt = "%.10g") {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), fmt, value);
    return buffer;
}

// ---------------------------------------------------------------- schema --

struct SchemaValidateArgs {
    std::string file;
};

int run_schema_validate(const SchemaValidateArgs& args) {
    echo_config("schema validate", {{"file", args.file}});
    const auto campaigns = ms::load_campaigns_file(args.file);
    bool all_ok = true;
    for (const auto& campaign : campaigns) {
        const auto report = ms::validate_campaign(campaign);
        for (const auto& v : report.violations) {
            std::cout << "violation campaign=" << campaign.id
                      << " code=" << ms::violation_code_name(v.code) << " at=" << v.where
                      << " " << v.message << "\n";
            all_ok = false;
        }
    }
    if (all_ok) {
        std::cout << "ok\n";
        return 0;
    }
    return 1;
}

// -------------------------------------------------------------- simulate --

struct SimulateArgs {
    std::string schema_file;
    std::string truth_file;
    std::string out_file;
    int n_volunteers = 40;
    std::uint64_t seed = 0;
    std::string rho_mode = "sample";
    int volunteers_min = 0;
    int volunteers_max = 0;
    std::optional<std::string> features_out;
    double feature_noise = 0.02;
    std::optional<std::string> truth_out;
};

int run_simulate(const SimulateArgs& args) {
    ordered_json config{{"schema", args.schema_file},
                        {"truth", args.truth_file},
                        {"out", args.out_file},
                        {"n_volunteers", args.n_volunteers},
                        {"seed", args.seed},
                        {"rho_mode", args.rho_mode},
                        {"feature_noise", args.feature_noise}};
    if (args.volunteers_min > 0) {
        config["volunteers_min"] = args.volunteers_min;
        config["volunteers_max"] = args.volunteers_max;
    }
    echo_config("simulate", config);

    const auto campaigns = ms::load_campaigns_file(args.schema_file);
    const auto index = ms::GlobalAnswerIndex::build(campaigns);
    const auto truths = ms::load_truth_file(args.truth_file);

    ms::SimulationConfig sim;
    sim.volunteers_at_root = args.n_volunteers;
    sim.rng_seed = args.seed;
    if (args.rho_mode == "sample") {
        sim.rho_mode = ms::RhoMode::SampleRhoPerGalaxy;
    } else if (args.rho_mode == "fixed") {
        sim.rho_mode = ms::RhoMode::FixedRho;
    } else {
        throw UsageError("--rho-mode must be 'sample' or 'fixed'");
    }
    if (args.volunteers_min > 0 || args.volunteers_max > 0) {
        if (args.volunteers_min < 1 || args.volunteers_max < args.volunteers_min) {
            throw UsageError(
                "--volunteers-min/--volunteers-max must satisfy 1 <= min <= max");
        }
        sim.volunteers_range = {{args.volunteers_min, args.volunteers_max}};
    }

    const auto dataset = ms::sample_dataset(campaigns, truths, sim, index);

    std::ostringstream votes;
    ms::write_votes_jsonl(votes, dataset, index);
    write_text_file(args.out_file, votes.str());

    if (args.features_out) {
        std::vector<ms::GalaxyFeatures> rows;
        rows.reserve(dataset.size());
        for (std::size_t g = 0; g < dataset.size(); ++g) {
            ms::Rng rng(ms::derive_seed(args.seed ^ 0xFEA70123ull, g));
            rows.push_back({dataset[g].galaxy_id,
                            ms::make_features(dataset[g], args.feature_noise, rng)});
        }
        std::ostringstream features;
        ms::write_features_jsonl(features, rows);
        write_text_file(*args.features_out, features.str());
    }
    if (args.truth_out) {
        std::ostringstream truth;
        ms::write_truth_jsonl(truth, dataset, truths, index);
        write_text_file(*args.truth_out, truth.str());
    }
    std::cerr << "simulated " << dataset.size() << " galaxies over " << campaigns.size()
              << " campaigns\n";
    return 0;
}

// ------------------------------------------------------------------ loss --

struct LossArgs {
    std::string schema_file;
    std::string votes_file;
    std::string alpha_file;
    bool no_coefficient = false;
};

int run_loss(const LossArgs& args) {
    echo_config("loss", {{"schema", args.schema_file},
                         {"votes", args.votes_file},
                         {"alpha", args.alpha_file},
                         {"include_coefficient", !args.no_coefficient}});
    const auto campaigns = ms::load_campaigns_file(args.schema_file);
    const auto index = ms::GlobalAnswerIndex::build(campaigns);
    const auto records = ms::load_votes_file(args.votes_file, index);
    const auto conc = ms::load_concentrations_file(args.alpha_file, index);
    const bool include_coefficient = !args.no_coefficient;

    // per-question totals across all galaxies, in index order
    std::vector<double> per_question(index.question_slices().size(), 0.0);
    double total = 0.0;
    for (const auto& record : records) {
        const auto& slices = index.question_slices();
        for (std::size_t s = 0; s < slices.size(); ++s) {
            const auto& slice = slices[s];
            if (record.votes.question_total(slice) == 0) continue;
            std::vector<std::int64_t> k(
                record.votes.counts.begin() + static_cast<long>(slice.begin),
                record.votes.counts.begin() + static_cast<long>(slice.end));
            std::vector<double> alpha(
                conc.alpha.begin() + static_cast<long>(slice.begin),
                conc.alpha.begin() + static_cast<long>(slice.end));
            const double value = ms::log_dirmult(k, alpha, include_coefficient);
            per_question[s] += value;
            total += value;
        }
    }

    ordered_json out;
    out["n_galaxies"] = records.size();
    out["include_coefficient"] = include_coefficient;
    out["total_log_likelihood"] = total;
    ordered_json per_q = ordered_json::object();
    const auto& slices = index.question_slices();
    for (std::size_t s = 0; s < slices.size(); ++s) {
        per_q[slices[s].campaign_id + "/" + slices[s].question_id] = per_question[s];
    }
    out["per_question"] = per_q;
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------ grad-check --

struct GradCheckArgs {
    int trials = 100;
    std::uint64_t seed = 0;
    double tol = 1e-6;
};

int run_grad_check(const GradCheckArgs& args) {
    echo_config("grad-check",
                {{"trials", args.trials}, {"seed", args.seed}, {"tol", args.tol}});
    ms::Rng rng(args.seed);
    double max_err = 0.0;
    for (int trial = 0; trial < args.trials; ++trial) {
        const std::size_t answers = 2 + static_cast<std::size_t>(rng.uniform_int(0, 2));
        std::vector<double> alpha(answers);
        for (auto& a : alpha) a = std::exp(rng.uniform(std::log(0.1), std::log(50.0)));
        const auto n = rng.uniform_int(1, 80);
        std::vector<std::int64_t> k(answers, 0);
        for (std::int64_t v = 0; v < n; ++v) {
            ++k[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(answers) - 1))];
        }
        const auto analytic = ms::grad_log_dirmult(k, alpha);
        double scale = 1.0;
        for (const auto g : analytic) scale = std::max(scale, std::fabs(g));
        for (std::size_t i = 0; i < answers; ++i) {
            const double h = 1e-5 * std::max(1.0, std::fabs(alpha[i]));
            auto hi = alpha, lo = alpha;
            hi[i] += h;
            lo[i] -= h;
            const double fd = (ms::log_dirmult(k, hi, false) -
                               ms::log_dirmult(k, lo, false)) /
                              (2.0 * h);
            max_err = std::max(max_err, std::fabs(analytic[i] - fd) / scale);
        }
    }
    const bool pass = max_err <= args.tol;
    ordered_json out{{"trials", args.trials},
                     {"max_rel_err", max_err},
                     {"tol", args.tol},
                     {"pass", pass}};
    std::cout << out.dump(2) << "\n";
    return pass ? 0 : 1;
}

// ----------------------------------------------------------- fit-scaling --

struct FitScalingArgs {
    std::string runs_file;
    double sigma = 0.052;
    bool estimate_sigma = false;
    std::string log_base = "10";
    std::uint64_t seed = 0;
    int walkers = 32;
    int steps = 2000;
    int burn_in = -1;
    std::string group_by = "none";
    std::optional<std::string> samples_out;
    std::optional<std::string> out;
};

ordered_json summary_to_json(const ms::PosteriorSummary& summary) {
    ordered_json params;
    params["m"] = ordered_json{{"median", summary.m.median},
                               {"q05", summary.m.q05},
                               {"q95", summary.m.q95}};
    params["b"] = ordered_json{{"median", summary.b.median},
                               {"q05", summary.b.q05},
                               {"q95", summary.b.q95}};
    ordered_json out;
    out["params"] = params;
    out["sigma"] = summary.sigma;
    out["acceptance_fraction"] = summary.acceptance_fraction;
    out["ess"] = summary.ess;
    out["n_samples"] = summary.n_samples;
    return out;
}

int run_fit_scaling(const FitScalingArgs& args) {
    echo_config("fit-scaling", {{"runs", args.runs_file},
                                {"sigma", args.sigma},
                                {"estimate_sigma", args.estimate_sigma},
                                {"log_base", args.log_base},
                                {"seed", args.seed},
                                {"walkers", args.walkers},
                                {"steps", args.steps},
                                {"burn_in", args.burn_in},
                                {"group_by", args.group_by}});
    const auto table = ms::load_runs_file(args.runs_file);
    const auto observations = table.observations();
    if (observations.empty()) {
        throw std::runtime_error("runs file has no rows");
    }

    ms::FitConfig config;
    config.log_base = parse_log_base(args.log_base);
    config.ensemble.walkers = args.walkers;
    config.ensemble.steps = args.steps;
    config.ensemble.burn_in = args.burn_in;
    config.ensemble.seed = args.seed;
    config.sigma = args.sigma;
    if (args.estimate_sigma) {
        const auto estimate = ms::estimate_noise_sigma(observations);
        if (estimate.zero_variance) {
            throw std::runtime_error(
                "estimated sigma is zero (identical replicates); pass --sigma instead");
        }
        config.sigma = estimate.sigma;
        std::cerr << "estimated sigma " << format_double(estimate.sigma) << " from "
                  << estimate.groups_used << " groups (dof " << estimate.dof << ")\n";
    }

    // group key -> observations
    std::vector<std::pair<std::string, std::vector<ms::RunObservation>>> groups;
    if (args.group_by == "none") {
        groups.emplace_back("all", observations);
    } else if (args.group_by == "family" || args.group_by == "variant") {
        std::map<std::string, std::vector<ms::RunObservation>> keyed;
        for (const auto& obs : observations) {
            const auto key =
                args.group_by == "family" ? obs.family : obs.family + "/" + obs.variant;
            keyed[key].push_back(obs);
        }
        for (auto& [key, rows] : keyed) groups.emplace_back(key, std::move(rows));
    } else {
        throw UsageError("--group-by must be 'none', 'family', or 'variant'");
    }

    ordered_json output;
    std::string samples_csv;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto group_config = config;
        group_config.ensemble.seed =
            args.group_by == "none" ? args.seed : ms::derive_seed(args.seed, g);
        const auto result = ms::fit_scaling_law(groups[g].second, group_config);
        auto j = summary_to_json(result.summary);
        j["log_base"] = args.log_base;
        j["n_runs"] = groups[g].second.size();
        if (result.summary.short_chain_warning) {
            std::cerr << "warning: group '" << groups[g].first
                      << "' chain is shorter than 50 autocorrelation times\n";
        }
        std::cerr << groups[g].first << ": " << ms::format_summary(result.summary) << "\n";
        if (args.group_by == "none") {
            output = std::move(j);
            samples_csv = ms::samples_to_csv(result.samples);
        } else {
            output["groups"][groups[g].first] = std::move(j);
        }
    }
    if (args.samples_out) {
        if (args.group_by != "none") {
            throw UsageError("--samples-out requires --group-by none");
        }
        write_text_file(*args.samples_out, samples_csv);
    }
    emit(args.out, output.dump(2) + "\n");
    return 0;
}

// --------------------------------------------------------------- predict --

struct PredictArgs {
    std::optional<double> m;
    std::optional<double> b;
    std::optional<double> n;
    std::optional<std::string> samples_file;
    std::optional<std::string> grid;  // "min:max:count"
    double sigma = 0.052;
    bool predictive = false;
    std::string log_base = "10";
    std::uint64_t seed = 0;
    std::optional<std::string> out;
};

int run_predict(const PredictArgs& args) {
    ordered_json config{{"log_base", args.log_base}, {"seed", args.seed}};
    if (args.m) config["m"] = *args.m;
    if (args.b) config["b"] = *args.b;
    if (args.n) config["n"] = *args.n;
    if (args.samples_file) config["samples"] = *args.samples_file;
    if (args.grid) config["grid"] = *args.grid;
    config["sigma"] = args.sigma;
    config["predictive"] = args.predictive;
    echo_config("predict", config);

    const auto base = parse_log_base(args.log_base);

    if (args.m || args.b) {
        if (!(args.m && args.b && args.n)) {
            throw UsageError("point prediction needs --m, --b, and --n together");
        }
        if (*args.n < 1.0) {
            throw std::runtime_error("--n must be >= 1");
        }
        const double loss = *args.m * ms::apply_log_base(*args.n, base) + *args.b;
        emit(args.out, format_double(loss, "%.6g") + "\n");
        return 0;
    }

    if (!args.samples_file) {
        throw UsageError("predict needs either --m/--b/--n or --samples");
    }
    const auto samples = ms::load_samples_file(*args.samples_file);

    if (args.grid) {
        double lo = 0.0, hi = 0.0;
        int count = 0;
        if (std::sscanf(args.grid->c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 ||
            !(lo >= 1.0) || !(hi > lo) || count < 1) {
            throw UsageError(
                "--grid must be 'min:max:count' with 1 <= min < max, count >= 1");
        }
        std::string csv = "dataset_size,predicted_median,q05,q95\n";
        ms::Rng rng(args.seed);
        for (int i = 0; i < count; ++i) {
            const double frac =
                count == 1 ? 0.0
                           : static_cast<double>(i) / static_cast<double>(count - 1);
            const double n = std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo)));
            const auto band = ms::posterior_predictive(
                samples, n, args.predictive ? args.sigma : 0.0, base, rng);
            const double median = ms::quantile(band.draws, 0.5);
            csv += format_double(n) + "," + format_double(median) + "," +
                   format_double(band.q05) + "," + format_double(band.q95) + "\n";
        }
        emit(args.out, csv);
        return 0;
    }

    if (!args.n) {
        throw UsageError("predict --samples needs --n or --grid");
    }
    ms::Rng rng(args.seed);
    const auto band = ms::posterior_predictive(
        samples, *args.n, args.predictive ? args.sigma : 0.0, base, rng);
    ordered_json out{{"dataset_size", *args.n},
                     {"mean", band.mean},
                     {"median", ms::quantile(band.draws, 0.5)},
                     {"q05", band.q05},
                     {"q95", band.q95},
                     {"n_draws", band.draws.size()},
                     {"predictive", args.predictive}};
    emit(args.out, out.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- fit-gp --

struct FitGpArgs {
    std::string points_file;
    double length_scale = 0.0;
    std::optional<double> signal;
    std::optional<double> noise;
    std::optional<std::string> grid_out;
    std::optional<double> grid_min;
    std::optional<double> grid_max;
    int grid_points = 200;
    bool no_standardize = false;
};

int run_fit_gp(const FitGpArgs& args) {
    ordered_json config{{"points", args.points_file},
                        {"length_scale", args.length_scale},
                        {"grid_points", args.grid_points},
                        {"standardize", !args.no_standardize}};
    if (args.signal) config["signal"] = *args.signal;
    if (args.noise) config["noise"] = *args.noise;
    echo_config("fit-gp", config);

    std::ifstream in(args.points_file);
    if (!in) {
        throw std::runtime_error("cannot open points file '" + args.points_file + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y", 0) != 0) {
        throw std::runtime_error("points CSV must start with header 'x,y'");
    }
    std::vector<double> x, y;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double xv, yv;
        if (std::sscanf(line.c_str(), "%lf,%lf", &xv, &yv) != 2) {
            throw std::runtime_error("points CSV line " + std::to_string(line_no) +
                                     ": cannot parse '" + line + "'");
        }
        x.push_back(xv);
        y.push_back(yv);
    }
    if (x.empty()) {
        throw std::runtime_error("points CSV has no rows");
    }

    // standardized targets for kernel selection and fitting; the length
    // scale applies to x as given and is never rescaled
    const double y_mean = ms::mean_of(y);
    const double y_sd = ms::sd_of(y) > 0.0 ? ms::sd_of(y) : 1.0;
    std::vector<double> y_fit = y;
    double scale = 1.0, offset = 0.0;
    if (!args.no_standardize) {
        for (auto& v : y_fit) v = (v - y_mean) / y_sd;
        scale = y_sd;
        offset = y_mean;
    }

    ms::Kernel kernel;
    kernel.length_scale = args.length_scale;
    if (args.signal && args.noise) {
        kernel.signal_variance = *args.signal;
        kernel.noise_variance = *args.noise;
    } else if (!args.signal && !args.noise) {
        kernel = ms::select_kernel(x, y_fit, args.length_scale);
        std::cerr << "selected signal_variance " << format_double(kernel.signal_variance)
                  << ", noise_variance " << format_double(kernel.noise_variance)
                  << " by log marginal likelihood\n";
    } else {
        throw UsageError("pass both --signal and --noise, or neither (grid selection)");
    }

    const auto fit = ms::gp_fit(x, y_fit, kernel);
    std::cerr << "log marginal likelihood "
              << format_double(fit.log_marginal_likelihood())
              << (fit.jitter_used() > 0.0
                      ? " (jitter " + format_double(fit.jitter_used()) + ")"
                      : "")
              << "\n";

    const double lo = args.grid_min.value_or(*std::min_element(x.begin(), x.end()) -
                                             2.0 * args.length_scale);
    const double hi = args.grid_max.value_or(*std::max_element(x.begin(), x.end()) +
                                             2.0 * args.length_scale);
    if (!(hi > lo) || args.grid_points < 2) {
        throw UsageError("grid bounds must satisfy min < max with at least 2 points");
    }
    std::vector<double> grid(static_cast<std::size_t>(args.grid_points));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(grid.size() - 1);
    }
    const auto prediction = fit.predict(grid);

    std::string csv = "x,mean,lower2sigma,upper2sigma\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double mean = prediction.mean[i] * scale + offset;
        const double sd = std::sqrt(prediction.variance[i]) * scale;
        csv += format_double(grid[i]) + "," + format_double(mean) + "," +
               format_double(mean - 2.0 * sd) + "," + format_double(mean + 2.0 * sd) +
               "\n";
    }
    emit(args.grid_out, csv);
    return 0;
}

// ------------------------------------------------------------- aggregate --

struct AggregateArgs {
    std::string runs_file;
    std::optional<std::string> tasks_file;
    std::optional<std::string> task;
    std::optional<std::string> out;
};

std::string aggregate_rows_csv(const std::vector<ms::AggregateRow>& rows,
                               const std::optional<std::string>& task) {
    std::string csv;
    csv += task ? "task,family,variant,dataset_size,n_seeds,loss_mean,loss_min,loss_max\n"
                : "family,variant,dataset_size,n_seeds,loss_mean,loss_min,loss_max\n";
    for (const auto& row : rows) {
        if (task) csv += *task + ",";
        csv += row.family + "," + row.variant + "," + std::to_string(row.dataset_size) +
               "," + std::to_string(row.n_seeds) + "," +
               format_double(row.loss_mean, "%.6g") + "," +
               format_double(row.loss_min, "%.6g") + "," +
               format_double(row.loss_max, "%.6g") + "\n";
    }
    return csv;
}

int run_aggregate(const AggregateArgs& args) {
    ordered_json config{{"runs", args.runs_file}};
    if (args.tasks_file) config["tasks"] = *args.tasks_file;
    if (args.task) config["task"] = *args.task;
    echo_config("aggregate", config);

    const auto table = ms::load_runs_file(args.runs_file);
    ms::TaskMapping mapping;
    if (args.tasks_file) mapping = ms::load_task_mapping_file(*args.tasks_file);

    std::string csv;
    if (args.task) {
        csv = aggregate_rows_csv(ms::aggregate_task_loss(table, *args.task, mapping),
                                 args.task);
    } else if (args.tasks_file) {
        bool first = true;
        for (const auto& [task, columns] : mapping) {
            (void)columns;
            const auto rows = ms::aggregate_task_loss(table, task, mapping);
            auto block = aggregate_rows_csv(rows, task);
            if (!first) block.erase(0, block.find('\n') + 1);  // keep one header
            csv += block;
            first = false;
        }
    } else {
        csv = aggregate_rows_csv(ms::aggregate_minmax(table), std::nullopt);
    }
    emit(args.out, csv);
    return 0;
}

// ------------------------------------------------------------- train-toy --

struct TrainToyArgs {
    std::string schema_file;
    std::string votes_file;
    std::string features_file;
    int epochs = 50;
    double learning_rate = 0.05;
    int batch_size = 32;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    std::string out_file;
    std::optional<std::string> trace_out;
};

int run_train_toy(const TrainToyArgs& args) {
    echo_config("train-toy", {{"schema", args.schema_file},
                              {"votes", args.votes_file},
                              {"features", args.features_file},
                              {"epochs", args.epochs},
                              {"lr", args.learning_rate},
                              {"batch_size", args.batch_size},
                              {"weight_decay", args.weight_decay},
                              {"seed", args.seed},
                              {"out", args.out_file}});
    const auto campaigns = ms::load_campaigns_file(args.schema_file);
    const auto index = ms::GlobalAnswerIndex::build(campaigns);
    const auto votes = ms::load_votes_file(args.votes_file, index);
    const auto features = ms::load_features_file(args.features_file);

    std::map<std::string, const std::vector<double>*> features_by_galaxy;
    for (const auto& row : features) features_by_galaxy[row.galaxy_id] = &row.features;

    std::vector<ms::TrainExample> dataset;
    dataset.reserve(votes.size());
    std::size_t feature_dim = 0;
    for (const auto& record : votes) {
        const auto it = features_by_galaxy.find(record.galaxy_id);
        if (it == features_by_galaxy.end()) {
            throw std::runtime_error("no feature row for galaxy '" + record.galaxy_id +
                                     "'");
        }
        if (feature_dim == 0) feature_dim = it->second->size();
        if (it->second->size() != feature_dim) {
            throw std::runtime_error("inconsistent feature length for galaxy '" +
                                     record.galaxy_id + "'");
        }
        dataset.push_back({*it->second, record.votes});
    }
    if (dataset.empty()) {
        throw std::runtime_error("votes file has no galaxies");
    }

    ms::TrainConfig config;
    config.learning_rate = args.learning_rate;
    config.epochs = args.epochs;
    config.batch_size = args.batch_size;
    config.weight_decay = args.weight_decay;
    config.rng_seed = args.seed;

    const auto head0 = ms::LinearHead::zeros(static_cast<int>(feature_dim),
                                             static_cast<int>(index.total()));
    const auto result = ms::train(head0, dataset, index, config);

    std::string trace = "epoch,mean_nll\n";
    for (std::size_t e = 0; e < result.epoch_mean_nll.size(); ++e) {
        trace += std::to_string(e) + "," + format_double(result.epoch_mean_nll[e]) + "\n";
    }
    emit(args.trace_out, trace);

    ordered_json head_json;
    head_json["feature_dim"] = result.head.feature_dim();
    head_json["answer_dim"] = result.head.answer_dim();
    head_json["alpha_cap"] = result.head.alpha_cap;
    ordered_json answers = ordered_json::array();
    for (std::size_t i = 0; i < index.total(); ++i) {
        const auto& key = index.key_of(i);
        answers.push_back(key.campaign_id + "/" + key.question_id + "/" + key.answer_id);
    }
    head_json["answers"] = std::move(answers);
    ordered_json weights = ordered_json::array();
    for (int r = 0; r < result.head.weights.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < result.head.weights.cols(); ++c) {
            row.push_back(result.head.weights(r, c));
        }
        weights.push_back(std::move(row));
    }
    head_json["weights"] = std::move(weights);
    ordered_json bias = ordered_json::array();
    for (int i = 0; i < result.head.bias.size(); ++i) {
        bias.push_back(result.head.bias(i));
    }
    head_json["bias"] = std::move(bias);
    write_text_file(args.out_file, head_json.dump(2) + "\n");

    const auto report = ms::evaluate(result.head, dataset, index);
    std::cerr << "final mean NLL " << format_double(report.mean_nll)
              << ", mean calibration error " << format_double(report.mean_calibration)
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"morphoscale: crowd-label likelihoods, vote simulation, and "
                 "scaling-law analysis"};
    app.require_subcommand(1);

    SchemaValidateArgs schema_args;
    auto* schema_cmd = app.add_subcommand("schema", "schema file utilities");
    schema_cmd->require_subcommand(1);
    auto* validate_cmd =
        schema_cmd->add_subcommand("validate", "validate a campaign schema file");
    validate_cmd->add_option("file", schema_args.file, "schema JSON file")->required();

    SimulateArgs simulate_args;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "generate synthetic volunteer votes");
    simulate_cmd->add_option("--schema", simulate_args.schema_file, "schema JSON file")
        ->required();
    simulate_cmd
        ->add_option("--truth", simulate_args.truth_file,
                     "ground-truth JSONL (one galaxy per line)")
        ->required();
    simulate_cmd->add_option("--out", simulate_args.out_file, "votes JSONL output")
        ->required();
    simulate_cmd->add_option("--n-volunteers", simulate_args.n_volunteers,
                             "volunteers asked each root question");
    simulate_cmd->add_option("--seed", simulate_args.seed, "rng seed");
    simulate_cmd->add_option("--rho-mode", simulate_args.rho_mode,
                             "'sample' (Dirichlet per galaxy) or 'fixed'");
    simulate_cmd->add_option("--volunteers-min", simulate_args.volunteers_min,
                             "draw volunteer count uniformly from [min, max]");
    simulate_cmd->add_option("--volunteers-max", simulate_args.volunteers_max,
                             "upper bound for the uniform volunteer count");
    simulate_cmd->add_option("--features-out", simulate_args.features_out,
                             "also write feature vectors (JSONL)");
    simulate_cmd->add_option("--feature-noise", simulate_args.feature_noise,
                             "sd of the feature noise");
    simulate_cmd->add_option("--truth-out", simulate_args.truth_out,
                             "write the realized ground-truth sidecar (JSONL)");

    LossArgs loss_args;
    auto* loss_cmd =
        app.add_subcommand("loss", "evaluate the multi-task log-likelihood");
    loss_cmd->add_option("--schema", loss_args.schema_file, "schema JSON file")
        ->required();
    loss_cmd->add_option("--votes", loss_args.votes_file, "votes JSONL file")->required();
    loss_cmd
        ->add_option("--alpha", loss_args.alpha_file,
                     "concentrations JSON {campaign: {question: [alpha...]}}")
        ->required();
    loss_cmd->add_flag("--no-coefficient", loss_args.no_coefficient,
                       "omit the multinomial coefficient term");

    GradCheckArgs grad_args;
    auto* grad_cmd = app.add_subcommand(
        "grad-check", "compare the analytic gradient against finite differences");
    grad_cmd->add_option("--trials", grad_args.trials, "number of random configurations");
    grad_cmd->add_option("--seed", grad_args.seed, "rng seed");
    grad_cmd->add_option("--tol", grad_args.tol, "maximum relative error");

    FitScalingArgs fit_args;
    auto* fit_cmd =
        app.add_subcommand("fit-scaling", "Bayesian fit of loss vs. log dataset size");
    fit_cmd->add_option("--runs", fit_args.runs_file, "runs CSV file")->required();
    fit_cmd->add_option("--sigma", fit_args.sigma, "fixed homoskedastic noise sd");
    fit_cmd->add_flag("--estimate-sigma", fit_args.estimate_sigma,
                      "estimate sigma from seed replicates instead");
    fit_cmd->add_option("--log-base", fit_args.log_base, "'10' or 'e'");
    fit_cmd->add_option("--seed", fit_args.seed, "rng seed");
    fit_cmd->add_option("--walkers", fit_args.walkers, "ensemble walkers (even)");
    fit_cmd->add_option("--steps", fit_args.steps, "ensemble steps");
    fit_cmd->add_option("--burn-in", fit_args.burn_in, "burn-in steps (default 20%)");
    fit_cmd->add_option("--group-by", fit_args.group_by,
                        "'none', 'family', or 'variant'");
    fit_cmd->add_option("--samples-out", fit_args.samples_out, "raw samples CSV output");
    fit_cmd->add_option("--out", fit_args.out, "JSON output file (default stdout)");

    PredictArgs predict_args;
    auto* predict_cmd =
        app.add_subcommand("predict", "predicted loss from parameters or samples");
    predict_cmd->add_option("--m", predict_args.m, "gradient");
    predict_cmd->add_option("--b", predict_args.b, "intercept");
    predict_cmd->add_option("--n", predict_args.n, "dataset size");
    predict_cmd->add_option("--samples", predict_args.samples_file,
                            "posterior samples CSV");
    predict_cmd->add_option("--grid", predict_args.grid,
                            "log-spaced dataset-size grid 'min:max:count' (CSV output)");
    predict_cmd->add_option("--sigma", predict_args.sigma, "predictive noise sd");
    predict_cmd->add_flag("--predictive", predict_args.predictive,
                          "add observation noise to the band");
    predict_cmd->add_option("--log-base", predict_args.log_base, "'10' or 'e'");
    predict_cmd->add_option("--seed", predict_args.seed, "rng seed");
    predict_cmd->add_option("--out", predict_args.out, "output file (default stdout)");

    FitGpArgs gp_args;
    auto* gp_cmd = app.add_subcommand("fit-gp", "GP regression with RBF + white noise");
    gp_cmd->add_option("--points", gp_args.points_file, "CSV with header x,y")
        ->required();
    gp_cmd
        ->add_option("--length-scale", gp_args.length_scale,
                     "RBF length scale, in the units of x (required; pick the x "
                     "scale deliberately, e.g. log10 parameter count)")
        ->required();
    gp_cmd->add_option("--signal", gp_args.signal,
                       "signal variance (else grid-selected)");
    gp_cmd->add_option("--noise", gp_args.noise, "noise variance (else grid-selected)");
    gp_cmd->add_option("--grid-out", gp_args.grid_out, "band CSV output (default stdout)");
    gp_cmd->add_option("--grid-min", gp_args.grid_min, "grid lower bound");
    gp_cmd->add_option("--grid-max", gp_args.grid_max, "grid upper bound");
    gp_cmd->add_option("--grid-points", gp_args.grid_points, "grid resolution");
    gp_cmd->add_flag("--no-standardize", gp_args.no_standardize,
                     "fit the raw targets instead of standardized ones");

    AggregateArgs aggregate_args;
    auto* aggregate_cmd =
        app.add_subcommand("aggregate", "seed min/max bands and per-task means");
    aggregate_cmd->add_option("--runs", aggregate_args.runs_file, "runs CSV file")
        ->required();
    aggregate_cmd->add_option("--tasks", aggregate_args.tasks_file,
                              "task mapping JSON {task: [question columns]}");
    aggregate_cmd->add_option("--task", aggregate_args.task, "aggregate one task label");
    aggregate_cmd->add_option("--out", aggregate_args.out, "output file (default stdout)");

    TrainToyArgs train_args;
    auto* train_cmd =
        app.add_subcommand("train-toy", "train the linear head on simulated votes");
    train_cmd->add_option("--schema", train_args.schema_file, "schema JSON file")
        ->required();
    train_cmd->add_option("--votes", train_args.votes_file, "votes JSONL file")
        ->required();
    train_cmd->add_option("--features", train_args.features_file, "features JSONL file")
        ->required();
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--lr", train_args.learning_rate, "learning rate");
    train_cmd->add_option("--batch-size", train_args.batch_size, "mini-batch size");
    train_cmd->add_option("--weight-decay", train_args.weight_decay,
                          "decoupled weight decay");
    train_cmd->add_option("--seed", train_args.seed, "rng seed");
    train_cmd->add_option("--out", train_args.out_file, "trained head JSON output")
        ->required();
    train_cmd->add_option("--trace-out", train_args.trace_out,
                          "loss trace CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*validate_cmd) return run_schema_validate(schema_args);
        if (*simulate_cmd) return run_simulate(simulate_args);
        if (*loss_cmd) return run_loss(loss_args);
        if (*grad_cmd) return run_grad_check(grad_args);
        if (*fit_cmd) return run_fit_scaling(fit_args);
        if (*predict_cmd) return run_predict(predict_args);
        if (*gp_cmd) return run_fit_gp(gp_args);
        if (*aggregate_cmd) return run_aggregate(aggregate_args);
        if (*train_cmd) return run_train_toy(train_args);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
