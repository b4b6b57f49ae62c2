#pragma once
// Experiment run records: CSV in/out plus the aggregation conventions
// (seed min/max bands and per-task cross-campaign means).
//
// CSV header: family,variant,parameter_count,dataset_size,seed,test_loss
// with optional per-question loss columns named q:<label>. The canonical
// emit orders rows by (family, variant, dataset_size, seed), sorts the
// q: columns by label, and prints losses with 6 significant digits, so
// emit(parse(file)) is byte-stable on canonical files.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "morphoscale/scalefit.hpp"

namespace morphoscale {

class RunParseError : public std::runtime_error {
public:
    RunParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct RunRecord {
    RunObservation run;
    std::map<std::string, double> question_losses;  // by q: column label
};

struct RunTable {
    std::vector<RunRecord> records;
    std::vector<std::string> question_labels;  // sorted column labels

    std::vector<RunObservation> observations() const;
};

// Rejects duplicate (family, variant, dataset_size, seed) keys and
// non-finite losses; malformed rows raise RunParseError with the line.
RunTable parse_runs_csv(std::istream& in);
RunTable load_runs_file(const std::string& path);

std::string emit_runs_csv(const RunTable& table);

struct AggregateRow {
    std::string family;
    std::string variant;
    std::int64_t dataset_size = 0;
    double loss_mean = 0.0;
    double loss_min = 0.0;
    double loss_max = 0.0;
    int n_seeds = 0;
};

// One row per (family, variant, dataset_size) group with the conservative
// min/max band over seeds. Rows ordered by the group key.
std::vector<AggregateRow> aggregate_minmax(const RunTable& table);

// task label -> question column labels it spans
using TaskMapping = std::map<std::string, std::vector<std::string>>;
TaskMapping parse_task_mapping(const std::string& json_text);
TaskMapping load_task_mapping_file(const std::string& path);

// Per-run task loss is the unweighted mean over the mapped question columns
// present in that run; rows with no mapped column are skipped. The result is
// then aggregated over seeds like aggregate_minmax. Without a mapping entry
// the task matches the single column with exactly that label. Throws when no
// run carries the task.
std::vector<AggregateRow> aggregate_task_loss(const RunTable& table,
                                              const std::string& task_label,
                                              const TaskMapping& mapping = {});

}  // namespace morphoscale
