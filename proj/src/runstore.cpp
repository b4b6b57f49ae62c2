#include "morphoscale/runstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace morphoscale {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::int64_t parse_int(const std::string& text, std::size_t line,
                       const std::string& column) {
    try {
        std::size_t consumed = 0;
        const auto value = std::stoll(text, &consumed);
        if (consumed != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw RunParseError(line, "cannot parse integer '" + text + "' in column " +
                                      column);
    }
}

double parse_loss(const std::string& text, std::size_t line, const std::string& column) {
    try {
        std::size_t consumed = 0;
        const double value = std::stod(text, &consumed);
        if (consumed != text.size()) throw std::invalid_argument(text);
        if (!std::isfinite(value)) {
            throw RunParseError(line, "non-finite loss '" + text + "' in column " + column);
        }
        return value;
    } catch (const RunParseError&) {
        throw;
    } catch (const std::exception&) {
        throw RunParseError(line, "cannot parse loss '" + text + "' in column " + column);
    }
}

std::string format_loss(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return buffer;
}

}  // namespace

std::vector<RunObservation> RunTable::observations() const {
    std::vector<RunObservation> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(rec.run);
    return out;
}

RunTable parse_runs_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw RunParseError(1, "missing header");
    }
    ++line_no;
    const auto header = split_csv_line(trim(line));
    const std::vector<std::string> required = {"family",       "variant",
                                               "parameter_count", "dataset_size",
                                               "seed",         "test_loss"};
    if (header.size() < required.size()) {
        throw RunParseError(1, "header must start with family,variant,parameter_count,"
                               "dataset_size,seed,test_loss");
    }
    for (std::size_t i = 0; i < required.size(); ++i) {
        if (trim(header[i]) != required[i]) {
            throw RunParseError(1, "expected column '" + required[i] + "', found '" +
                                       trim(header[i]) + "'");
        }
    }
    std::vector<std::string> question_columns;
    for (std::size_t i = required.size(); i < header.size(); ++i) {
        const auto name = trim(header[i]);
        if (name.rfind("q:", 0) != 0 || name.size() <= 2) {
            throw RunParseError(1, "extra column '" + name + "' must be named q:<label>");
        }
        question_columns.push_back(name.substr(2));
    }

    RunTable table;
    std::set<std::string> labels(question_columns.begin(), question_columns.end());
    if (labels.size() != question_columns.size()) {
        throw RunParseError(1, "duplicate q: column");
    }
    table.question_labels.assign(labels.begin(), labels.end());

    std::set<std::tuple<std::string, std::string, std::int64_t, std::int64_t>> keys;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = trim(line);
        if (trimmed.empty()) continue;
        const auto fields = split_csv_line(trimmed);
        if (fields.size() != header.size()) {
            throw RunParseError(line_no, "expected " + std::to_string(header.size()) +
                                             " fields, found " +
                                             std::to_string(fields.size()));
        }
        RunRecord rec;
        rec.run.family = trim(fields[0]);
        rec.run.variant = trim(fields[1]);
        if (rec.run.family.empty() || rec.run.variant.empty()) {
            throw RunParseError(line_no, "family and variant must be nonempty");
        }
        rec.run.parameter_count = parse_int(trim(fields[2]), line_no, "parameter_count");
        rec.run.dataset_size = parse_int(trim(fields[3]), line_no, "dataset_size");
        if (rec.run.dataset_size < 1) {
            throw RunParseError(line_no, "dataset_size must be >= 1");
        }
        if (rec.run.parameter_count < 1) {
            throw RunParseError(line_no, "parameter_count must be >= 1");
        }
        rec.run.seed = parse_int(trim(fields[4]), line_no, "seed");
        rec.run.test_loss = parse_loss(trim(fields[5]), line_no, "test_loss");
        for (std::size_t i = 0; i < question_columns.size(); ++i) {
            const auto value = trim(fields[6 + i]);
            if (value.empty()) continue;
            rec.question_losses[question_columns[i]] =
                parse_loss(value, line_no, "q:" + question_columns[i]);
        }
        const auto key = std::make_tuple(rec.run.family, rec.run.variant,
                                         rec.run.dataset_size, rec.run.seed);
        if (!keys.insert(key).second) {
            throw RunParseError(line_no, "duplicate run key (" + rec.run.family + ", " +
                                             rec.run.variant + ", " +
                                             std::to_string(rec.run.dataset_size) + ", " +
                                             std::to_string(rec.run.seed) + ")");
        }
        table.records.push_back(std::move(rec));
    }
    return table;
}

RunTable load_runs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open runs file '" + path + "'");
    }
    return parse_runs_csv(in);
}

std::string emit_runs_csv(const RunTable& table) {
    std::vector<const RunRecord*> rows;
    rows.reserve(table.records.size());
    for (const auto& rec : table.records) rows.push_back(&rec);
    std::sort(rows.begin(), rows.end(), [](const RunRecord* a, const RunRecord* b) {
        return std::tie(a->run.family, a->run.variant, a->run.dataset_size, a->run.seed) <
               std::tie(b->run.family, b->run.variant, b->run.dataset_size, b->run.seed);
    });

    std::ostringstream out;
    out << "family,variant,parameter_count,dataset_size,seed,test_loss";
    for (const auto& label : table.question_labels) out << ",q:" << label;
    out << "\n";
    for (const auto* rec : rows) {
        out << rec->run.family << "," << rec->run.variant << ","
            << rec->run.parameter_count << "," << rec->run.dataset_size << ","
            << rec->run.seed << "," << format_loss(rec->run.test_loss);
        for (const auto& label : table.question_labels) {
            out << ",";
            const auto it = rec->question_losses.find(label);
            if (it != rec->question_losses.end()) out << format_loss(it->second);
        }
        out << "\n";
    }
    return out.str();
}

namespace {

std::vector<AggregateRow> aggregate_values(
    const std::vector<std::pair<const RunRecord*, double>>& values) {
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::vector<double>>
        groups;
    for (const auto& [rec, value] : values) {
        groups[{rec->run.family, rec->run.variant, rec->run.dataset_size}].push_back(
            value);
    }
    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, losses] : groups) {
        AggregateRow row;
        row.family = std::get<0>(key);
        row.variant = std::get<1>(key);
        row.dataset_size = std::get<2>(key);
        row.n_seeds = static_cast<int>(losses.size());
        row.loss_min = *std::min_element(losses.begin(), losses.end());
        row.loss_max = *std::max_element(losses.begin(), losses.end());
        double sum = 0.0;
        for (const auto v : losses) sum += v;
        row.loss_mean = sum / static_cast<double>(losses.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<AggregateRow> aggregate_minmax(const RunTable& table) {
    if (table.records.empty()) {
        throw std::invalid_argument("aggregate_minmax: empty table");
    }
    std::vector<std::pair<const RunRecord*, double>> values;
    values.reserve(table.records.size());
    for (const auto& rec : table.records) values.emplace_back(&rec, rec.run.test_loss);
    return aggregate_values(values);
}

TaskMapping parse_task_mapping(const std::string& json_text) {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_object()) {
        throw std::runtime_error("task mapping must be a JSON object");
    }
    TaskMapping mapping;
    for (const auto& [task, columns] : doc.items()) {
        mapping[task] = columns.get<std::vector<std::string>>();
    }
    return mapping;
}

TaskMapping load_task_mapping_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open task mapping file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_task_mapping(buffer.str());
}

std::vector<AggregateRow> aggregate_task_loss(const RunTable& table,
                                              const std::string& task_label,
                                              const TaskMapping& mapping) {
    std::vector<std::string> columns;
    const auto it = mapping.find(task_label);
    if (it != mapping.end()) {
        columns = it->second;
    } else {
        columns = {task_label};
    }

    std::vector<std::pair<const RunRecord*, double>> values;
    for (const auto& rec : table.records) {
        double sum = 0.0;
        int found = 0;
        for (const auto& column : columns) {
            const auto q = rec.question_losses.find(column);
            if (q != rec.question_losses.end()) {
                sum += q->second;
                ++found;
            }
        }
        if (found > 0) values.emplace_back(&rec, sum / found);
    }
    if (values.empty()) {
        throw std::invalid_argument("aggregate_task_loss: no run carries task '" +
                                    task_label + "'");
    }
    return aggregate_values(values);
}

}  // namespace morphoscale
