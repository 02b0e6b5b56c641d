#include "riskstop/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "detail/numfmt.hpp"
#include "riskstop/markov.hpp"

namespace riskstop {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::set<std::string> kKnownFields = {"name", "time", "states", "kernel", "g", "G", "c"};

[[noreturn]] void fail(const std::string& headline, std::vector<Violation> violations) {
  std::string what = headline;
  for (const auto& v : violations) what += "\n  " + describe(v);
  throw ModelError(what, std::move(violations));
}

void schema(std::vector<Violation>& out, std::string field, std::string detail) {
  const std::string summary = field + ": " + detail;
  out.push_back({std::move(field), std::move(detail), summary});
}

bool read_number_array(const json& doc, const std::string& field, Vector& dst,
                       std::vector<Violation>& out) {
  if (!doc.contains(field)) {
    schema(out, field, "missing required field");
    return false;
  }
  const json& arr = doc.at(field);
  if (!arr.is_array()) {
    schema(out, field, "expected an array of numbers");
    return false;
  }
  dst.resize(static_cast<Eigen::Index>(arr.size()));
  bool ok = true;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      schema(out, field + "[" + std::to_string(i) + "]", "expected a number");
      ok = false;
      continue;
    }
    dst(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return ok;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string cell_text(const Table::Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, double>) return detail::digits17(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return std::to_string(v);
      },
      cell);
}

std::string json_number(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("report: non-finite number");
  return detail::digits17(v);
}

std::string json_cell(const Table::Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return json(*s).dump();
  if (const auto* d = std::get_if<double>(&cell)) return json_number(*d);
  return cell_text(cell);
}

std::string json_string(const std::string& s) { return json(s).dump(); }

}  // namespace

std::string describe(const Violation& v) { return v.field + ": " + v.detail; }

MarkovModel parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail("malformed model document", {{"(document)", "syntax error at byte " +
                                                         std::to_string(e.byte) + ": " + e.what(),
                                       e.what()}});
  }
  if (!doc.is_object()) fail("malformed model document", {{"(document)", "expected a JSON object", ""}});

  std::vector<Violation> issues;
  for (const auto& [key, _] : doc.items())
    if (!kKnownFields.count(key)) schema(issues, key, "unknown field");

  MarkovModel model;
  if (!doc.contains("name")) schema(issues, "name", "missing required field");
  else if (!doc["name"].is_string()) schema(issues, "name", "expected a string");
  else model.name = doc["name"].get<std::string>();

  if (!doc.contains("time")) {
    schema(issues, "time", "missing required field");
  } else if (doc["time"] == "discrete") {
    model.time = TimeMode::Discrete;
  } else if (doc["time"] == "continuous") {
    model.time = TimeMode::Continuous;
  } else {
    schema(issues, "time", "expected \"discrete\" or \"continuous\"");
  }

  std::vector<std::string> labels;
  if (!doc.contains("states")) {
    schema(issues, "states", "missing required field");
  } else if (!doc["states"].is_array()) {
    schema(issues, "states", "expected an array of strings");
  } else {
    const json& arr = doc["states"];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (arr[i].is_string()) labels.push_back(arr[i].get<std::string>());
      else schema(issues, "states[" + std::to_string(i) + "]", "expected a string");
    }
  }
  model.states = StateSpace(labels);
  const std::size_t n = labels.size();

  if (!doc.contains("kernel")) {
    schema(issues, "kernel", "missing required field");
  } else if (!doc["kernel"].is_array()) {
    schema(issues, "kernel", "expected an array of rows");
  } else {
    const json& rows = doc["kernel"];
    if (rows.size() != n)
      schema(issues, "kernel", "expected " + std::to_string(n) + " rows, got " +
                                   std::to_string(rows.size()));
    model.kernel = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string field = "kernel.row[" + std::to_string(i) + "]";
      if (!rows[i].is_array() || rows[i].size() != n) {
        schema(issues, field, "expected an array of " + std::to_string(n) + " numbers");
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (!rows[i][j].is_number()) {
          schema(issues, field + "[" + std::to_string(j) + "]", "expected a number");
          continue;
        }
        model.kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            rows[i][j].get<double>();
      }
    }
  }

  const bool have_g = read_number_array(doc, "g", model.costs.g, issues);
  read_number_array(doc, "G", model.costs.G, issues);
  if (doc.contains("c")) {
    if (doc["c"].is_number()) model.costs.c = doc["c"].get<double>();
    else schema(issues, "c", "expected a number");
  } else if (have_g) {
    // c is a bound on g, not independent data.
    model.costs.c = model.costs.g.size() ? model.costs.g.minCoeff() : 0.0;
  }

  if (!issues.empty()) fail("model document does not match the schema", std::move(issues));

  auto violations = validate_model(model);
  if (!violations.empty()) fail("invalid model '" + model.name + "'", std::move(violations));
  return model;
}

MarkovModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string serialize_model(const MarkovModel& model) {
  ordered_json doc;
  doc["name"] = model.name;
  doc["time"] = to_string(model.time);
  doc["states"] = model.states.labels();
  ordered_json kernel = ordered_json::array();
  for (Eigen::Index i = 0; i < model.kernel.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < model.kernel.cols(); ++j) row.push_back(model.kernel(i, j));
    kernel.push_back(std::move(row));
  }
  doc["kernel"] = std::move(kernel);
  doc["g"] = std::vector<double>(model.costs.g.data(), model.costs.g.data() + model.costs.g.size());
  doc["G"] = std::vector<double>(model.costs.G.data(), model.costs.G.data() + model.costs.G.size());
  doc["c"] = model.costs.c;
  return doc.dump(2) + "\n";
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument("Table::add_row: expected " + std::to_string(columns.size()) +
                                " cells, got " + std::to_string(row.size()));
  rows.push_back(std::move(row));
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cell_text(row[i]));
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& table) {
  std::string out = "{\n";
  for (const auto& [key, value] : table.summary)
    out += "  " + json_string(key) + ": " + json_cell(value) + ",\n";
  out += "  \"columns\": [";
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out += (i ? ", " : "") + json_string(table.columns[i]);
  out += "],\n  \"rows\": [";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += r ? ",\n    [" : "\n    [";
    for (std::size_t i = 0; i < table.rows[r].size(); ++i)
      out += (i ? ", " : "") + json_cell(table.rows[r][i]);
    out += "]";
  }
  out += table.rows.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

std::string write_table(const Table& table, ReportFormat format) {
  return format == ReportFormat::Csv ? to_csv(table) : to_json(table);
}

CsvDocument parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (ch == '\n') {
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      field_started = false;
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw std::runtime_error("parse_csv: unterminated quoted field");
  if (field_started || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw std::runtime_error("parse_csv: missing header row");

  CsvDocument doc;
  doc.columns = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != doc.columns.size())
      throw std::runtime_error("parse_csv: row " + std::to_string(r) + " has " +
                               std::to_string(records[r].size()) + " fields, expected " +
                               std::to_string(doc.columns.size()));
    doc.rows.push_back(std::move(records[r]));
  }
  return doc;
}

Table solve_table(const SolveReport& report, const StateSpace& states) {
  if (report.value.size() != states.size() || report.region.state_count() != states.size())
    throw std::invalid_argument("solve_table: report does not match the state space");
  Table t;
  t.columns = {"state", "value", "in_region"};
  for (std::size_t i = 0; i < states.size(); ++i)
    t.add_row({states.label(i), report.value[i], report.region.contains(i)});
  t.summary = {{"iterations", static_cast<long long>(report.iterations)},
               {"residual", report.residual},
               {"sandwich_gap", report.sandwich_gap},
               {"converged", report.converged}};
  return t;
}

std::string write_report(const SolveReport& report, const StateSpace& states,
                         ReportFormat format) {
  const Table t = solve_table(report, states);
  if (format == ReportFormat::Csv) return to_csv(t);

  std::string out = "{\n  \"states\": [";
  for (std::size_t i = 0; i < states.size(); ++i)
    out += (i ? ", " : "") + json_string(states.label(i));
  out += "],\n  \"value\": [";
  for (std::size_t i = 0; i < report.value.size(); ++i)
    out += (i ? ", " : "") + json_number(report.value[i]);
  out += "],\n  \"region\": [";
  bool first = true;
  for (auto i : report.region.members()) {
    out += (first ? "" : ", ") + json_string(states.label(i));
    first = false;
  }
  out += "],\n";
  out += "  \"iterations\": " + std::to_string(report.iterations) + ",\n";
  out += "  \"residual\": " + json_number(report.residual) + ",\n";
  out += "  \"sandwich_gap\": " + json_number(report.sandwich_gap) + ",\n";
  out += std::string("  \"converged\": ") + (report.converged ? "true" : "false") + "\n}\n";
  return out;
}

Table ladder_table(const LadderTable& ladder) {
  Table t;
  t.columns = {"m", "delta", "sup_gap"};
  for (const auto& row : ladder.rows)
    t.add_row({static_cast<long long>(row.m), row.delta, row.sup_gap});
  t.summary = {{"complete", ladder.complete}, {"final_within_tol", ladder.final_within_tol}};
  return t;
}

Table sweep_table(const std::vector<HorizonValue>& sweep, const StateSpace& states) {
  Table t;
  t.columns = {"T", "state", "lower", "upper"};
  for (const auto& hv : sweep) {
    if (hv.lower.size() != states.size() || hv.upper.size() != states.size())
      throw std::invalid_argument("sweep_table: horizon value does not match the state space");
    for (std::size_t i = 0; i < states.size(); ++i)
      t.add_row({hv.T, states.label(i), hv.lower[i], hv.upper[i]});
  }
  return t;
}

}  // namespace riskstop
