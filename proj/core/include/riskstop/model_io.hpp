#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "riskstop/continuous.hpp"
#include "riskstop/types.hpp"

namespace riskstop {

// Model documents are JSON objects
//
//   {"name": str, "time": "discrete" | "continuous", "states": [str, ...],
//    "kernel": [[num, ...], ...], "g": [num, ...], "G": [num, ...], "c": num}
//
// with "c" optional (defaults to min g). Unknown fields are rejected.

/// Parses and validates a model document. Throws ModelError whose
/// violations carry document paths ("kernel.row[0]", "g[1]", ...).
MarkovModel parse_model(std::string_view text);

/// Reads and parses a model file. Throws std::runtime_error when the file
/// cannot be read.
MarkovModel load_model(const std::string& path);

/// Canonical document for `model`; numbers reparse to identical doubles.
std::string serialize_model(const MarkovModel& model);

/// "field: detail", the form used in parse errors.
std::string describe(const Violation& v);

enum class ReportFormat { Csv, Json };

/// Tabular report. CSV output has a header row, comma separators, LF line
/// endings and numbers with 17 significant digits.
struct Table {
  using Cell = std::variant<std::string, double, long long, bool>;

  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Scalars emitted alongside the rows in JSON output only.
  std::vector<std::pair<std::string, Cell>> summary;

  void add_row(std::vector<Cell> row);
};

std::string to_csv(const Table& table);
std::string to_json(const Table& table);
std::string write_table(const Table& table, ReportFormat format);

/// Reads CSV produced by to_csv back into string cells. Throws
/// std::runtime_error on ragged rows or a missing header.
struct CsvDocument {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};
CsvDocument parse_csv(std::string_view text);

/// Per-state rows (state, value, in_region) plus solver diagnostics.
Table solve_table(const SolveReport& report, const StateSpace& states);

/// CSV: the per-state rows. JSON: every SolveReport field.
std::string write_report(const SolveReport& report, const StateSpace& states,
                         ReportFormat format);

/// Rows (m, delta, sup_gap) in ascending m.
Table ladder_table(const LadderTable& ladder);

/// Rows (T, state, lower, upper), horizon-major.
Table sweep_table(const std::vector<HorizonValue>& sweep, const StateSpace& states);

}  // namespace riskstop
