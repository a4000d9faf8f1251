#include "mobnet/report.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "mobnet/error.hpp"

namespace mobnet {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

Table::Table(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

void Table::add(std::initializer_list<double> row) { add(std::vector<double>(row)); }

void Table::add(const std::vector<double>& row) {
  std::vector<std::string> cells;
  cells.reserve(row.size());
  for (double v : row) cells.push_back(format_number(v));
  add_cells(std::move(cells));
}

void Table::add_cells(std::vector<std::string> row) {
  if (row.size() != columns_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "row width differs from the header of " + name_);
  }
  rows_.push_back(std::move(row));
}

std::size_t Table::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == column) return i;
  throw Error(ErrorCode::InvalidArgument, "no column " + std::string(column) + " in " + name_);
}

double Table::number(std::size_t row, std::string_view column) const {
  return std::stod(rows_.at(row)[column_index(column)]);
}

std::vector<double> Table::column(std::string_view column) const {
  const auto c = column_index(column);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(std::stod(r[c]));
  return out;
}

std::string Table::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += r[i];
    }
    out += '\n';
  }
  return out;
}

bool ExperimentReport::all_pass() const {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return true;
}

const Table& ExperimentReport::table(std::string_view name) const {
  for (const auto& t : tables)
    if (t.name() == name) return t;
  throw Error(ErrorCode::InvalidArgument, "no table " + std::string(name) + " in report " + id);
}

Table& ExperimentReport::add_table(std::string name, std::vector<std::string> columns) {
  tables.emplace_back(std::move(name), std::move(columns));
  return tables.back();
}

void ExperimentReport::add_verdict(std::string metric, double estimate, double se, double threshold,
                                   std::uint64_t n, bool pass) {
  verdicts.push_back({id, std::move(metric), estimate, se, threshold, n, pass});
}

std::string ExperimentReport::verdict_header() {
  return "experiment,metric,estimate,se,threshold,n_samples,verdict\n";
}

std::string ExperimentReport::verdict_rows() const {
  std::string out;
  for (const auto& v : verdicts) {
    out += fmt::format("{},{},{},{},{},{},{}\n", v.experiment, v.metric, format_number(v.estimate),
                       format_number(v.se), format_number(v.threshold), v.n_samples,
                       v.pass ? "PASS" : "FAIL");
  }
  return out;
}

std::string ExperimentReport::to_string() const {
  std::string out = fmt::format("# experiment {}\n# seed {}\n", id, seed);
  if (!config_echo.empty()) {
    out += "# config\n";
    std::size_t start = 0;
    while (start < config_echo.size()) {
      const auto end = config_echo.find('\n', start);
      out += "#   " + config_echo.substr(start, end - start) + "\n";
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  for (const auto& t : tables) out += "\n## " + t.name() + "\n" + t.csv();
  out += "\n## verdicts\n" + verdict_header() + verdict_rows();
  return out;
}

}  // namespace mobnet
