#pragma once

// Tables, verdicts and reports emitted by the experiments.
//
// Numbers are stored already formatted (shortest round-trip), so a report
// serializes byte-for-byte reproducibly and a table parsed back yields the
// exact doubles it was built from.

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

namespace mobnet {

std::string format_number(double x);

class Table {
 public:
  Table() = default;
  Table(std::string name, std::vector<std::string> columns);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }

  // Appends a row of numbers. Throws DimensionMismatch on a wrong width.
  void add(std::initializer_list<double> row);
  void add(const std::vector<double>& row);
  // Appends a row of preformatted cells.
  void add_cells(std::vector<std::string> row);

  const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  double number(std::size_t row, std::string_view column) const;
  std::vector<double> column(std::string_view column) const;
  std::size_t column_index(std::string_view column) const;

  std::string csv() const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Every verdict carries the statistic, its standard error, the threshold it
// was compared with and the sample size behind it.
struct Verdict {
  std::string experiment;
  std::string metric;
  double estimate = 0.0;
  double se = 0.0;
  double threshold = 0.0;
  std::uint64_t n_samples = 0;
  bool pass = false;
};

struct ExperimentReport {
  std::string id;
  std::uint64_t seed = 0;
  std::string config_echo;
  std::deque<Table> tables;  // deque: add_table references stay valid
  std::vector<Verdict> verdicts;

  bool all_pass() const;
  const Table& table(std::string_view name) const;  // throws InvalidArgument
  Table& add_table(std::string name, std::vector<std::string> columns);
  void add_verdict(std::string metric, double estimate, double se, double threshold,
                   std::uint64_t n, bool pass);

  static std::string verdict_header();
  std::string verdict_rows() const;  // CSV rows without header
  // Header comment, every table and the verdicts, as one text blob.
  std::string to_string() const;
};

}  // namespace mobnet
