#pragma once

// Experiment configuration: a small INI/TOML-like file
//
//   # comment
//   [section]
//   key = <JSON value>
//
// where every value is parsed as JSON, so lists are [1, 2, 3], matrices are
// nested lists and strings are double-quoted.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mobnet {

class Config {
 public:
  // Throws Config on syntax errors, with the line number.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  // Throws Config naming "[section] key" when missing or of the wrong type.
  const nlohmann::json& at(const std::string& section, const std::string& key) const;

  double number(const std::string& section, const std::string& key) const;
  std::int64_t integer(const std::string& section, const std::string& key) const;
  std::vector<double> numbers(const std::string& section, const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& section, const std::string& key) const;
  std::string string(const std::string& section, const std::string& key) const;

  double number_or(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t integer_or(const std::string& section, const std::string& key, std::int64_t fallback) const;
  std::vector<double> numbers_or(const std::string& section, const std::string& key,
                                 std::vector<double> fallback) const;

  // Row-major square matrix from a flat list or a list of rows; sets K.
  std::vector<double> matrix(const std::string& section, const std::string& key, int& K) const;

  void set(const std::string& section, const std::string& key, nlohmann::json value);

  // Canonical dump, sections and keys sorted.
  std::string echo() const;

 private:
  std::map<std::string, std::map<std::string, nlohmann::json>> data_;
};

}  // namespace mobnet
