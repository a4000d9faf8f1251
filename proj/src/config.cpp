#include "mobnet/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mobnet/error.hpp"

namespace mobnet {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string name_of(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

// Strips a trailing # comment that is not inside a JSON string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string section;
  int lineno = 0;
  // A value may continue over several lines until its brackets balance.
  std::string pending_key, pending_value;
  int pending_line = 0;
  auto flush = [&] {
    if (pending_key.empty()) return;
    try {
      cfg.data_[section][pending_key] = nlohmann::json::parse(pending_value);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::Config, "line " + std::to_string(pending_line) + ": bad value for " +
                                         name_of(section, pending_key));
    }
    pending_key.clear();
    pending_value.clear();
  };
  auto balanced = [](const std::string& v) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == '"' && (i == 0 || v[i - 1] != '\\')) in_string = !in_string;
      if (in_string) continue;
      if (v[i] == '[' || v[i] == '{') ++depth;
      if (v[i] == ']' || v[i] == '}') --depth;
    }
    return depth <= 0;
  };
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (!pending_key.empty()) {
      pending_value += " " + line;
      if (balanced(pending_value)) flush();
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": empty section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected key = value");
    }
    pending_key = trim(std::string_view(line).substr(0, eq));
    pending_value = trim(std::string_view(line).substr(eq + 1));
    pending_line = lineno;
    if (pending_key.empty()) throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": empty key");
    if (balanced(pending_value)) flush();
  }
  if (!pending_key.empty()) {
    throw Error(ErrorCode::Config, "line " + std::to_string(pending_line) + ": unterminated value for " +
                                       name_of(section, pending_key));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  return s != data_.end() && s->second.contains(key);
}

const nlohmann::json& Config::at(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end() || !s->second.contains(key)) {
    throw Error(ErrorCode::Config, "missing key " + name_of(section, key));
  }
  return s->second.at(key);
}

double Config::number(const std::string& section, const std::string& key) const {
  const auto& v = at(section, key);
  if (!v.is_number()) throw Error(ErrorCode::Config, name_of(section, key) + " must be a number");
  return v.get<double>();
}

std::int64_t Config::integer(const std::string& section, const std::string& key) const {
  const auto& v = at(section, key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw Error(ErrorCode::Config, name_of(section, key) + " must be an integer");
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
  const auto& v = at(section, key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw Error(ErrorCode::Config, name_of(section, key) + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw Error(ErrorCode::Config, name_of(section, key) + " must be a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::int64_t> Config::integers(const std::string& section, const std::string& key) const {
  std::vector<std::int64_t> out;
  for (double d : numbers(section, key)) {
    if (std::floor(d) != d) throw Error(ErrorCode::Config, name_of(section, key) + " must hold integers");
    out.push_back(static_cast<std::int64_t>(d));
  }
  return out;
}

std::string Config::string(const std::string& section, const std::string& key) const {
  const auto& v = at(section, key);
  if (!v.is_string()) throw Error(ErrorCode::Config, name_of(section, key) + " must be a string");
  return v.get<std::string>();
}

double Config::number_or(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

std::int64_t Config::integer_or(const std::string& section, const std::string& key,
                                std::int64_t fallback) const {
  return has(section, key) ? integer(section, key) : fallback;
}

std::vector<double> Config::numbers_or(const std::string& section, const std::string& key,
                                       std::vector<double> fallback) const {
  return has(section, key) ? numbers(section, key) : fallback;
}

std::vector<double> Config::matrix(const std::string& section, const std::string& key, int& K) const {
  const auto& v = at(section, key);
  std::vector<double> flat;
  if (v.is_array() && !v.empty() && v.front().is_array()) {
    for (const auto& row : v) {
      if (!row.is_array() || row.size() != v.size()) {
        throw Error(ErrorCode::Config, name_of(section, key) + " must be a square matrix");
      }
      for (const auto& e : row) {
        if (!e.is_number()) throw Error(ErrorCode::Config, name_of(section, key) + " must hold numbers");
        flat.push_back(e.get<double>());
      }
    }
    K = static_cast<int>(v.size());
    return flat;
  }
  flat = numbers(section, key);
  const auto k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(flat.size()))));
  if (k * k != static_cast<int>(flat.size()) || k == 0) {
    throw Error(ErrorCode::Config, name_of(section, key) + " must have K*K entries");
  }
  K = k;
  return flat;
}

void Config::set(const std::string& section, const std::string& key, nlohmann::json value) {
  data_[section][key] = std::move(value);
}

std::string Config::echo() const {
  std::string out;
  for (const auto& [section, keys] : data_) {
    out += "[" + section + "]\n";
    for (const auto& [key, value] : keys) out += key + " = " + value.dump() + "\n";
  }
  return out;
}

}  // namespace mobnet
