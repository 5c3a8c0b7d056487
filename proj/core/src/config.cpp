#include "pqpf/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "pqpf/errors.hpp"

namespace pqpf::pipeline {

void PipelineConfig::validate() const {
  if (training_days < 1) throw Error("config: training_days must be >= 1");
  if (accumulation_days < 1 || accumulation_days > 5)
    throw Error("config: accumulation_days must be in 1..5");
  if (methods.empty()) throw Error("config: method list must not be empty");
  if (jobs < 1) throw Error("config: jobs must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

nlohmann::json toml_scalar(const std::string& raw, const std::string& path) {
  std::string v = trim(raw);
  if (v.empty()) throw FormatError(path + ": empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw FormatError(path + ": unterminated string " + v);
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    if (v.find_first_of(".eE") != std::string::npos) return std::stod(v);
    return std::stoll(v);
  } catch (const std::exception&) {
    throw FormatError(path + ": cannot parse value '" + v + "'");
  }
}

// flat TOML subset -> json object with (possibly section-prefixed) keys
nlohmann::json parse_toml_subset(std::istream& in, const std::string& path) {
  nlohmann::json j = nlohmann::json::object();
  std::string line, section;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(path + ": malformed section header " + line);
      section = trim(line.substr(1, line.size() - 2)) + ".";
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path + ": expected key = value, got " + line);
    std::string key = section + trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw FormatError(path + ": unterminated array in " + line);
      nlohmann::json arr = nlohmann::json::array();
      std::string body = value.substr(1, value.size() - 2);
      std::string item;
      for (char c : body) {
        if (c == ',') {
          if (!trim(item).empty()) arr.push_back(toml_scalar(item, path));
          item.clear();
        } else {
          item.push_back(c);
        }
      }
      if (!trim(item).empty()) arr.push_back(toml_scalar(item, path));
      j[key] = std::move(arr);
    } else {
      j[key] = toml_scalar(value, path);
    }
  }
  return j;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j;
  if (ends_with(path, ".toml")) {
    j = parse_toml_subset(in, path);
  } else {
    j = nlohmann::json::parse(in);
  }

  PipelineConfig c;
  c.training_days = j.value("training_days", c.training_days);
  c.accumulation_days = j.value("accumulation_days", c.accumulation_days);
  if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
  c.reference = j.value("reference", c.reference);
  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
  c.init_hour = j.value("init_hour", c.init_hour);
  c.epc.history_years = j.value("epc_history_years", c.epc.history_years);
  c.epc.day_window = j.value("epc_day_window", c.epc.day_window);
  c.validate();
  return c;
}

}  // namespace pqpf::pipeline
