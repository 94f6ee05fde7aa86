#include "blockprior/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "blockprior/format.hpp"

namespace blockprior {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_int(const std::string& key, const std::string& s) {
  T v{};
  const std::string t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& s) {
  try {
    return parse_double(trim(s));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + s + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects true or false, got '" + s + "'");
}

}  // namespace

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  if (out.empty()) throw std::invalid_argument("empty number list '" + s + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_int<int>("list", item));
  }
  if (out.empty()) throw std::invalid_argument("empty integer list '" + s + "'");
  return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(const std::map<std::string, std::string>& kv, ExperimentSpec& spec) {
  for (const auto& [key, value] : kv) {
    auto stop = [&]() -> StopRule& {
      if (!spec.adaptive_stop) spec.adaptive_stop = StopRule{};
      return *spec.adaptive_stop;
    };
    if (key == "alphas") {
      spec.alphas = parse_double_list(value);
    } else if (key == "ns") {
      spec.ns = parse_int_list(value);
    } else if (key == "methods") {
      spec.methods = parse_methods(value);
    } else if (key == "trials") {
      spec.trials = parse_int<int>(key, value);
    } else if (key == "seed") {
      spec.master_seed = parse_int<std::uint64_t>(key, value);
    } else if (key == "estimator") {
      spec.estimator = parse_estimator(value);
    } else if (key == "sweeps") {
      spec.sweeps = parse_int<int>(key, value);
    } else if (key == "burn_in") {
      spec.burn_in = parse_int<int>(key, value);
    } else if (key == "rgpg_sweeps") {
      spec.rgpg_sweeps = parse_int<int>(key, value);
    } else if (key == "rgpg_burn_in") {
      spec.rgpg_burn_in = parse_int<int>(key, value);
    } else if (key == "constraint_b") {
      spec.constraint_b = parse_real(key, value);
    } else if (key == "amplitude") {
      spec.amplitude = parse_real(key, value);
    } else if (key == "threads") {
      spec.threads = parse_int<int>(key, value);
    } else if (key == "timing") {
      spec.timing = parse_bool(key, value);
    } else if (key == "adaptive_stop") {
      if (parse_bool(key, value)) {
        stop();
      } else {
        spec.adaptive_stop.reset();
      }
    } else if (key == "stop_min_trials") {
      stop().min_trials = parse_int<int>(key, value);
    } else if (key == "stop_max_trials") {
      stop().max_trials = parse_int<int>(key, value);
    } else if (key == "stop_batch") {
      stop().batch = parse_int<int>(key, value);
    } else if (key == "stop_rel_se") {
      stop().rel_se = parse_real(key, value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("BLOCKPRIOR_SEED");
  if (!v || !*v) return std::nullopt;
  return parse_int<std::uint64_t>("BLOCKPRIOR_SEED", v);
}

}  // namespace blockprior
