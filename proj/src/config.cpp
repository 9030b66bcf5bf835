#include "slq/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "slq/errors.hpp"
#include "slq/rng.hpp"

namespace slq {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Drops a # comment, ignoring # inside double-quoted strings.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    else if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

int bracket_delta(const std::string& s) {
  int d = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    else if (!quoted && c == '[') ++d;
    else if (!quoted && c == ']') --d;
  }
  return d;
}

struct RawConfig {
  std::map<std::string, std::string> values;  // "section.key" (or bare key) -> text
  mutable std::set<std::string> used;
  std::string source;

  const std::string* get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return nullptr;
    used.insert(key);
    return &it->second;
  }
  std::string require(const std::string& key) const {
    const std::string* v = get(key);
    if (!v) throw ConfigError(source + ": missing required field '" + key + "'");
    return *v;
  }
};

RawConfig tokenize(const std::string& text, const std::string& source_name) {
  RawConfig raw;
  raw.source = source_name;
  std::istringstream is(text);
  std::string line;
  std::string section;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(strip_comment(line));
    if (t.empty()) continue;
    if (t.front() == '[' && t.back() == ']' && bracket_delta(t) == 0 &&
        t.find('=') == std::string::npos) {
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty table name");
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                        ": expected key = value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty key");
    // Arrays may continue over following lines until brackets balance.
    int depth = bracket_delta(value);
    while (depth > 0 && std::getline(is, line)) {
      ++line_no;
      const std::string cont = trim(strip_comment(line));
      value += " " + cont;
      depth += bracket_delta(cont);
    }
    if (depth != 0)
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                        ": unbalanced brackets in value for '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!raw.values.emplace(full, value).second)
      throw ConfigError(source_name + ": duplicate key '" + full + "'");
  }
  return raw;
}

double to_double(const RawConfig& raw, const std::string& key, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + text.size())
    throw ConfigError(raw.source + ": field '" + key + "' is not a number: '" + text + "'");
  return v;
}

long to_long(const RawConfig& raw, const std::string& key, const std::string& text) {
  const double v = to_double(raw, key, text);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v)
    throw ConfigError(raw.source + ": field '" + key + "' must be an integer");
  return n;
}

bool to_bool(const RawConfig& raw, const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(raw.source + ": field '" + key + "' must be true or false");
}

std::string to_string_value(const std::string& text) {
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"')
    return text.substr(1, text.size() - 2);
  return text;
}

Mat get_matrix(const RawConfig& raw, const std::string& key) {
  try {
    return parse_matrix(raw.require(key));
  } catch (const ConfigError& e) {
    throw ConfigError(raw.source + ": field '" + key + "': " + e.what());
  }
}

std::vector<double> flatten(const Mat& M) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(M.size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
  return out;
}

void check_sym(const Mat& M, int dim, const char* path) {
  if (M.rows() != dim || M.cols() != dim)
    throw ConfigError(std::string(path) + " must be " + std::to_string(dim) + "x" +
                      std::to_string(dim));
  if (!is_symmetric(M, 1e-9)) throw ConfigError(std::string(path) + " must be symmetric");
}

}  // namespace

StopMode parse_stop_mode(const std::string& s) {
  if (s == "qdiff") return StopMode::QDiff;
  if (s == "gain") return StopMode::Gain;
  if (s == "either") return StopMode::Either;
  throw ConfigError("learner.stop_mode must be one of qdiff, gain, either (got '" + s + "')");
}

std::string stop_mode_name(StopMode mode) {
  switch (mode) {
    case StopMode::QDiff: return "qdiff";
    case StopMode::Gain: return "gain";
    case StopMode::Either: return "either";
  }
  return "either";
}

ExperimentConfig parse_config(const std::string& text, const std::string& source_name) {
  const RawConfig raw = tokenize(text, source_name);
  ExperimentConfig cfg;

  if (const std::string* v = raw.get("seed")) {
    const long s = to_long(raw, "seed", *v);
    if (s < 0) throw ConfigError(raw.source + ": seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }

  cfg.system.A = get_matrix(raw, "system.A");
  cfg.system.B = get_matrix(raw, "system.B");
  cfg.system.C = get_matrix(raw, "system.C");
  cfg.system.D = get_matrix(raw, "system.D");

  cfg.expert.Q_T = get_matrix(raw, "expert.Q_T");
  cfg.expert.R_T = get_matrix(raw, "expert.R_T");
  cfg.expert.K_init = get_matrix(raw, "expert.K_init");
  if (const std::string* v = raw.get("expert.demo_samples"))
    cfg.expert.demo_samples = static_cast<int>(to_long(raw, "expert.demo_samples", *v));

  if (const std::string* v = raw.get("learner.algorithm"))
    cfg.learner.algorithm = to_string_value(*v);
  cfg.learner.R = get_matrix(raw, "learner.R");
  cfg.learner.Q0 = get_matrix(raw, "learner.Q0");
  const bool model_based = cfg.learner.algorithm == "model_based";
  if (const std::string* v = raw.get("learner.eps1"))
    cfg.learner.eps1 = to_double(raw, "learner.eps1", *v);
  else
    cfg.learner.eps1 = model_based ? 1e-6 : 1e-3;
  if (const std::string* v = raw.get("learner.max_iter"))
    cfg.learner.max_iter = to_long(raw, "learner.max_iter", *v);
  else
    cfg.learner.max_iter = model_based ? 100 : 50;
  if (const std::string* v = raw.get("learner.stop_mode"))
    cfg.learner.stop_mode = parse_stop_mode(to_string_value(*v));
  else
    cfg.learner.stop_mode = model_based ? StopMode::QDiff : StopMode::Either;
  if (const std::string* v = raw.get("learner.gain_tol"))
    cfg.learner.gain_tol = to_double(raw, "learner.gain_tol", *v);

  if (const std::string* v = raw.get("sim.step_h"))
    cfg.sim.step_h = to_double(raw, "sim.step_h", *v);
  if (const std::string* v = raw.get("sim.window_dt"))
    cfg.sim.window_dt = to_double(raw, "sim.window_dt", *v);
  if (const std::string* v = raw.get("sim.windows_l"))
    cfg.sim.windows_l = static_cast<int>(to_long(raw, "sim.windows_l", *v));
  if (const std::string* v = raw.get("sim.paths_M"))
    cfg.sim.paths_M = static_cast<int>(to_long(raw, "sim.paths_M", *v));
  {
    const Mat x0 = get_matrix(raw, "sim.x0");
    if (x0.rows() != 1 && x0.cols() != 1)
      throw ConfigError(raw.source + ": sim.x0 must be a vector");
    cfg.sim.x0 = x0.rows() == 1 ? Vec(x0.transpose()) : Vec(x0);
  }
  cfg.sim.seed = cfg.seed;

  if (const std::string* v = raw.get("noise.amplitude"))
    cfg.noise.amplitude = to_double(raw, "noise.amplitude", *v);
  if (const std::string* v = raw.get("noise.count"))
    cfg.noise.count = static_cast<int>(to_long(raw, "noise.count", *v));
  if (const std::string* v = raw.get("noise.freq_range"))
    cfg.noise.freq_range = to_double(raw, "noise.freq_range", *v);
  if (raw.get("noise.frequencies")) cfg.noise.frequencies = flatten(get_matrix(raw, "noise.frequencies"));

  if (const std::string* v = raw.get("output.directory"))
    cfg.output.directory = to_string_value(*v);
  if (const std::string* v = raw.get("output.plot"))
    cfg.output.plot = to_bool(raw, "output.plot", *v);
  if (const std::string* v = raw.get("output.write_paths"))
    cfg.output.write_paths = to_bool(raw, "output.write_paths", *v);

  for (const auto& e : raw.values)
    if (!raw.used.count(e.first))
      throw ConfigError(source_name + ": unknown field '" + e.first + "'");

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path);
}

void ExperimentConfig::validate() const {
  try {
    system.validate();
  } catch (const std::exception& e) {  // dimension faults surface as config errors here
    throw ConfigError(std::string("system: ") + e.what());
  }
  const int n = system.n();
  const int m = system.m();

  check_sym(expert.Q_T, n, "expert.Q_T");
  if (sym_min_eig(expert.Q_T) < -1e-10 * std::max(1.0, expert.Q_T.norm()))
    throw ConfigError("expert.Q_T must be positive semidefinite");
  check_sym(expert.R_T, m, "expert.R_T");
  if (!is_positive_definite(expert.R_T))
    throw ConfigError("expert.R_T must be positive definite");
  if (expert.K_init.rows() != m || expert.K_init.cols() != n)
    throw ConfigError("expert.K_init must be " + std::to_string(m) + "x" + std::to_string(n));
  if (expert.demo_samples < 0)
    throw ConfigError("expert.demo_samples must be nonnegative");

  if (learner.algorithm != "model_based" && learner.algorithm != "model_free")
    throw ConfigError("learner.algorithm must be model_based or model_free (got '" +
                      learner.algorithm + "')");
  check_sym(learner.R, m, "learner.R");
  if (!is_positive_definite(learner.R))
    throw ConfigError("learner.R must be positive definite");
  check_sym(learner.Q0, n, "learner.Q0");
  if (sym_min_eig(learner.Q0) < -1e-10 * std::max(1.0, learner.Q0.norm()))
    throw ConfigError("learner.Q0 must be positive semidefinite");
  if (!(learner.eps1 > 0)) throw ConfigError("learner.eps1 must be positive");
  if (learner.max_iter < 1) throw ConfigError("learner.max_iter must be at least 1");
  if (!(learner.gain_tol > 0)) throw ConfigError("learner.gain_tol must be positive");

  sim.validate();
  if (sim.x0.size() != n)
    throw ConfigError("sim.x0 must have " + std::to_string(n) + " entries");

  if (noise.amplitude < 0) throw ConfigError("noise.amplitude must be nonnegative");
  if (noise.count < 0) throw ConfigError("noise.count must be nonnegative");
  if (!noise.frequencies.empty()) {
    if (noise.count == 0)
      throw ConfigError("noise.count must be set when noise.frequencies is explicit");
    if (noise.frequencies.size() != static_cast<std::size_t>(m) * noise.count)
      throw ConfigError("noise.frequencies must list m*count = " +
                        std::to_string(static_cast<std::size_t>(m) * noise.count) +
                        " values");
  } else if (noise.count > 0 && !(noise.freq_range > 0)) {
    throw ConfigError("noise.freq_range must be positive when noise.count > 0");
  }

  if (output.directory.empty()) throw ConfigError("output.directory must be nonempty");
}

ExplorationNoise ExperimentConfig::make_noise() const {
  if (!noise.frequencies.empty()) {
    ExplorationNoise e;
    e.amplitude = noise.amplitude;
    e.count = noise.count;
    e.frequencies = noise.frequencies;
    return e;
  }
  if (noise.count == 0) {
    ExplorationNoise e;
    e.amplitude = noise.amplitude;
    e.count = 0;
    return e;
  }
  return make_exploration(seed, system.m(), noise.count, noise.amplitude, noise.freq_range);
}

KeyValueFile manifest_from(const ExperimentConfig& cfg) {
  KeyValueFile kv;
  kv.set("manifest_version", "1");
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("system.A", format_matrix(cfg.system.A));
  kv.set("system.B", format_matrix(cfg.system.B));
  kv.set("system.C", format_matrix(cfg.system.C));
  kv.set("system.D", format_matrix(cfg.system.D));
  kv.set("expert.Q_T", format_matrix(cfg.expert.Q_T));
  kv.set("expert.R_T", format_matrix(cfg.expert.R_T));
  kv.set("expert.K_init", format_matrix(cfg.expert.K_init));
  kv.set("expert.demo_samples", std::to_string(cfg.expert.demo_samples));
  kv.set("learner.algorithm", cfg.learner.algorithm);
  kv.set("learner.R", format_matrix(cfg.learner.R));
  kv.set("learner.Q0", format_matrix(cfg.learner.Q0));
  kv.set("learner.eps1", format_double(cfg.learner.eps1));
  kv.set("learner.max_iter", std::to_string(cfg.learner.max_iter));
  kv.set("learner.stop_mode", stop_mode_name(cfg.learner.stop_mode));
  kv.set("learner.gain_tol", format_double(cfg.learner.gain_tol));
  kv.set("sim.step_h", format_double(cfg.sim.step_h));
  kv.set("sim.window_dt", format_double(cfg.sim.window_dt));
  kv.set("sim.windows_l", std::to_string(cfg.sim.windows_l));
  kv.set("sim.paths_M", std::to_string(cfg.sim.paths_M));
  kv.set("sim.x0", format_matrix(cfg.sim.x0.transpose()));
  kv.set("noise.amplitude", format_double(cfg.noise.amplitude));
  kv.set("noise.count", std::to_string(cfg.noise.count));
  kv.set("noise.freq_range", format_double(cfg.noise.freq_range));
  if (!cfg.noise.frequencies.empty()) {
    Mat f(1, static_cast<Eigen::Index>(cfg.noise.frequencies.size()));
    for (Eigen::Index i = 0; i < f.cols(); ++i)
      f(0, i) = cfg.noise.frequencies[static_cast<std::size_t>(i)];
    kv.set("noise.frequencies", format_matrix(f));
  }
  kv.set("output.directory", cfg.output.directory);
  kv.set("output.plot", cfg.output.plot ? "true" : "false");
  kv.set("output.write_paths", cfg.output.write_paths ? "true" : "false");
  return kv;
}

}  // namespace slq
