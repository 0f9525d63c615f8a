#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "malt/cli.hpp"

namespace malt {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct RawConfig {
  // section -> key -> value, insertion-checked for duplicates
  std::map<std::string, std::map<std::string, std::string>> sections;
  // keys actually consumed, so leftovers can be reported by name
  std::map<std::string, std::map<std::string, bool>> used;
};

RawConfig tokenize(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    auto [it, inserted] = raw.sections[section].emplace(key, value);
    if (!inserted) throw ConfigError("duplicate key '" + section + "." + key + "'");
    raw.used[section][key] = false;
  }
  return raw;
}

class Reader {
 public:
  explicit Reader(RawConfig raw) : raw_(std::move(raw)) {}

  bool has_section(const std::string& section) const { return raw_.sections.count(section) > 0; }

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    auto sit = raw_.sections.find(section);
    if (sit == raw_.sections.end()) return std::nullopt;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return std::nullopt;
    raw_.used[section][key] = true;
    return kit->second;
  }

  template <typename T>
  void read(const std::string& section, const std::string& key, T& out);

  void finish() const {
    for (const auto& [section, keys] : raw_.used) {
      for (const auto& [key, used] : keys) {
        if (!used) throw ConfigError("unknown key '" + section + "." + key + "'");
      }
    }
  }

 private:
  RawConfig raw_;
};

double parse_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + section + "." + key + "': expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& section, const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("key '" + section + "." + key + "': expected an integer, got '" + v + "'");
  return out;
}

template <>
void Reader::read(const std::string& section, const std::string& key, double& out) {
  if (auto v = get(section, key)) out = parse_double(section, key, *v);
}

template <>
void Reader::read(const std::string& section, const std::string& key, int& out) {
  if (auto v = get(section, key)) out = static_cast<int>(parse_int(section, key, *v));
}

template <>
void Reader::read(const std::string& section, const std::string& key, long& out) {
  if (auto v = get(section, key)) out = static_cast<long>(parse_int(section, key, *v));
}

template <>
void Reader::read(const std::string& section, const std::string& key, std::uint64_t& out) {
  if (auto v = get(section, key)) out = static_cast<std::uint64_t>(parse_int(section, key, *v));
}

template <>
void Reader::read(const std::string& section, const std::string& key, bool& out) {
  if (auto v = get(section, key)) {
    if (*v == "true") out = true;
    else if (*v == "false") out = false;
    else throw ConfigError("key '" + section + "." + key + "': expected true or false");
  }
}

template <>
void Reader::read(const std::string& section, const std::string& key, std::string& out) {
  if (auto v = get(section, key)) out = *v;
}

template <>
void Reader::read(const std::string& section, const std::string& key,
                  std::vector<double>& out) {
  auto v = get(section, key);
  if (!v) return;
  out.clear();
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_double(section, key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + section + "." + key + "': empty list");
}

template <>
void Reader::read(const std::string& section, const std::string& key,
                  std::vector<std::string>& out) {
  auto v = get(section, key);
  if (!v) return;
  out.clear();
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("key '" + section + "." + key + "': empty list");
}

BuiltinTargetSpec::Kind parse_kind(const std::string& v) {
  using Kind = BuiltinTargetSpec::Kind;
  if (v == "standard-gaussian") return Kind::standard_gaussian;
  if (v == "diag-gaussian") return Kind::diag_gaussian;
  if (v == "rotated-gaussian") return Kind::rotated_gaussian;
  if (v == "rosenbrock") return Kind::rosenbrock;
  if (v == "logistic-regression") return Kind::logistic_regression;
  throw ConfigError("key 'target.kind': unknown target kind '" + v + "'");
}

KernelKind parse_kernel(const std::string& v) {
  if (v == "malt") return KernelKind::malt;
  if (v == "hmc") return KernelKind::hmc;
  if (v == "rhmc-uniform") return KernelKind::rhmc_uniform;
  if (v == "rhmc-exponential") return KernelKind::rhmc_exponential;
  throw ConfigError("key 'run.kernel': unknown kernel '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  Reader reader(tokenize(text));
  ExperimentConfig cfg;

  if (auto v = reader.get("target", "kind")) cfg.target.kind = parse_kind(*v);
  else throw ConfigError("missing required key 'target.kind'");
  reader.read("target", "dim", cfg.target.dim);
  reader.read("target", "variances", cfg.target.variances);
  reader.read("target", "spectrum", cfg.target.spectrum);
  reader.read("target", "rotation_seed", cfg.target.rotation_seed);
  reader.read("target", "curvature", cfg.target.curvature);
  reader.read("target", "n_obs", cfg.target.n_obs);
  reader.read("target", "data_seed", cfg.target.data_seed);
  reader.read("target", "init_scale", cfg.target.init_scale);

  if (auto v = reader.get("run", "kernel")) cfg.run.kernel = parse_kernel(*v);
  reader.read("run", "chains", cfg.run.chains);
  reader.read("run", "n_adapt", cfg.run.n_adapt);
  reader.read("run", "n_clip", cfg.run.n_clip);
  reader.read("run", "n_postadapt_warmup", cfg.run.n_postadapt_warmup);
  reader.read("run", "n_sample", cfg.run.n_sample);
  reader.read("run", "seed", cfg.run.seed);
  reader.read("run", "threads", cfg.run.threads);
  if (auto v = reader.get("run", "rho_mode")) {
    if (*v == "adaptive") cfg.run.rho_mode = RhoMode::adaptive;
    else if (*v == "fixed-one") cfg.run.rho_mode = RhoMode::fixed_one;
    else throw ConfigError("key 'run.rho_mode': expected adaptive or fixed-one");
  }
  if (auto v = reader.get("run", "damping_mode")) {
    if (*v == "adaptive") cfg.run.damping_mode = DampingMode::adaptive;
    else if (*v == "fixed") cfg.run.damping_mode = DampingMode::fixed;
    else throw ConfigError("key 'run.damping_mode': expected adaptive or fixed");
  }
  reader.read("run", "damping_value", cfg.run.damping_value);
  if (auto v = reader.get("run", "accept_mean")) {
    if (*v == "arithmetic") cfg.run.accept_mean = AcceptMean::arithmetic;
    else if (*v == "harmonic") cfg.run.accept_mean = AcceptMean::harmonic;
    else throw ConfigError("key 'run.accept_mean': expected arithmetic or harmonic");
  }

  reader.read("tuner", "learning_rate", cfg.run.adam.learning_rate);
  reader.read("tuner", "beta1", cfg.run.adam.beta1);
  reader.read("tuner", "beta2", cfg.run.adam.beta2);
  reader.read("tuner", "epsilon", cfg.run.adam.epsilon);
  reader.read("tuner", "amnesia", cfg.run.schedule.a);
  reader.read("tuner", "amnesia_w", cfg.run.schedule.a_w);
  reader.read("tuner", "alpha_star", cfg.run.alpha_star);
  reader.read("tuner", "damping_fallback", cfg.run.damping_fallback);
  reader.read("tuner", "variance_floor", cfg.run.variance_floor);
  reader.read("tuner", "init_step", cfg.run.init_step);
  reader.read("tuner", "init_length", cfg.run.init_length);
  reader.read("tuner", "max_length_factor", cfg.run.max_length_factor);

  reader.read("output", "dir", cfg.output.dir);
  reader.read("output", "draws", cfg.output.draws);

  if (reader.has_section("sweep")) {
    SweepConfig sweep;
    reader.read("sweep", "tau_grid", sweep.tau_grid);
    reader.read("sweep", "gamma_grid", sweep.gamma_grid);
    reader.read("sweep", "step", sweep.step);
    reader.read("sweep", "repeats", sweep.repeats);
    if (sweep.tau_grid.empty() || sweep.gamma_grid.empty())
      throw ConfigError("section 'sweep' requires tau_grid and gamma_grid");
    for (double t : sweep.tau_grid)
      if (!(t > 0.0)) throw ConfigError("key 'sweep.tau_grid': values must be > 0");
    for (double g : sweep.gamma_grid)
      if (g < 0.0) throw ConfigError("key 'sweep.gamma_grid': values must be >= 0");
    if (!std::is_sorted(sweep.tau_grid.begin(), sweep.tau_grid.end()) ||
        !std::is_sorted(sweep.gamma_grid.begin(), sweep.gamma_grid.end()))
      throw ConfigError("section 'sweep': grids must be sorted ascending");
    if (sweep.repeats < 1) throw ConfigError("key 'sweep.repeats': must be >= 1");
    if (!(sweep.step > 0.0)) throw ConfigError("key 'sweep.step': must be > 0");
    cfg.sweep = std::move(sweep);
  }

  if (reader.has_section("bench")) {
    BenchConfig bench;
    bench.methods = {"malt-adaptive", "malt-rho1", "rhmc-uniform", "rhmc-exponential", "hmc"};
    reader.read("bench", "methods", bench.methods);
    reader.read("bench", "repeats", bench.repeats);
    for (const auto& m : bench.methods) {
      if (m != "malt-adaptive" && m != "malt-rho1" && m != "hmc" && m != "rhmc-uniform" &&
          m != "rhmc-exponential")
        throw ConfigError("key 'bench.methods': unknown method '" + m + "'");
    }
    if (bench.repeats < 2) throw ConfigError("key 'bench.repeats': need >= 2 for SEM");
    cfg.bench = std::move(bench);
  }

  reader.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_single_chain_preset(ExperimentConfig& config) {
  config.run.chains = 1;
  config.run.adam.learning_rate = 0.01;
  config.run.n_adapt *= 4;
}

}  // namespace malt
