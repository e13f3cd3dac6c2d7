#include "adatemp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "adatemp/error.hpp"

namespace adatemp {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_unsigned(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

template <typename E>
E parse_choice(const std::string& v, const std::vector<std::pair<std::string, E>>& table) {
  const std::string l = lower(v);
  for (const auto& [name, value] : table) {
    if (name == l) return value;
  }
  std::string options;
  for (const auto& entry : table) options += (options.empty() ? "" : ", ") + entry.first;
  throw ConfigError("invalid value '" + v + "' (expected one of: " + options + ")");
}

template <typename E>
std::string choice_name(E value, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

const std::vector<std::pair<std::string, RejuvenationScaling>> kScalings{
    {"sqrt", RejuvenationScaling::kSqrt}, {"linear", RejuvenationScaling::kLinear}};
const std::vector<std::pair<std::string, Taper>> kTapers{{"hat", Taper::kHat},
                                                         {"gaspari-cohn", Taper::kGaspariCohn}};
const std::vector<std::pair<std::string, StageOrder>> kOrders{
    {"particle-first", StageOrder::kParticleFirst}, {"gaussian-first", StageOrder::kGaussianFirst}};
const std::vector<std::pair<std::string, Resampler>> kResamplers{
    {"multinomial", Resampler::kMultinomial}, {"systematic", Resampler::kSystematic}};
const std::vector<std::pair<std::string, OtSolver>> kSolvers{{"exact", OtSolver::kExact},
                                                             {"sinkhorn", OtSolver::kSinkhorn}};
const std::vector<std::pair<std::string, GainSolver>> kGainSolvers{
    {"direct", GainSolver::kDirect}, {"fixed-point", GainSolver::kFixedPoint}};
const std::vector<std::pair<std::string, NoiseMode>> kNoise{{"gaussian", NoiseMode::kGaussian},
                                                            {"noiseless", NoiseMode::kNoiseless}};
const std::vector<std::pair<std::string, DriftSign>> kDrift{
    {"attracting", DriftSign::kAttracting}, {"repelling", DriftSign::kRepelling}};
const std::vector<std::pair<std::string, bool>> kRejuvenationScope{{"local", false},
                                                                    {"global", true}};

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"filter", [](ExperimentConfig& c, const std::string& v) { c.filter = parse_filter_spec(v); }},
      {"n_ens",
       [](ExperimentConfig& c, const std::string& v) {
         c.n_ens = static_cast<Index>(parse_unsigned(v));
       }},
      {"cycles", [](ExperimentConfig& c, const std::string& v) { c.cycles = parse_unsigned(v); }},
      {"skip", [](ExperimentConfig& c, const std::string& v) { c.skip = parse_unsigned(v); }},
      {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_unsigned(v); }},
      {"inflation", [](ExperimentConfig& c, const std::string& v) { c.inflation = parse_double(v); }},
      {"rejuvenation",
       [](ExperimentConfig& c, const std::string& v) { c.rejuvenation = parse_double(v); }},
      {"rejuvenation_scaling",
       [](ExperimentConfig& c, const std::string& v) {
         c.rejuvenation_scaling = parse_choice(v, kScalings);
       }},
      {"rejuvenation_scope",
       [](ExperimentConfig& c, const std::string& v) {
         c.global_rejuvenation = parse_choice(v, kRejuvenationScope);
       }},
      {"r_loc", [](ExperimentConfig& c, const std::string& v) { c.r_loc = parse_double(v); }},
      {"taper", [](ExperimentConfig& c, const std::string& v) { c.taper = parse_choice(v, kTapers); }},
      {"alpha_tempered",
       [](ExperimentConfig& c, const std::string& v) { c.alpha_tempered = parse_double(v); }},
      {"theta", [](ExperimentConfig& c, const std::string& v) { c.theta = parse_double(v); }},
      {"iqr_factor",
       [](ExperimentConfig& c, const std::string& v) { c.iqr_factor = parse_double(v); }},
      {"order", [](ExperimentConfig& c, const std::string& v) { c.order = parse_choice(v, kOrders); }},
      {"resampler",
       [](ExperimentConfig& c, const std::string& v) { c.resampler = parse_choice(v, kResamplers); }},
      {"ot_solver",
       [](ExperimentConfig& c, const std::string& v) { c.ot_solver = parse_choice(v, kSolvers); }},
      {"fpf_epsilon",
       [](ExperimentConfig& c, const std::string& v) { c.fpf_epsilon = parse_double(v); }},
      {"fpf_solver",
       [](ExperimentConfig& c, const std::string& v) {
         c.fpf_solver = parse_choice(v, kGainSolvers);
       }},
      {"fpf_iterations",
       [](ExperimentConfig& c, const std::string& v) {
         c.fpf_iterations = static_cast<int>(parse_unsigned(v));
       }},
      {"noise", [](ExperimentConfig& c, const std::string& v) { c.noise = parse_choice(v, kNoise); }},
      {"drift", [](ExperimentConfig& c, const std::string& v) { c.drift = parse_choice(v, kDrift); }},
      {"observe_all",
       [](ExperimentConfig& c, const std::string& v) { c.observe_all = parse_bool(v); }},
      {"obs_variance",
       [](ExperimentConfig& c, const std::string& v) { c.obs_variance = parse_double(v); }},
      {"spinup", [](ExperimentConfig& c, const std::string& v) { c.spinup = parse_double(v); }},
      {"output", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

const std::set<std::string> kSections{"experiment", "filter", "addons", "output"};

struct Token {
  std::string key;
  std::string value;
  int line;
};

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kLangevin:
      return "langevin";
    case ExperimentKind::kLorenz63:
      return "lorenz63";
    case ExperimentKind::kLorenz96:
      return "lorenz96";
    case ExperimentKind::kShallowWater:
      return "shallow_water";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  const std::string l = lower(name);
  if (l == "langevin") return ExperimentKind::kLangevin;
  if (l == "lorenz63" || l == "l63") return ExperimentKind::kLorenz63;
  if (l == "lorenz96" || l == "l96") return ExperimentKind::kLorenz96;
  if (l == "shallow_water" || l == "sw" || l == "shallow-water") return ExperimentKind::kShallowWater;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string FilterSpec::combination() const {
  return hybrid() ? to_string(primary) + "-" + to_string(*gaussian) : to_string(primary);
}

std::string FilterSpec::name() const {
  if (!hybrid() || criterion == Criterion::kAlways) return combination();
  return to_string(criterion) + "-" + combination();
}

FilterSpec parse_filter_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, '-');) parts.push_back(part);
  if (parts.empty() || parts.size() > 3) {
    throw ConfigError("invalid filter specification '" + text + "'");
  }
  FilterSpec spec;
  if (parts.size() == 3) {
    const std::string c = lower(parts[0]);
    if (c == "ess") {
      spec.criterion = Criterion::kEss;
    } else if (c == "iqr") {
      spec.criterion = Criterion::kIqr;
    } else if (c == "always") {
      spec.criterion = Criterion::kAlways;
    } else {
      throw ConfigError("unknown tempering criterion '" + parts[0] + "'");
    }
    parts.erase(parts.begin());
  }
  spec.primary = parse_filter_kind(parts[0]);
  if (parts.size() == 2) {
    spec.gaussian = parse_filter_kind(parts[1]);
    if (!is_particle_type(spec.primary) || is_particle_type(*spec.gaussian)) {
      throw ConfigError("hybrid '" + text +
                        "' must pair a particle-type filter with ESRF or LESRF");
    }
  }
  return spec;
}

void ExperimentConfig::validate() const {
  if (n_ens < 2) throw ConfigError("N_ens >= 2 required");
  if (!(cycles > skip)) throw ConfigError("cycles must exceed skip");
  if (!(inflation >= 1.0)) throw ConfigError("inflation must be >= 1");
  if (!(rejuvenation >= 0.0)) throw ConfigError("rejuvenation must be >= 0");
  if (!(r_loc > 0.0)) throw ConfigError("r_loc must be > 0");
  if (!(fpf_epsilon > 0.0)) throw ConfigError("fpf_epsilon must be > 0");
  if (!(obs_variance >= 0.0)) throw ConfigError("obs_variance must be >= 0");
  if (!(spinup >= 0.0)) throw ConfigError("spinup must be >= 0");
  if (fpf_iterations < 1) throw ConfigError("fpf_iterations must be >= 1");
  if (filter.hybrid()) {
    TemperingPolicy p;
    p.criterion = filter.criterion;
    p.theta = theta;
    p.iqr_factor = iqr_factor;
    p.alpha_tempered = alpha_tempered;
    p.particle_filter = filter.primary;
    p.gaussian_filter = *filter.gaussian;
    p.validate();
    if (filter.criterion == Criterion::kIqr && n_ens < 4) {
      throw ConfigError("IQR criterion needs N_ens >= 4");
    }
  }
  const bool local = filter.primary == FilterKind::kLesrf || filter.primary == FilterKind::kLetpf ||
                     (filter.gaussian && *filter.gaussian == FilterKind::kLesrf);
  if (local && (experiment == ExperimentKind::kLangevin || experiment == ExperimentKind::kLorenz63)) {
    throw ConfigError("localized filters need a spatial experiment (lorenz96 or shallow_water)");
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::kLangevin:
      c.n_ens = 35;
      c.cycles = 50;
      c.skip = 0;
      break;
    case ExperimentKind::kLorenz63:
      c.n_ens = 25;
      c.cycles = 50000;
      c.skip = 500;
      break;
    case ExperimentKind::kLorenz96:
      c.n_ens = 35;
      c.cycles = 5000;
      c.skip = 50;
      c.r_loc = 2.0;
      break;
    case ExperimentKind::kShallowWater:
      c.n_ens = 35;
      c.cycles = 3;
      c.skip = 1;
      c.r_loc = 4.0;
      break;
  }
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  std::vector<Token> tokens;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    for (std::string word; words >> word;) {
      if (word.front() == '[') {
        if (word.back() != ']' || !kSections.count(lower(word.substr(1, word.size() - 2)))) {
          throw ConfigError("line " + std::to_string(line_no) + ": unknown section " + word);
        }
        continue;
      }
      const auto eq = word.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == word.size()) {
        throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                          word + "'");
      }
      tokens.push_back({lower(word.substr(0, eq)), word.substr(eq + 1), line_no});
    }
  }
  std::set<std::string> seen;
  for (const auto& t : tokens) {
    if (!seen.insert(t.key).second) {
      throw ConfigError("line " + std::to_string(t.line) + ": duplicate key '" + t.key + "'");
    }
  }
  const auto exp = std::find_if(tokens.begin(), tokens.end(),
                                [](const Token& t) { return t.key == "experiment"; });
  if (exp == tokens.end()) {
    throw ConfigError("missing required key 'experiment'");
  }
  ExperimentConfig cfg;
  try {
    cfg = default_config(parse_experiment_kind(exp->value));
  } catch (const ConfigError& e) {
    throw ConfigError("line " + std::to_string(exp->line) + ": " + e.what());
  }
  int last_line = 0;
  for (const auto& t : tokens) {
    if (t.key == "experiment") continue;
    const auto it = setters().find(t.key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(t.line) + ": unknown key '" + t.key + "'");
    }
    try {
      it->second(cfg, t.value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(t.line) + ": " + t.key + ": " + e.what());
    }
    last_line = std::max(last_line, t.line);
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    // Attribute invariant violations to the line of the offending key when possible.
    const std::string msg = e.what();
    for (const auto& t : tokens) {
      if ((t.key == "n_ens" && msg.find("N_ens") != std::string::npos) ||
          ((t.key == "cycles" || t.key == "skip") && msg.find("skip") != std::string::npos) ||
          (msg.find(t.key) != std::string::npos)) {
        throw ConfigError("line " + std::to_string(t.line) + ": " + msg);
      }
    }
    throw ConfigError("line " + std::to_string(std::max(last_line, exp->line)) + ": " + msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "experiment=" << to_string(c.experiment) << "\n"
     << "n_ens=" << c.n_ens << " cycles=" << c.cycles << " skip=" << c.skip
     << " seed=" << c.seed << "\n"
     << "noise=" << choice_name(c.noise, kNoise) << " drift=" << choice_name(c.drift, kDrift)
     << " spinup=" << format_double(c.spinup) << "\n"
     << "observe_all=" << (c.observe_all ? "true" : "false")
     << " obs_variance=" << format_double(c.obs_variance)
     << "\n\n[filter]\n"
     << "filter=" << c.filter.name() << "\n"
     << "alpha_tempered=" << format_double(c.alpha_tempered)
     << " theta=" << format_double(c.theta) << " iqr_factor=" << format_double(c.iqr_factor)
     << " order=" << choice_name(c.order, kOrders) << "\n"
     << "resampler=" << choice_name(c.resampler, kResamplers)
     << " ot_solver=" << choice_name(c.ot_solver, kSolvers) << "\n"
     << "fpf_epsilon=" << format_double(c.fpf_epsilon)
     << " fpf_solver=" << choice_name(c.fpf_solver, kGainSolvers)
     << " fpf_iterations=" << c.fpf_iterations << "\n\n[addons]\n"
     << "inflation=" << format_double(c.inflation)
     << " rejuvenation=" << format_double(c.rejuvenation)
     << " rejuvenation_scaling=" << choice_name(c.rejuvenation_scaling, kScalings)
     << " rejuvenation_scope=" << (c.global_rejuvenation ? "global" : "local") << "\n"
     << "r_loc=" << format_double(c.r_loc) << " taper=" << choice_name(c.taper, kTapers)
     << "\n\n[output]\n"
     << "output=" << c.output_dir << "\n";
  return os.str();
}

}  // namespace adatemp
