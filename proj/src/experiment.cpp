#include "adatemp/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "adatemp/error.hpp"
#include "adatemp/shallow_water.hpp"
#include "adatemp/tempering.hpp"

namespace adatemp {

namespace {

constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kObsStream = 2;
constexpr std::uint64_t kEnsembleStream = 3;
constexpr std::uint64_t kFilterStream = 4;
constexpr std::uint64_t kSpinupStream = 5;
constexpr std::uint64_t kMemberStreamBase = 1000;

constexpr double kSwTruthPosition = 3.0;
constexpr double kSwEnsembleMean = 6.0;
constexpr double kSwEnsembleSpread = 1.0;
constexpr double kSwObsInterval = 2.5;
constexpr Index kSwGaugeSpacing = 8;
constexpr double kSwMassTolerance = 1e-10;

/// Everything an experiment needs besides the filter.
struct Setup {
  Propagator truth_model;
  std::vector<Propagator> member_models;
  std::optional<ObservationModel> obs;
  VectorXd initial_truth;
  MatrixXd initial_ensemble;
  double obs_interval = 0.0;
  std::optional<LocalizationConfig> localization;
  std::vector<Index> rmse_components;
  std::optional<sw::SWState> sw_layout;
  std::shared_ptr<double> max_mass_drift = std::make_shared<double>(0.0);
};

ObservationModel make_obs(const ExperimentConfig& cfg, std::vector<Index> gauges, double variance,
                          Index dim, std::optional<VectorXd> offset = std::nullopt) {
  if (cfg.observe_all) {
    gauges.resize(static_cast<std::size_t>(dim));
    std::iota(gauges.begin(), gauges.end(), Index{0});
    offset.reset();
  }
  if (cfg.obs_variance > 0.0) variance = cfg.obs_variance;
  const auto m = static_cast<Index>(gauges.size());
  if (offset && cfg.observe_all) offset.reset();
  return ObservationModel::selection(std::move(gauges),
                                     variance * MatrixXd::Identity(m, m), dim, std::move(offset));
}

MatrixXd perturbed_ensemble(const VectorXd& truth, Index n, RngStream& rng) {
  return truth.replicate(1, n) + rng.normal_matrix(truth.size(), n);
}

VectorXd spun_up_state(const DynamicalModel& model, const VectorXd& fixed_point, double duration,
                       std::uint64_t seed) {
  RngStream rng(seed, kSpinupStream);
  const VectorXd start = fixed_point + rng.normal_vector(fixed_point.size());
  return duration > 0.0 ? propagate(model, start, duration, rng) : start;
}

void deterministic_models(Setup& s, const DynamicalModel& model, Index n) {
  s.truth_model = make_propagator(model, s.obs_interval);
  s.member_models.assign(static_cast<std::size_t>(n), s.truth_model);
}

Setup setup_langevin(const ExperimentConfig& cfg) {
  Setup s;
  LangevinDoubleWell params;
  params.drift = cfg.drift;
  const DynamicalModel model{params, 0.01};
  s.obs_interval = 0.8;
  s.truth_model = make_propagator(model, s.obs_interval);
  s.member_models.assign(static_cast<std::size_t>(cfg.n_ens), s.truth_model);
  s.obs = make_obs(cfg, {0, 1}, 0.5, 2);
  s.initial_truth = (VectorXd(2) << -5.0, 0.0).finished();
  RngStream rng(cfg.seed, kEnsembleStream);
  s.initial_ensemble = perturbed_ensemble(s.initial_truth, cfg.n_ens, rng);
  s.rmse_components = {0, 1};
  return s;
}

Setup setup_lorenz63(const ExperimentConfig& cfg) {
  Setup s;
  const Lorenz63 params;
  const DynamicalModel model{params, 0.01};
  s.obs_interval = 0.12;
  deterministic_models(s, model, cfg.n_ens);
  s.obs = make_obs(cfg, {0}, 8.0, 3);
  const double c = std::sqrt(params.beta * (params.rho - 1.0));
  const VectorXd fixed = (VectorXd(3) << c, c, params.rho - 1.0).finished();
  s.initial_truth = spun_up_state(model, fixed, cfg.spinup, cfg.seed);
  RngStream rng(cfg.seed, kEnsembleStream);
  s.initial_ensemble = perturbed_ensemble(s.initial_truth, cfg.n_ens, rng);
  s.rmse_components = {0, 1, 2};
  return s;
}

Setup setup_lorenz96(const ExperimentConfig& cfg) {
  Setup s;
  const Lorenz96 params;
  const Index n = params.grid_size;
  const DynamicalModel model{params, 0.01};
  s.obs_interval = 0.11;
  deterministic_models(s, model, cfg.n_ens);
  std::vector<Index> gauges;
  for (Index i = 0; i < n; i += 2) gauges.push_back(i);
  s.obs = make_obs(cfg, gauges, 8.0, n);
  s.initial_truth = spun_up_state(model, VectorXd::Constant(n, params.forcing), cfg.spinup, cfg.seed);
  RngStream rng(cfg.seed, kEnsembleStream);
  s.initial_ensemble = perturbed_ensemble(s.initial_truth, cfg.n_ens, rng);
  LocalizationConfig loc;
  loc.radius = cfg.r_loc;
  loc.taper = cfg.taper;
  for (Index i = 0; i < n; ++i) loc.state_positions.push_back(static_cast<double>(i));
  for (Index g : s.obs->indices()) loc.obs_positions.push_back(static_cast<double>(g));
  loc.period = static_cast<double>(n);
  s.localization = loc;
  s.rmse_components.resize(static_cast<std::size_t>(n));
  std::iota(s.rmse_components.begin(), s.rmse_components.end(), Index{0});
  return s;
}

Setup setup_shallow_water(const ExperimentConfig& cfg) {
  Setup s;
  const sw::SWScenario scenario;
  const sw::SWState truth = sw::build_scenario(scenario, kSwTruthPosition);
  const Index cells = truth.cells();
  s.obs_interval = kSwObsInterval;
  s.sw_layout = truth;

  auto drift = s.max_mass_drift;
  const double g = scenario.g;
  Propagator forecast = [layout = truth, drift, g](const VectorXd& v, RngStream&) {
    const sw::SWState start = sw::from_vector(v, layout);
    const double m0 = start.mass();
    const sw::SWState end = sw::sw_advance(start, g, kSwObsInterval);
    const double rel = std::abs(end.mass() - end.boundary_inflow - m0) / std::max(m0, 1e-300);
    *drift = std::max(*drift, rel);
    if (!(rel <= kSwMassTolerance)) {
      throw NumericalError("shallow-water forecast mass drift " + std::to_string(rel));
    }
    return sw::to_vector(end);
  };
  s.truth_model = forecast;
  s.member_models.assign(static_cast<std::size_t>(cfg.n_ens), forecast);

  std::vector<Index> gauges;
  std::vector<double> offsets;
  for (Index c = 0; c < cells; c += kSwGaugeSpacing) {
    gauges.push_back(c);
    offsets.push_back(truth.zb(c));
  }
  s.obs = make_obs(cfg, gauges, 0.01, 2 * cells,
                   Eigen::Map<const VectorXd>(offsets.data(), static_cast<Index>(offsets.size())));
  s.initial_truth = sw::to_vector(truth);

  RngStream rng(cfg.seed, kEnsembleStream);
  s.initial_ensemble.resize(2 * cells, cfg.n_ens);
  for (Index i = 0; i < cfg.n_ens; ++i) {
    double x_w = 0.0;
    do {
      x_w = kSwEnsembleMean + kSwEnsembleSpread * rng.normal();
    } while (!(x_w > 0.0 && x_w < scenario.x_r));
    s.initial_ensemble.col(i) = sw::to_vector(sw::build_scenario(scenario, x_w));
  }

  LocalizationConfig loc;
  loc.radius = cfg.r_loc;
  loc.taper = cfg.taper;
  const VectorXd centers = truth.centers();
  for (int part = 0; part < 2; ++part) {
    for (Index c = 0; c < cells; ++c) loc.state_positions.push_back(centers(c));
  }
  for (Index gidx : gauges) loc.obs_positions.push_back(centers(gidx));
  if (cfg.observe_all) loc.obs_positions = loc.state_positions;
  s.localization = loc;
  s.rmse_components = {cells - 1};
  return s;
}

Setup make_setup(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::kLangevin:
      return setup_langevin(cfg);
    case ExperimentKind::kLorenz63:
      return setup_lorenz63(cfg);
    case ExperimentKind::kLorenz96:
      return setup_lorenz96(cfg);
    case ExperimentKind::kShallowWater:
      return setup_shallow_water(cfg);
  }
  throw ConfigError("unknown experiment");
}

FilterSettings make_settings(const ExperimentConfig& cfg, const Setup& s) {
  FilterSettings f;
  f.esrf.inflation = cfg.inflation;
  f.esrf.localization = s.localization;
  f.pf.rejuvenation = cfg.rejuvenation;
  f.pf.scaling = cfg.rejuvenation_scaling;
  f.pf.resampler = cfg.resampler;
  f.pf.ot_solver = cfg.ot_solver;
  f.pf.localization = s.localization;
  f.pf.global_rejuvenation = cfg.global_rejuvenation;
  f.fpf.epsilon = cfg.fpf_epsilon;
  f.fpf.rejuvenation = cfg.rejuvenation;
  f.fpf.scaling = cfg.rejuvenation_scaling;
  f.fpf.solver = cfg.fpf_solver;
  f.fpf.iterations = cfg.fpf_iterations;
  return f;
}

TemperingPolicy make_policy(const ExperimentConfig& cfg) {
  TemperingPolicy p;
  p.criterion = cfg.filter.criterion;
  p.theta = cfg.theta;
  p.iqr_factor = cfg.iqr_factor;
  p.alpha_tempered = cfg.alpha_tempered;
  p.particle_filter = cfg.filter.primary;
  p.gaussian_filter = *cfg.filter.gaussian;
  p.order = cfg.order;
  return p;
}

double untempered_ess(const MatrixXd& observed, const VectorXd& y, const ObservationModel& obs) {
  try {
    return effective_sample_size(weights_from_precision(observed, y, obs.noise_precision(), 1.0));
  } catch (const NumericalError&) {
    return 1.0;
  }
}

Ensemble clamp_members(const Ensemble& e, const sw::SWState& layout) {
  MatrixXd m = e.members();
  for (Index i = 0; i < m.cols(); ++i) {
    m.col(i) = sw::to_vector(sw::clamp_nonnegative(sw::from_vector(m.col(i), layout)));
  }
  return Ensemble(std::move(m));
}

FieldSnapshot snapshot(std::size_t cycle, std::string source, const VectorXd& v,
                       const sw::SWState& layout) {
  const sw::SWState st = sw::from_vector(v, layout);
  return {cycle, std::move(source), st.centers(), st.zb, st.h, st.hu};
}

template <typename E>
[[noreturn]] void rethrow_with_cycle(const E& e, std::size_t k) {
  throw E("cycle " + std::to_string(k) + ": " + e.what());
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Setup setup = make_setup(cfg);
  const FilterSettings settings = make_settings(cfg, setup);
  std::optional<TemperingPolicy> policy;
  if (cfg.filter.hybrid()) policy = make_policy(cfg);

  RngStream truth_rng(cfg.seed, kTruthStream);
  RngStream obs_rng(cfg.seed, kObsStream);
  const TwinRun twin = generate_twin(setup.truth_model, *setup.obs, setup.initial_truth, cfg.cycles,
                                     setup.obs_interval, truth_rng, obs_rng, cfg.noise);

  RngStream filter_rng(cfg.seed, kFilterStream);
  std::vector<RngStream> member_rngs;
  member_rngs.reserve(static_cast<std::size_t>(cfg.n_ens));
  for (Index i = 0; i < cfg.n_ens; ++i) {
    member_rngs.emplace_back(cfg.seed, kMemberStreamBase + static_cast<std::uint64_t>(i));
  }

  RunRecord record;
  record.config = cfg;
  record.rmse_components = setup.rmse_components;
  record.cycles.reserve(cfg.cycles);

  MatrixXd members = setup.initial_ensemble;
  for (std::size_t k = 0; k < cfg.cycles; ++k) {
    try {
      for (Index i = 0; i < cfg.n_ens; ++i) {
        members.col(i) = setup.member_models[static_cast<std::size_t>(i)](
            members.col(i), member_rngs[static_cast<std::size_t>(i)]);
      }
      const Ensemble forecast(members);
      const VectorXd& y = twin.observations[k];
      CycleRecord rec;
      rec.truth = twin.truth[k];
      rec.observation = y;
      rec.forecast_observed = setup.obs->observe(forecast);

      std::optional<Ensemble> analysis;
      if (policy) {
        AssimilationOutcome out = hybrid_step(forecast, y, *setup.obs, *policy, settings, filter_rng);
        rec.alpha_used = out.alpha_used;
        rec.criterion_fired = out.criterion_fired;
        rec.ess = out.ess;
        analysis.emplace(std::move(out.analysis));
      } else {
        rec.ess = untempered_ess(rec.forecast_observed, y, *setup.obs);
        analysis.emplace(
            apply_filter(cfg.filter.primary, forecast, y, *setup.obs, settings, 1.0, filter_rng));
      }
      if (setup.sw_layout) analysis.emplace(clamp_members(*analysis, *setup.sw_layout));
      members = analysis->members();
      rec.mean = members.rowwise().mean();
      if (setup.sw_layout) {
        record.fields.push_back(snapshot(k, "truth", rec.truth, *setup.sw_layout));
        record.fields.push_back(snapshot(k, "analysis_mean", rec.mean, *setup.sw_layout));
      }
      record.cycles.push_back(std::move(rec));
    } catch (const NumericalError& e) {
      rethrow_with_cycle(e, k);
    } catch (const ConfigError& e) {
      rethrow_with_cycle(e, k);
    }
  }
  record.max_mass_drift = *setup.max_mass_drift;
  record.rmse = recompute_rmse(record);
  return record;
}

double recompute_rmse(const RunRecord& record) {
  std::vector<VectorXd> est;
  std::vector<VectorXd> truth;
  est.reserve(record.cycles.size());
  truth.reserve(record.cycles.size());
  const auto n = static_cast<Index>(record.rmse_components.size());
  for (const auto& c : record.cycles) {
    VectorXd a(n);
    VectorXd b(n);
    for (Index j = 0; j < n; ++j) {
      a(j) = c.mean(record.rmse_components[static_cast<std::size_t>(j)]);
      b(j) = c.truth(record.rmse_components[static_cast<std::size_t>(j)]);
    }
    est.push_back(std::move(a));
    truth.push_back(std::move(b));
  }
  return rmse(est, truth, record.config.skip);
}

SeedSummary summarize(const std::vector<double>& values) {
  SeedSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.standard_error =
        std::sqrt(ss / static_cast<double>(s.count - 1)) / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

const std::vector<PaperTable>& paper_tables() {
  static const std::vector<PaperTable> tables{
      {"table1",
       ExperimentKind::kLangevin,
       {{"ESRF", 0.41761},
        {"ETPF", 1.99017},
        {"Bootstrap", 1.25118},
        {"FPF", 5.03897},
        {"ETPF-ESRF", 0.46150},
        {"Bootstrap-ESRF", 0.41130},
        {"FPF-ESRF", 0.41151},
        {"ESS-ETPF-ESRF", 0.46150},
        {"ESS-Bootstrap-ESRF", 0.41130},
        {"ESS-FPF-ESRF", 0.41151},
        {"IQR-ETPF-ESRF", 0.46150},
        {"IQR-Bootstrap-ESRF", 0.41130},
        {"IQR-FPF-ESRF", 0.41151}}},
      {"table2",
       ExperimentKind::kLorenz63,
       {{"ESRF", 2.10011},
        {"ETPF", 3.55604},
        {"Bootstrap", 5.94889},
        {"FPF", 4.94511},
        {"ETPF-ESRF", 2.06520},
        {"Bootstrap-ESRF", 2.08702},
        {"FPF-ESRF", 2.22518},
        {"ESS-ETPF-ESRF", 1.75024},
        {"ESS-Bootstrap-ESRF", 3.12627},
        {"ESS-FPF-ESRF", 2.22518},
        {"IQR-ETPF-ESRF", 1.64179},
        {"IQR-Bootstrap-ESRF", 2.01076},
        {"IQR-FPF-ESRF", 2.22518}}},
      {"table3",
       ExperimentKind::kLorenz96,
       {{"ESRF", 2.48515},
        {"LESRF", 1.08808},
        {"ETPF", 2.96073},
        {"LETPF", 1.05996},
        {"Bootstrap", 2.96868},
        {"FPF", 2.15463},
        {"ETPF-ESRF", 2.86639},
        {"Bootstrap-ESRF", 2.88486},
        {"FPF-ESRF", 1.98065},
        {"ESS-ETPF-ESRF", 2.86633},
        {"ESS-Bootstrap-ESRF", 2.91596},
        {"ESS-FPF-ESRF", 1.98306},
        {"IQR-ETPF-ESRF", 2.86639},
        {"IQR-Bootstrap-ESRF", 2.88486},
        {"IQR-FPF-ESRF", 1.98065},
        {"ETPF-LESRF", 2.51371},
        {"Bootstrap-LESRF", 2.60774},
        {"FPF-LESRF", 1.37967},
        {"ESS-ETPF-LESRF", 2.53425},
        {"ESS-Bootstrap-LESRF", 2.62288},
        {"ESS-FPF-LESRF", 1.37967},
        {"IQR-ETPF-LESRF", 2.51371},
        {"IQR-Bootstrap-LESRF", 2.60774},
        {"IQR-FPF-LESRF", 1.37967}}},
      {"table4",
       ExperimentKind::kShallowWater,
       {{"ESRF", 0.038228},
        {"ETPF", 0.049417},
        {"Bootstrap", 0.056183},
        {"FPF", 0.071165},
        {"LESRF", 0.048350},
        {"LETPF", 0.056134},
        {"ETPF-ESRF", 0.040833},
        {"Bootstrap-ESRF", 0.030875},
        {"FPF-ESRF", 0.053365},
        {"ESS-ETPF-ESRF", 0.051588},
        {"ESS-Bootstrap-ESRF", 0.056429},
        {"ESS-FPF-ESRF", 0.053365},
        {"IQR-ETPF-ESRF", 0.040833},
        {"IQR-Bootstrap-ESRF", 0.030875},
        {"IQR-FPF-ESRF", 0.053365}}},
  };
  return tables;
}

const PaperTable& find_table(const std::string& id) {
  std::string key;
  for (char c : id) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key.size() == 1 && key[0] >= '1' && key[0] <= '4') key = "table" + key;
  for (const auto& t : paper_tables()) {
    if (t.id == key) return t;
  }
  const ExperimentKind kind = parse_experiment_kind(key);
  for (const auto& t : paper_tables()) {
    if (t.experiment == kind) return t;
  }
  throw ConfigError("unknown table '" + id + "'");
}

ExperimentConfig row_config(const PaperTable& table, const TableRow& row) {
  ExperimentConfig cfg = default_config(table.experiment);
  cfg.filter = parse_filter_spec(row.name);
  cfg.validate();
  return cfg;
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.precision(17);
  return out;
}

std::string criterion_label(const FilterSpec& f) {
  return f.hybrid() ? to_string(f.criterion) : "none";
}

nlohmann::json component_stats(const CycleRecord& c, Index j) {
  const VectorXd row = c.forecast_observed.row(j).transpose();
  std::vector<double> sample(row.data(), row.data() + row.size());
  nlohmann::json out;
  out["component"] = j;
  out["observation"] = c.observation(j);
  out["alpha_used"] = c.alpha_used;
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  out["min"] = *lo;
  out["max"] = *hi;
  if (sample.size() >= 4) {
    const Quartiles q = quartiles(sample);
    out["q1"] = q.q1;
    out["median"] = q.q2;
    out["q3"] = q.q3;
    const double width = q.q3 - q.q1;
    nlohmann::json outliers = nlohmann::json::array();
    for (double v : sample) {
      if (v < q.q1 - 1.5 * width || v > q.q3 + 1.5 * width) outliers.push_back(v);
    }
    out["outliers"] = outliers;
  } else {
    out["q1"] = nullptr;
    out["median"] = nullptr;
    out["q3"] = nullptr;
    out["outliers"] = nlohmann::json::array();
  }
  return out;
}

}  // namespace

void write_rmse_csv(const std::string& path, const std::vector<RunRecord>& records) {
  auto out = open_output(path);
  out << "experiment,filter,criterion,seed,n_ens,rmse\n";
  for (const auto& r : records) {
    out << to_string(r.config.experiment) << ',' << r.config.filter.name() << ','
        << criterion_label(r.config.filter) << ',' << r.config.seed << ',' << r.config.n_ens << ','
        << r.rmse << '\n';
  }
}

std::string boxplot_json(const std::vector<RunRecord>& records) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : records) {
    const auto& cfg = r.config;
    nlohmann::json run;
    run["experiment"] = to_string(cfg.experiment);
    run["filter"] = cfg.filter.name();
    run["hybrid"] = cfg.filter.hybrid();
    run["criterion"] = criterion_label(cfg.filter);
    run["theta"] = cfg.theta;
    run["iqr_factor"] = cfg.iqr_factor;
    run["alpha_tempered"] = cfg.alpha_tempered;
    run["n_ens"] = cfg.n_ens;
    run["seed"] = cfg.seed;
    run["rmse"] = r.rmse;
    nlohmann::json cycles = nlohmann::json::array();
    for (std::size_t k = 0; k < r.cycles.size(); ++k) {
      const CycleRecord& c = r.cycles[k];
      nlohmann::json entry;
      entry["cycle"] = k;
      entry["alpha_used"] = c.alpha_used;
      entry["criterion_fired"] = c.criterion_fired;
      entry["ess"] = c.ess;
      nlohmann::json comps = nlohmann::json::array();
      for (Index j = 0; j < c.forecast_observed.rows(); ++j) comps.push_back(component_stats(c, j));
      entry["components"] = std::move(comps);
      cycles.push_back(std::move(entry));
    }
    run["cycles"] = std::move(cycles);
    runs.push_back(std::move(run));
  }
  return nlohmann::json{{"runs", runs}}.dump();
}

void write_boxplot_json(const std::string& path, const std::vector<RunRecord>& records) {
  auto out = open_output(path);
  out << boxplot_json(records) << '\n';
}

void write_fields_csv(const std::string& path, const std::vector<RunRecord>& records) {
  auto out = open_output(path);
  out << "filter,seed,cycle,source,x,z,h,hu\n";
  for (const auto& r : records) {
    for (const auto& f : r.fields) {
      for (Index i = 0; i < f.x.size(); ++i) {
        out << r.config.filter.name() << ',' << r.config.seed << ',' << f.cycle << ',' << f.source
            << ',' << f.x(i) << ',' << f.z(i) << ',' << f.h(i) << ',' << f.hu(i) << '\n';
      }
    }
  }
}

ReplayReport replay_boxplot(const std::string& json_text) {
  const auto doc = nlohmann::json::parse(json_text);
  ReplayReport report;
  for (const auto& run : doc.at("runs")) {
    const bool hybrid = run.at("hybrid").get<bool>();
    const std::string criterion = run.at("criterion").get<std::string>();
    const double theta = run.at("theta").get<double>();
    const double factor = run.at("iqr_factor").get<double>();
    const double alpha_tempered = run.at("alpha_tempered").get<double>();
    const auto n = run.at("n_ens").get<double>();
    for (const auto& cycle : run.at("cycles")) {
      bool fired = false;
      if (criterion == to_string(Criterion::kAlways)) {
        fired = true;
      } else if (criterion == to_string(Criterion::kEss)) {
        fired = cycle.at("ess").get<double>() < theta * n;
      } else if (criterion == to_string(Criterion::kIqr)) {
        for (const auto& comp : cycle.at("components")) {
          const double q1 = comp.at("q1").get<double>();
          const double q3 = comp.at("q3").get<double>();
          const double width = q3 - q1;
          const Interval iv{q1 - factor * width, q3 + factor * width};
          if (!iv.contains(comp.at("observation").get<double>())) fired = true;
        }
      }
      const double expected = hybrid && fired ? alpha_tempered : 1.0;
      ++report.decisions;
      if (cycle.at("alpha_used").get<double>() != expected) ++report.mismatches;
      for (const auto& comp : cycle.at("components")) {
        if (comp.at("alpha_used").get<double>() != expected) ++report.mismatches;
      }
    }
  }
  return report;
}

}  // namespace adatemp
