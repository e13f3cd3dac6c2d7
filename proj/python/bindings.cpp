#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adatemp/config.hpp"
#include "adatemp/ensemble.hpp"
#include "adatemp/error.hpp"
#include "adatemp/experiment.hpp"
#include "adatemp/models.hpp"
#include "adatemp/optimal_transport.hpp"
#include "adatemp/shallow_water.hpp"
#include "adatemp/tempering.hpp"

namespace py = pybind11;
using namespace adatemp;

namespace {

FilterSettings settings_from(double inflation, double rejuvenation, double fpf_epsilon) {
  FilterSettings s;
  s.esrf.inflation = inflation;
  s.pf.rejuvenation = rejuvenation;
  s.fpf.rejuvenation = rejuvenation;
  s.fpf.epsilon = fpf_epsilon;
  return s;
}

Criterion parse_criterion(const std::string& name) {
  if (name == "always") return Criterion::kAlways;
  if (name == "ess") return Criterion::kEss;
  if (name == "iqr") return Criterion::kIqr;
  throw ConfigError("unknown criterion '" + name + "'");
}

DynamicalModel model_named(const std::string& name) {
  if (name == "lorenz63") return DynamicalModel{Lorenz63{}};
  if (name == "lorenz96") return DynamicalModel{Lorenz96{}};
  if (name == "langevin") return DynamicalModel{LangevinDoubleWell{}};
  throw ConfigError("unknown model '" + name + "'");
}

py::dict record_to_dict(const RunRecord& r) {
  py::list alpha;
  py::list fired;
  py::list ess;
  for (const auto& c : r.cycles) {
    alpha.append(c.alpha_used);
    fired.append(c.criterion_fired);
    ess.append(c.ess);
  }
  py::dict d;
  d["experiment"] = to_string(r.config.experiment);
  d["filter"] = r.config.filter.name();
  d["seed"] = r.config.seed;
  d["rmse"] = r.rmse;
  d["alpha_used"] = alpha;
  d["criterion_fired"] = fired;
  d["ess"] = ess;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tempered hybrid ensemble filters";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream") = 0)
      .def("normal", py::overload_cast<>(&RngStream::normal))
      .def("uniform", &RngStream::uniform);

  py::class_<ObservationModel>(m, "ObservationModel")
      .def_static(
          "selection",
          [](std::vector<Index> indices, const MatrixXd& r, Index dim,
             std::optional<VectorXd> offset) {
            return ObservationModel::selection(std::move(indices), r, dim, std::move(offset));
          },
          py::arg("indices"), py::arg("noise_covariance"), py::arg("state_dim"),
          py::arg("offset") = std::nullopt)
      .def_property_readonly("obs_dim", &ObservationModel::obs_dim)
      .def("observe", [](const ObservationModel& o, const VectorXd& x) { return observe(o, x); });

  m.def("effective_sample_size",
        [](const VectorXd& w) { return effective_sample_size(WeightVector::from_unnormalized(w)); },
        py::arg("weights"));
  m.def(
      "quartiles",
      [](std::vector<double> v) {
        const Quartiles q = quartiles(v);
        return py::make_tuple(q.q1, q.q2, q.q3);
      },
      py::arg("values"));
  m.def("rmse", &rmse, py::arg("estimates"), py::arg("truth"), py::arg("skip") = 0);

  m.def(
      "solve_ot",
      [](const MatrixXd& cost, const VectorXd& a, const VectorXd& b) {
        const auto c = solve_ot_exact(cost, a, b);
        return py::make_tuple(c.transport, c.objective);
      },
      py::arg("cost"), py::arg("row_marginals"), py::arg("col_marginals"));

  m.def(
      "analysis",
      [](const std::string& filter, const MatrixXd& members, const VectorXd& y,
         const ObservationModel& obs, RngStream& rng, double inflation, double rejuvenation,
         double fpf_epsilon) {
        return apply_filter(parse_filter_kind(filter), Ensemble(members), y, obs,
                            settings_from(inflation, rejuvenation, fpf_epsilon), 1.0, rng)
            .members();
      },
      py::arg("filter"), py::arg("members"), py::arg("y"), py::arg("obs"), py::arg("rng"),
      py::arg("inflation") = 1.05, py::arg("rejuvenation") = 0.2, py::arg("fpf_epsilon") = 0.01,
      "Global or localized single-filter analysis of a (dim x N) ensemble.");

  m.def(
      "hybrid_step",
      [](const MatrixXd& members, const VectorXd& y, const ObservationModel& obs, RngStream& rng,
         const std::string& particle, const std::string& gaussian, const std::string& criterion,
         double alpha_tempered, double theta, double iqr_factor, double inflation,
         double rejuvenation) {
        TemperingPolicy p;
        p.criterion = parse_criterion(criterion);
        p.particle_filter = parse_filter_kind(particle);
        p.gaussian_filter = parse_filter_kind(gaussian);
        p.alpha_tempered = alpha_tempered;
        p.theta = theta;
        p.iqr_factor = iqr_factor;
        const auto out = hybrid_step(Ensemble(members), y, obs, p,
                                     settings_from(inflation, rejuvenation, 0.01), rng);
        py::dict d;
        d["members"] = out.analysis.members();
        d["alpha_used"] = out.alpha_used;
        d["criterion_fired"] = out.criterion_fired;
        d["ess"] = out.ess;
        return d;
      },
      py::arg("members"), py::arg("y"), py::arg("obs"), py::arg("rng"),
      py::arg("particle") = "ETPF", py::arg("gaussian") = "ESRF", py::arg("criterion") = "iqr",
      py::arg("alpha_tempered") = 0.2, py::arg("theta") = 0.5, py::arg("iqr_factor") = 1.5,
      py::arg("inflation") = 1.05, py::arg("rejuvenation") = 0.2);

  m.def(
      "integrate",
      [](const std::string& model, const VectorXd& state, double duration) {
        return integrate(model_named(model), state, duration);
      },
      py::arg("model"), py::arg("state"), py::arg("duration"),
      "Deterministic integration of 'lorenz63' or 'lorenz96'.");

  m.def(
      "dam_break",
      [](double x_w, double duration) {
        const sw::SWScenario s;
        const sw::SWState st = sw::sw_advance(sw::build_scenario(s, x_w), s.g, duration);
        return py::make_tuple(st.h, st.hu, st.zb, st.centers());
      },
      py::arg("x_w"), py::arg("duration"),
      "Dam-break scenario advanced to the given time; returns (h, hu, zb, centers).");

  m.def(
      "run_config",
      [](const std::string& text) {
        ExperimentConfig cfg = parse_config(text);
        py::gil_scoped_release release;
        RunRecord r = run_experiment(cfg);
        py::gil_scoped_acquire acquire;
        return record_to_dict(r);
      },
      py::arg("text"), "Run an experiment described in config-file syntax.");

  m.def("table_rows", [] {
    py::list rows;
    for (const auto& t : paper_tables()) {
      for (const auto& row : t.rows) {
        rows.append(py::make_tuple(t.id, to_string(t.experiment), row.name, row.paper_rmse));
      }
    }
    return rows;
  });
}
