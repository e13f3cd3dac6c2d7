#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adatemp/config.hpp"
#include "adatemp/ensemble.hpp"

namespace adatemp {

struct CycleRecord {
  VectorXd truth;
  VectorXd observation;
  /// Analysis ensemble mean.
  VectorXd mean;
  /// N_y x N_ens observed forecast members (the sample the criteria inspect).
  MatrixXd forecast_observed;
  double alpha_used = 1.0;
  bool criterion_fired = false;
  /// ESS of the untempered weights of the forecast; 1 when degenerate.
  double ess = 0.0;
};

/// Shallow-water profile of the truth or of the analysis mean after a cycle.
struct FieldSnapshot {
  std::size_t cycle = 0;
  std::string source;  // "truth" or "analysis_mean"
  VectorXd x;
  VectorXd z;
  VectorXd h;
  VectorXd hu;
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<CycleRecord> cycles;
  /// State components entering the RMSE.
  std::vector<Index> rmse_components;
  double rmse = 0.0;
  std::vector<FieldSnapshot> fields;
  /// Largest relative mass change of a member over a forecast (shallow water).
  double max_mass_drift = 0.0;
};

/// Twin experiment: truth, observations, forecast/analysis cycles, skip-aware
/// RMSE. Filter failures are rethrown with "cycle k: " prepended.
RunRecord run_experiment(const ExperimentConfig& cfg);

/// RMSE of the logged means against the logged truth on rmse_components.
double recompute_rmse(const RunRecord& record);

struct SeedSummary {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

SeedSummary summarize(const std::vector<double>& values);

struct TableRow {
  std::string name;
  double paper_rmse;
};

struct PaperTable {
  std::string id;
  ExperimentKind experiment;
  std::vector<TableRow> rows;
};

/// Built-in rows of the four RMSE tables.
const std::vector<PaperTable>& paper_tables();
/// Accepts "table1".."table4", "1".."4" or the experiment name.
const PaperTable& find_table(const std::string& id);
ExperimentConfig row_config(const PaperTable& table, const TableRow& row);

/// rmse.csv: experiment, filter, criterion, seed, n_ens, rmse.
void write_rmse_csv(const std::string& path, const std::vector<RunRecord>& records);
/// boxplot.json: one entry per run with per-cycle, per-component statistics.
std::string boxplot_json(const std::vector<RunRecord>& records);
void write_boxplot_json(const std::string& path, const std::vector<RunRecord>& records);
/// fields.csv: cycle, source, x, z, h, hu for shallow-water runs.
void write_fields_csv(const std::string& path, const std::vector<RunRecord>& records);

struct ReplayReport {
  std::size_t decisions = 0;
  std::size_t mismatches = 0;
};

/// Re-derives every alpha_used in a boxplot.json document from the logged
/// quartiles, observations and ESS values.
ReplayReport replay_boxplot(const std::string& json_text);

}  // namespace adatemp
