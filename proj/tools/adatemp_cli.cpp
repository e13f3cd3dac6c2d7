#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adatemp/config.hpp"
#include "adatemp/error.hpp"
#include "adatemp/experiment.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

struct SeedRange {
  std::uint64_t first;
  std::uint64_t last;
};

SeedRange parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    throw adatemp::ConfigError("--seeds expects A..B, got '" + text + "'");
  }
  try {
    const SeedRange r{std::stoull(text.substr(0, dots)), std::stoull(text.substr(dots + 2))};
    if (r.last < r.first) throw adatemp::ConfigError("--seeds range is empty");
    return r;
  } catch (const std::logic_error&) {
    throw adatemp::ConfigError("--seeds expects A..B, got '" + text + "'");
  }
}

void write_outputs(const std::string& dir, const std::vector<adatemp::RunRecord>& records) {
  std::filesystem::create_directories(dir);
  adatemp::write_rmse_csv(dir + "/rmse.csv", records);
  adatemp::write_boxplot_json(dir + "/boxplot.json", records);
  const bool any_fields = std::any_of(records.begin(), records.end(),
                                      [](const auto& r) { return !r.fields.empty(); });
  if (any_fields) adatemp::write_fields_csv(dir + "/fields.csv", records);
}

struct SeedRun {
  std::vector<adatemp::RunRecord> records;
  std::size_t failures = 0;
};

/// Runs every seed; numerical failures are reported per seed and counted.
SeedRun run_seeds(adatemp::ExperimentConfig cfg, const std::vector<std::uint64_t>& seeds,
                  const std::string& label) {
  SeedRun out;
  std::vector<double> values;
  for (auto seed : seeds) {
    cfg.seed = seed;
    try {
      out.records.push_back(adatemp::run_experiment(cfg));
      values.push_back(out.records.back().rmse);
    } catch (const adatemp::NumericalError& e) {
      ++out.failures;
      std::fprintf(stderr, "%s seed %llu: numerical failure: %s\n", label.c_str(),
                   static_cast<unsigned long long>(seed), e.what());
    }
  }
  const auto s = adatemp::summarize(values);
  std::printf("%-22s rmse %.6f", label.c_str(), s.mean);
  if (s.count > 1) std::printf(" +- %.6f (%zu seeds)", s.standard_error, s.count);
  if (out.failures > 0) std::printf(" [%zu diverged]", out.failures);
  std::printf("\n");
  return out;
}

std::vector<std::uint64_t> seed_list(const std::optional<std::uint64_t>& seed,
                                     const std::string& seeds, std::uint64_t fallback) {
  if (!seeds.empty()) {
    const SeedRange r = parse_seed_range(seeds);
    std::vector<std::uint64_t> out;
    for (auto s = r.first; s <= r.last; ++s) out.push_back(s);
    return out;
  }
  return {seed.value_or(fallback)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive tempering of particle and ensemble square-root filters"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Seed override");
  run->add_option("--seeds", seeds, "Seed range A..B; reports mean +- standard error");
  run->add_option("--out", out_dir, "Output directory (default: config 'output')");

  app.add_subcommand("list", "List built-in configs for every table row");

  std::string table_id;
  std::optional<std::size_t> cycles;
  std::optional<std::size_t> skip;
  auto* reproduce = app.add_subcommand("reproduce", "Run every row of a table");
  reproduce->add_option("table", table_id, "table1..table4 or experiment name")->required();
  reproduce->add_option("--seed", seed, "Seed");
  reproduce->add_option("--seeds", seeds, "Seed range A..B");
  reproduce->add_option("--cycles", cycles, "Override the cycle count");
  reproduce->add_option("--skip", skip, "Override the burn-in");
  reproduce->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      adatemp::ExperimentConfig cfg = adatemp::load_config(config_path);
      const auto result = run_seeds(cfg, seed_list(seed, seeds, cfg.seed), cfg.filter.name());
      write_outputs(out_dir.empty() ? cfg.output_dir : out_dir, result.records);
      if (result.failures > 0) return kNumericalExit;
    } else if (app.got_subcommand("list")) {
      for (const auto& table : adatemp::paper_tables()) {
        for (const auto& row : table.rows) {
          const auto cfg = adatemp::row_config(table, row);
          std::printf("%-7s %-14s %-22s n_ens=%-3ld cycles=%-6zu paper_rmse=%g\n",
                      table.id.c_str(), adatemp::to_string(cfg.experiment).c_str(),
                      row.name.c_str(), static_cast<long>(cfg.n_ens), cfg.cycles,
                      row.paper_rmse);
        }
      }
    } else if (*reproduce) {
      const auto& table = adatemp::find_table(table_id);
      std::vector<adatemp::RunRecord> all;
      std::size_t failures = 0;
      for (const auto& row : table.rows) {
        auto cfg = adatemp::row_config(table, row);
        if (cycles) cfg.cycles = *cycles;
        if (skip) cfg.skip = *skip;
        cfg.validate();
        auto result = run_seeds(cfg, seed_list(seed, seeds, cfg.seed), row.name);
        std::printf("%-22s paper %.6g\n", "", row.paper_rmse);
        failures += result.failures;
        all.insert(all.end(), result.records.begin(), result.records.end());
      }
      if (!out_dir.empty()) write_outputs(out_dir, all);
      if (failures > 0) return kNumericalExit;
    }
  } catch (const adatemp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const adatemp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalExit;
  }
  return 0;
}
