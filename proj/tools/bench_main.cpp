// bench: run RESN / GDET / random-search experiments and analyse their results.
//
//   bench run --config experiment.ini
//   bench summarize --runs results/runs.csv
//   bench compare --runs results/runs.csv --metric mae
#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "resn/bench.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& output_override) {
  auto cfg = resn::load_experiment_config(config_path);
  if (!output_override.empty()) cfg.output_dir = output_override;
  const std::filesystem::path out_dir = cfg.output_dir;
  const auto hash = resn::config_hash(cfg);

  resn::RunOptions opts;
  opts.threads = resn::detail::thread_count_from_env();
  opts.incremental_dir = out_dir;
  std::fprintf(stderr, "config %s: %zu method(s) x %zu repetition(s), %zu worker(s)\n", hash.c_str(),
               cfg.methods.size(), cfg.repetitions, opts.threads);

  const auto records = resn::run_experiment(cfg, opts);
  resn::emit_report(records, out_dir, hash);
  {
    std::ofstream ini(out_dir / "config.ini");
    ini << resn::to_ini(cfg);
  }
  for (const auto& r : records)
    std::printf("%-6s rep %2zu  test MAE %.6f  MSE %.6f  arch %s lb=%zu  opt %.2fs  train %.2fs\n", r.method.c_str(),
                r.repetition, r.test_mae, r.test_mse, resn::layers_to_string(r.champion).c_str(),
                r.champion.look_back, r.optimization_seconds, r.training_seconds);
  std::printf("results written to %s\n", out_dir.string().c_str());
  return 0;
}

void print_block(const char* title, const std::map<std::string, resn::Summary>& s, double scale = 1.0) {
  std::printf("\n%s\n%-8s", title, "");
  for (const auto& [method, _] : s) std::printf("%14s", method.c_str());
  std::printf("\n");
  const char* rows[] = {"Mean", "Median", "Max", "Min", "SD"};
  for (int row = 0; row < 5; ++row) {
    std::printf("%-8s", rows[row]);
    for (const auto& [_, sum] : s) {
      const double values[] = {sum.mean, sum.median, sum.max, sum.min, sum.sd};
      std::printf("%14.6g", values[row] * scale);
    }
    std::printf("\n");
  }
}

int cmd_summarize(const std::string& runs_path) {
  const auto records = resn::read_runs_csv(runs_path);
  if (records.empty()) throw resn::invalid_data("no records in '" + runs_path + "'");
  print_block("MAE", resn::summarize(records, resn::Metric::mae));
  print_block("MSE", resn::summarize(records, resn::Metric::mse));
  try {
    print_block("MAPE [%]", resn::summarize(records, resn::Metric::mape));
  } catch (const resn::invalid_argument&) {
    std::printf("\nMAPE [%%]\n  undefined (zero targets)\n");
  }
  print_block("Time [min]", resn::summarize(records, resn::Metric::time), 1.0 / 60.0);
  return 0;
}

int cmd_compare(const std::string& runs_path, const std::string& metric_name) {
  const auto metric = resn::parse_metric(metric_name);
  const auto records = resn::read_runs_csv(runs_path);
  const auto tests = resn::pairwise_tests(records, metric);
  if (tests.empty()) {
    std::printf("fewer than two methods in '%s'; nothing to compare\n", runs_path.c_str());
    return 0;
  }
  std::printf("Wilcoxon rank-sum, two-sided, metric %s\n", metric_name.c_str());
  for (const auto& t : tests)
    std::printf("%-8s vs %-8s  n=%zu/%zu  p = %.6g\n", t.method_a.c_str(), t.method_b.c_str(), t.n_a, t.n_b,
                t.p_value);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RNN architecture search benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output_dir, "Override [experiment] output_dir");

  std::string runs_path;
  auto* summarize = app.add_subcommand("summarize", "Mean/Median/Max/Min/SD per method");
  summarize->add_option("--runs", runs_path, "runs.csv written by 'run'")->required()->check(CLI::ExistingFile);

  std::string metric = "mae";
  auto* compare = app.add_subcommand("compare", "Pairwise Wilcoxon rank-sum tests between methods");
  compare->add_option("--runs", runs_path, "runs.csv written by 'run'")->required()->check(CLI::ExistingFile);
  compare->add_option("--metric", metric, "mae, mse, mape or time")
      ->check(CLI::IsMember({"mae", "mse", "mape", "time"}));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, output_dir);
    if (*summarize) return cmd_summarize(runs_path);
    if (*compare) return cmd_compare(runs_path, metric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
