#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "resn/data.hpp"
#include "resn/detail/parallel.hpp"
#include "resn/errors.hpp"
#include "resn/evolve.hpp"
#include "resn/mrs.hpp"
#include "resn/rnn.hpp"
#include "resn/stats.hpp"
#include "resn/train.hpp"

namespace resn {

enum class Method { resn, gdet, random };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::resn: return "RESN";
    case Method::gdet: return "GDET";
    case Method::random: return "RANDOM";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "RESN") return Method::resn;
  if (name == "GDET") return Method::gdet;
  if (name == "RANDOM") return Method::random;
  throw invalid_argument("unknown method '" + std::string(name) + "' (expected RESN, GDET or RANDOM)");
}

struct ProblemConfig {
  enum class Kind { sine, csv };
  Kind kind = Kind::sine;
  SineParams sine;
  std::string csv_path;
  std::string csv_column = "0";  // header name, or a 0-based index when all digits
  double train_fraction = kDefaultTrainFraction;

  bool operator==(const ProblemConfig&) const = default;
};

/// One experiment: a problem, the search/training settings shared by every
/// method, and the method x repetition matrix.
struct ExperimentConfig {
  ProblemConfig problem;
  SearchSpace space;
  EAConfig ea;                      // seed and fitness_kind are set per run
  MRSConfig mrs;                    // seed is set per individual
  bool mrs_auto_threshold = true;   // threshold = naive last-value MAE
  AdamConfig short_training{.epochs = 100};
  double short_training_init_sd = 0.1;
  ChampionTraining final_training{.adam = {.epochs = 1000}};
  std::vector<Method> methods{Method::resn, Method::gdet, Method::random};
  std::size_t repetitions = 30;
  std::uint64_t base_seed = 0;
  std::string output_dir = "results";

  void validate() const {
    space.validate();
    ea.validate();
    if (!mrs_auto_threshold) mrs.validate();
    short_training.validate();
    final_training.adam.validate();
    if (methods.empty()) throw invalid_argument("ExperimentConfig: at least one method is required");
    if (repetitions < 1) throw invalid_argument("ExperimentConfig: repetitions must be >= 1");
    if (!(short_training_init_sd > 0.0) || !(final_training.init_sd > 0.0))
      throw invalid_argument("ExperimentConfig: init_sd must be positive");
  }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Typed access to one INI section that remembers which keys were read.
class IniSection {
 public:
  IniSection(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) {
    known_.insert(key);
    if (!tree_) return std::nullopt;
    auto child = tree_->get_child_optional(boost::property_tree::ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return std::string(trim(child->data()));
  }

  void size(const std::string& key, std::size_t& out) {
    if (auto v = raw(key)) {
      std::uint64_t parsed = 0;
      auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
      if (ec != std::errc{} || p != v->data() + v->size() || v->empty()) fail(key, *v, "a nonnegative integer");
      out = static_cast<std::size_t>(parsed);
    }
  }
  void u64(const std::string& key, std::uint64_t& out) {
    std::size_t v = out;
    size(key, v);
    out = v;
  }
  void real(const std::string& key, double& out) {
    if (auto v = raw(key))
      if (!parse_double(*v, out)) fail(key, *v, "a real number");
  }
  void boolean(const std::string& key, bool& out) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "1" || *v == "yes") out = true;
      else if (*v == "false" || *v == "0" || *v == "no") out = false;
      else fail(key, *v, "true or false");
    }
  }
  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, _] : *tree_)
      if (!known_.count(key)) throw parse_error("config: unknown key '" + key + "' in section [" + name_ + "]", 0);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& value, const char* expected) const {
    throw parse_error("config: [" + name_ + "] " + key + " = '" + value + "' is not " + expected, 0);
  }

 private:
  const boost::property_tree::ptree* tree_;
  std::string name_;
  std::set<std::string> known_;
};

}  // namespace detail

/// Reads an INI-style experiment description. Every key is optional and
/// falls back to its default; unknown sections or keys are errors.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw parse_error("config: " + e.message(), e.line());
  }
  static const std::set<std::string> sections{"problem", "search_space", "ea", "mrs",
                                              "short_training", "final_training", "experiment"};
  for (const auto& [name, child] : tree) {
    if (!sections.count(name)) throw parse_error("config: unknown section [" + name + "]", 0);
    if (child.empty() && !child.data().empty()) throw parse_error("config: key '" + name + "' outside a section", 0);
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return detail::IniSection(child ? &*child : nullptr, name);
  };

  ExperimentConfig cfg;
  {
    auto s = section("problem");
    std::string kind = "sine";
    s.text("kind", kind);
    if (kind == "sine") cfg.problem.kind = ProblemConfig::Kind::sine;
    else if (kind == "csv") cfg.problem.kind = ProblemConfig::Kind::csv;
    else s.fail("kind", kind, "sine or csv");
    s.size("num_points", cfg.problem.sine.num_points);
    s.real("period", cfg.problem.sine.period);
    s.real("amplitude", cfg.problem.sine.amplitude);
    s.real("phase", cfg.problem.sine.phase);
    s.real("noise_sd", cfg.problem.sine.noise_sd);
    s.u64("seed", cfg.problem.sine.seed);
    s.text("csv_path", cfg.problem.csv_path);
    s.text("csv_column", cfg.problem.csv_column);
    s.real("train_fraction", cfg.problem.train_fraction);
    cfg.problem.sine.train_fraction = cfg.problem.train_fraction;
    s.reject_unknown();
  }
  {
    auto s = section("search_space");
    s.size("max_layers", cfg.space.max_layers);
    s.size("min_neurons", cfg.space.min_neurons);
    s.size("max_neurons", cfg.space.max_neurons);
    s.size("min_look_back", cfg.space.min_look_back);
    s.size("max_look_back", cfg.space.max_look_back);
    s.reject_unknown();
  }
  {
    auto s = section("ea");
    s.size("mu", cfg.ea.mu);
    s.size("lambda", cfg.ea.lambda);
    s.size("max_evaluations", cfg.ea.max_evaluations);
    s.real("rate_width", cfg.ea.rates.width);
    s.real("rate_add_layer", cfg.ea.rates.add_layer);
    s.real("rate_remove_layer", cfg.ea.rates.remove_layer);
    s.real("rate_look_back", cfg.ea.rates.look_back);
    s.size("step_width", cfg.ea.steps.width);
    s.size("step_look_back", cfg.ea.steps.look_back);
    s.size("adjust_window", cfg.ea.adjust.window);
    s.real("up_factor", cfg.ea.adjust.up_factor);
    s.real("down_factor", cfg.ea.adjust.down_factor);
    s.reject_unknown();
  }
  {
    auto s = section("mrs");
    s.size("num_samples", cfg.mrs.num_samples);
    if (auto t = s.raw("threshold"); t && *t != "auto") {
      cfg.mrs_auto_threshold = false;
      s.real("threshold", cfg.mrs.threshold);
    }
    s.real("weight_mean", cfg.mrs.weight_mean);
    s.real("weight_sd", cfg.mrs.weight_sd);
    s.reject_unknown();
  }
  auto adam_section = [&](const std::string& name, AdamConfig& adam, double& init_sd) {
    auto s = section(name);
    s.real("learning_rate", adam.learning_rate);
    s.real("beta1", adam.beta1);
    s.real("beta2", adam.beta2);
    s.real("epsilon", adam.epsilon);
    s.size("epochs", adam.epochs);
    s.real("init_sd", init_sd);
    if (name == "final_training") s.boolean("init_from_best_sample", cfg.final_training.init_from_best_sample);
    s.reject_unknown();
  };
  adam_section("short_training", cfg.short_training, cfg.short_training_init_sd);
  adam_section("final_training", cfg.final_training.adam, cfg.final_training.init_sd);
  {
    auto s = section("experiment");
    if (auto m = s.raw("methods")) {
      cfg.methods.clear();
      std::istringstream list(*m);
      std::string item;
      while (std::getline(list, item, ',')) {
        const auto name = std::string(detail::trim(item));
        if (name.empty()) continue;
        const auto method = parse_method(name);
        if (std::find(cfg.methods.begin(), cfg.methods.end(), method) == cfg.methods.end())
          cfg.methods.push_back(method);
      }
    }
    s.size("repetitions", cfg.repetitions);
    s.u64("base_seed", cfg.base_seed);
    s.text("output_dir", cfg.output_dir);
    s.reject_unknown();
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file '" + path + "'");
  return parse_experiment_config(in);
}

/// Canonical INI rendering; parse_experiment_config(to_ini(c)) == c.
inline std::string to_ini(const ExperimentConfig& c) {
  using detail::format_double;
  std::ostringstream o;
  o << "[problem]\n"
    << "kind = " << (c.problem.kind == ProblemConfig::Kind::sine ? "sine" : "csv") << '\n'
    << "num_points = " << c.problem.sine.num_points << '\n'
    << "period = " << format_double(c.problem.sine.period) << '\n'
    << "amplitude = " << format_double(c.problem.sine.amplitude) << '\n'
    << "phase = " << format_double(c.problem.sine.phase) << '\n'
    << "noise_sd = " << format_double(c.problem.sine.noise_sd) << '\n'
    << "seed = " << c.problem.sine.seed << '\n'
    << "csv_path = " << c.problem.csv_path << '\n'
    << "csv_column = " << c.problem.csv_column << '\n'
    << "train_fraction = " << format_double(c.problem.train_fraction) << "\n\n";
  o << "[search_space]\n"
    << "max_layers = " << c.space.max_layers << '\n'
    << "min_neurons = " << c.space.min_neurons << '\n'
    << "max_neurons = " << c.space.max_neurons << '\n'
    << "min_look_back = " << c.space.min_look_back << '\n'
    << "max_look_back = " << c.space.max_look_back << "\n\n";
  o << "[ea]\n"
    << "mu = " << c.ea.mu << '\n'
    << "lambda = " << c.ea.lambda << '\n'
    << "max_evaluations = " << c.ea.max_evaluations << '\n'
    << "rate_width = " << format_double(c.ea.rates.width) << '\n'
    << "rate_add_layer = " << format_double(c.ea.rates.add_layer) << '\n'
    << "rate_remove_layer = " << format_double(c.ea.rates.remove_layer) << '\n'
    << "rate_look_back = " << format_double(c.ea.rates.look_back) << '\n'
    << "step_width = " << c.ea.steps.width << '\n'
    << "step_look_back = " << c.ea.steps.look_back << '\n'
    << "adjust_window = " << c.ea.adjust.window << '\n'
    << "up_factor = " << format_double(c.ea.adjust.up_factor) << '\n'
    << "down_factor = " << format_double(c.ea.adjust.down_factor) << "\n\n";
  o << "[mrs]\n"
    << "num_samples = " << c.mrs.num_samples << '\n'
    << "threshold = " << (c.mrs_auto_threshold ? std::string("auto") : format_double(c.mrs.threshold)) << '\n'
    << "weight_mean = " << format_double(c.mrs.weight_mean) << '\n'
    << "weight_sd = " << format_double(c.mrs.weight_sd) << "\n\n";
  auto adam = [&](const char* name, const AdamConfig& a, double init_sd) {
    o << '[' << name << "]\n"
      << "learning_rate = " << format_double(a.learning_rate) << '\n'
      << "beta1 = " << format_double(a.beta1) << '\n'
      << "beta2 = " << format_double(a.beta2) << '\n'
      << "epsilon = " << format_double(a.epsilon) << '\n'
      << "epochs = " << a.epochs << '\n'
      << "init_sd = " << format_double(init_sd) << '\n';
  };
  adam("short_training", c.short_training, c.short_training_init_sd);
  o << '\n';
  adam("final_training", c.final_training.adam, c.final_training.init_sd);
  o << "init_from_best_sample = " << (c.final_training.init_from_best_sample ? "true" : "false") << "\n\n";
  o << "[experiment]\nmethods = ";
  for (std::size_t i = 0; i < c.methods.size(); ++i) o << (i ? "," : "") << to_string(c.methods[i]);
  o << "\nrepetitions = " << c.repetitions << '\n'
    << "base_seed = " << c.base_seed << '\n'
    << "output_dir = " << c.output_dir << '\n';
  return o.str();
}

/// FNV-1a of the canonical rendering, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_ini(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline TimeSeriesDataset load_problem(const ProblemConfig& p) {
  if (p.kind == ProblemConfig::Kind::sine) {
    auto sine = p.sine;
    sine.train_fraction = p.train_fraction;
    return generate_sine(sine);
  }
  const bool is_index = !p.csv_column.empty() && std::all_of(p.csv_column.begin(), p.csv_column.end(),
                                                            [](char ch) { return ch >= '0' && ch <= '9'; });
  const CsvColumn column = is_index ? CsvColumn(static_cast<std::size_t>(std::stoull(p.csv_column)))
                                    : CsvColumn(p.csv_column);
  return load_csv(p.csv_path, column, p.train_fraction);
}

/// Outcome of one (method, repetition) run.
struct RunRecord {
  std::string method;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double test_mae = 0.0;   // normalized units
  double test_mse = 0.0;   // normalized units
  double test_mape = 0.0;  // percent, on the raw scale; NaN when a raw target is 0
  double optimization_seconds = 0.0;
  double training_seconds = 0.0;
  double total_seconds = 0.0;
  std::size_t evaluations = 0;
  double best_fitness = 0.0;
  Architecture champion;

  // Not part of runs.csv.
  WeightVector weights;
  std::vector<GenerationLog> log;
  std::vector<double> loss_history;
};

enum class Metric { mae, mse, mape, time };

inline Metric parse_metric(std::string_view name) {
  if (name == "mae") return Metric::mae;
  if (name == "mse") return Metric::mse;
  if (name == "mape") return Metric::mape;
  if (name == "time") return Metric::time;
  throw invalid_argument("unknown metric '" + std::string(name) + "' (expected mae, mse, mape or time)");
}

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::mae: return "mae";
    case Metric::mse: return "mse";
    case Metric::mape: return "mape";
    case Metric::time: return "time";
  }
  return "?";
}

/// Metric value of a record; time is total seconds.
inline double metric_value(const RunRecord& r, Metric m) {
  switch (m) {
    case Metric::mae: return r.test_mae;
    case Metric::mse: return r.test_mse;
    case Metric::mape: return r.test_mape;
    case Metric::time: return r.total_seconds;
  }
  return 0.0;
}

/// Metric values per method (NaNs dropped), keyed by method name.
inline std::map<std::string, std::vector<double>> group_by_method(std::span<const RunRecord> records, Metric m) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : records) {
    auto& g = groups[r.method];
    if (const double v = metric_value(r, m); !std::isnan(v)) g.push_back(v);
  }
  return groups;
}

/// Per-method summary of one metric.
inline std::map<std::string, Summary> summarize(std::span<const RunRecord> records, Metric m) {
  std::map<std::string, Summary> out;
  for (const auto& [method, values] : group_by_method(records, m)) {
    if (values.empty()) throw invalid_argument("summarize: method " + method + " has no finite " + to_string(m) + " values");
    out.emplace(method, summarize(values));
  }
  return out;
}

struct PairwiseTest {
  Metric metric;
  std::string method_a;
  std::string method_b;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double p_value = 0.0;  // NaN when a group has no finite values
};

inline std::vector<PairwiseTest> pairwise_tests(std::span<const RunRecord> records, Metric m) {
  const auto groups = group_by_method(records, m);
  std::vector<PairwiseTest> out;
  for (auto a = groups.begin(); a != groups.end(); ++a)
    for (auto b = std::next(a); b != groups.end(); ++b) {
      PairwiseTest t{m, a->first, b->first, a->second.size(), b->second.size(), std::nan("")};
      if (!a->second.empty() && !b->second.empty()) t.p_value = wilcoxon_rank_sum(a->second, b->second);
      out.push_back(t);
    }
  return out;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw io_error("write failed for '" + path.string() + "'");
}

inline const char* kRunsHeader =
    "method,repetition,seed,test_mae,test_mse,test_mape,optimization_seconds,training_seconds,total_seconds,"
    "evaluations,best_fitness,layers,look_back,weight_count\n";

inline std::string runs_row(const RunRecord& r) {
  std::ostringstream o;
  o << r.method << ',' << r.repetition << ',' << r.seed << ',' << format_double(r.test_mae) << ','
    << format_double(r.test_mse) << ',' << format_double(r.test_mape) << ',' << format_double(r.optimization_seconds)
    << ',' << format_double(r.training_seconds) << ',' << format_double(r.total_seconds) << ',' << r.evaluations << ','
    << format_double(r.best_fitness) << ',' << layers_to_string(r.champion) << ',' << r.champion.look_back << ','
    << weight_count(r.champion) << '\n';
  return o.str();
}

inline std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

/// The one-line '#' comment that opens every CSV output.
inline std::string csv_comment_header(const std::string& config_hash) {
  return "# config_hash=" + config_hash + " timestamp=" + detail::timestamp_utc() + '\n';
}

struct RunOptions {
  std::size_t threads = 1;  // parallel (method, repetition) runs
  /// When set, runs.csv there receives each record as soon as it finishes.
  std::optional<std::filesystem::path> incremental_dir;
};

/// Executes one method with one seed and scores the champion on the test
/// segment.
inline RunRecord run_single(const ExperimentConfig& cfg, const TimeSeriesDataset& dataset, Method method,
                            std::size_t repetition) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.method = to_string(method);
  rec.repetition = repetition;
  rec.seed = cfg.base_seed + repetition;

  ProblemContext ctx;
  ctx.dataset = dataset;
  ctx.mrs = cfg.mrs;
  if (cfg.mrs_auto_threshold) ctx.mrs.threshold = naive_threshold(dataset);
  ctx.short_training = cfg.short_training;
  ctx.init_sd = cfg.short_training_init_sd;

  Individual best;
  TrainReport report;
  if (method == Method::random) {
    ctx.kind = FitnessKind::gdet;
    auto search = run_random_search(cfg.space, cfg.ea.max_evaluations, ctx, rec.seed);
    best = search.best;
    rec.evaluations = search.evaluations;
    rec.optimization_seconds = search.seconds;
    report = train_champion(best, ctx, cfg.final_training, rec.seed);
  } else {
    EAConfig ea = cfg.ea;
    ea.seed = rec.seed;
    ea.fitness_kind = method == Method::resn ? FitnessKind::mrs : FitnessKind::gdet;
    ea.threads = 1;
    auto result = run_resn(cfg.space, ea, ctx, cfg.final_training);
    best = result.best;
    report = std::move(result.report);
    rec.evaluations = result.evaluations;
    rec.optimization_seconds = result.optimization_seconds;
    rec.log = std::move(result.log);
  }
  rec.training_seconds = report.wall_time;
  rec.best_fitness = *best.fitness;
  rec.champion = best.arch;

  const auto test = window(dataset, best.arch.look_back, Segment::test);
  const auto pred = predict_series(best.arch, report.final_weights, test);
  rec.test_mae = mae(test.targets, pred);
  rec.test_mse = mse(test.targets, pred);
  std::vector<double> raw_target(dataset.raw.begin() + static_cast<std::ptrdiff_t>(dataset.split_index),
                                 dataset.raw.end());
  std::vector<double> raw_pred(pred.size());
  std::transform(pred.begin(), pred.end(), raw_pred.begin(), [&](double v) { return dataset.denormalize(v); });
  const bool mape_defined = std::none_of(raw_target.begin(), raw_target.end(), [](double v) { return v == 0.0; });
  rec.test_mape = mape_defined ? mape(raw_target, raw_pred) : std::nan("");

  rec.weights = std::move(report.final_weights);
  rec.loss_history = std::move(report.loss_history);
  rec.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Runs every method x repetition (seed = base_seed + repetition). Records
/// come back ordered by method (config order), then repetition.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  const auto dataset = load_problem(cfg.problem);

  struct Job {
    Method method;
    std::size_t repetition;
  };
  std::vector<Job> jobs;
  for (auto m : cfg.methods)
    for (std::size_t r = 0; r < cfg.repetitions; ++r) jobs.push_back({m, r});

  std::ofstream appender;
  std::mutex appender_mutex;
  if (opts.incremental_dir) {
    std::filesystem::create_directories(*opts.incremental_dir);
    const auto path = *opts.incremental_dir / "runs.csv";
    appender.open(path, std::ios::trunc);
    if (!appender) throw io_error("cannot write '" + path.string() + "'");
    appender << csv_comment_header(config_hash(cfg)) << detail::kRunsHeader << std::flush;
  }

  std::vector<RunRecord> records(jobs.size());
  detail::parallel_for(jobs.size(), opts.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    try {
      records[i] = run_single(cfg, dataset, job.method, job.repetition);
    } catch (const std::exception& e) {
      throw std::runtime_error(to_string(job.method) + " repetition " + std::to_string(job.repetition) + ": " +
                               e.what());
    }
    if (appender.is_open()) {
      std::lock_guard lock(appender_mutex);
      appender << detail::runs_row(records[i]) << std::flush;
    }
  });
  return records;
}

/// Writes runs.csv, summary.csv, tests.csv and per-run champion, generation
/// log and loss files. Time columns in summary.csv are minutes.
inline void emit_report(std::span<const RunRecord> records, const std::filesystem::path& dir,
                        const std::string& config_hash) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw io_error("cannot create output directory '" + dir.string() + "'");
  using detail::format_double;
  const auto header = csv_comment_header(config_hash);

  std::string runs = header + detail::kRunsHeader;
  for (const auto& r : records) runs += detail::runs_row(r);
  detail::write_file(dir / "runs.csv", runs);

  // Table-shaped summary: one row per method, five statistics per metric.
  std::ostringstream summary;
  summary << header << "method,n";
  for (const char* metric : {"mae", "mse", "mape", "time_min"})
    for (const char* stat : {"mean", "median", "max", "min", "sd"}) summary << ',' << metric << '_' << stat;
  summary << '\n';
  const auto by_mae = group_by_method(records, Metric::mae);
  const auto by_mse = group_by_method(records, Metric::mse);
  const auto by_mape = group_by_method(records, Metric::mape);
  const auto by_time = [&] {
    auto groups = group_by_method(records, Metric::time);
    for (auto& [method, values] : groups)
      for (auto& v : values) v /= 60.0;
    return groups;
  }();
  for (const auto& [method, mae_values] : by_mae) {
    summary << method << ',' << mae_values.size();
    for (const auto* group : {&by_mae, &by_mse, &by_mape, &by_time}) {
      const auto& values = group->at(method);
      if (values.empty()) {
        for (int i = 0; i < 5; ++i) summary << ",nan";
        continue;
      }
      const auto s = summarize(values);
      summary << ',' << format_double(s.mean) << ',' << format_double(s.median) << ',' << format_double(s.max) << ','
              << format_double(s.min) << ',' << format_double(s.sd);
    }
    summary << '\n';
  }
  detail::write_file(dir / "summary.csv", summary.str());

  std::ostringstream tests;
  tests << header << "metric,method_a,method_b,n_a,n_b,p_value\n";
  for (auto m : {Metric::mae, Metric::mse, Metric::mape, Metric::time})
    for (const auto& t : pairwise_tests(records, m))
      tests << to_string(t.metric) << ',' << t.method_a << ',' << t.method_b << ',' << t.n_a << ',' << t.n_b << ','
            << format_double(t.p_value) << '\n';
  detail::write_file(dir / "tests.csv", tests.str());

  for (const auto& r : records) {
    const auto stem = r.method + "_" + std::to_string(r.repetition);
    if (!r.weights.values.empty()) {
      std::ostringstream champion;
      write_champion(champion, r.champion, r.weights);
      detail::write_file(dir / ("champion_" + stem + ".txt"), champion.str());
    }
    if (!r.log.empty()) {
      std::ostringstream log;
      log << header << "generation,evaluations,best_fitness,mean_fitness,step_width,step_lookback,elapsed_seconds\n";
      for (const auto& g : r.log)
        log << g.generation << ',' << g.evaluations << ',' << format_double(g.best_fitness) << ','
            << format_double(g.mean_fitness) << ',' << g.step_width << ',' << g.step_look_back << ','
            << format_double(g.elapsed_seconds) << '\n';
      detail::write_file(dir / ("log_" + stem + ".csv"), log.str());
    }
    if (!r.loss_history.empty()) {
      std::ostringstream loss;
      loss << header << "epoch,train_mae\n";
      for (std::size_t e = 0; e < r.loss_history.size(); ++e)
        loss << e + 1 << ',' << format_double(r.loss_history[e]) << '\n';
      detail::write_file(dir / ("loss_" + stem + ".csv"), loss.str());
    }
  }
}

/// Reads the metric columns of a runs.csv written by emit_report.
inline std::vector<RunRecord> read_runs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open runs file '" + path + "'");
  std::string line;
  std::vector<std::string_view> columns;
  std::string header;
  std::vector<RunRecord> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (header.empty()) {
      header = line;
      columns = detail::split_fields(header, ',');
      continue;
    }
    ++row;
    const auto fields = detail::split_fields(line, ',');
    if (fields.size() != columns.size()) throw parse_error("runs file: wrong number of fields", row);
    auto field = [&](std::string_view name) -> std::string_view {
      auto it = std::find(columns.begin(), columns.end(), name);
      if (it == columns.end()) throw parse_error("runs file: missing column '" + std::string(name) + "'", 0);
      return fields[static_cast<std::size_t>(it - columns.begin())];
    };
    auto number = [&](std::string_view name) {
      const auto text = field(name);
      if (text == "nan") return std::nan("");
      double v = 0.0;
      if (!detail::parse_double(text, v)) throw parse_error("runs file: bad value in column " + std::string(name), row);
      return v;
    };
    RunRecord r;
    r.method = std::string(field("method"));
    r.repetition = static_cast<std::size_t>(number("repetition"));
    r.seed = std::stoull(std::string(field("seed")));
    r.test_mae = number("test_mae");
    r.test_mse = number("test_mse");
    r.test_mape = number("test_mape");
    r.optimization_seconds = number("optimization_seconds");
    r.training_seconds = number("training_seconds");
    r.total_seconds = number("total_seconds");
    r.evaluations = static_cast<std::size_t>(number("evaluations"));
    r.best_fitness = number("best_fitness");
    r.champion.look_back = static_cast<std::size_t>(number("look_back"));
    std::istringstream layers{std::string(field("layers"))};
    std::string w;
    while (std::getline(layers, w, '-')) r.champion.hidden_layers.push_back(std::stoull(w));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace resn
