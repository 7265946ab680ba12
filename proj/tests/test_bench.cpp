#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "resn/bench.hpp"

namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"([problem]
kind = sine
num_points = 80
period = 16

[search_space]
max_layers = 2
min_neurons = 1
max_neurons = 4
min_look_back = 2
max_look_back = 5

[ea]
mu = 2
lambda = 2
max_evaluations = 6

[mrs]
num_samples = 5

[short_training]
epochs = 3

[final_training]
epochs = 10
learning_rate = 0.01

[experiment]
methods = RESN, GDET, RANDOM
repetitions = 2
base_seed = 3
)";

resn::ExperimentConfig tiny_config() {
  std::istringstream in(kTinyConfig);
  return resn::parse_experiment_config(in);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("resn_bench_" + name);
  fs::remove_all(dir);
  return dir;
}

resn::RunRecord record(std::string method, double mae, double total_seconds = 1.0) {
  resn::RunRecord r;
  r.method = std::move(method);
  r.test_mae = mae;
  r.test_mse = mae * mae;
  r.test_mape = 10.0 * mae;
  r.total_seconds = total_seconds;
  r.champion = {.hidden_layers = {2}, .look_back = 2};
  return r;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  std::istringstream empty("");
  const auto d = resn::parse_experiment_config(empty);
  EXPECT_EQ(d, resn::ExperimentConfig{});
  EXPECT_EQ(d.repetitions, 30u);
  EXPECT_TRUE(d.mrs_auto_threshold);

  const auto c = tiny_config();
  EXPECT_EQ(c.problem.sine.num_points, 80u);
  EXPECT_EQ(c.space.max_neurons, 4u);
  EXPECT_EQ(c.ea.max_evaluations, 6u);
  EXPECT_EQ(c.final_training.adam.epochs, 10u);
  EXPECT_EQ(c.methods, (std::vector<resn::Method>{resn::Method::resn, resn::Method::gdet, resn::Method::random}));

  std::istringstream fixed("[mrs]\nthreshold = 0.05\n");
  const auto f = resn::parse_experiment_config(fixed);
  EXPECT_FALSE(f.mrs_auto_threshold);
  EXPECT_EQ(f.mrs.threshold, 0.05);
}

TEST(Config, CanonicalRenderingRoundTrips) {
  auto c = tiny_config();
  c.mrs_auto_threshold = false;
  c.mrs.threshold = 0.123456789012345;
  c.final_training.init_from_best_sample = true;
  std::istringstream in(resn::to_ini(c));
  const auto back = resn::parse_experiment_config(in);
  EXPECT_EQ(back, c);
  EXPECT_EQ(resn::config_hash(back), resn::config_hash(c));
  auto other = c;
  other.base_seed += 1;
  EXPECT_NE(resn::config_hash(other), resn::config_hash(c));
  EXPECT_EQ(resn::config_hash(c).size(), 16u);
}

TEST(Config, RejectsUnknownAndMalformed) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return resn::parse_experiment_config(in);
  };
  EXPECT_THROW(parse("[ea]\nmu = 4\nlamda = 4\n"), resn::parse_error);
  EXPECT_THROW(parse("[evolution]\nmu = 4\n"), resn::parse_error);
  EXPECT_THROW(parse("[ea]\nmu = four\n"), resn::parse_error);
  EXPECT_THROW(parse("[ea]\nmu = -1\n"), resn::parse_error);
  EXPECT_THROW(parse("[problem]\nkind = audio\n"), resn::parse_error);
  EXPECT_THROW(parse("[experiment]\nmethods = RESN, SVM\n"), resn::invalid_argument);
  EXPECT_THROW(parse("[ea]\nmu = 10\nmax_evaluations = 5\n"), resn::invalid_argument);
  EXPECT_THROW(parse("[short_training]\ninit_from_best_sample = true\n"), resn::parse_error);
  EXPECT_THROW(resn::load_experiment_config("/nonexistent/experiment.ini"), resn::io_error);
}

TEST(Summaries, PerMethodAndOrderInvariant) {
  std::vector<resn::RunRecord> records{record("RESN", 0.1), record("GDET", 0.4), record("RESN", 0.3),
                                       record("GDET", 0.2), record("RESN", 0.2)};
  auto s = resn::summarize(records, resn::Metric::mae);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s.at("RESN").mean, 0.2);
  EXPECT_DOUBLE_EQ(s.at("RESN").median, 0.2);
  EXPECT_DOUBLE_EQ(s.at("GDET").median, 0.3);
  std::reverse(records.begin(), records.end());
  EXPECT_EQ(resn::summarize(records, resn::Metric::mae), s);
}

TEST(Summaries, NanMapeIsDroppedAndEmptyGroupRejected) {
  std::vector<resn::RunRecord> records{record("RESN", 0.1), record("RESN", 0.2)};
  records[0].test_mape = std::nan("");
  EXPECT_EQ(resn::summarize(records, resn::Metric::mape).at("RESN").count, 1u);
  records[1].test_mape = std::nan("");
  EXPECT_THROW(resn::summarize(records, resn::Metric::mape), resn::invalid_argument);
}

TEST(Summaries, PairwiseTests) {
  std::vector<resn::RunRecord> records;
  for (int i = 0; i < 3; ++i) records.push_back(record("A", 1 + i));
  for (int i = 0; i < 3; ++i) records.push_back(record("B", 4 + i));
  records.push_back(record("C", 2));
  const auto tests = resn::pairwise_tests(records, resn::Metric::mae);
  ASSERT_EQ(tests.size(), 3u);
  EXPECT_EQ(tests[0].method_a, "A");
  EXPECT_EQ(tests[0].method_b, "B");
  EXPECT_NEAR(tests[0].p_value, 0.1, 1e-12);
  EXPECT_EQ(resn::parse_metric("mse"), resn::Metric::mse);
  EXPECT_THROW(resn::parse_metric("rmse"), resn::invalid_argument);
}

TEST(Report, FilesShapesAndIdempotence) {
  std::vector<resn::RunRecord> records{record("RESN", 0.1), record("RESN", 0.2), record("GDET", 0.3)};
  records[0].repetition = 0;
  records[1].repetition = 1;
  records[0].weights = resn::WeightVector(resn::weight_count(records[0].champion), 0.25);
  records[0].loss_history = {0.5, 0.4};
  records[0].log = {{0, 2, 0.1, 0.05, 4, 2, 0.0}};
  const auto dir = fresh_dir("report");
  resn::emit_report(records, dir, "00000000deadbeef");

  const auto runs = lines_of(read_file(dir / "runs.csv"));
  ASSERT_EQ(runs.size(), 2u + records.size());
  EXPECT_EQ(runs[0].rfind("# config_hash=00000000deadbeef timestamp=", 0), 0u);
  const auto summary = lines_of(read_file(dir / "summary.csv"));
  ASSERT_EQ(summary.size(), 4u);  // comment, header, GDET, RESN
  EXPECT_EQ(summary[1].rfind("method,n,mae_mean,mae_median,mae_max,mae_min,mae_sd,mse_mean", 0), 0u);
  EXPECT_EQ(summary[2].rfind("GDET,1,", 0), 0u);
  EXPECT_EQ(summary[3].rfind("RESN,2,", 0), 0u);
  EXPECT_TRUE(fs::exists(dir / "tests.csv"));
  EXPECT_TRUE(fs::exists(dir / "champion_RESN_0.txt"));
  EXPECT_TRUE(fs::exists(dir / "loss_RESN_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "log_RESN_0.csv"));
  std::ifstream champion(dir / "champion_RESN_0.txt");
  EXPECT_EQ(resn::read_champion(champion).weights, records[0].weights);

  // Re-emitting differs at most in the timestamp line.
  const auto before = read_file(dir / "summary.csv");
  resn::emit_report(records, dir, "00000000deadbeef");
  auto a = lines_of(before), b = lines_of(read_file(dir / "summary.csv"));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);

  const auto back = resn::read_runs_csv((dir / "runs.csv").string());
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].method, records[i].method);
    EXPECT_EQ(back[i].test_mae, records[i].test_mae);
    EXPECT_EQ(back[i].champion, records[i].champion);
  }
}

TEST(Report, UnwritableDirectory) {
  std::vector<resn::RunRecord> records{record("RESN", 0.1)};
  const auto file = fresh_dir("blocker");
  std::ofstream(file) << "x";
  EXPECT_THROW(resn::emit_report(records, file / "sub", "0"), resn::io_error);
}

TEST(Experiment, RecordsTimingAndDeterminism) {
  const auto cfg = tiny_config();
  const auto a = resn::run_experiment(cfg);
  ASSERT_EQ(a.size(), 6u);
  for (const auto& r : a) {
    EXPECT_LE(r.optimization_seconds + r.training_seconds, r.total_seconds);
    EXPECT_EQ(r.seed, cfg.base_seed + r.repetition);
    EXPECT_EQ(r.loss_history.size(), 10u);
    EXPECT_GT(r.evaluations, 0u);
    EXPECT_LE(r.evaluations, 6u);
  }
  const auto b = resn::run_experiment(cfg, {.threads = 3});
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].method, b[i].method);
    EXPECT_EQ(a[i].test_mae, b[i].test_mae);
    EXPECT_EQ(a[i].best_fitness, b[i].best_fitness);
    EXPECT_EQ(a[i].champion, b[i].champion);
  }
}

TEST(Experiment, MrsEvaluationCheaperThanGdet) {
  resn::ProblemContext ctx;
  ctx.dataset = resn::generate_sine({.num_points = 500, .period = 50});
  ctx.mrs.threshold = resn::naive_threshold(ctx.dataset);
  const resn::Architecture arch{.hidden_layers = {16, 8}, .look_back = 8};
  auto timed = [&](resn::FitnessKind kind) {
    ctx.kind = kind;
    const auto start = std::chrono::steady_clock::now();
    resn::evaluate_architecture(ctx, arch, 1);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  EXPECT_LE(timed(resn::FitnessKind::mrs), timed(resn::FitnessKind::gdet));
}

TEST(Cli, RunSummarizeCompare) {
  const auto dir = fresh_dir("cli");
  fs::create_directories(dir);
  std::ofstream(dir / "tiny.ini") << kTinyConfig << "output_dir = " << (dir / "out").string() << '\n';
  const std::string exe = RESN_BENCH_EXE;
  auto sh = [&](const std::string& args) {
    return std::system((exe + " " + args + " > " + (dir / "stdout.txt").string() + " 2>&1").c_str());
  };
  ASSERT_EQ(sh("run --config " + (dir / "tiny.ini").string()), 0) << read_file(dir / "stdout.txt");
  for (const char* f : {"runs.csv", "summary.csv", "tests.csv", "config.ini"}) EXPECT_TRUE(fs::exists(dir / "out" / f));
  EXPECT_EQ(lines_of(read_file(dir / "out" / "runs.csv")).size(), 2u + 6u);

  const auto runs = (dir / "out" / "runs.csv").string();
  ASSERT_EQ(sh("summarize --runs " + runs), 0);
  const auto summary = read_file(dir / "stdout.txt");
  for (const char* block : {"MAE", "MSE", "MAPE", "Time [min]", "Median", "SD"})
    EXPECT_NE(summary.find(block), std::string::npos) << block;
  ASSERT_EQ(sh("compare --runs " + runs + " --metric mae"), 0);
  EXPECT_NE(read_file(dir / "stdout.txt").find("RESN"), std::string::npos);
  EXPECT_NE(sh("compare --runs " + runs + " --metric rmse"), 0);
  EXPECT_NE(sh("run --config " + (dir / "missing.ini").string()), 0);
}
