#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "resn/data.hpp"
#include "resn/detail/parallel.hpp"
#include "resn/detail/random.hpp"
#include "resn/errors.hpp"
#include "resn/mrs.hpp"
#include "resn/rnn.hpp"
#include "resn/train.hpp"

namespace resn {

/// MRS: training-free p_t. GDET: minus the test MAE after short Adam training.
enum class FitnessKind { mrs, gdet };

inline std::string to_string(FitnessKind kind) { return kind == FitnessKind::mrs ? "MRS" : "GDET"; }

struct MutationRates {
  double width = 0.6;
  double add_layer = 0.2;
  double remove_layer = 0.2;
  double look_back = 0.3;

  bool operator==(const MutationRates&) const = default;
};

/// Integer perturbation magnitudes, adapted by the 1/5-success rule.
struct StepSizes {
  std::size_t width = 4;
  std::size_t look_back = 2;

  bool operator==(const StepSizes&) const = default;
};

struct SelfAdjustConfig {
  std::size_t window = 10;
  double up_factor = 1.5;
  double down_factor = 0.5;
  double target_success = 0.2;

  bool operator==(const SelfAdjustConfig&) const = default;
};

struct EAConfig {
  std::size_t mu = 10;
  std::size_t lambda = 10;
  std::size_t max_evaluations = 100;
  MutationRates rates;
  StepSizes steps;
  SelfAdjustConfig adjust;
  FitnessKind fitness_kind = FitnessKind::mrs;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // workers for offspring evaluation; results do not depend on it

  void validate() const {
    if (mu < 1) throw invalid_argument("EAConfig: mu must be >= 1");
    // Only mu is required: a budget of exactly mu means "evaluate the
    // initial population and stop".
    if (max_evaluations < mu) throw invalid_argument("EAConfig: max_evaluations must be >= mu");
    for (double r : {rates.width, rates.add_layer, rates.remove_layer, rates.look_back})
      if (!(r >= 0.0 && r <= 1.0)) throw invalid_argument("EAConfig: mutation rates must lie in [0, 1]");
    if (steps.width < 1 || steps.look_back < 1) throw invalid_argument("EAConfig: step sizes must be >= 1");
    if (adjust.window < 1) throw invalid_argument("EAConfig: self-adjust window must be >= 1");
    if (!(adjust.up_factor > 1.0)) throw invalid_argument("EAConfig: up_factor must exceed 1");
    if (!(adjust.down_factor > 0.0 && adjust.down_factor < 1.0))
      throw invalid_argument("EAConfig: down_factor must lie in (0, 1)");
  }

  bool operator==(const EAConfig&) const = default;
};

struct Individual {
  Architecture arch;
  std::optional<double> fitness;
  std::uint64_t eval_seed = 0;
  double eval_cost_seconds = 0.0;
  std::size_t birth = 0;  // creation index within a run; unique

  bool evaluated() const noexcept { return fitness.has_value(); }
};

/// Evaluation seed of the individual created `birth`-th in a run.
inline std::uint64_t individual_seed(std::uint64_t run_seed, std::size_t birth) {
  return derive_seed(derive_seed(run_seed, 0x65'76'61'6cULL), birth);
}

/// Uniform draw: layer count, then each width, then look-back.
inline Architecture random_architecture(const SearchSpace& space, Rng& rng) {
  using dist = std::uniform_int_distribution<std::size_t>;
  Architecture a;
  const auto layers = dist(1, space.max_layers)(rng);
  a.hidden_layers.resize(layers);
  for (auto& w : a.hidden_layers) w = dist(space.min_neurons, space.max_neurons)(rng);
  a.look_back = dist(space.min_look_back, space.max_look_back)(rng);
  return a;
}

inline Rng operator_rng(std::uint64_t run_seed) { return make_rng(run_seed, 0x6f'70'73ULL); }

/// mu random individuals, births 0..mu-1, drawn from `rng`.
inline std::vector<Individual> initialize(const SearchSpace& space, const EAConfig& cfg, Rng& rng) {
  space.validate();
  std::vector<Individual> pop(cfg.mu);
  for (std::size_t i = 0; i < cfg.mu; ++i) {
    pop[i].arch = random_architecture(space, rng);
    pop[i].birth = i;
    pop[i].eval_seed = individual_seed(cfg.seed, i);
  }
  return pop;
}

inline std::vector<Individual> initialize(const SearchSpace& space, const EAConfig& cfg) {
  Rng rng = operator_rng(cfg.seed);
  return initialize(space, cfg, rng);
}

/// Everything an evaluation needs besides the architecture.
struct ProblemContext {
  TimeSeriesDataset dataset;
  FitnessKind kind = FitnessKind::mrs;
  MRSConfig mrs;                // seed is replaced by each individual's eval_seed
  AdamConfig short_training{.epochs = 100};
  double init_sd = 0.1;         // GDET initial weights ~ N(0, init_sd^2)
};

/// Fresh N(0, sd^2) weights for training runs.
inline WeightVector random_init(const Architecture& arch, double sd, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x696e6974ULL);
  std::normal_distribution<double> dist(0.0, sd);
  WeightVector w(weight_count(arch));
  for (auto& v : w.values) v = dist(rng);
  return w;
}

/// Fitness of one architecture. Deterministic in (arch, seed).
inline double evaluate_architecture(const ProblemContext& ctx, const Architecture& arch, std::uint64_t seed) {
  const auto train = window(ctx.dataset, arch.look_back, Segment::train);
  if (ctx.kind == FitnessKind::mrs) {
    MRSConfig cfg = ctx.mrs;
    cfg.seed = seed;
    return fitness(arch, train, cfg);
  }
  const auto test = window(ctx.dataset, arch.look_back, Segment::test);
  const auto report = train_adam(arch, random_init(arch, ctx.init_sd, seed), train, ctx.short_training);
  return -mae(test.targets, predict_series(arch, report.final_weights, test));
}

/// Evaluates every unevaluated individual and counts the evaluations.
class Evaluator {
 public:
  explicit Evaluator(ProblemContext ctx) : ctx_(std::move(ctx)) {}

  void evaluate(std::vector<Individual>& population, std::size_t threads = 1) {
    std::vector<Individual*> pending;
    for (auto& ind : population)
      if (!ind.evaluated()) pending.push_back(&ind);
    detail::parallel_for(pending.size(), threads, [&](std::size_t i) {
      auto& ind = *pending[i];
      const auto start = std::chrono::steady_clock::now();
      ind.fitness = evaluate_architecture(ctx_, ind.arch, ind.eval_seed);
      ind.eval_cost_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    evaluations_ += pending.size();
  }

  std::size_t evaluations() const noexcept { return evaluations_; }
  const ProblemContext& context() const noexcept { return ctx_; }

 private:
  ProblemContext ctx_;
  std::size_t evaluations_ = 0;
};

namespace detail {

inline void require_evaluated(const Individual& ind) {
  if (!ind.evaluated())
    throw contract_error("individual " + std::to_string(ind.birth) + " has not been evaluated");
}

/// Strict preference: higher fitness, then fewer weights.
inline bool better(const Individual& a, const Individual& b) {
  if (*a.fitness != *b.fitness) return *a.fitness > *b.fitness;
  return weight_count(a.arch) < weight_count(b.arch);
}

}  // namespace detail

/// k binary tournaments with replacement.
inline std::vector<Individual> select_parents(std::span<const Individual> population, std::size_t k, Rng& rng) {
  if (population.empty()) throw invalid_argument("select_parents: empty population");
  for (const auto& ind : population) detail::require_evaluated(ind);
  std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
  std::bernoulli_distribution coin(0.5);
  std::vector<Individual> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& a = population[pick(rng)];
    const auto& b = population[pick(rng)];
    if (detail::better(a, b))
      out.push_back(a);
    else if (detail::better(b, a))
      out.push_back(b);
    else
      out.push_back(coin(rng) ? a : b);
  }
  return out;
}

namespace detail {

inline std::size_t perturb(std::size_t value, std::size_t step, std::size_t lo, std::size_t hi, Rng& rng) {
  const auto magnitude = std::uniform_int_distribution<std::size_t>(1, step)(rng);
  const bool up = std::bernoulli_distribution(0.5)(rng);
  if (up) return std::min(hi, value + magnitude);
  return value > lo + magnitude ? value - magnitude : lo;
}

/// A perturbation that is guaranteed to change `value` (requires lo < hi).
inline std::size_t perturb_strict(std::size_t value, std::size_t step, std::size_t lo, std::size_t hi, Rng& rng) {
  const auto magnitude = std::uniform_int_distribution<std::size_t>(1, step)(rng);
  bool up = std::bernoulli_distribution(0.5)(rng);
  if (value == hi) up = false;
  if (value == lo) up = true;
  return up ? std::min(hi, value + magnitude) : (value > lo + magnitude ? value - magnitude : lo);
}

/// Applies one change the search space admits; false when none exists.
inline bool force_change(Architecture& a, const SearchSpace& space, const StepSizes& steps, Rng& rng) {
  enum Op { width, add, remove, look_back };
  std::vector<Op> ops;
  if (space.min_neurons < space.max_neurons) ops.push_back(width);
  if (a.hidden_layers.size() < space.max_layers) ops.push_back(add);
  if (a.hidden_layers.size() > 1) ops.push_back(remove);
  if (space.min_look_back < space.max_look_back) ops.push_back(look_back);
  if (ops.empty()) return false;
  using dist = std::uniform_int_distribution<std::size_t>;
  auto& layers = a.hidden_layers;
  switch (ops[dist(0, ops.size() - 1)(rng)]) {
    case width: {
      auto& w = layers[dist(0, layers.size() - 1)(rng)];
      w = perturb_strict(w, steps.width, space.min_neurons, space.max_neurons, rng);
      break;
    }
    case add:
      layers.insert(layers.begin() + static_cast<std::ptrdiff_t>(dist(0, layers.size())(rng)),
                    dist(space.min_neurons, space.max_neurons)(rng));
      break;
    case remove:
      layers.erase(layers.begin() + static_cast<std::ptrdiff_t>(dist(0, layers.size() - 1)(rng)));
      break;
    case look_back:
      a.look_back = perturb_strict(a.look_back, steps.look_back, space.min_look_back, space.max_look_back, rng);
      break;
  }
  return true;
}

}  // namespace detail

/// Offspring of `parent`: width perturbation, layer insertion, layer
/// removal and look-back perturbation, each applied with its rate in that
/// order. If nothing changed, one feasible change is forced; the genotype
/// is left as is only when the search space holds a single architecture.
inline Individual mutate(const Individual& parent, const SearchSpace& space, const MutationRates& rates,
                         const StepSizes& steps, Rng& rng) {
  using dist = std::uniform_int_distribution<std::size_t>;
  auto fire = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  Individual child;
  child.arch = parent.arch;
  auto& layers = child.arch.hidden_layers;
  if (fire(rates.width)) {
    auto& w = layers[dist(0, layers.size() - 1)(rng)];
    w = detail::perturb(w, steps.width, space.min_neurons, space.max_neurons, rng);
  }
  if (fire(rates.add_layer) && layers.size() < space.max_layers) {
    const auto pos = dist(0, layers.size())(rng);
    layers.insert(layers.begin() + static_cast<std::ptrdiff_t>(pos), dist(space.min_neurons, space.max_neurons)(rng));
  }
  if (fire(rates.remove_layer) && layers.size() > 1)
    layers.erase(layers.begin() + static_cast<std::ptrdiff_t>(dist(0, layers.size() - 1)(rng)));
  if (fire(rates.look_back))
    child.arch.look_back =
        detail::perturb(child.arch.look_back, steps.look_back, space.min_look_back, space.max_look_back, rng);

  if (child.arch == parent.arch) detail::force_change(child.arch, space, steps, rng);
  return child;
}

/// (mu + lambda) survivor selection; mu = parents.size(). Ties prefer fewer
/// weights, then parents over offspring.
inline std::vector<Individual> replace(std::span<const Individual> parents, std::span<const Individual> offspring) {
  for (const auto& ind : parents) detail::require_evaluated(ind);
  for (const auto& ind : offspring) detail::require_evaluated(ind);
  if (offspring.empty()) return {parents.begin(), parents.end()};
  std::vector<Individual> pool(parents.begin(), parents.end());
  pool.insert(pool.end(), offspring.begin(), offspring.end());
  std::stable_sort(pool.begin(), pool.end(), detail::better);
  pool.resize(parents.size());
  return pool;
}

/// 1/5-success rule on the integer step sizes. `history` holds one flag per
/// offspring (true = entered the survivor set) and must span exactly one
/// adjustment window.
inline StepSizes self_adjust(const std::vector<bool>& history, const SelfAdjustConfig& cfg, StepSizes steps) {
  if (history.size() != cfg.window)
    throw contract_error("self_adjust: history holds " + std::to_string(history.size()) + " flags, window is " +
                         std::to_string(cfg.window));
  const auto successes = static_cast<double>(std::count(history.begin(), history.end(), true));
  const double rate = successes / static_cast<double>(history.size());
  if (std::abs(rate - cfg.target_success) <= 1e-12) return steps;
  const double factor = rate > cfg.target_success ? cfg.up_factor : cfg.down_factor;
  auto scale = [&](std::size_t s) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(s) * factor + 0.5)));
  };
  return {scale(steps.width), scale(steps.look_back)};
}

struct GenerationLog {
  std::size_t generation = 0;
  std::size_t evaluations = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::size_t step_width = 0;
  std::size_t step_look_back = 0;
  double elapsed_seconds = 0.0;
};

/// Final-training options for the champion.
struct ChampionTraining {
  AdamConfig adam;  // epochs default 1000
  double init_sd = 0.1;
  /// Start from the lowest-error MRS sample instead of fresh weights
  /// (MRS fitness only).
  bool init_from_best_sample = false;

  bool operator==(const ChampionTraining&) const = default;
};

struct SearchResult {
  Individual best;
  std::vector<Individual> population;
  std::vector<GenerationLog> log;
  std::size_t evaluations = 0;
  double seconds = 0.0;
};

/// The evolutionary loop without the final training.
inline SearchResult evolve_architectures(const SearchSpace& space, const EAConfig& cfg, Evaluator& evaluator) {
  space.validate();
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  Rng rng = operator_rng(cfg.seed);
  SearchResult result;
  auto population = initialize(space, cfg, rng);
  evaluator.evaluate(population, cfg.threads);
  std::size_t next_birth = population.size();
  StepSizes steps = cfg.steps;
  std::vector<bool> history;

  auto log_generation = [&](std::size_t gen) {
    double best = *population.front().fitness, sum = 0.0;
    for (const auto& ind : population) {
      best = std::max(best, *ind.fitness);
      sum += *ind.fitness;
    }
    result.log.push_back({gen, evaluator.evaluations(), best, sum / static_cast<double>(population.size()),
                          steps.width, steps.look_back, elapsed()});
  };
  log_generation(0);

  for (std::size_t gen = 1; evaluator.evaluations() < cfg.max_evaluations && cfg.lambda > 0; ++gen) {
    auto parents = select_parents(population, cfg.lambda, rng);
    std::vector<Individual> offspring;
    offspring.reserve(cfg.lambda);
    for (const auto& p : parents) {
      auto child = mutate(p, space, cfg.rates, steps, rng);
      child.birth = next_birth++;
      child.eval_seed = individual_seed(cfg.seed, child.birth);
      offspring.push_back(std::move(child));
    }
    evaluator.evaluate(offspring, cfg.threads);
    population = replace(population, offspring);

    for (const auto& child : offspring) {
      const bool survived = std::any_of(population.begin(), population.end(),
                                        [&](const Individual& s) { return s.birth == child.birth; });
      history.push_back(survived);
      if (history.size() == cfg.adjust.window) {
        steps = self_adjust(history, cfg.adjust, steps);
        history.clear();
      }
    }
    log_generation(gen);
  }

  result.best = *std::min_element(population.begin(), population.end(), detail::better);
  result.population = std::move(population);
  result.evaluations = evaluator.evaluations();
  result.seconds = elapsed();
  return result;
}

/// Adam training of a chosen architecture on the training segment.
inline TrainReport train_champion(const Individual& best, const ProblemContext& ctx, const ChampionTraining& opts,
                                  std::uint64_t seed) {
  const auto train = window(ctx.dataset, best.arch.look_back, Segment::train);
  WeightVector init;
  if (opts.init_from_best_sample && ctx.kind == FitnessKind::mrs) {
    MRSConfig cfg = ctx.mrs;
    cfg.seed = best.eval_seed;
    const auto maes = sample_maes(best.arch, train, cfg);
    const auto s = static_cast<std::size_t>(std::min_element(maes.begin(), maes.end()) - maes.begin());
    init = sample_weights(best.arch, cfg, s + 1);
  } else {
    init = random_init(best.arch, opts.init_sd, derive_seed(seed, 0x6368616dULL));
  }
  return train_adam(best.arch, init, train, opts.adam);
}

struct ResnResult {
  Individual best;
  TrainReport report;
  std::vector<GenerationLog> log;
  std::size_t evaluations = 0;
  double optimization_seconds = 0.0;
  double training_seconds = 0.0;
};

/// Full run: evolve architectures with the configured fitness, then train
/// the highest-fitness architecture with Adam.
inline ResnResult run_resn(const SearchSpace& space, const EAConfig& cfg, ProblemContext ctx,
                           const ChampionTraining& final_training) {
  ctx.kind = cfg.fitness_kind;
  Evaluator evaluator(std::move(ctx));
  auto search = evolve_architectures(space, cfg, evaluator);
  ResnResult r;
  r.best = search.best;
  r.log = std::move(search.log);
  r.evaluations = search.evaluations;
  r.optimization_seconds = search.seconds;
  r.report = train_champion(r.best, evaluator.context(), final_training, cfg.seed);
  r.training_seconds = r.report.wall_time;
  return r;
}

struct RandomSearchResult {
  Individual best;
  std::vector<double> fitness_trace;  // fitness of each sampled architecture in draw order
  std::size_t evaluations = 0;
  double seconds = 0.0;
};

/// Evaluates `budget` uniformly drawn architectures and keeps the best. The
/// draw sequence for a seed is fixed, so a larger budget sees a superset.
inline RandomSearchResult run_random_search(const SearchSpace& space, std::size_t budget, ProblemContext ctx,
                                            std::uint64_t seed, std::size_t threads = 1) {
  space.validate();
  if (budget < 1) throw invalid_argument("run_random_search: budget must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  Rng rng = operator_rng(seed);
  std::vector<Individual> samples(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    samples[i].arch = random_architecture(space, rng);
    samples[i].birth = i;
    samples[i].eval_seed = individual_seed(seed, i);
  }
  Evaluator evaluator(std::move(ctx));
  evaluator.evaluate(samples, threads);

  RandomSearchResult r;
  r.best = samples.front();
  for (const auto& s : samples) {
    r.fitness_trace.push_back(*s.fitness);
    if (detail::better(s, r.best)) r.best = s;
  }
  r.evaluations = evaluator.evaluations();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace resn
