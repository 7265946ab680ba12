// Evolves an LSTM architecture for a noise-free sine wave and trains the
// winner. Prints the per-generation trace and the champion's test error.
#include <cstdio>

#include "resn/evolve.hpp"

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;

  resn::ProblemContext ctx;
  ctx.dataset = resn::generate_sine({.num_points = 500, .period = 50.0});
  ctx.mrs.threshold = resn::naive_threshold(ctx.dataset);

  resn::SearchSpace space;  // <= 3 layers, 1..32 units, look-back 2..16
  resn::EAConfig ea{.seed = seed};
  resn::ChampionTraining final_training{.adam = {.epochs = 1000}};

  const auto result = resn::run_resn(space, ea, ctx, final_training);
  for (const auto& g : result.log)
    std::printf("gen %2zu  evals %3zu  best %.6g  mean %.6g  steps %zu/%zu  %.2fs\n", g.generation, g.evaluations,
                g.best_fitness, g.mean_fitness, g.step_width, g.step_look_back, g.elapsed_seconds);

  const auto test = resn::window(ctx.dataset, result.best.arch.look_back, resn::Segment::test);
  const auto pred = resn::predict_series(result.best.arch, result.report.final_weights, test);
  std::printf("champion %s lb=%zu  p_t=%.4g  train MAE %.4f -> %.4f  test MAE %.4f  (opt %.1fs, train %.1fs)\n",
              resn::layers_to_string(result.best.arch).c_str(), result.best.arch.look_back, *result.best.fitness,
              result.report.initial_mae, result.report.loss_history.back(), resn::mae(test.targets, pred),
              result.optimization_seconds, result.training_seconds);
}
