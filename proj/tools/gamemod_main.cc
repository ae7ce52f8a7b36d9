// Copyright 2026 The gamemod Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end for dataset generation, baselines, training,
// evaluation, sweeps, gradient checks and solver benchmarks.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gamemod/dataset.h"
#include "gamemod/harness.h"

namespace {

using namespace gamemod;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> solver;
  std::optional<std::string> game_case;
  bool desk_scale = false;
  std::optional<int> horizon;
  std::optional<int> rank;
  std::optional<std::string> encoder;
  std::optional<long> env_steps;
  std::optional<int> workers;
};

// Case defaults, then the desk-scale profile, then the config file, then
// explicit flags.
ExperimentConfig ResolveConfig(const GlobalFlags& f) {
  const ExperimentCase c =
      f.game_case ? ParseCase(*f.game_case) : ExperimentCase::kSimple;
  ExperimentConfig config = ExperimentConfig::ForCase(c);
  if (f.desk_scale) config.ApplyDeskScale();
  if (!f.config_path.empty()) {
    config = LoadExperimentConfig(f.config_path, config);
  }
  if (f.game_case && config.game_case != c) {
    config.game_case = c;
    config.network.mode = ExperimentConfig::ForCase(c).network.mode;
  }
  if (f.seed) {
    // Training seeds keep their count and start at the given seed.
    config.data_seed = *f.seed;
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
      config.seeds[i] = *f.seed + i;
    }
  }
  if (f.out_dir) config.out_dir = *f.out_dir;
  if (f.solver) {
    config.episode.solver = SolverConfig::Default(ParseSolverKind(*f.solver));
  }
  if (f.horizon) config.episode.horizon = *f.horizon;
  if (f.rank) config.episode.rank = *f.rank;
  if (f.encoder) config.network.mode = nn::ParseEncoderMode(*f.encoder);
  if (f.env_steps) config.ppo.total_env_steps = *f.env_steps;
  if (f.workers) config.workers = *f.workers;
  config.Resolve();
  config.Validate();
  return config;
}

void PrintAggregate(const std::string& label, const Aggregate& a) {
  std::cout << label << ":";
  for (double v : a.values) std::cout << ' ' << v;
  std::cout << "  mean " << a.mean << " std " << a.std << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Game modification experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags f;
  app.add_option("--config", f.config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Data seed and first training seed");
  app.add_option("--out-dir", f.out_dir, "Output directory");
  app.add_option("--solver", f.solver, "Inner solver")
      ->check(CLI::IsMember({"alpha_rank", "ce", "fp", "prd"}));
  app.add_option("--case", f.game_case, "Game distribution")
      ->check(CLI::IsMember({"simple", "general"}));
  app.add_flag("--desk-scale", f.desk_scale,
               "200/50 games, T=20, 1e5 env steps, 3 seeds");
  app.add_option("--horizon", f.horizon, "Episode length T")
      ->check(CLI::IsMember(kAblationHorizons));
  app.add_option("--rank", f.rank, "CP rank r")
      ->check(CLI::IsMember(kAblationRanks));
  app.add_option("--encoder", f.encoder, "Policy input encoding")
      ->check(CLI::IsMember({"flat", "flat_mlp", "graph"}));
  app.add_option("--env-steps", f.env_steps, "Total PPO env steps")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--workers", f.workers, "Worker threads")
      ->check(CLI::PositiveNumber);

  CLI::App* sample = app.add_subcommand("sample", "Write train/test datasets");
  CLI::App* baseline =
      app.add_subcommand("baseline", "Score the random policy");
  CLI::App* train = app.add_subcommand("train", "Train with PPO per seed");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate checkpoints");
  std::vector<std::string> checkpoints;
  eval->add_option("--checkpoint", checkpoints, "Checkpoint files")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::App* sweep = app.add_subcommand("sweep", "41x41 payoff-shift sweep");
  std::string game_file;
  int game_index = 0;
  sweep->add_option("--game-file", game_file,
                    "Dataset file holding a 2x2 game; the solver's crafted "
                    "game is used otherwise")
      ->check(CLI::ExistingFile);
  sweep->add_option("--game-index", game_index, "Line of the game")
      ->check(CLI::NonNegativeNumber);
  CLI::App* grad =
      app.add_subcommand("grad-check", "Finite-difference gradient checks");
  CLI::App* bench = app.add_subcommand("solver-bench", "Time every solver");
  int bench_games = 100;
  bench->add_option("--games", bench_games, "Games to solve")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = ResolveConfig(f);
    if (sample->parsed()) {
      const SampleReport r = CmdSample(config);
      std::cout << "wrote " << r.num_train << " games to " << r.train_path
                << " and " << r.num_test << " to " << r.test_path << '\n';
    } else if (baseline->parsed()) {
      const BaselineReport r = CmdBaseline(config);
      PrintAggregate("train", r.train);
      PrintAggregate("test", r.test);
      std::cout << "excluded games (train/test, first seed): "
                << r.excluded_train.front() << '/' << r.excluded_test.front()
                << '\n';
    } else if (train->parsed()) {
      const TrainReport r = CmdTrain(config);
      PrintAggregate("best train", r.best_train);
      PrintAggregate("best test", r.best_test);
    } else if (eval->parsed()) {
      for (const EvalRow& row : CmdEval(config, checkpoints)) {
        std::cout << row.checkpoint << ": train " << row.train_score
                  << " test " << row.test_score << " excluded "
                  << row.excluded_train << '/' << row.excluded_test << '\n';
      }
    } else if (sweep->parsed()) {
      NormalFormGame game = CraftedGame(config.episode.solver.kind);
      if (!game_file.empty()) {
        const auto entries = ReadDataset(game_file);
        if (game_index >= static_cast<int>(entries.size())) {
          throw std::out_of_range(game_file + ": no game at index " +
                                  std::to_string(game_index));
        }
        game = entries[game_index].game;
      }
      const SweepReport r = CmdSweep(config, game);
      std::cout << "unmodified " << r.sweep.unmodified_nc << " min "
                << r.sweep.min_nc << " at (" << r.sweep.argmin_delta1 << ", "
                << r.sweep.argmin_delta2 << ")\n";
    } else if (grad->parsed()) {
      bool ok = true;
      for (const GradCheckRow& row : CmdGradCheck(config)) {
        std::cout << row.name << ' ' << row.max_rel_error << '\n';
        ok = ok && row.max_rel_error <= 1e-4;
      }
      return ok ? 0 : 1;
    } else if (bench->parsed()) {
      for (const SolverBenchRow& row : CmdSolverBench(config, bench_games)) {
        std::cout << row.solver << ": " << row.mean_micros << " us, NashConv "
                  << row.mean_nashconv << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
