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


#ifndef GAMEMOD_HARNESS_H_
#define GAMEMOD_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gamemod/dataset.h"
#include "gamemod/environment.h"
#include "gamemod/networks.h"
#include "gamemod/ppo.h"
#include "json.hpp"

namespace gamemod {

enum class ExperimentCase { kSimple, kGeneral };

std::string CaseName(ExperimentCase c);
// Accepts simple and general.
ExperimentCase ParseCase(const std::string& name);

// Simple: two players with five actions. General: empty, meaning 2-3
// players with 2-4 actions each drawn per game.
std::vector<int> CaseActionCounts(ExperimentCase c);

struct ExperimentConfig {
  ExperimentCase game_case = ExperimentCase::kSimple;
  int train_games = 3000;
  int test_games = 500;
  std::uint64_t data_seed = 0;
  // Existing dataset files; sampled from data_seed when empty.
  std::string train_dataset;
  std::string test_dataset;
  EpisodeConfig episode;
  nn::NetworkConfig network;
  PPOConfig ppo;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int baseline_episodes_per_game = 1;
  int workers = 1;
  std::string out_dir = "runs";

  // Full-size defaults for `c`: flat inputs for the simple case and the
  // graph encoder for the general one.
  static ExperimentConfig ForCase(ExperimentCase c);
  // 200 train / 50 test games, T = 20, 1e5 env steps, 3 seeds.
  void ApplyDeskScale();
  // Fills in values derived from others, such as the flat input length.
  void Resolve();
  void Validate() const;

  nlohmann::json ToJson() const;
  // Overrides fields of `base` with those present in `j`; unknown keys
  // throw std::invalid_argument.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   ExperimentConfig base);
};

ExperimentConfig LoadExperimentConfig(const std::string& path,
                                      ExperimentConfig base);

// Ablation values accepted on the command line.
inline const std::vector<int> kAblationHorizons{10, 20, 50};
inline const std::vector<int> kAblationRanks{5, 10, 20};

// Train and test sets use different base seeds so their per-game seeds
// never coincide.
std::uint64_t TrainDataSeed(std::uint64_t data_seed);
std::uint64_t TestDataSeed(std::uint64_t data_seed);

struct Datasets {
  std::vector<DatasetEntry> train;
  std::vector<DatasetEntry> test;
};

Datasets SampleDatasets(const ExperimentConfig& config);
// Reads the configured files, or samples when none are given.
Datasets LoadDatasets(const ExperimentConfig& config);
std::vector<NormalFormGame> GamesOf(const std::vector<DatasetEntry>& entries);

// Per-seed values plus their mean and sample standard deviation.
struct Aggregate {
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;

  static Aggregate Of(std::vector<double> values);
};

// Writes manifest_<command>.json holding the resolved config.
void WriteManifest(const std::filesystem::path& out_dir,
                   const std::string& command,
                   const ExperimentConfig& config);

struct SampleReport {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  int num_train = 0;
  int num_test = 0;
};
SampleReport CmdSample(const ExperimentConfig& config);

struct BaselineReport {
  Aggregate train;
  Aggregate test;
  std::vector<int> excluded_train;  // per seed
  std::vector<int> excluded_test;
};
// Random policy, lambda ~ U[-1, 1]^r every step. Per-game scores are
// averaged over episodes_per_game episodes; writes baseline.csv.
BaselineReport CmdBaseline(const ExperimentConfig& config);
BaselineReport RunBaseline(const ExperimentConfig& config,
                           const Datasets& data, const PolicyFn& policy);

struct TrainReport {
  Aggregate best_train;  // train score at each seed's best-test evaluation
  Aggregate best_test;
  std::vector<long> best_env_steps;
  std::vector<std::filesystem::path> best_checkpoints;
};
// One PPO run per seed: train_log_seed<s>.csv, best_seed<s>.json,
// final_seed<s>.json and train_summary.csv.
TrainReport CmdTrain(const ExperimentConfig& config);
TrainReport RunTraining(const ExperimentConfig& config, const Datasets& data);

struct EvalRow {
  std::string checkpoint;
  double train_score = 0.0;
  double test_score = 0.0;
  int excluded_train = 0;
  int excluded_test = 0;
};
// Greedy evaluation of each checkpoint on both splits; writes eval.csv.
std::vector<EvalRow> CmdEval(const ExperimentConfig& config,
                             const std::vector<std::string>& checkpoints);

// 2x2 games on which a small payoff shift lowers the solver's NashConv,
// keyed by solver name.
NormalFormGame CraftedGame(SolverKind kind);

struct SweepReport {
  SweepResult sweep;
  std::filesystem::path csv_path;
};
// Writes sweep_<solver>.csv and sweep_<solver>_summary.csv.
SweepReport CmdSweep(const ExperimentConfig& config,
                     const NormalFormGame& game);

struct GradCheckRow {
  std::string name;
  double max_rel_error = 0.0;
};
// Central-difference checks of each layer type and the composed PPO loss.
std::vector<GradCheckRow> RunGradChecks(std::uint64_t seed, double eps = 1e-5);
std::vector<GradCheckRow> CmdGradCheck(const ExperimentConfig& config);

struct SolverBenchRow {
  std::string solver;
  int games = 0;
  double mean_micros = 0.0;
  double mean_nashconv = 0.0;
};
// Times every solver on the sampled test games; writes solver_bench.csv.
std::vector<SolverBenchRow> CmdSolverBench(const ExperimentConfig& config,
                                           int num_games);

}  // namespace gamemod

#endif  // GAMEMOD_HARNESS_H_
