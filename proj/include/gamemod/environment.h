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


#ifndef GAMEMOD_ENVIRONMENT_H_
#define GAMEMOD_ENVIRONMENT_H_

#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "gamemod/cp_decomposition.h"
#include "gamemod/game.h"
#include "gamemod/solvers.h"

namespace gamemod {

inline constexpr int kDefaultHorizon = 50;
inline constexpr double kDefaultDiscount = 0.99;
// Games whose unmodified NashConv is below this are excluded from scores.
inline constexpr double kMinBaselineNashConv = 1e-6;

using SolverFn = std::function<Solution(const NormalFormGame&)>;

struct EpisodeConfig {
  int horizon = kDefaultHorizon;
  double weight_step = kDefaultWeightStep;
  int rank = kDefaultRank;
  SolverConfig solver = SolverConfig::Default(SolverKind::kAlphaRank);
  double discount = kDefaultDiscount;
  AlsOptions als;
  // Replaces `solver` when set; used to instrument episodes in tests.
  SolverFn solver_override;

  void Validate() const;
};

struct EnvState {
  NormalFormGame original;
  NormalFormGame current;
  CPFactors factors;
  int step = 0;
  std::vector<double> nc_trace;
  double baseline_nc = 0.0;
  EpisodeConfig config;

  bool done() const { return step >= config.horizon; }
  double min_nc() const;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  double current_nc = 0.0;
  double min_nc = 0.0;
};

// Decomposes the game, solves it unmodified and records NC(pi_0).
EnvState Reset(const NormalFormGame& game, const EpisodeConfig& config);

// Clips `weights` to [-1, 1], modifies the current game, re-solves it and
// rewards the drop in NashConv measured on the original game.
StepResult Step(EnvState& state, std::span<const double> weights);

struct ImprovementScore {
  double score = 0.0;
  bool excluded = false;  // baseline NashConv below kMinBaselineNashConv
};

// 1 - min_t NC(pi_t) / NC(pi_0), with t = 0 included so the score is >= 0.
ImprovementScore ComputeImprovementScore(std::span<const double> nc_trace,
                                         double baseline_nc);

struct SweepResult {
  std::vector<double> deltas;
  // nashconv[i * deltas.size() + j] is the cell (delta1 = deltas[i],
  // delta2 = deltas[j]).
  std::vector<double> nashconv;
  double unmodified_nc = 0.0;
  double min_nc = 0.0;
  double argmin_delta1 = 0.0;
  double argmin_delta2 = 0.0;

  double at(int i, int j) const { return nashconv[i * deltas.size() + j]; }
};

// Adds delta1 to M^1(0, 0) and delta2 to M^2(0, 0) of a 2x2 game for every
// cell of a grid over [-range, range], solves the modified game and scores
// the solution on the original.
SweepResult Sweep2x2(const NormalFormGame& game, const SolverConfig& solver,
                     double range = 2.0, double step = 0.1);

// Columns delta1, delta2, nashconv.
void WriteSweepCsv(std::ostream& out, const SweepResult& sweep);

}  // namespace gamemod

#endif  // GAMEMOD_ENVIRONMENT_H_
