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


#ifndef GAMEMOD_SOLVERS_H_
#define GAMEMOD_SOLVERS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gamemod/game.h"
#include "gamemod/response_graph.h"

namespace gamemod {

enum class SolverKind {
  kAlphaRank,
  kRegretMatching,  // reported as "ce"
  kFictitiousPlay,
  kProjectedReplicator,
};

std::string SolverName(SolverKind kind);
// Accepts alpha_rank, ce, fp and prd.
SolverKind ParseSolverKind(const std::string& name);

struct SolverConfig {
  SolverKind kind = SolverKind::kAlphaRank;
  int iterations = 1000;
  // Projected replicator dynamics only.
  double dt = 1e-2;
  double gamma_explore = 1e-10;
  // Alpha-rank only.
  double alpha = kDefaultAlpha;
  double population = kDefaultPopulation;
  StationaryMethod stationary_method = StationaryMethod::kPowerIteration;

  // Per-kind defaults: FP and regret matching 1000 iterations, PRD 10^4
  // Euler steps with dt 1e-2 and gamma 1e-10.
  static SolverConfig Default(SolverKind kind);
  void Validate() const;
};

struct Solution {
  MixedProfile profile;
  std::optional<JointDistribution> joint;
  int iterations_used = 0;
};

// Uniform start; every round each player best-responds to the opponents'
// running averages and the averages absorb the responses.
Solution SolveFictitiousPlay(const NormalFormGame& game, int iterations);

// Euler-integrated replicator dynamics, projected after every step onto
// {pi : pi(a) >= gamma / (|A^k| + 1)}.
Solution SolveProjectedReplicator(const NormalFormGame& game, int iterations,
                                  double dt, double gamma_explore);

// Euclidean projection of `x` onto {y : sum y = 1, y_i >= lower_bound}.
std::vector<double> ProjectToExplorationSimplex(std::span<const double> x,
                                                double lower_bound);

// Full-width external regret matching. The profile is the time-averaged
// strategy and the joint is the time-averaged product distribution.
Solution SolveRegretMatching(const NormalFormGame& game, int iterations);

Solution SolveAlphaRank(const NormalFormGame& game, double alpha,
                        double population,
                        StationaryMethod method = StationaryMethod::kPowerIteration);

Solution Solve(const NormalFormGame& game, const SolverConfig& config);

}  // namespace gamemod

#endif  // GAMEMOD_SOLVERS_H_
