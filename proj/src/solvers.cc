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


#include "gamemod/solvers.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace gamemod {

std::string SolverName(SolverKind kind) {
  switch (kind) {
    case SolverKind::kAlphaRank:
      return "alpha_rank";
    case SolverKind::kRegretMatching:
      return "ce";
    case SolverKind::kFictitiousPlay:
      return "fp";
    case SolverKind::kProjectedReplicator:
      return "prd";
  }
  return "unknown";
}

SolverKind ParseSolverKind(const std::string& name) {
  if (name == "alpha_rank" || name == "alpharank") return SolverKind::kAlphaRank;
  if (name == "ce" || name == "rm") return SolverKind::kRegretMatching;
  if (name == "fp") return SolverKind::kFictitiousPlay;
  if (name == "prd") return SolverKind::kProjectedReplicator;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

SolverConfig SolverConfig::Default(SolverKind kind) {
  SolverConfig config;
  config.kind = kind;
  config.iterations = kind == SolverKind::kProjectedReplicator ? 10000 : 1000;
  return config;
}

void SolverConfig::Validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (kind == SolverKind::kProjectedReplicator) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(gamma_explore >= 0.0 && gamma_explore < 1.0)) {
      throw std::invalid_argument("gamma_explore must lie in [0, 1)");
    }
  }
  if (kind == SolverKind::kAlphaRank) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(population > 1.0)) {
      throw std::invalid_argument("population must exceed one");
    }
  }
}

Solution SolveFictitiousPlay(const NormalFormGame& game, int iterations) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  MixedProfile average = MixedProfile::Uniform(game);
  for (int t = 1; t <= iterations; ++t) {
    const auto values = AllActionValues(game, average);
    for (int k = 0; k < game.num_players(); ++k) {
      const int best = static_cast<int>(
          std::max_element(values[k].begin(), values[k].end()) -
          values[k].begin());
      for (int a = 0; a < game.num_actions(k); ++a) {
        average[k][a] = (t * average[k][a] + (a == best ? 1.0 : 0.0)) / (t + 1);
      }
      Renormalize(average[k]);
    }
  }
  return Solution{std::move(average), std::nullopt, iterations};
}

std::vector<double> ProjectToExplorationSimplex(std::span<const double> x,
                                                double lower_bound) {
  const int n = static_cast<int>(x.size());
  if (n == 0) throw std::invalid_argument("cannot project an empty vector");
  const double mass = 1.0 - n * lower_bound;
  if (lower_bound < 0.0 || mass < 0.0) {
    throw std::invalid_argument("lower bound is infeasible for the simplex");
  }
  if (mass == 0.0) return std::vector<double>(n, lower_bound);
  // Project y = x - lb onto {y >= 0, sum y = mass}, then shift back.
  std::vector<double> sorted(x.begin(), x.end());
  for (double& v : sorted) v -= lower_bound;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (int i = 0; i < n; ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - mass) / (i + 1);
    if (sorted[i] - candidate > 0.0) threshold = candidate;
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = std::max(x[i] - lower_bound - threshold, 0.0) + lower_bound;
  }
  return out;
}

Solution SolveProjectedReplicator(const NormalFormGame& game, int iterations,
                                  double dt, double gamma_explore) {
  SolverConfig{SolverKind::kProjectedReplicator, iterations, dt, gamma_explore}
      .Validate();
  MixedProfile profile = MixedProfile::Uniform(game);
  std::vector<double> stepped;
  for (int t = 0; t < iterations; ++t) {
    const auto values = AllActionValues(game, profile);
    for (int k = 0; k < game.num_players(); ++k) {
      const auto& u = values[k];
      auto& pi = profile[k];
      const double mean =
          std::inner_product(u.begin(), u.end(), pi.begin(), 0.0);
      stepped.resize(pi.size());
      for (std::size_t a = 0; a < pi.size(); ++a) {
        stepped[a] = pi[a] + dt * pi[a] * (u[a] - mean);
      }
      pi = ProjectToExplorationSimplex(
          stepped, gamma_explore / (game.num_actions(k) + 1));
    }
  }
  return Solution{std::move(profile), std::nullopt, iterations};
}

Solution SolveRegretMatching(const NormalFormGame& game, int iterations) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  const int num_players = game.num_players();
  MixedProfile current = MixedProfile::Uniform(game);
  std::vector<std::vector<double>> regrets(num_players);
  MixedProfile average_sum;
  for (int k = 0; k < num_players; ++k) {
    regrets[k].assign(game.num_actions(k), 0.0);
    average_sum.strategies.emplace_back(game.num_actions(k), 0.0);
  }
  std::vector<double> joint_sum(game.num_joint_actions(), 0.0);

  for (int t = 0; t < iterations; ++t) {
    const JointDistribution product = ProductDistribution(game, current);
    for (int j = 0; j < game.num_joint_actions(); ++j) {
      joint_sum[j] += product.probs[j];
    }
    const auto values = AllActionValues(game, current);
    for (int k = 0; k < num_players; ++k) {
      const auto& u = values[k];
      const double mean = std::inner_product(u.begin(), u.end(),
                                             current[k].begin(), 0.0);
      for (std::size_t a = 0; a < u.size(); ++a) {
        regrets[k][a] += u[a] - mean;
        average_sum[k][a] += current[k][a];
      }
    }
    for (int k = 0; k < num_players; ++k) {
      double positive = 0.0;
      for (double r : regrets[k]) positive += std::max(r, 0.0);
      for (std::size_t a = 0; a < regrets[k].size(); ++a) {
        current[k][a] = positive > 0.0 ? std::max(regrets[k][a], 0.0) / positive
                                       : 1.0 / regrets[k].size();
      }
    }
  }

  for (auto& s : average_sum.strategies) {
    for (double& p : s) p /= iterations;
    Renormalize(s);
  }
  JointDistribution joint{std::move(joint_sum)};
  for (double& p : joint.probs) p /= iterations;
  Renormalize(joint.probs);
  return Solution{std::move(average_sum), std::move(joint), iterations};
}

Solution SolveAlphaRank(const NormalFormGame& game, double alpha,
                        double population, StationaryMethod method) {
  JointDistribution joint = StationaryDistribution(
      BuildResponseGraph(game, alpha, population), method);
  MixedProfile profile = Marginalize(game, joint);
  return Solution{std::move(profile), std::move(joint), 1};
}

Solution Solve(const NormalFormGame& game, const SolverConfig& config) {
  config.Validate();
  switch (config.kind) {
    case SolverKind::kAlphaRank:
      return SolveAlphaRank(game, config.alpha, config.population,
                            config.stationary_method);
    case SolverKind::kRegretMatching:
      return SolveRegretMatching(game, config.iterations);
    case SolverKind::kFictitiousPlay:
      return SolveFictitiousPlay(game, config.iterations);
    case SolverKind::kProjectedReplicator:
      return SolveProjectedReplicator(game, config.iterations, config.dt,
                                      config.gamma_explore);
  }
  throw std::invalid_argument("unhandled solver kind");
}

}  // namespace gamemod
