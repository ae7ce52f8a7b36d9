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


#include "gamemod/environment.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace gamemod {
namespace {

Solution RunSolver(const EpisodeConfig& config, const NormalFormGame& game) {
  if (config.solver_override) return config.solver_override(game);
  return Solve(game, config.solver);
}

}  // namespace

void EpisodeConfig::Validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (rank < 1) throw std::invalid_argument("rank must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw std::invalid_argument("discount must lie in (0, 1]");
  }
  solver.Validate();
}

double EnvState::min_nc() const {
  return *std::min_element(nc_trace.begin(), nc_trace.end());
}

EnvState Reset(const NormalFormGame& game, const EpisodeConfig& config) {
  config.Validate();
  CPFactors factors = CpDecompose(game, config.rank, config.als);
  const Solution solution = RunSolver(config, game);
  const double nc = NashConv(game, solution.profile);
  return EnvState{game, game, std::move(factors), 0, {nc}, nc, config};
}

StepResult Step(EnvState& state, std::span<const double> weights) {
  if (state.done()) {
    throw std::logic_error("step called on a finished episode");
  }
  std::vector<double> clipped(weights.begin(), weights.end());
  for (double& w : clipped) w = std::clamp(w, -1.0, 1.0);
  state.current = ApplyModification(state.current, state.factors, clipped,
                                    state.config.weight_step);
  const Solution solution = RunSolver(state.config, state.current);
  const double nc = NashConv(state.original, solution.profile);
  const double reward = state.nc_trace.back() - nc;
  state.nc_trace.push_back(nc);
  ++state.step;
  return StepResult{reward, state.done(), nc, state.min_nc()};
}

ImprovementScore ComputeImprovementScore(std::span<const double> nc_trace,
                                         double baseline_nc) {
  if (baseline_nc < kMinBaselineNashConv || nc_trace.empty()) {
    return {0.0, true};
  }
  const double best = *std::min_element(nc_trace.begin(), nc_trace.end());
  return {std::clamp(1.0 - std::min(best, baseline_nc) / baseline_nc, 0.0, 1.0),
          false};
}

SweepResult Sweep2x2(const NormalFormGame& game, const SolverConfig& solver,
                     double range, double step) {
  if (game.action_counts() != std::vector<int>{2, 2}) {
    throw ShapeError("the sweep needs a 2-player, 2-action game");
  }
  if (!(step > 0.0) || !(range >= 0.0)) {
    throw std::invalid_argument("sweep range and step must be positive");
  }
  const int half = static_cast<int>(std::lround(range / step));
  SweepResult sweep;
  for (int i = -half; i <= half; ++i) sweep.deltas.push_back(i * step);
  const int n = static_cast<int>(sweep.deltas.size());

  sweep.unmodified_nc = NashConv(game, Solve(game, solver).profile);
  sweep.nashconv.resize(static_cast<std::size_t>(n) * n);
  sweep.min_nc = std::numeric_limits<double>::infinity();
  const int corner = game.EncodeJoint(std::vector<int>{0, 0});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::vector<double> payoffs(game.payoffs().begin(),
                                  game.payoffs().end());
      payoffs[corner] += sweep.deltas[i];
      payoffs[game.num_joint_actions() + corner] += sweep.deltas[j];
      const Solution solution = Solve(game.WithPayoffs(payoffs), solver);
      const double nc = NashConv(game, solution.profile);
      sweep.nashconv[i * n + j] = nc;
      if (nc < sweep.min_nc) {
        sweep.min_nc = nc;
        sweep.argmin_delta1 = sweep.deltas[i];
        sweep.argmin_delta2 = sweep.deltas[j];
      }
    }
  }
  return sweep;
}

void WriteSweepCsv(std::ostream& out, const SweepResult& sweep) {
  out << "delta1,delta2,nashconv\n";
  const int n = static_cast<int>(sweep.deltas.size());
  out << std::setprecision(17);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out << sweep.deltas[i] << ',' << sweep.deltas[j] << ',' << sweep.at(i, j)
          << '\n';
    }
  }
}

}  // namespace gamemod
