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


#include "gamemod/response_graph.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace gamemod {

double SwitchProbability(double delta, double eta, double alpha,
                         double population) {
  if (std::abs(delta) < kEqualPayoffTolerance) return eta / population;
  const double x = std::clamp(-alpha * delta, -kMaxExponent, kMaxExponent);
  const double y =
      std::clamp(-alpha * population * delta, -kMaxExponent, kMaxExponent);
  if (x < 0.0) {
    // Gain: both exponentials are bounded by one. expm1 keeps precision when
    // alpha * delta is small.
    return eta * std::expm1(x) / std::expm1(y);
  }
  // Loss: divide through by exp(y) so nothing overflows. Clamping x and y
  // separately would collapse the ratio to 1 under strong selection.
  const double raw = -alpha * delta;
  const double scale =
      std::exp(std::max(raw - population * raw, -kMaxExponent));
  return eta * scale * std::expm1(-raw) / std::expm1(-population * raw);
}

ResponseGraph BuildResponseGraph(const NormalFormGame& game, double alpha,
                                 double population) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(population > 1.0)) {
    throw std::invalid_argument("population size must exceed one");
  }
  int deviations = 0;
  for (int n : game.action_counts()) deviations += n - 1;
  const double eta = 1.0 / deviations;

  const int n = game.num_joint_actions();
  ResponseGraph graph;
  graph.alpha = alpha;
  graph.population = population;
  graph.transition = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double outgoing = 0.0;
    for (int k = 0; k < game.num_players(); ++k) {
      const int own = game.ActionOf(j, k);
      const int base = j - own * game.stride(k);
      const double here = game.payoff(k, j);
      for (int b = 0; b < game.num_actions(k); ++b) {
        if (b == own) continue;
        const int target = base + b * game.stride(k);
        const double p = SwitchProbability(game.payoff(k, target) - here, eta,
                                           alpha, population);
        graph.transition(j, target) = p;
        outgoing += p;
      }
    }
    graph.transition(j, j) = std::max(0.0, 1.0 - outgoing);
  }
  return graph;
}

namespace {

// Power iteration pi <- pi P with P = C^(2^j) doubled after every step, so
// the iterates form a subsequence of the plain pi C^t sequence. Slowly mixing
// chains then need a few dozen steps instead of millions. Iteration continues
// past the residual tolerance until pi stops moving, since a small residual
// alone allows errors of residual / spectral gap.
JointDistribution PowerIteration(const ResponseGraph& graph,
                                 int max_iterations) {
  constexpr int kMaxSquarings = 80;
  constexpr double kSettled = 1e-14;
  const int n = graph.num_nodes();
  const Eigen::MatrixXd& c = graph.transition;
  Eigen::MatrixXd power = c;
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  double residual = (pi * c - pi).lpNorm<1>();
  const int limit = std::min(max_iterations, kMaxSquarings);
  for (int it = 0; it < limit; ++it) {
    Eigen::RowVectorXd next = pi * power;
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi.swap(next);
    residual = (pi * c - pi).lpNorm<1>();
    if (residual <= kStationaryTolerance && change <= kSettled) break;
    power = power * power;
    // Keep rows stochastic against rounding drift.
    power.array().colwise() /= power.rowwise().sum().array();
  }
  if (!(residual <= kStationaryTolerance)) {
    throw ConvergenceError("power iteration did not converge, residual " +
                               std::to_string(residual),
                           residual);
  }
  JointDistribution out{std::vector<double>(pi.data(), pi.data() + n)};
  Renormalize(out.probs);
  return out;
}

JointDistribution Elimination(const ResponseGraph& graph) {
  const int n = graph.num_nodes();
  Eigen::MatrixXd p = graph.transition;
  // Censor states n-1, ..., 1 in turn. Only off-diagonal entries are used,
  // so no cancellation occurs.
  for (int k = n - 1; k > 0; --k) {
    const double exit = p.row(k).head(k).sum();
    if (!(exit > 0.0)) {
      throw ConvergenceError("response graph is numerically reducible", 1.0);
    }
    p.col(k).head(k) /= exit;
    p.topLeftCorner(k, k).noalias() += p.col(k).head(k) * p.row(k).head(k);
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  double total = 1.0;
  for (int k = 1; k < n; ++k) {
    double mass = 0.0;
    for (int i = 0; i < k; ++i) mass += pi[i] * p(i, k);
    pi[k] = mass;
    total += mass;
  }
  for (double& v : pi) v /= total;
  return JointDistribution{std::move(pi)};
}

}  // namespace

JointDistribution StationaryDistribution(const ResponseGraph& graph,
                                         StationaryMethod method,
                                         int max_iterations) {
  if (graph.num_nodes() == 0) throw ShapeError("empty response graph");
  if (method == StationaryMethod::kElimination) return Elimination(graph);
  return PowerIteration(graph, max_iterations);
}

MixedProfile AlphaRankSolve(const NormalFormGame& game, double alpha,
                            double population, StationaryMethod method) {
  const ResponseGraph graph = BuildResponseGraph(game, alpha, population);
  return Marginalize(game, StationaryDistribution(graph, method));
}

}  // namespace gamemod
