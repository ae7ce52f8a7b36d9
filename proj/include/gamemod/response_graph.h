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


#ifndef GAMEMOD_RESPONSE_GRAPH_H_
#define GAMEMOD_RESPONSE_GRAPH_H_

#include <stdexcept>

#include <Eigen/Dense>

#include "gamemod/game.h"

namespace gamemod {

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kDefaultPopulation = 5.0;
inline constexpr double kEqualPayoffTolerance = 1e-10;
inline constexpr double kMaxExponent = 500.0;
inline constexpr double kStationaryTolerance = 1e-10;
inline constexpr int kMaxPowerIterations = 100000;

// Raised when power iteration fails to reach the residual tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Row-stochastic transition matrix over joint pure actions. Row i is the
// joint action with index i in the game's row-major joint order.
struct ResponseGraph {
  Eigen::MatrixXd transition;
  double alpha = kDefaultAlpha;
  double population = kDefaultPopulation;

  int num_nodes() const { return static_cast<int>(transition.rows()); }
};

// Fixation-style switch probability between single-deviation neighbours:
//   eta * (1 - exp(-alpha d)) / (1 - exp(-alpha m d)),  d = M^k(a') - M^k(a)
//   eta / m                                             when |d| < 1e-10
// with eta = 1 / sum_k (|A^k| - 1). The diagonal absorbs the remaining mass.
ResponseGraph BuildResponseGraph(const NormalFormGame& game,
                                 double alpha = kDefaultAlpha,
                                 double population = kDefaultPopulation);

// The transition probability above for a single payoff gain `delta`.
double SwitchProbability(double delta, double eta, double alpha,
                         double population);

enum class StationaryMethod {
  // Power iteration from the uniform distribution until ||pi C - pi||_1 is
  // below kStationaryTolerance and pi has settled. The iteration matrix is
  // squared after every step; max_iterations counts those steps.
  kPowerIteration,
  // Grassmann-Taksar-Heyman elimination. Subtraction-free, so it stays
  // accurate when switch probabilities span many orders of magnitude.
  kElimination,
};

JointDistribution StationaryDistribution(
    const ResponseGraph& graph,
    StationaryMethod method = StationaryMethod::kPowerIteration,
    int max_iterations = kMaxPowerIterations);

// Build, solve, then marginalize.
MixedProfile AlphaRankSolve(
    const NormalFormGame& game, double alpha = kDefaultAlpha,
    double population = kDefaultPopulation,
    StationaryMethod method = StationaryMethod::kPowerIteration);

}  // namespace gamemod

#endif  // GAMEMOD_RESPONSE_GRAPH_H_
