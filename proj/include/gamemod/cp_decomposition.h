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


#ifndef GAMEMOD_CP_DECOMPOSITION_H_
#define GAMEMOD_CP_DECOMPOSITION_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gamemod/game.h"

namespace gamemod {

inline constexpr int kDefaultRank = 10;
inline constexpr int kDefaultAlsIterations = 200;
inline constexpr double kDefaultAlsTolerance = 1e-7;
inline constexpr double kAlsRidge = 1e-9;
inline constexpr double kDefaultWeightStep = 5.0;

// Rank-r CP model of a payoff tensor: one (extent x r) factor matrix per
// tensor mode. The weights the model was fitted with are all ones.
struct CPFactors {
  std::vector<int> shape;
  std::vector<Eigen::MatrixXd> factors;
  Eigen::VectorXd base_weights;
  // Relative Frobenius error after each ALS sweep.
  std::vector<double> error_trace;

  int rank() const { return static_cast<int>(base_weights.size()); }
  double relative_error() const {
    return error_trace.empty() ? 0.0 : error_trace.back();
  }
};

struct AlsOptions {
  int max_iterations = kDefaultAlsIterations;
  double tolerance = kDefaultAlsTolerance;
  std::uint64_t seed = 0;
};

// Alternating least squares from a seeded standard-normal start. Sweeps stop
// once the relative error improves by less than `tolerance`.
CPFactors CpDecompose(std::span<const double> tensor,
                      const std::vector<int>& shape, int rank,
                      const AlsOptions& options = {});
CPFactors CpDecompose(const NormalFormGame& game, int rank,
                      const AlsOptions& options = {});

// sum_i weights_i * f_{1,i} (x) ... (x) f_{N,i}, flattened row-major.
std::vector<double> Reconstruct(const CPFactors& factors,
                                std::span<const double> weights);

// M_t = normalize(M_{t-1} + step * Reconstruct(weights)).
NormalFormGame ApplyModification(const NormalFormGame& current,
                                 const CPFactors& factors,
                                 std::span<const double> weights,
                                 double step = kDefaultWeightStep);

}  // namespace gamemod

#endif  // GAMEMOD_CP_DECOMPOSITION_H_
