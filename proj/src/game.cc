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

#include "gamemod/game.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace gamemod {

NormalFormGame::NormalFormGame(std::vector<int> action_counts,
                               std::vector<double> payoffs)
    : action_counts_(std::move(action_counts)), payoffs_(std::move(payoffs)) {
  if (action_counts_.size() < 2) {
    throw ShapeError("a normal-form game needs at least two players");
  }
  strides_.assign(action_counts_.size(), 1);
  for (int k = num_players() - 1; k >= 0; --k) {
    if (action_counts_[k] < 1) {
      throw ShapeError("action counts must be positive");
    }
    strides_[k] = num_joint_;
    num_joint_ *= action_counts_[k];
  }
  const std::size_t expected =
      static_cast<std::size_t>(num_players()) * num_joint_;
  if (payoffs_.size() != expected) {
    throw ShapeError("payoff tensor has " + std::to_string(payoffs_.size()) +
                     " entries, expected " + std::to_string(expected));
  }
  for (double v : payoffs_) {
    if (!std::isfinite(v)) throw ShapeError("payoff entries must be finite");
  }
}

NormalFormGame NormalFormGame::Constant(std::vector<int> action_counts,
                                        double value) {
  std::size_t n = action_counts.size();
  for (int c : action_counts) n *= static_cast<std::size_t>(std::max(c, 0));
  return NormalFormGame(std::move(action_counts),
                        std::vector<double>(n, value));
}

NormalFormGame NormalFormGame::FromMatrices(
    const std::vector<std::vector<double>>& row_player,
    const std::vector<std::vector<double>>& column_player) {
  const int rows = static_cast<int>(row_player.size());
  const int cols = rows > 0 ? static_cast<int>(row_player[0].size()) : 0;
  if (static_cast<int>(column_player.size()) != rows) {
    throw ShapeError("payoff matrices disagree in row count");
  }
  std::vector<double> payoffs;
  payoffs.reserve(2 * rows * cols);
  for (const auto* matrix : {&row_player, &column_player}) {
    for (const auto& row : *matrix) {
      if (static_cast<int>(row.size()) != cols) {
        throw ShapeError("ragged payoff matrix");
      }
      payoffs.insert(payoffs.end(), row.begin(), row.end());
    }
  }
  return NormalFormGame({rows, cols}, std::move(payoffs));
}

std::vector<int> NormalFormGame::shape() const {
  std::vector<int> s{num_players()};
  s.insert(s.end(), action_counts_.begin(), action_counts_.end());
  return s;
}

std::vector<int> NormalFormGame::DecodeJoint(int joint_index) const {
  std::vector<int> actions(action_counts_.size());
  for (int k = 0; k < num_players(); ++k) {
    actions[k] = ActionOf(joint_index, k);
  }
  return actions;
}

int NormalFormGame::EncodeJoint(std::span<const int> actions) const {
  if (static_cast<int>(actions.size()) != num_players()) {
    throw ShapeError("joint action has the wrong number of players");
  }
  int index = 0;
  for (int k = 0; k < num_players(); ++k) {
    if (actions[k] < 0 || actions[k] >= action_counts_[k]) {
      throw ShapeError("action index out of range");
    }
    index += actions[k] * strides_[k];
  }
  return index;
}

NormalFormGame NormalFormGame::WithPayoffs(std::vector<double> payoffs) const {
  return NormalFormGame(action_counts_, std::move(payoffs));
}

MixedProfile MixedProfile::Uniform(const NormalFormGame& game) {
  MixedProfile profile;
  for (int n : game.action_counts()) {
    profile.strategies.emplace_back(n, 1.0 / n);
  }
  return profile;
}

MixedProfile MixedProfile::Pure(const NormalFormGame& game,
                                std::span<const int> actions) {
  MixedProfile profile;
  for (int k = 0; k < game.num_players(); ++k) {
    std::vector<double> s(game.num_actions(k), 0.0);
    s.at(actions[k]) = 1.0;
    profile.strategies.push_back(std::move(s));
  }
  return profile;
}

namespace {

void ValidateDistribution(std::span<const double> probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= -kProbTolerance)) {
      throw ShapeError(std::string(what) + " has a negative entry");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw ShapeError(std::string(what) + " does not sum to one");
  }
}

}  // namespace

void ValidateProfile(const NormalFormGame& game, const MixedProfile& profile) {
  if (static_cast<int>(profile.strategies.size()) != game.num_players()) {
    throw ShapeError("profile has the wrong number of players");
  }
  for (int k = 0; k < game.num_players(); ++k) {
    if (static_cast<int>(profile[k].size()) != game.num_actions(k)) {
      throw ShapeError("strategy of player " + std::to_string(k) +
                       " has the wrong length");
    }
    ValidateDistribution(profile[k], "strategy");
  }
}

void ValidateJoint(const NormalFormGame& game, const JointDistribution& joint) {
  if (static_cast<int>(joint.probs.size()) != game.num_joint_actions()) {
    throw ShapeError("joint distribution has the wrong length");
  }
  ValidateDistribution(joint.probs, "joint distribution");
}

void Renormalize(std::vector<double>& probs) {
  double total = 0.0;
  for (double& p : probs) {
    if (p < 0.0) p = 0.0;
    total += p;
  }
  if (std::abs(total - 1.0) <= kProbTolerance) return;
  if (total <= 0.0) {
    std::fill(probs.begin(), probs.end(), 1.0 / probs.size());
    return;
  }
  for (double& p : probs) p /= total;
}

std::vector<std::vector<double>> AllActionValues(const NormalFormGame& game,
                                                 const MixedProfile& profile) {
  ValidateProfile(game, profile);
  const int num_players = game.num_players();
  std::vector<std::vector<double>> values(num_players);
  for (int k = 0; k < num_players; ++k) {
    values[k].assign(game.num_actions(k), 0.0);
  }
  std::vector<int> actions(num_players, 0);
  for (int j = 0; j < game.num_joint_actions(); ++j) {
    for (int k = 0; k < num_players; ++k) {
      double weight = 1.0;
      for (int other = 0; other < num_players; ++other) {
        if (other != k) weight *= profile[other][actions[other]];
      }
      if (weight != 0.0) values[k][actions[k]] += weight * game.payoff(k, j);
    }
    // Odometer increment; the last player varies fastest.
    for (int k = num_players - 1; k >= 0; --k) {
      if (++actions[k] < game.num_actions(k)) break;
      actions[k] = 0;
    }
  }
  return values;
}

std::vector<double> ActionValues(const NormalFormGame& game,
                                 const MixedProfile& profile, int player) {
  if (player < 0 || player >= game.num_players()) {
    throw ShapeError("player index out of range");
  }
  return AllActionValues(game, profile)[player];
}

double ExpectedPayoff(const NormalFormGame& game, const MixedProfile& profile,
                      int player) {
  const std::vector<double> values = ActionValues(game, profile, player);
  return std::inner_product(values.begin(), values.end(),
                            profile[player].begin(), 0.0);
}

std::pair<int, double> BestResponse(const NormalFormGame& game,
                                    const MixedProfile& profile, int player) {
  const std::vector<double> values = ActionValues(game, profile, player);
  // max_element keeps the first maximum, i.e. the lowest action index.
  auto best = std::max_element(values.begin(), values.end());
  return {static_cast<int>(best - values.begin()), *best};
}

double NashConv(const NormalFormGame& game, const MixedProfile& profile) {
  const auto values = AllActionValues(game, profile);
  double total = 0.0;
  for (int k = 0; k < game.num_players(); ++k) {
    const double best = *std::max_element(values[k].begin(), values[k].end());
    const double current = std::inner_product(
        values[k].begin(), values[k].end(), profile[k].begin(), 0.0);
    total += std::max(0.0, best - current);
  }
  return total;
}

double CeRegret(const NormalFormGame& game, const JointDistribution& joint) {
  ValidateJoint(game, joint);
  double worst = 0.0;
  for (int k = 0; k < game.num_players(); ++k) {
    const int n = game.num_actions(k);
    const int stride = game.stride(k);
    // gain[a][b] = sum_{a^{-k}} pi(a) (M^k(b, a^{-k}) - M^k(a)).
    std::vector<double> gain(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < game.num_joint_actions(); ++j) {
      const double p = joint.probs[j];
      if (p == 0.0) continue;
      const int a = game.ActionOf(j, k);
      const int base = j - a * stride;
      const double here = game.payoff(k, j);
      for (int b = 0; b < n; ++b) {
        gain[a * n + b] += p * (game.payoff(k, base + b * stride) - here);
      }
    }
    worst = std::max(worst, *std::max_element(gain.begin(), gain.end()));
  }
  return worst;
}

MixedProfile Marginalize(const NormalFormGame& game,
                         const JointDistribution& joint) {
  ValidateJoint(game, joint);
  MixedProfile profile;
  for (int k = 0; k < game.num_players(); ++k) {
    profile.strategies.emplace_back(game.num_actions(k), 0.0);
  }
  for (int j = 0; j < game.num_joint_actions(); ++j) {
    for (int k = 0; k < game.num_players(); ++k) {
      profile[k][game.ActionOf(j, k)] += joint.probs[j];
    }
  }
  for (auto& s : profile.strategies) {
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    for (double& p : s) p /= total;
  }
  return profile;
}

JointDistribution ProductDistribution(const NormalFormGame& game,
                                      const MixedProfile& profile) {
  ValidateProfile(game, profile);
  JointDistribution joint;
  joint.probs.resize(game.num_joint_actions());
  for (int j = 0; j < game.num_joint_actions(); ++j) {
    double p = 1.0;
    for (int k = 0; k < game.num_players(); ++k) {
      p *= profile[k][game.ActionOf(j, k)];
    }
    joint.probs[j] = p;
  }
  return joint;
}

std::vector<double> NormalizeRange(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(out.begin(), out.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  const double scale = 2.0 * kPayoffBound / (hi - lo);
  for (double& v : out) {
    v = std::clamp((v - lo) * scale - kPayoffBound, -kPayoffBound,
                   kPayoffBound);
  }
  return out;
}

NormalFormGame NormalizePayoffs(const NormalFormGame& game) {
  return game.WithPayoffs(NormalizeRange(game.payoffs()));
}

NormalFormGame SampleRandomGame(const GameSpec& spec, std::uint64_t seed) {
  const auto& counts = spec.action_counts;
  if (counts.size() < 2 || counts.size() > 3) {
    throw std::invalid_argument("random games support 2 or 3 players");
  }
  std::size_t n = counts.size();
  for (int c : counts) {
    if (c < 2) throw std::invalid_argument("each player needs >= 2 actions");
    n *= c;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> payoffs(n);
  for (double& v : payoffs) v = uniform(rng);
  return NormalizePayoffs(NormalFormGame(counts, std::move(payoffs)));
}

NormalFormGame RockPaperScissors() {
  return NormalFormGame::FromMatrices({{0, -1, 1}, {1, 0, -1}, {-1, 1, 0}},
                                      {{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}});
}

NormalFormGame MatchingPennies() {
  return NormalFormGame::FromMatrices({{1, -1}, {-1, 1}}, {{-1, 1}, {1, -1}});
}

}  // namespace gamemod
