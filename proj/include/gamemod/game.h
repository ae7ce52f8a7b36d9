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

#ifndef GAMEMOD_GAME_H_
#define GAMEMOD_GAME_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gamemod {

// Raised when tensors, profiles or distributions do not fit the game.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kProbTolerance = 1e-9;
inline constexpr double kPayoffBound = 5.0;

// A K-player normal-form game stored as a dense payoff tensor of shape
// [K, |A^1|, ..., |A^K|] in row-major order. Joint actions are indexed
// row-major over (a^1, ..., a^K), so the last player's action varies fastest.
class NormalFormGame {
 public:
  NormalFormGame(std::vector<int> action_counts, std::vector<double> payoffs);

  // A game with every payoff equal to `value`.
  static NormalFormGame Constant(std::vector<int> action_counts, double value);

  // Two-player game from row-major payoff matrices of each player.
  static NormalFormGame FromMatrices(
      const std::vector<std::vector<double>>& row_player,
      const std::vector<std::vector<double>>& column_player);

  int num_players() const { return static_cast<int>(action_counts_.size()); }
  const std::vector<int>& action_counts() const { return action_counts_; }
  int num_actions(int player) const { return action_counts_.at(player); }
  int num_joint_actions() const { return num_joint_; }

  // Shape of the payoff tensor, [K, |A^1|, ..., |A^K|].
  std::vector<int> shape() const;

  std::span<const double> payoffs() const { return payoffs_; }
  double payoff(int player, int joint_index) const {
    return payoffs_[static_cast<std::size_t>(player) * num_joint_ +
                    joint_index];
  }

  // Distance between consecutive actions of `player` in joint-index space.
  int stride(int player) const { return strides_[player]; }
  int ActionOf(int joint_index, int player) const {
    return (joint_index / strides_[player]) % action_counts_[player];
  }
  std::vector<int> DecodeJoint(int joint_index) const;
  int EncodeJoint(std::span<const int> actions) const;

  bool SameShape(const NormalFormGame& other) const {
    return action_counts_ == other.action_counts_;
  }

  // Returns a copy with the payoff tensor replaced; shapes must agree.
  NormalFormGame WithPayoffs(std::vector<double> payoffs) const;

 private:
  std::vector<int> action_counts_;
  std::vector<int> strides_;
  int num_joint_ = 1;
  std::vector<double> payoffs_;
};

// One probability vector per player.
struct MixedProfile {
  std::vector<std::vector<double>> strategies;

  static MixedProfile Uniform(const NormalFormGame& game);
  static MixedProfile Pure(const NormalFormGame& game,
                           std::span<const int> actions);
  const std::vector<double>& operator[](int player) const {
    return strategies[player];
  }
  std::vector<double>& operator[](int player) { return strategies[player]; }
};

// A distribution over joint actions in the game's joint-index order.
struct JointDistribution {
  std::vector<double> probs;
};

// Throws ShapeError unless `profile` has one valid distribution per player.
void ValidateProfile(const NormalFormGame& game, const MixedProfile& profile);
void ValidateJoint(const NormalFormGame& game, const JointDistribution& joint);

// Renormalizes `probs` in place when its mass drifts from one by more than
// kProbTolerance. Negative rounding noise is clamped to zero first.
void Renormalize(std::vector<double>& probs);

// u^k(a^k) = M^k(a^k, pi^{-k}) for every action of `player`.
std::vector<double> ActionValues(const NormalFormGame& game,
                                 const MixedProfile& profile, int player);

// ActionValues for every player in a single pass over the tensor.
std::vector<std::vector<double>> AllActionValues(const NormalFormGame& game,
                                                 const MixedProfile& profile);

double ExpectedPayoff(const NormalFormGame& game, const MixedProfile& profile,
                      int player);

// Best pure response of `player`; ties go to the lowest action index.
std::pair<int, double> BestResponse(const NormalFormGame& game,
                                    const MixedProfile& profile, int player);

// Sum over players of the best-response gain. Zero exactly at a Nash
// equilibrium.
double NashConv(const NormalFormGame& game, const MixedProfile& profile);

// Largest expected gain from any recommendation-conditional deviation
// a^k -> b^k, floored at zero. Zero iff `joint` is a correlated equilibrium.
double CeRegret(const NormalFormGame& game, const JointDistribution& joint);

// Per-player marginals of a joint distribution.
MixedProfile Marginalize(const NormalFormGame& game,
                         const JointDistribution& joint);

// pi(a) = prod_k pi^k(a^k).
JointDistribution ProductDistribution(const NormalFormGame& game,
                                      const MixedProfile& profile);

// Affine rescale of all payoffs onto [-5, 5]; constant games map to zero.
NormalFormGame NormalizePayoffs(const NormalFormGame& game);
std::vector<double> NormalizeRange(std::span<const double> values);

// Player count plus per-player action counts.
struct GameSpec {
  std::vector<int> action_counts;
};

// Payoffs drawn i.i.d. from U(-1, 1), then normalized. Deterministic in seed.
NormalFormGame SampleRandomGame(const GameSpec& spec, std::uint64_t seed);

// Canonical fixtures used across tests and tools.
NormalFormGame RockPaperScissors();
NormalFormGame MatchingPennies();

}  // namespace gamemod

#endif  // GAMEMOD_GAME_H_
