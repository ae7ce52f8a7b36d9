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


#ifndef GAMEMOD_PPO_H_
#define GAMEMOD_PPO_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gamemod/environment.h"
#include "gamemod/networks.h"

namespace gamemod {

struct PPOConfig {
  double learning_rate = 1e-3;
  double discount = 0.99;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int num_envs = 20;
  int steps_per_rollout = 100;
  int ppo_epochs = 16;
  double clip = 0.2;
  int minibatches = 64;
  long total_env_steps = 600000;
  // Greedy evaluation every this many updates (and before the first one).
  int eval_interval = 5;
  // Worker threads for environment steps; results do not depend on it.
  int workers = 1;
  std::uint64_t seed = 0;

  void Validate() const;
  int rollout_size() const { return num_envs * steps_per_rollout; }
  // Minibatches hold floor(rollout / minibatches) transitions; the remainder
  // of each epoch's shuffle is dropped.
  int minibatch_size() const { return rollout_size() / minibatches; }
};

// An environment driven by the trainer. Step() auto-resets when an episode
// ends so Observe() always describes a live state.
class PolicyEnv {
 public:
  virtual ~PolicyEnv() = default;
  virtual nn::Observation Observe() const = 0;
  struct Outcome {
    double reward = 0.0;
    bool done = false;
    // Return of the episode that just ended, when done.
    double episode_return = 0.0;
  };
  virtual Outcome Step(std::span<const double> action) = 0;
};

// Cycles through a game dataset, reshuffling it on every pass.
class GameModEnv : public PolicyEnv {
 public:
  GameModEnv(std::shared_ptr<const std::vector<NormalFormGame>> games,
             EpisodeConfig episode, nn::NetworkConfig network,
             std::uint64_t seed);

  nn::Observation Observe() const override;
  Outcome Step(std::span<const double> action) override;
  const EnvState& state() const { return *state_; }
  int episodes_completed() const { return episodes_completed_; }

 private:
  void StartEpisode();

  std::shared_ptr<const std::vector<NormalFormGame>> games_;
  EpisodeConfig episode_;
  nn::NetworkConfig network_;
  std::mt19937_64 rng_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  std::optional<EnvState> state_;
  std::shared_ptr<const nn::Matrix> original_adjacency_;
  double episode_return_ = 0.0;
  int episodes_completed_ = 0;
};

// Sanity task: reward -||action - target||^2 with a constant observation.
class TargetEnv : public PolicyEnv {
 public:
  TargetEnv(std::vector<double> target, int horizon, int observation_dim);

  nn::Observation Observe() const override;
  Outcome Step(std::span<const double> action) override;
  int episodes_completed() const { return episodes_completed_; }

 private:
  std::vector<double> target_;
  int horizon_;
  int observation_dim_;
  int t_ = 0;
  double episode_return_ = 0.0;
  int episodes_completed_ = 0;
};

// Transitions stored step-major: index = step * num_envs + env.
struct RolloutBuffer {
  int num_envs = 0;
  int num_steps = 0;
  std::vector<nn::Observation> observations;
  nn::Matrix actions;  // (num_steps * num_envs) x action_dim
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<bool> dones;
  // Critic estimate of each env's state after the last step.
  std::vector<double> bootstrap_values;
  std::vector<double> returns;
  std::vector<double> advantages;
  std::vector<double> completed_returns;
  bool advantages_ready = false;

  int size() const { return num_envs * num_steps; }
  int index(int step, int env) const { return step * num_envs + env; }
};

RolloutBuffer CollectRollouts(nn::ActorCritic& net,
                              std::span<const std::unique_ptr<PolicyEnv>> envs,
                              int steps, std::mt19937_64& rng,
                              int workers = 1);

// G_t = r_t + discount * G_{t+1}, restarted at episode ends and seeded with
// the bootstrap value at the rollout tail; A_t = G_t - V(s_t), then
// normalized to zero mean and unit variance unless the std is below 1e-8.
void ComputeReturnsAdvantages(RolloutBuffer& buffer, double discount,
                              bool normalize = true);

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
  double first_minibatch_ratio = 0.0;
  double max_grad_norm_after_clip = 0.0;
};

// Per-minibatch PPO loss: -mean(min(r A, clip(r, 1-eps, 1+eps) A))
//   + value_coef * mean((V - G)^2) - entropy_coef * H.
struct PPOLoss {
  nn::Var total;
  nn::Var policy;
  nn::Var value;
  nn::Var entropy;
  nn::Var ratio;
};
PPOLoss BuildPPOLoss(nn::Tape& tape, nn::ActorCritic& net,
                     std::span<const nn::Observation* const> obs,
                     const nn::Matrix& actions,
                     std::span<const double> old_log_probs,
                     std::span<const double> advantages,
                     std::span<const double> returns, const PPOConfig& config);

UpdateMetrics PPOUpdate(nn::ActorCritic& net, nn::Adam& optimizer,
                        const RolloutBuffer& buffer, const PPOConfig& config,
                        std::mt19937_64& rng);

// Policies used to score a dataset.
using PolicyFn =
    std::function<std::vector<double>(const EnvState&, std::mt19937_64&)>;
PolicyFn GreedyPolicy(nn::ActorCritic& net);
PolicyFn RandomPolicy(int action_dim);
PolicyFn ZeroPolicy(int action_dim);

struct EvaluationResult {
  std::vector<double> scores;  // per game; 0 for excluded games
  std::vector<bool> excluded;
  int num_excluded = 0;
  double mean_score = 0.0;  // over included games
};

// Runs one full episode per game and records its improvement score.
EvaluationResult EvaluatePolicy(const PolicyFn& policy,
                                std::span<const NormalFormGame> games,
                                const EpisodeConfig& episode,
                                std::uint64_t seed, int workers = 1);

struct TrainLogRow {
  long env_steps = 0;
  double mean_episode_return = 0.0;
  double train_score = 0.0;
  double test_score = 0.0;
  UpdateMetrics update;
};

void WriteTrainLogHeader(std::ostream& out);
void WriteTrainLogRow(std::ostream& out, const TrainLogRow& row);

struct TrainResult {
  std::vector<TrainLogRow> log;
  double best_test_score = 0.0;
  double best_train_score = 0.0;  // train score at the best-test evaluation
  long best_env_steps = 0;
  std::unique_ptr<nn::ActorCritic> best;
  std::unique_ptr<nn::ActorCritic> final;
};

struct TrainHooks {
  // Called after each logged row.
  std::function<void(const TrainLogRow&)> on_log;
  // Called whenever a new best-by-test checkpoint is found.
  std::function<void(const nn::ActorCritic&, const TrainLogRow&)> on_best;
};

// PPO on the game-modification MDP. Scores on `train` and `test` are greedy
// evaluations; the best-by-test-score network among post-update evaluations
// is kept. The evaluation before the first update is logged only.
TrainResult Train(std::span<const NormalFormGame> train,
                  std::span<const NormalFormGame> test,
                  const EpisodeConfig& episode,
                  const nn::NetworkConfig& network, const PPOConfig& config,
                  const TrainHooks& hooks = {});

// PPO on caller-supplied environments without game evaluation; used by the
// sanity task.
TrainResult TrainOnEnvs(std::vector<std::unique_ptr<PolicyEnv>>& envs,
                        const nn::NetworkConfig& network,
                        const PPOConfig& config,
                        const TrainHooks& hooks = {});

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void ParallelFor(int n, int workers, const std::function<void(int)>& fn);

}  // namespace gamemod

#endif  // GAMEMOD_PPO_H_
