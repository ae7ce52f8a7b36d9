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


#include "gamemod/ppo.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace gamemod {

using nn::Matrix;
using nn::Var;

void PPOConfig::Validate() const {
  if (!(learning_rate > 0.0) || !(discount > 0.0) || discount > 1.0 ||
      entropy_coef < 0.0 || value_coef < 0.0 || !(max_grad_norm > 0.0) ||
      !(clip > 0.0)) {
    throw std::invalid_argument("PPO coefficients out of range");
  }
  if (num_envs < 1 || steps_per_rollout < 1 || ppo_epochs < 1 ||
      minibatches < 1 || eval_interval < 1 || workers < 1) {
    throw std::invalid_argument("PPO counts must be positive");
  }
  if (minibatches > rollout_size()) {
    throw std::invalid_argument("more minibatches than transitions");
  }
  if (total_env_steps < 0) {
    throw std::invalid_argument("total_env_steps must be >= 0");
  }
}

void ParallelFor(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (int i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

GameModEnv::GameModEnv(std::shared_ptr<const std::vector<NormalFormGame>> games,
                       EpisodeConfig episode, nn::NetworkConfig network,
                       std::uint64_t seed)
    : games_(std::move(games)),
      episode_(std::move(episode)),
      network_(network),
      rng_(seed) {
  if (!games_ || games_->empty()) {
    throw std::invalid_argument("environment needs a nonempty dataset");
  }
  order_.resize(games_->size());
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng_);
  StartEpisode();
}

void GameModEnv::StartEpisode() {
  if (cursor_ == order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  const NormalFormGame& game = (*games_)[order_[cursor_++]];
  state_ = Reset(game, episode_);
  original_adjacency_.reset();
  if (network_.mode == nn::EncoderMode::kGraph) {
    original_adjacency_ = std::make_shared<const Matrix>(nn::SymmetrizedAdjacency(
        BuildResponseGraph(game, network_.alpha, network_.population)));
  }
  episode_return_ = 0.0;
}

nn::Observation GameModEnv::Observe() const {
  return nn::MakeObservation(network_, original_adjacency_, state_->original,
                             state_->current);
}

PolicyEnv::Outcome GameModEnv::Step(std::span<const double> action) {
  const StepResult result = gamemod::Step(*state_, action);
  episode_return_ += result.reward;
  Outcome outcome{result.reward, result.done, 0.0};
  if (result.done) {
    outcome.episode_return = episode_return_;
    ++episodes_completed_;
    StartEpisode();
  }
  return outcome;
}

TargetEnv::TargetEnv(std::vector<double> target, int horizon,
                     int observation_dim)
    : target_(std::move(target)),
      horizon_(horizon),
      observation_dim_(observation_dim) {
  if (horizon_ < 1 || observation_dim_ < 1) {
    throw std::invalid_argument("target env needs positive sizes");
  }
}

nn::Observation TargetEnv::Observe() const {
  nn::Observation obs;
  obs.flat.assign(observation_dim_, 1.0);
  return obs;
}

PolicyEnv::Outcome TargetEnv::Step(std::span<const double> action) {
  if (action.size() != target_.size()) {
    throw ShapeError("action has the wrong dimension");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    sq += (action[i] - target_[i]) * (action[i] - target_[i]);
  }
  Outcome outcome{-sq, false, 0.0};
  episode_return_ += outcome.reward;
  if (++t_ >= horizon_) {
    outcome.done = true;
    outcome.episode_return = episode_return_;
    ++episodes_completed_;
    t_ = 0;
    episode_return_ = 0.0;
  }
  return outcome;
}

namespace {

std::vector<const nn::Observation*> Pointers(
    const std::vector<nn::Observation>& obs) {
  std::vector<const nn::Observation*> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back(&o);
  return out;
}

}  // namespace

RolloutBuffer CollectRollouts(nn::ActorCritic& net,
                              std::span<const std::unique_ptr<PolicyEnv>> envs,
                              int steps, std::mt19937_64& rng, int workers) {
  const int n = static_cast<int>(envs.size());
  const int action_dim = net.config().action_dim;
  RolloutBuffer buffer;
  buffer.num_envs = n;
  buffer.num_steps = steps;
  buffer.observations.reserve(static_cast<std::size_t>(n) * steps);
  buffer.actions.resize(static_cast<Eigen::Index>(n) * steps, action_dim);
  buffer.log_probs.resize(buffer.size());
  buffer.rewards.resize(buffer.size());
  buffer.values.resize(buffer.size());
  buffer.dones.resize(buffer.size());

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PolicyEnv::Outcome> outcomes(n);
  for (int s = 0; s < steps; ++s) {
    std::vector<nn::Observation> obs(n);
    for (int e = 0; e < n; ++e) obs[e] = envs[e]->Observe();
    const auto ptrs = Pointers(obs);
    const auto out = net.Forward(ptrs);
    std::vector<std::vector<double>> actions(n);
    for (int e = 0; e < n; ++e) {
      const int row = buffer.index(s, e);
      actions[e].resize(action_dim);
      for (int d = 0; d < action_dim; ++d) {
        actions[e][d] = out.mean(e, d) + std::exp(out.log_std(0, d)) * normal(rng);
        buffer.actions(row, d) = actions[e][d];
      }
      Eigen::RowVectorXd mean_row = out.mean.row(e);
      Eigen::RowVectorXd log_std = out.log_std.row(0);
      nn::DiagGaussian dist{{mean_row.data(), static_cast<std::size_t>(action_dim)},
                            {log_std.data(), static_cast<std::size_t>(action_dim)}};
      buffer.log_probs[row] = dist.LogProb(actions[e]);
      buffer.values[row] = out.value(e, 0);
    }
    ParallelFor(n, workers, [&](int e) {
      try {
        outcomes[e] = envs[e]->Step(actions[e]);
      } catch (const std::exception& ex) {
        throw std::runtime_error("environment " + std::to_string(e) + ": " +
                                 ex.what());
      }
    });
    for (int e = 0; e < n; ++e) {
      const int row = buffer.index(s, e);
      buffer.rewards[row] = outcomes[e].reward;
      buffer.dones[row] = outcomes[e].done;
      if (outcomes[e].done) {
        buffer.completed_returns.push_back(outcomes[e].episode_return);
      }
    }
    for (auto& o : obs) buffer.observations.push_back(std::move(o));
  }
  std::vector<nn::Observation> last(n);
  for (int e = 0; e < n; ++e) last[e] = envs[e]->Observe();
  const auto ptrs = Pointers(last);
  const auto out = net.Forward(ptrs);
  buffer.bootstrap_values.resize(n);
  for (int e = 0; e < n; ++e) buffer.bootstrap_values[e] = out.value(e, 0);
  return buffer;
}

void ComputeReturnsAdvantages(RolloutBuffer& buffer, double discount,
                              bool normalize) {
  if (buffer.advantages_ready) {
    throw std::logic_error("returns already computed for this rollout");
  }
  const int n = buffer.num_envs;
  buffer.returns.assign(buffer.size(), 0.0);
  buffer.advantages.assign(buffer.size(), 0.0);
  for (int e = 0; e < n; ++e) {
    double next = buffer.bootstrap_values.empty() ? 0.0
                                                  : buffer.bootstrap_values[e];
    for (int s = buffer.num_steps - 1; s >= 0; --s) {
      const int i = buffer.index(s, e);
      next = buffer.rewards[i] + (buffer.dones[i] ? 0.0 : discount * next);
      buffer.returns[i] = next;
      buffer.advantages[i] = next - buffer.values[i];
    }
  }
  if (normalize && buffer.size() > 1) {
    const double mean =
        std::accumulate(buffer.advantages.begin(), buffer.advantages.end(), 0.0) /
        buffer.size();
    double var = 0.0;
    for (double a : buffer.advantages) var += (a - mean) * (a - mean);
    const double std = std::sqrt(var / (buffer.size() - 1));
    if (std >= 1e-8) {
      for (double& a : buffer.advantages) a = (a - mean) / (std + 1e-5);
    }
  }
  buffer.advantages_ready = true;
}

PPOLoss BuildPPOLoss(nn::Tape& tape, nn::ActorCritic& net,
                     std::span<const nn::Observation* const> obs,
                     const Matrix& actions,
                     std::span<const double> old_log_probs,
                     std::span<const double> advantages,
                     std::span<const double> returns, const PPOConfig& config) {
  const auto b = static_cast<Eigen::Index>(obs.size());
  auto column = [&](std::span<const double> v) {
    return tape.Constant(Eigen::Map<const Matrix>(v.data(), b, 1));
  };
  Var mean = net.PolicyMean(tape, obs);
  Var log_std = net.LogStd(tape);
  Var log_prob = nn::GaussianLogProb(mean, log_std, actions);
  Var ratio = nn::Exp(nn::Sub(log_prob, column(old_log_probs)));
  Var adv = column(advantages);
  Var surrogate = nn::Minimum(nn::Mul(ratio, adv),
                              nn::Mul(nn::Clamp(ratio, 1.0 - config.clip,
                                                1.0 + config.clip),
                                      adv));
  Var policy = nn::Scale(nn::Mean(surrogate), -1.0);
  Var value = nn::Mean(nn::Square(nn::Sub(net.Value(tape, obs), column(returns))));
  Var entropy = nn::GaussianEntropy(log_std);
  Var total = nn::Add(nn::Add(policy, nn::Scale(value, config.value_coef)),
                      nn::Scale(entropy, -config.entropy_coef));
  return PPOLoss{total, policy, value, entropy, ratio};
}

UpdateMetrics PPOUpdate(nn::ActorCritic& net, nn::Adam& optimizer,
                        const RolloutBuffer& buffer, const PPOConfig& config,
                        std::mt19937_64& rng) {
  if (!buffer.advantages_ready) {
    throw std::logic_error("compute returns and advantages before updating");
  }
  const int n = buffer.size();
  const int mb = std::max(1, n / config.minibatches);
  const int per_epoch = std::min(config.minibatches, n / mb);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  UpdateMetrics metrics;
  int count = 0;
  long clipped = 0, ratios = 0;
  double ratio_sum = 0.0;
  const int action_dim = net.config().action_dim;
  std::vector<const nn::Observation*> obs(mb);
  Matrix actions(mb, action_dim);
  std::vector<double> old_lp(mb), adv(mb), ret(mb);
  for (int epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int m = 0; m < per_epoch; ++m) {
      for (int k = 0; k < mb; ++k) {
        const int i = perm[m * mb + k];
        obs[k] = &buffer.observations[i];
        actions.row(k) = buffer.actions.row(i);
        old_lp[k] = buffer.log_probs[i];
        adv[k] = buffer.advantages[i];
        ret[k] = buffer.returns[i];
      }
      net.params().ZeroGrad();
      nn::Tape tape;
      const PPOLoss loss =
          BuildPPOLoss(tape, net, obs, actions, old_lp, adv, ret, config);
      const double total = loss.total.value()(0, 0);
      if (!std::isfinite(total)) {
        throw std::runtime_error(
            "non-finite PPO loss (policy " +
            std::to_string(loss.policy.value()(0, 0)) + ", value " +
            std::to_string(loss.value.value()(0, 0)) + ") at epoch " +
            std::to_string(epoch) + " minibatch " + std::to_string(m));
      }
      tape.Backward(loss.total);
      const double norm = net.params().GradNorm();
      if (norm > config.max_grad_norm) {
        net.params().ScaleGrad(config.max_grad_norm / (norm + 1e-6));
      }
      metrics.max_grad_norm_after_clip =
          std::max(metrics.max_grad_norm_after_clip, net.params().GradNorm());
      optimizer.Step(net.params());

      const Matrix& r = loss.ratio.value();
      if (count == 0) metrics.first_minibatch_ratio = r.mean();
      ratio_sum += r.sum();
      ratios += r.size();
      clipped += ((r.array() - 1.0).abs() > config.clip).count();
      metrics.policy_loss += loss.policy.value()(0, 0);
      metrics.value_loss += loss.value.value()(0, 0);
      metrics.entropy += loss.entropy.value()(0, 0);
      ++count;
    }
  }
  net.params().ZeroGrad();
  if (count > 0) {
    metrics.policy_loss /= count;
    metrics.value_loss /= count;
    metrics.entropy /= count;
    metrics.mean_ratio = ratio_sum / ratios;
    metrics.clip_fraction = static_cast<double>(clipped) / ratios;
  }
  return metrics;
}

PolicyFn GreedyPolicy(nn::ActorCritic& net) {
  return [&net](const EnvState& state, std::mt19937_64&) {
    const nn::Observation obs =
        nn::MakeObservation(net.config(), state.original, state.current);
    const nn::Observation* batch[] = {&obs};
    const auto out = net.Forward(batch);
    return std::vector<double>(out.mean.data(),
                               out.mean.data() + out.mean.size());
  };
}

PolicyFn RandomPolicy(int action_dim) {
  return [action_dim](const EnvState&, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::vector<double> action(action_dim);
    for (double& a : action) a = uniform(rng);
    return action;
  };
}

PolicyFn ZeroPolicy(int action_dim) {
  return [action_dim](const EnvState&, std::mt19937_64&) {
    return std::vector<double>(action_dim, 0.0);
  };
}

EvaluationResult EvaluatePolicy(const PolicyFn& policy,
                                std::span<const NormalFormGame> games,
                                const EpisodeConfig& episode,
                                std::uint64_t seed, int workers) {
  const int n = static_cast<int>(games.size());
  EvaluationResult result;
  result.scores.assign(n, 0.0);
  result.excluded.assign(n, false);
  ParallelFor(n, workers, [&](int g) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(g));
    EnvState state = Reset(games[g], episode);
    while (!state.done()) Step(state, policy(state, rng));
    const ImprovementScore score =
        ComputeImprovementScore(state.nc_trace, state.baseline_nc);
    result.scores[g] = score.score;
    result.excluded[g] = score.excluded;
  });
  double total = 0.0;
  for (int g = 0; g < n; ++g) {
    if (result.excluded[g]) {
      ++result.num_excluded;
    } else {
      total += result.scores[g];
    }
  }
  const int included = n - result.num_excluded;
  result.mean_score = included > 0 ? total / included : 0.0;
  return result;
}

void WriteTrainLogHeader(std::ostream& out) {
  out << "env_steps,mean_episode_return,train_score,test_score,policy_loss,"
         "value_loss,entropy,clip_fraction\n";
}

void WriteTrainLogRow(std::ostream& out, const TrainLogRow& row) {
  out << std::setprecision(10) << row.env_steps << ','
      << row.mean_episode_return << ',' << row.train_score << ','
      << row.test_score << ',' << row.update.policy_loss << ','
      << row.update.value_loss << ',' << row.update.entropy << ','
      << row.update.clip_fraction << '\n';
}

namespace {

using EvalFn = std::function<std::pair<double, double>(nn::ActorCritic&)>;

TrainResult RunPPO(std::vector<std::unique_ptr<PolicyEnv>>& envs,
                   const nn::NetworkConfig& network, const PPOConfig& config,
                   const EvalFn& evaluate, const TrainHooks& hooks) {
  config.Validate();
  auto net = std::make_unique<nn::ActorCritic>(network, config.seed);
  nn::Adam optimizer(config.learning_rate);
  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);

  TrainResult result;
  result.best_test_score = -1.0;
  auto log_row = [&](long steps, double mean_return,
                     const UpdateMetrics& metrics) {
    TrainLogRow row{steps, mean_return, 0.0, 0.0, metrics};
    if (evaluate) std::tie(row.train_score, row.test_score) = evaluate(*net);
    result.log.push_back(row);
    if (hooks.on_log) hooks.on_log(row);
    // The pre-training evaluation is a reference point, not an epoch.
    const bool eligible = steps > 0 || config.total_env_steps == 0;
    if (evaluate && eligible && row.test_score > result.best_test_score) {
      result.best_test_score = row.test_score;
      result.best_train_score = row.train_score;
      result.best_env_steps = steps;
      result.best = std::make_unique<nn::ActorCritic>(*net);
      if (hooks.on_best) hooks.on_best(*net, row);
    }
  };

  log_row(0, 0.0, UpdateMetrics{});
  long steps = 0;
  int updates = 0;
  std::vector<double> recent_returns;
  while (steps < config.total_env_steps) {
    RolloutBuffer buffer = CollectRollouts(*net, envs, config.steps_per_rollout,
                                           rng, config.workers);
    steps += buffer.size();
    ComputeReturnsAdvantages(buffer, config.discount);
    const UpdateMetrics metrics = PPOUpdate(*net, optimizer, buffer, config, rng);
    net->params().CheckFinite();
    ++updates;
    recent_returns.insert(recent_returns.end(), buffer.completed_returns.begin(),
                          buffer.completed_returns.end());
    if (updates % config.eval_interval == 0 ||
        steps >= config.total_env_steps) {
      const double mean_return =
          recent_returns.empty()
              ? 0.0
              : std::accumulate(recent_returns.begin(), recent_returns.end(),
                                0.0) / recent_returns.size();
      recent_returns.clear();
      log_row(steps, mean_return, metrics);
    }
  }
  if (!result.best) result.best = std::make_unique<nn::ActorCritic>(*net);
  result.final = std::move(net);
  return result;
}

}  // namespace

TrainResult Train(std::span<const NormalFormGame> train,
                  std::span<const NormalFormGame> test,
                  const EpisodeConfig& episode,
                  const nn::NetworkConfig& network, const PPOConfig& config,
                  const TrainHooks& hooks) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  auto games = std::make_shared<const std::vector<NormalFormGame>>(
      train.begin(), train.end());
  std::vector<std::unique_ptr<PolicyEnv>> envs;
  for (int e = 0; e < config.num_envs; ++e) {
    envs.push_back(std::make_unique<GameModEnv>(
        games, episode, network, config.seed * 1000003ULL + e));
  }
  const std::uint64_t eval_seed = config.seed + 7;
  EvalFn evaluate = [&](nn::ActorCritic& net) {
    const PolicyFn policy = GreedyPolicy(net);
    const double train_score =
        EvaluatePolicy(policy, train, episode, eval_seed, config.workers)
            .mean_score;
    const double test_score =
        test.empty() ? train_score
                     : EvaluatePolicy(policy, test, episode, eval_seed,
                                      config.workers)
                           .mean_score;
    return std::make_pair(train_score, test_score);
  };
  return RunPPO(envs, network, config, evaluate, hooks);
}

TrainResult TrainOnEnvs(std::vector<std::unique_ptr<PolicyEnv>>& envs,
                        const nn::NetworkConfig& network,
                        const PPOConfig& config, const TrainHooks& hooks) {
  if (static_cast<int>(envs.size()) != config.num_envs) {
    throw std::invalid_argument("num_envs disagrees with the environments");
  }
  return RunPPO(envs, network, config, nullptr, hooks);
}

}  // namespace gamemod
