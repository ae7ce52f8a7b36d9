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


#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gamemod/dataset.h"
#include "gamemod/ppo.h"

namespace gamemod {
namespace {

using nn::Matrix;

// Entries stay inside (-1, 1) so the clipped action box never binds.
const std::vector<double> kSanityTarget{0.25, -0.25, 0.15, -0.15, 0.4,
                                        -0.4, 0.05, -0.05, 0.3,  0.0};

nn::NetworkConfig Flat(int input, int action_dim = 10) {
  nn::NetworkConfig c;
  c.mode = nn::EncoderMode::kFlatMlp;
  c.flat_input_dim = input;
  c.action_dim = action_dim;
  return c;
}

std::vector<NormalFormGame> Games(int n, std::uint64_t seed,
                                  std::vector<int> counts = {3, 3}) {
  std::vector<NormalFormGame> out;
  for (const auto& e : SampleDataset(counts, n, seed)) out.push_back(e.game);
  return out;
}

std::vector<std::unique_ptr<PolicyEnv>> TargetEnvs(int n, int horizon) {
  std::vector<std::unique_ptr<PolicyEnv>> envs;
  for (int e = 0; e < n; ++e) {
    envs.push_back(std::make_unique<TargetEnv>(kSanityTarget, horizon, 4));
  }
  return envs;
}

RolloutBuffer SmallRollout(int workers, std::uint64_t seed) {
  auto games = std::make_shared<const std::vector<NormalFormGame>>(Games(6, 1));
  EpisodeConfig episode;
  episode.horizon = 3;
  episode.solver = SolverConfig::Default(SolverKind::kFictitiousPlay);
  nn::ActorCritic net(Flat(36), 3);
  std::vector<std::unique_ptr<PolicyEnv>> envs;
  for (int e = 0; e < 4; ++e) {
    envs.push_back(std::make_unique<GameModEnv>(games, episode, net.config(), 10 + e));
  }
  std::mt19937_64 rng(seed);
  return CollectRollouts(net, envs, 7, rng, workers);
}

TEST_CASE("ppo config") {
  PPOConfig c;
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.discount == 0.99);
  CHECK(c.entropy_coef == 0.01);
  CHECK(c.value_coef == 0.5);
  CHECK(c.max_grad_norm == 0.5);
  CHECK(c.num_envs == 20);
  CHECK(c.steps_per_rollout == 100);
  CHECK(c.ppo_epochs == 16);
  CHECK(c.clip == 0.2);
  CHECK(c.minibatches == 64);
  CHECK(c.rollout_size() == 2000);
  CHECK(c.minibatch_size() == 31);
  CHECK_NOTHROW(c.Validate());
  c.clip = 0.0;
  CHECK_THROWS(c.Validate());
  c = PPOConfig{};
  c.minibatches = 5000;
  CHECK_THROWS(c.Validate());
  c = PPOConfig{};
  c.total_env_steps = -1;
  CHECK_THROWS(c.Validate());
}

TEST_CASE("default rollout holds 2000 transitions") {
  PPOConfig c;
  auto envs = TargetEnvs(c.num_envs, 1);
  nn::ActorCritic net(Flat(4), 0);
  std::mt19937_64 rng(1);
  const RolloutBuffer b = CollectRollouts(net, envs, c.steps_per_rollout, rng);
  CHECK(b.size() == 2000);
  CHECK(b.observations.size() == 2000);
  CHECK(b.actions.rows() == 2000);
  CHECK(b.rewards.size() == 2000);
  CHECK(b.completed_returns.size() == 2000);
  CHECK(b.bootstrap_values.size() == 20);
}

TEST_CASE("episodes auto-reset") {
  auto games = std::make_shared<const std::vector<NormalFormGame>>(Games(3, 2));
  EpisodeConfig episode;
  episode.horizon = 2;
  nn::ActorCritic net(Flat(36), 0);
  std::vector<std::unique_ptr<PolicyEnv>> envs;
  envs.push_back(std::make_unique<GameModEnv>(games, episode, net.config(), 5));
  std::mt19937_64 rng(3);
  const RolloutBuffer b = CollectRollouts(net, envs, 4, rng);
  CHECK(static_cast<GameModEnv&>(*envs[0]).episodes_completed() == 2);
  CHECK(b.completed_returns.size() == 2);
  CHECK(b.dones == std::vector<bool>{false, true, false, true});
}

TEST_CASE("datasets are cycled through in shuffled passes") {
  const std::vector<NormalFormGame> list = Games(4, 3);
  auto games = std::make_shared<const std::vector<NormalFormGame>>(list);
  EpisodeConfig episode;
  episode.horizon = 1;
  GameModEnv env(games, episode, Flat(36), 9);
  std::vector<int> seen(4, 0);
  for (int pass = 0; pass < 3; ++pass) {
    for (int i = 0; i < 4; ++i) {
      for (int g = 0; g < 4; ++g) {
        if (std::equal(list[g].payoffs().begin(), list[g].payoffs().end(),
                       env.state().original.payoffs().begin())) {
          ++seen[g];
        }
      }
      env.Step(std::vector<double>(10, 0.0));
    }
  }
  CHECK(seen == std::vector<int>{3, 3, 3, 3});
}

TEST_CASE("logged episode returns telescope") {
  auto games = std::make_shared<const std::vector<NormalFormGame>>(Games(2, 4));
  EpisodeConfig episode;
  episode.horizon = 4;
  GameModEnv env(games, episode, Flat(36), 1);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int ep = 0; ep < 5; ++ep) {
    std::vector<double> trace;
    PolicyEnv::Outcome last;
    for (int t = 0; t < 4; ++t) {
      std::vector<double> a(10);
      for (double& x : a) x = u(rng);
      if (t == 3) trace = env.state().nc_trace;
      last = env.Step(a);
    }
    REQUIRE(last.done);
    const double final_nc = trace.back() - last.reward;
    CHECK(std::abs(last.episode_return - (trace.front() - final_nc)) <= 1e-12);
  }
}

TEST_CASE("rollouts are deterministic and independent of worker count") {
  const RolloutBuffer a = SmallRollout(1, 8);
  const RolloutBuffer b = SmallRollout(1, 8);
  const RolloutBuffer c = SmallRollout(4, 8);
  for (const RolloutBuffer* other : {&b, &c}) {
    CHECK(a.actions == other->actions);
    CHECK(a.rewards == other->rewards);
    CHECK(a.log_probs == other->log_probs);
    CHECK(a.values == other->values);
    CHECK(a.dones == other->dones);
  }
  const RolloutBuffer d = SmallRollout(1, 9);
  CHECK(a.actions != d.actions);
}

RolloutBuffer Manual(std::vector<double> rewards, std::vector<bool> dones,
                     std::vector<double> values, double bootstrap) {
  RolloutBuffer b;
  b.num_envs = 1;
  b.num_steps = static_cast<int>(rewards.size());
  b.rewards = std::move(rewards);
  b.dones = std::move(dones);
  b.values = std::move(values);
  b.bootstrap_values = {bootstrap};
  return b;
}

TEST_CASE("returns and advantages") {
  RolloutBuffer b = Manual({1, 1}, {false, true}, {0, 0}, 123.0);
  ComputeReturnsAdvantages(b, 0.99, false);
  CHECK(b.returns[0] == doctest::Approx(1.99));
  CHECK(b.returns[1] == 1.0);
  CHECK_THROWS_AS(ComputeReturnsAdvantages(b, 0.99), std::logic_error);

  RolloutBuffer one = Manual({1.0}, {true}, {0.4}, 0.0);
  ComputeReturnsAdvantages(one, 0.99, false);
  CHECK(one.advantages[0] == doctest::Approx(0.6));

  RolloutBuffer zeros = Manual({0, 0, 0}, {false, false, true}, {0, 0, 0}, 0.0);
  ComputeReturnsAdvantages(zeros, 0.99, true);
  for (double a : zeros.advantages) CHECK(a == 0.0);

  // A truncated tail is bootstrapped; a done step is not.
  RolloutBuffer tail = Manual({1, 2}, {true, false}, {0, 0}, 10.0);
  ComputeReturnsAdvantages(tail, 0.5, false);
  CHECK(tail.returns[1] == 2.0 + 0.5 * 10.0);
  CHECK(tail.returns[0] == 1.0);

  // Several envs interleaved step-major.
  RolloutBuffer two;
  two.num_envs = 2;
  two.num_steps = 2;
  two.rewards = {1, 10, 2, 20};
  two.dones = {false, false, true, false};
  two.values = {0, 0, 0, 0};
  two.bootstrap_values = {100, 1};
  ComputeReturnsAdvantages(two, 0.5, false);
  CHECK(two.returns == std::vector<double>{2.0, 20.25, 2.0, 20.5});

  RolloutBuffer norm = Manual({1, -2, 3, 0.5}, {false, false, false, true},
                              {0.1, 0.2, 0.3, 0.4}, 0.0);
  ComputeReturnsAdvantages(norm, 0.9, true);
  double mean = 0.0, var = 0.0;
  for (double a : norm.advantages) mean += a / 4;
  for (double a : norm.advantages) var += (a - mean) * (a - mean) / 3;
  CHECK(std::abs(mean) <= 1e-12);
  CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-4));
}

struct LossFixture {
  nn::ActorCritic net{[] {
                        nn::NetworkConfig c;
                        c.node_embed_dim = 4;
                        c.mlp_hidden = 8;
                        c.action_dim = 3;
                        return c;
                      }(),
                      21};
  std::vector<nn::Observation> obs;
  std::vector<const nn::Observation*> batch;
  Matrix actions;
  std::vector<double> log_probs, advantages, returns;

  LossFixture() {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 5; ++i) {
      obs.push_back(nn::MakeObservation(net.config(),
                                        SampleRandomGame({{2, 3}}, rng()),
                                        SampleRandomGame({{2, 3}}, rng())));
    }
    for (const auto& o : obs) batch.push_back(&o);
    const auto out = net.Forward(batch);
    actions = out.mean;
    for (int i = 0; i < actions.size(); ++i) actions.data()[i] += normal(rng);
    for (int i = 0; i < 5; ++i) {
      const Eigen::RowVectorXd m = out.mean.row(i), a = actions.row(i);
      nn::DiagGaussian d{{m.data(), 3}, {out.log_std.data(), 3}};
      log_probs.push_back(d.LogProb({a.data(), 3}));
      advantages.push_back(normal(rng));
      returns.push_back(normal(rng));
    }
  }
};

TEST_CASE("surrogate at ratio one and under clipping") {
  LossFixture f;
  PPOConfig config;
  {
    nn::Tape tape;
    const PPOLoss loss = BuildPPOLoss(tape, f.net, f.batch, f.actions,
                                      f.log_probs, f.advantages, f.returns, config);
    for (int i = 0; i < 5; ++i) CHECK(loss.ratio.value()(i, 0) == doctest::Approx(1.0));
    double mean_adv = 0.0;
    for (double a : f.advantages) mean_adv += a / 5;
    CHECK(loss.policy.value()(0, 0) == doctest::Approx(-mean_adv).epsilon(1e-12));
  }
  // Old log-probs lower by log 2 make every ratio 2.
  std::vector<double> shifted = f.log_probs;
  for (double& lp : shifted) lp -= std::log(2.0);
  const std::vector<double> ones(5, 1.0), minus(5, -1.0);
  nn::Tape tape;
  const PPOLoss up = BuildPPOLoss(tape, f.net, f.batch, f.actions, shifted, ones,
                                  f.returns, config);
  CHECK(up.ratio.value()(0, 0) == doctest::Approx(2.0));
  CHECK(up.policy.value()(0, 0) == doctest::Approx(-1.2));
  const PPOLoss down = BuildPPOLoss(tape, f.net, f.batch, f.actions, shifted,
                                    minus, f.returns, config);
  CHECK(down.policy.value()(0, 0) == doctest::Approx(2.0));

  const PPOLoss parts = BuildPPOLoss(tape, f.net, f.batch, f.actions, f.log_probs,
                                     f.advantages, f.returns, config);
  CHECK(parts.total.value()(0, 0) ==
        doctest::Approx(parts.policy.value()(0, 0) +
                        0.5 * parts.value.value()(0, 0) -
                        0.01 * parts.entropy.value()(0, 0))
            .epsilon(1e-12));
}

TEST_CASE("composed ppo loss passes a finite-difference check") {
  LossFixture f;
  PPOConfig config;
  // Perturb old log-probs so ratios differ from one but stay off the clip
  // boundaries.
  std::vector<double> old = f.log_probs;
  const double shift[] = {0.05, -0.1, 0.12, -0.03, 0.4};
  for (int i = 0; i < 5; ++i) old[i] += shift[i];
  const double err = nn::GradCheck(
      [&](nn::Tape& tape) {
        return BuildPPOLoss(tape, f.net, f.batch, f.actions, old, f.advantages,
                            f.returns, config)
            .total;
      },
      f.net.params());
  CHECK(err <= 1e-4);
}

TEST_CASE("ppo update invariants") {
  PPOConfig config;
  config.num_envs = 4;
  config.steps_per_rollout = 16;
  config.minibatches = 4;
  config.ppo_epochs = 3;
  auto envs = TargetEnvs(4, 3);
  nn::ActorCritic net(Flat(4), 5);
  nn::Adam adam(config.learning_rate);
  std::mt19937_64 rng(6);
  for (int update = 0; update < 5; ++update) {
    RolloutBuffer b = CollectRollouts(net, envs, config.steps_per_rollout, rng);
    CHECK_THROWS_AS(PPOUpdate(net, adam, b, config, rng), std::logic_error);
    ComputeReturnsAdvantages(b, config.discount);
    const UpdateMetrics m = PPOUpdate(net, adam, b, config, rng);
    CHECK(std::abs(m.first_minibatch_ratio - 1.0) <= 1e-6);
    CHECK(m.max_grad_norm_after_clip <= config.max_grad_norm + 1e-9);
    CHECK(m.clip_fraction >= 0.0);
    CHECK(m.clip_fraction <= 1.0);
    CHECK_NOTHROW(net.params().CheckFinite());
  }
}

TEST_CASE("zero training steps return the initial network") {
  PPOConfig config;
  config.total_env_steps = 0;
  config.seed = 4;
  const auto train = Games(3, 5);
  EpisodeConfig episode;
  episode.horizon = 2;
  const TrainResult r = Train(train, train, episode, Flat(36), config);
  const nn::ActorCritic fresh(Flat(36), 4);
  for (const auto& [name, block] : fresh.params().blocks()) {
    CHECK(r.best->params().at(name).value == block.value);
    CHECK(r.final->params().at(name).value == block.value);
  }
  REQUIRE(r.log.size() == 1);
  CHECK(r.log[0].env_steps == 0);
}

TEST_CASE("training is reproducible end to end") {
  PPOConfig config;
  config.num_envs = 4;
  config.steps_per_rollout = 10;
  config.minibatches = 4;
  config.ppo_epochs = 2;
  config.total_env_steps = 120;
  config.eval_interval = 1;
  config.seed = 11;
  const auto train = Games(4, 6);
  const auto test = Games(2, 7);
  EpisodeConfig episode;
  episode.horizon = 3;
  episode.solver = SolverConfig::Default(SolverKind::kFictitiousPlay);
  auto run = [&](int workers) {
    PPOConfig c = config;
    c.workers = workers;
    std::ostringstream csv;
    WriteTrainLogHeader(csv);
    TrainHooks hooks;
    hooks.on_log = [&](const TrainLogRow& row) { WriteTrainLogRow(csv, row); };
    const TrainResult r = Train(train, test, episode, Flat(36), c, hooks);
    CHECK(r.best_env_steps > 0);
    for (const auto& row : r.log) {
      CHECK(row.train_score >= 0.0);
      CHECK(row.test_score <= 1.0);
    }
    return csv.str();
  };
  const std::string a = run(1);
  CHECK(a == run(1));
  CHECK(a == run(3));
  CHECK(a.rfind("env_steps,mean_episode_return,train_score,test_score,"
                "policy_loss,value_loss,entropy,clip_fraction\n", 0) == 0);
  int rows = 0;
  for (char ch : a) rows += ch == '\n';
  CHECK(rows == 1 + 1 + 3);  // header, step 0, one row per update
}

TEST_CASE("evaluation") {
  const auto games = Games(6, 8);
  EpisodeConfig episode;
  episode.horizon = 4;
  const EvaluationResult zero = EvaluatePolicy(ZeroPolicy(10), games, episode, 1);
  for (double s : zero.scores) CHECK(s == doctest::Approx(0.0).epsilon(1e-9));
  const EvaluationResult random = EvaluatePolicy(RandomPolicy(10), games, episode, 1);
  for (double s : random.scores) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK(EvaluatePolicy(RandomPolicy(10), games, episode, 1, 3).scores ==
        random.scores);

  std::vector<NormalFormGame> with_flat = games;
  with_flat.push_back(NormalFormGame::Constant({3, 3}, 1.0));
  const EvaluationResult ex = EvaluatePolicy(RandomPolicy(10), with_flat, episode, 1);
  CHECK(ex.num_excluded == 1);
  CHECK(ex.excluded.back());
  CHECK(ex.mean_score == doctest::Approx(random.mean_score));
}

TEST_CASE("sanity target is learned") {
  PPOConfig config;
  config.total_env_steps = 20000;
  auto envs = TargetEnvs(config.num_envs, 1);
  const TrainResult r = TrainOnEnvs(envs, Flat(4), config);
  const nn::Observation obs = envs[0]->Observe();
  const nn::Observation* batch[] = {&obs};
  const Matrix mean = r.final->Forward(batch).mean;
  for (int i = 0; i < 10; ++i) {
    CHECK(std::abs(mean(0, i) - kSanityTarget[i]) <= 0.1);
  }
}

}  // namespace
}  // namespace gamemod
