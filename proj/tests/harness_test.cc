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


#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "gamemod/harness.h"

namespace gamemod {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gamemod_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig Tiny(const std::string& dir) {
  ExperimentConfig c = ExperimentConfig::ForCase(ExperimentCase::kSimple);
  c.train_games = 6;
  c.test_games = 4;
  c.episode.horizon = 3;
  c.episode.solver = SolverConfig::Default(SolverKind::kFictitiousPlay);
  c.out_dir = TempDir(dir).string();
  c.Resolve();
  return c;
}

TEST_CASE("cases and profiles") {
  CHECK(CaseActionCounts(ExperimentCase::kSimple) == std::vector<int>{5, 5});
  CHECK(CaseActionCounts(ExperimentCase::kGeneral).empty());
  CHECK(ParseCase("general") == ExperimentCase::kGeneral);
  CHECK_THROWS(ParseCase("huge"));

  const ExperimentConfig simple =
      ExperimentConfig::ForCase(ExperimentCase::kSimple);
  CHECK(simple.network.mode == nn::EncoderMode::kFlatMlp);
  CHECK(simple.network.flat_input_dim == 100);
  CHECK(simple.network.action_dim == 10);
  CHECK(simple.train_games == 3000);
  CHECK(simple.test_games == 500);
  CHECK_NOTHROW(simple.Validate());

  ExperimentConfig general = ExperimentConfig::ForCase(ExperimentCase::kGeneral);
  CHECK(general.network.mode == nn::EncoderMode::kGraph);
  CHECK_NOTHROW(general.Validate());
  general.network.mode = nn::EncoderMode::kFlatMlp;
  CHECK_THROWS(general.Validate());

  ExperimentConfig desk = simple;
  desk.ApplyDeskScale();
  CHECK(desk.train_games + desk.test_games == 250);
  CHECK(desk.episode.horizon == 20);
  CHECK(desk.ppo.total_env_steps == 100000);
  CHECK(desk.seeds.size() == 3);

  ExperimentConfig ranked = simple;
  ranked.episode.rank = 5;
  CHECK_THROWS(ranked.Validate());
  ranked.Resolve();
  CHECK(ranked.network.action_dim == 5);
  CHECK_NOTHROW(ranked.Validate());
}

TEST_CASE("config json round trip") {
  ExperimentConfig c = ExperimentConfig::ForCase(ExperimentCase::kGeneral);
  c.train_games = 17;
  c.seeds = {4, 9};
  c.episode.horizon = 10;
  c.episode.rank = 20;
  c.episode.solver = SolverConfig::Default(SolverKind::kProjectedReplicator);
  c.episode.solver.dt = 0.05;
  c.ppo.clip = 0.3;
  c.network.gcn_layers = 3;
  c.Resolve();
  const ExperimentConfig back = ExperimentConfig::FromJson(
      c.ToJson(), ExperimentConfig::ForCase(ExperimentCase::kSimple));
  CHECK(back.ToJson() == c.ToJson());
  CHECK(back.game_case == ExperimentCase::kGeneral);
  CHECK(back.episode.solver.kind == SolverKind::kProjectedReplicator);
  CHECK(back.episode.solver.dt == 0.05);

  ExperimentConfig base;
  const ExperimentConfig partial =
      ExperimentConfig::FromJson({{"ppo", {{"clip", 0.1}}}}, base);
  CHECK(partial.ppo.clip == 0.1);
  CHECK(partial.ppo.num_envs == base.ppo.num_envs);

  CHECK_THROWS_AS(ExperimentConfig::FromJson({{"bogus", 1}}, base),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::FromJson({{"ppo", {{"clipp", 0.1}}}}, base),
      std::invalid_argument);
  CHECK_THROWS(LoadExperimentConfig("/nonexistent/config.json", base));
}

TEST_CASE("aggregate") {
  const Aggregate a = Aggregate::Of({1.0, 2.0, 3.0});
  CHECK(a.mean == 2.0);
  CHECK(a.std == doctest::Approx(1.0));
  CHECK(a.values.size() == 3);
  CHECK(Aggregate::Of({5.0}).std == 0.0);
}

TEST_CASE("full-size simple datasets") {
  ExperimentConfig c = ExperimentConfig::ForCase(ExperimentCase::kSimple);
  const Datasets d = SampleDatasets(c);
  CHECK(d.train.size() + d.test.size() == 3500);
  std::set<std::uint64_t> train_seeds;
  for (const auto& e : d.train) {
    CHECK(e.game.shape() == std::vector<int>{2, 5, 5});
    train_seeds.insert(e.seed);
  }
  for (const auto& e : d.test) {
    CHECK(e.game.shape() == std::vector<int>{2, 5, 5});
    CHECK(train_seeds.count(e.seed) == 0);
  }
  CHECK(TrainDataSeed(7) != TestDataSeed(7));
}

TEST_CASE("sample writes byte-identical files") {
  ExperimentConfig c = ExperimentConfig::ForCase(ExperimentCase::kGeneral);
  c.ApplyDeskScale();
  c.out_dir = TempDir("sample_a").string();
  const SampleReport a = CmdSample(c);
  CHECK(a.num_train == 200);
  CHECK(a.num_test == 50);
  c.out_dir = TempDir("sample_b").string();
  const SampleReport b = CmdSample(c);
  CHECK(Slurp(a.train_path) == Slurp(b.train_path));
  CHECK(Slurp(a.test_path) == Slurp(b.test_path));
  CHECK(ReadDataset(a.test_path.string()).size() == 50);
  CHECK(fs::exists(fs::path(c.out_dir) / "manifest_sample.json"));

  c.train_dataset = a.train_path.string();
  c.test_dataset = a.test_path.string();
  const Datasets loaded = LoadDatasets(c);
  CHECK(loaded.train.size() == 200);
  c.test_dataset.clear();
  CHECK_THROWS(LoadDatasets(c));
}

TEST_CASE("random and zero baselines") {
  ExperimentConfig c = Tiny("baseline");
  c.baseline_episodes_per_game = 2;
  const Datasets data = SampleDatasets(c);
  const BaselineReport zero =
      RunBaseline(c, data, ZeroPolicy(c.network.action_dim));
  for (double v : zero.train.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
  for (double v : zero.test.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));

  const BaselineReport random = CmdBaseline(c);
  REQUIRE(random.train.values.size() == c.seeds.size());
  for (double v : random.train.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(random.excluded_test.size() == c.seeds.size());
  const std::string csv = Slurp(fs::path(c.out_dir) / "baseline.csv");
  CHECK(csv.rfind("seed,train_score,test_score,excluded_train,excluded_test\n",
                  0) == 0);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(csv.find("\nstd,") != std::string::npos);
  CHECK(CmdBaseline(c).test.values == random.test.values);
}

TEST_CASE("train and eval outputs") {
  ExperimentConfig c = Tiny("train");
  c.seeds = {1, 2};
  c.ppo.num_envs = 2;
  c.ppo.steps_per_rollout = 6;
  c.ppo.minibatches = 3;
  c.ppo.ppo_epochs = 1;
  c.ppo.total_env_steps = 24;
  c.ppo.eval_interval = 1;
  const TrainReport r = CmdTrain(c);
  CHECK(r.best_test.values.size() == 2);
  const fs::path dir(c.out_dir);
  for (const char* f : {"train_log_seed1.csv", "train_log_seed2.csv",
                        "best_seed1.json", "final_seed2.json",
                        "train_summary.csv", "manifest_train.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const std::vector<EvalRow> rows =
      CmdEval(c, {r.best_checkpoints[0].string(), r.best_checkpoints[1].string()});
  REQUIRE(rows.size() == 2);
  // The best checkpoint reproduces the score that selected it.
  CHECK(rows[0].test_score == doctest::Approx(r.best_test.values[0]).epsilon(1e-12));
  CHECK(rows[1].train_score ==
        doctest::Approx(r.best_train.values[1]).epsilon(1e-12));
  CHECK_THROWS(CmdEval(c, {}));
}

TEST_CASE("crafted sweeps improve on the unmodified game") {
  for (SolverKind kind :
       {SolverKind::kAlphaRank, SolverKind::kRegretMatching,
        SolverKind::kFictitiousPlay, SolverKind::kProjectedReplicator}) {
    ExperimentConfig c = Tiny("sweep");
    c.episode.solver = SolverConfig::Default(kind);
    const NormalFormGame game = CraftedGame(kind);
    const SweepReport r = CmdSweep(c, game);
    CHECK(r.sweep.deltas.size() == 41);
    CHECK(r.sweep.nashconv.size() == 41 * 41);
    CHECK(r.sweep.at(20, 20) == doctest::Approx(r.sweep.unmodified_nc).epsilon(1e-12));
    CHECK(r.sweep.min_nc < r.sweep.unmodified_nc);
    CHECK(fs::exists(r.csv_path));
  }
}

TEST_CASE("gradient checks stay below tolerance") {
  const std::vector<GradCheckRow> rows = RunGradChecks(5);
  CHECK(rows.size() >= 8);
  for (const auto& r : rows) {
    INFO(r.name);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("solver bench covers every solver") {
  ExperimentConfig c = Tiny("bench");
  const auto rows = CmdSolverBench(c, 3);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.games == 3);
    CHECK(r.mean_nashconv >= 0.0);
  }
  CHECK_THROWS(CmdSolverBench(c, 0));
}

}  // namespace
}  // namespace gamemod
