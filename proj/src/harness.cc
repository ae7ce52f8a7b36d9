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


#include "gamemod/harness.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gamemod/autodiff.h"

namespace gamemod {

namespace fs = std::filesystem;
using nlohmann::json;

std::string CaseName(ExperimentCase c) {
  return c == ExperimentCase::kSimple ? "simple" : "general";
}

ExperimentCase ParseCase(const std::string& name) {
  if (name == "simple") return ExperimentCase::kSimple;
  if (name == "general") return ExperimentCase::kGeneral;
  throw std::invalid_argument("unknown case: " + name);
}

std::vector<int> CaseActionCounts(ExperimentCase c) {
  if (c == ExperimentCase::kSimple) return {5, 5};
  return {};
}

ExperimentConfig ExperimentConfig::ForCase(ExperimentCase c) {
  ExperimentConfig config;
  config.game_case = c;
  config.network.mode = c == ExperimentCase::kSimple
                            ? nn::EncoderMode::kFlatMlp
                            : nn::EncoderMode::kGraph;
  config.Resolve();
  return config;
}

void ExperimentConfig::ApplyDeskScale() {
  train_games = 200;
  test_games = 50;
  episode.horizon = 20;
  ppo.total_env_steps = 100000;
  ppo.eval_interval = 1;
  seeds = {0, 1, 2};
}

void ExperimentConfig::Resolve() {
  network.action_dim = episode.rank;
  if (network.mode == nn::EncoderMode::kFlatMlp) {
    const std::vector<int> counts = CaseActionCounts(game_case);
    if (!counts.empty()) {
      const int joint = std::accumulate(counts.begin(), counts.end(), 1,
                                        std::multiplies<int>());
      network.flat_input_dim = 2 * static_cast<int>(counts.size()) * joint;
    }
  }
  ppo.workers = workers;
}

void ExperimentConfig::Validate() const {
  if (train_games < 1 || test_games < 0) {
    throw std::invalid_argument("dataset sizes must be positive");
  }
  if (seeds.empty()) throw std::invalid_argument("at least one seed required");
  if (baseline_episodes_per_game < 1) {
    throw std::invalid_argument("baseline_episodes_per_game must be >= 1");
  }
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (game_case == ExperimentCase::kGeneral &&
      network.mode == nn::EncoderMode::kFlatMlp) {
    throw std::invalid_argument(
        "flat encoding needs one game shape; use graph for the general case");
  }
  if (network.action_dim != episode.rank) {
    throw std::invalid_argument("network action_dim must equal the CP rank");
  }
  episode.Validate();
  network.Validate();
  ppo.Validate();
}

namespace {

std::string MethodName(StationaryMethod m) {
  return m == StationaryMethod::kPowerIteration ? "power" : "elimination";
}

StationaryMethod ParseMethod(const std::string& name) {
  if (name == "power") return StationaryMethod::kPowerIteration;
  if (name == "elimination") return StationaryMethod::kElimination;
  throw std::invalid_argument("unknown stationary method: " + name);
}

void RejectUnknown(const json& j, const std::set<std::string>& keys,
                   const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) {
      throw std::invalid_argument("unknown config key: " + where + key);
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

json SolverToJson(const SolverConfig& s) {
  return {{"kind", SolverName(s.kind)},
          {"iterations", s.iterations},
          {"dt", s.dt},
          {"gamma_explore", s.gamma_explore},
          {"alpha", s.alpha},
          {"population", s.population},
          {"stationary_method", MethodName(s.stationary_method)}};
}

void SolverFromJson(const json& j, SolverConfig& s) {
  RejectUnknown(j,
                {"kind", "iterations", "dt", "gamma_explore", "alpha",
                 "population", "stationary_method"},
                "episode.solver.");
  // A new kind starts from that kind's defaults.
  if (j.contains("kind")) {
    s = SolverConfig::Default(ParseSolverKind(j.at("kind").get<std::string>()));
  }
  Read(j, "iterations", s.iterations);
  Read(j, "dt", s.dt);
  Read(j, "gamma_explore", s.gamma_explore);
  Read(j, "alpha", s.alpha);
  Read(j, "population", s.population);
  if (j.contains("stationary_method")) {
    s.stationary_method = ParseMethod(j.at("stationary_method"));
  }
}

}  // namespace

json ExperimentConfig::ToJson() const {
  json j;
  j["case"] = CaseName(game_case);
  j["train_games"] = train_games;
  j["test_games"] = test_games;
  j["data_seed"] = data_seed;
  j["train_dataset"] = train_dataset;
  j["test_dataset"] = test_dataset;
  j["seeds"] = seeds;
  j["baseline_episodes_per_game"] = baseline_episodes_per_game;
  j["workers"] = workers;
  j["out_dir"] = out_dir;
  j["episode"] = {{"horizon", episode.horizon},
                  {"weight_step", episode.weight_step},
                  {"rank", episode.rank},
                  {"discount", episode.discount},
                  {"als_max_iterations", episode.als.max_iterations},
                  {"als_tolerance", episode.als.tolerance},
                  {"als_seed", episode.als.seed},
                  {"solver", SolverToJson(episode.solver)}};
  j["network"] = {{"encoder", nn::EncoderName(network.mode)},
                  {"gcn_layers", network.gcn_layers},
                  {"node_embed_dim", network.node_embed_dim},
                  {"mlp_hidden", network.mlp_hidden},
                  {"mlp_layers", network.mlp_layers},
                  {"action_dim", network.action_dim},
                  {"flat_input_dim", network.flat_input_dim},
                  {"alpha", network.alpha},
                  {"population", network.population}};
  j["ppo"] = {{"learning_rate", ppo.learning_rate},
              {"discount", ppo.discount},
              {"entropy_coef", ppo.entropy_coef},
              {"value_coef", ppo.value_coef},
              {"max_grad_norm", ppo.max_grad_norm},
              {"num_envs", ppo.num_envs},
              {"steps_per_rollout", ppo.steps_per_rollout},
              {"ppo_epochs", ppo.ppo_epochs},
              {"clip", ppo.clip},
              {"minibatches", ppo.minibatches},
              {"total_env_steps", ppo.total_env_steps},
              {"eval_interval", ppo.eval_interval}};
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const json& j,
                                            ExperimentConfig base) {
  RejectUnknown(j,
                {"case", "train_games", "test_games", "data_seed",
                 "train_dataset", "test_dataset", "seeds",
                 "baseline_episodes_per_game", "workers", "out_dir",
                 "episode", "network", "ppo"},
                "");
  ExperimentConfig c = std::move(base);
  if (j.contains("case")) {
    const ExperimentCase next = ParseCase(j.at("case"));
    if (next != c.game_case) {
      const ExperimentConfig fresh = ForCase(next);
      c.game_case = next;
      c.network.mode = fresh.network.mode;
    }
  }
  Read(j, "train_games", c.train_games);
  Read(j, "test_games", c.test_games);
  Read(j, "data_seed", c.data_seed);
  Read(j, "train_dataset", c.train_dataset);
  Read(j, "test_dataset", c.test_dataset);
  Read(j, "seeds", c.seeds);
  Read(j, "baseline_episodes_per_game", c.baseline_episodes_per_game);
  Read(j, "workers", c.workers);
  Read(j, "out_dir", c.out_dir);
  if (j.contains("episode")) {
    const json& e = j.at("episode");
    RejectUnknown(e,
                  {"horizon", "weight_step", "rank", "discount",
                   "als_max_iterations", "als_tolerance", "als_seed",
                   "solver"},
                  "episode.");
    Read(e, "horizon", c.episode.horizon);
    Read(e, "weight_step", c.episode.weight_step);
    Read(e, "rank", c.episode.rank);
    Read(e, "discount", c.episode.discount);
    Read(e, "als_max_iterations", c.episode.als.max_iterations);
    Read(e, "als_tolerance", c.episode.als.tolerance);
    Read(e, "als_seed", c.episode.als.seed);
    if (e.contains("solver")) SolverFromJson(e.at("solver"), c.episode.solver);
  }
  if (j.contains("network")) {
    const json& n = j.at("network");
    RejectUnknown(n,
                  {"encoder", "gcn_layers", "node_embed_dim", "mlp_hidden",
                   "mlp_layers", "action_dim", "flat_input_dim", "alpha",
                   "population"},
                  "network.");
    if (n.contains("encoder")) {
      c.network.mode = nn::ParseEncoderMode(n.at("encoder"));
    }
    Read(n, "gcn_layers", c.network.gcn_layers);
    Read(n, "node_embed_dim", c.network.node_embed_dim);
    Read(n, "mlp_hidden", c.network.mlp_hidden);
    Read(n, "mlp_layers", c.network.mlp_layers);
    Read(n, "action_dim", c.network.action_dim);
    Read(n, "flat_input_dim", c.network.flat_input_dim);
    Read(n, "alpha", c.network.alpha);
    Read(n, "population", c.network.population);
  }
  if (j.contains("ppo")) {
    const json& p = j.at("ppo");
    RejectUnknown(p,
                  {"learning_rate", "discount", "entropy_coef", "value_coef",
                   "max_grad_norm", "num_envs", "steps_per_rollout",
                   "ppo_epochs", "clip", "minibatches", "total_env_steps",
                   "eval_interval"},
                  "ppo.");
    Read(p, "learning_rate", c.ppo.learning_rate);
    Read(p, "discount", c.ppo.discount);
    Read(p, "entropy_coef", c.ppo.entropy_coef);
    Read(p, "value_coef", c.ppo.value_coef);
    Read(p, "max_grad_norm", c.ppo.max_grad_norm);
    Read(p, "num_envs", c.ppo.num_envs);
    Read(p, "steps_per_rollout", c.ppo.steps_per_rollout);
    Read(p, "ppo_epochs", c.ppo.ppo_epochs);
    Read(p, "clip", c.ppo.clip);
    Read(p, "minibatches", c.ppo.minibatches);
    Read(p, "total_env_steps", c.ppo.total_env_steps);
    Read(p, "eval_interval", c.ppo.eval_interval);
  }
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path,
                                      ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return ExperimentConfig::FromJson(j, std::move(base));
}

std::uint64_t TrainDataSeed(std::uint64_t data_seed) { return 2 * data_seed; }
std::uint64_t TestDataSeed(std::uint64_t data_seed) {
  return 2 * data_seed + 1;
}

Datasets SampleDatasets(const ExperimentConfig& config) {
  const std::vector<int> counts = CaseActionCounts(config.game_case);
  return {SampleDataset(counts, config.train_games,
                        TrainDataSeed(config.data_seed)),
          SampleDataset(counts, config.test_games,
                        TestDataSeed(config.data_seed))};
}

Datasets LoadDatasets(const ExperimentConfig& config) {
  if (config.train_dataset.empty() != config.test_dataset.empty()) {
    throw std::invalid_argument("give both dataset files or neither");
  }
  if (config.train_dataset.empty()) return SampleDatasets(config);
  return {ReadDataset(config.train_dataset), ReadDataset(config.test_dataset)};
}

std::vector<NormalFormGame> GamesOf(const std::vector<DatasetEntry>& entries) {
  std::vector<NormalFormGame> games;
  games.reserve(entries.size());
  for (const auto& e : entries) games.push_back(e.game);
  return games;
}

Aggregate Aggregate::Of(std::vector<double> values) {
  Aggregate a;
  a.values = std::move(values);
  const double n = static_cast<double>(a.values.size());
  if (a.values.empty()) return a;
  a.mean = std::accumulate(a.values.begin(), a.values.end(), 0.0) / n;
  if (a.values.size() > 1) {
    double ss = 0.0;
    for (double v : a.values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / (n - 1.0));
  }
  return a;
}

namespace {

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() +
                                     " for writing");
  out << std::setprecision(17);
  return out;
}

void Finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

fs::path PrepareOutDir(const ExperimentConfig& config) {
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create " + dir.string() + ": " +
                             ec.message());
  }
  return dir;
}

// Rows for each seed followed by mean and std rows.
void WriteAggregateRows(std::ostream& out, const std::vector<std::uint64_t>& seeds,
                        const std::vector<const Aggregate*>& columns,
                        const std::vector<std::vector<double>>& extra = {}) {
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    out << seeds[s];
    for (const Aggregate* a : columns) out << ',' << a->values[s];
    for (const auto& e : extra) out << ',' << e[s];
    out << '\n';
  }
  out << "mean";
  for (const Aggregate* a : columns) out << ',' << a->mean;
  for (std::size_t i = 0; i < extra.size(); ++i) out << ',';
  out << "\nstd";
  for (const Aggregate* a : columns) out << ',' << a->std;
  for (std::size_t i = 0; i < extra.size(); ++i) out << ',';
  out << '\n';
}

}  // namespace

void WriteManifest(const fs::path& out_dir, const std::string& command,
                   const ExperimentConfig& config) {
  const fs::path path = out_dir / ("manifest_" + command + ".json");
  std::ofstream out = OpenOut(path);
  const json j = {{"command", command}, {"config", config.ToJson()}};
  out << j.dump(2) << '\n';
  Finish(out, path);
}

SampleReport CmdSample(const ExperimentConfig& config) {
  config.Validate();
  const fs::path dir = PrepareOutDir(config);
  const Datasets data = SampleDatasets(config);
  SampleReport report{dir / "train.jsonl", dir / "test.jsonl",
                      static_cast<int>(data.train.size()),
                      static_cast<int>(data.test.size())};
  WriteDataset(report.train_path.string(), data.train);
  WriteDataset(report.test_path.string(), data.test);
  WriteManifest(dir, "sample", config);
  return report;
}

BaselineReport RunBaseline(const ExperimentConfig& config, const Datasets& data,
                           const PolicyFn& policy) {
  const std::vector<NormalFormGame> splits[2] = {GamesOf(data.train),
                                                 GamesOf(data.test)};
  BaselineReport report;
  std::vector<double> means[2];
  for (std::uint64_t seed : config.seeds) {
    for (int split = 0; split < 2; ++split) {
      const auto& games = splits[split];
      std::vector<double> per_game(games.size(), 0.0);
      EvaluationResult last;
      for (int e = 0; e < config.baseline_episodes_per_game; ++e) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(split),
                          static_cast<std::uint64_t>(e)};
        std::uint64_t eval_seed;
        seq.generate(reinterpret_cast<std::uint32_t*>(&eval_seed),
                     reinterpret_cast<std::uint32_t*>(&eval_seed) + 2);
        last = EvaluatePolicy(policy, games, config.episode, eval_seed,
                              config.workers);
        for (std::size_t g = 0; g < games.size(); ++g) {
          per_game[g] += last.scores[g] / config.baseline_episodes_per_game;
        }
      }
      double sum = 0.0;
      for (std::size_t g = 0; g < games.size(); ++g) {
        if (!last.excluded[g]) sum += per_game[g];
      }
      const int included = static_cast<int>(games.size()) - last.num_excluded;
      means[split].push_back(included > 0 ? sum / included : 0.0);
      (split == 0 ? report.excluded_train : report.excluded_test)
          .push_back(last.num_excluded);
    }
  }
  report.train = Aggregate::Of(means[0]);
  report.test = Aggregate::Of(means[1]);
  return report;
}

BaselineReport CmdBaseline(const ExperimentConfig& config) {
  config.Validate();
  const fs::path dir = PrepareOutDir(config);
  WriteManifest(dir, "baseline", config);
  const BaselineReport report = RunBaseline(
      config, LoadDatasets(config), RandomPolicy(config.network.action_dim));
  const fs::path path = dir / "baseline.csv";
  std::ofstream out = OpenOut(path);
  out << "seed,train_score,test_score,excluded_train,excluded_test\n";
  std::vector<double> ex_train(report.excluded_train.begin(),
                               report.excluded_train.end());
  std::vector<double> ex_test(report.excluded_test.begin(),
                              report.excluded_test.end());
  WriteAggregateRows(out, config.seeds, {&report.train, &report.test},
                     {ex_train, ex_test});
  Finish(out, path);
  return report;
}

TrainReport RunTraining(const ExperimentConfig& config, const Datasets& data) {
  const fs::path dir = PrepareOutDir(config);
  const std::vector<NormalFormGame> train = GamesOf(data.train);
  const std::vector<NormalFormGame> test = GamesOf(data.test);
  TrainReport report;
  std::vector<double> best_train, best_test;
  for (std::uint64_t seed : config.seeds) {
    PPOConfig ppo = config.ppo;
    ppo.seed = seed;
    ppo.workers = config.workers;
    const std::string tag = "seed" + std::to_string(seed);
    const fs::path log_path = dir / ("train_log_" + tag + ".csv");
    const fs::path best_path = dir / ("best_" + tag + ".json");
    std::ofstream log = OpenOut(log_path);
    WriteTrainLogHeader(log);
    TrainHooks hooks;
    hooks.on_log = [&](const TrainLogRow& row) {
      WriteTrainLogRow(log, row);
      log.flush();
    };
    hooks.on_best = [&](const nn::ActorCritic& net, const TrainLogRow&) {
      nn::SaveCheckpoint(best_path.string(), net);
    };
    const TrainResult result =
        Train(train, test, config.episode, config.network, ppo, hooks);
    Finish(log, log_path);
    nn::SaveCheckpoint(best_path.string(), *result.best);
    nn::SaveCheckpoint((dir / ("final_" + tag + ".json")).string(),
                       *result.final);
    best_train.push_back(result.best_train_score);
    best_test.push_back(result.best_test_score);
    report.best_env_steps.push_back(result.best_env_steps);
    report.best_checkpoints.push_back(best_path);
  }
  report.best_train = Aggregate::Of(best_train);
  report.best_test = Aggregate::Of(best_test);
  const fs::path path = dir / "train_summary.csv";
  std::ofstream out = OpenOut(path);
  out << "seed,best_train_score,best_test_score,best_env_steps\n";
  std::vector<double> steps(report.best_env_steps.begin(),
                            report.best_env_steps.end());
  WriteAggregateRows(out, config.seeds,
                     {&report.best_train, &report.best_test}, {steps});
  Finish(out, path);
  return report;
}

TrainReport CmdTrain(const ExperimentConfig& config) {
  config.Validate();
  WriteManifest(PrepareOutDir(config), "train", config);
  return RunTraining(config, LoadDatasets(config));
}

std::vector<EvalRow> CmdEval(const ExperimentConfig& config,
                             const std::vector<std::string>& checkpoints) {
  config.Validate();
  if (checkpoints.empty()) throw std::invalid_argument("no checkpoints given");
  const fs::path dir = PrepareOutDir(config);
  WriteManifest(dir, "eval", config);
  const Datasets data = LoadDatasets(config);
  const std::vector<NormalFormGame> train = GamesOf(data.train);
  const std::vector<NormalFormGame> test = GamesOf(data.test);
  std::vector<EvalRow> rows;
  for (const std::string& path : checkpoints) {
    nn::ActorCritic net = nn::LoadCheckpoint(path);
    if (net.config().action_dim != config.episode.rank) {
      throw std::invalid_argument(path + ": action_dim does not match rank");
    }
    const PolicyFn policy = GreedyPolicy(net);
    const EvaluationResult tr = EvaluatePolicy(
        policy, train, config.episode, config.seeds.front(), config.workers);
    const EvaluationResult te = EvaluatePolicy(
        policy, test, config.episode, config.seeds.front(), config.workers);
    rows.push_back({path, tr.mean_score, te.mean_score, tr.num_excluded,
                    te.num_excluded});
  }
  const fs::path path = dir / "eval.csv";
  std::ofstream out = OpenOut(path);
  out << "checkpoint,train_score,test_score,excluded_train,excluded_test\n";
  std::vector<double> tr, te;
  for (const EvalRow& r : rows) {
    out << r.checkpoint << ',' << r.train_score << ',' << r.test_score << ','
        << r.excluded_train << ',' << r.excluded_test << '\n';
    tr.push_back(r.train_score);
    te.push_back(r.test_score);
  }
  const Aggregate atr = Aggregate::Of(tr), ate = Aggregate::Of(te);
  out << "mean," << atr.mean << ',' << ate.mean << ",,\n";
  out << "std," << atr.std << ',' << ate.std << ",,\n";
  Finish(out, path);
  return rows;
}

NormalFormGame CraftedGame(SolverKind kind) {
  // Payoffs of player 1 then player 2, row-major over (a^1, a^2).
  switch (kind) {
    case SolverKind::kAlphaRank:
      return NormalFormGame({2, 2}, {3, -1, -3, 3, -1, -1, 5, 1});
    case SolverKind::kRegretMatching:
      return NormalFormGame({2, 2}, {3, 0, -1, 3, -5, 3, 4, 2});
    case SolverKind::kFictitiousPlay:
      return NormalFormGame({2, 2}, {-1, 4, 2, -2, 5, -4, -3, 3});
    case SolverKind::kProjectedReplicator:
      return NormalFormGame({2, 2}, {0, 3, -5, 5, -4, -1, 3, 0});
  }
  throw std::invalid_argument("unknown solver");
}

SweepReport CmdSweep(const ExperimentConfig& config,
                     const NormalFormGame& game) {
  const fs::path dir = PrepareOutDir(config);
  WriteManifest(dir, "sweep", config);
  const std::string name = SolverName(config.episode.solver.kind);
  SweepReport report;
  report.sweep = Sweep2x2(game, config.episode.solver);
  report.csv_path = dir / ("sweep_" + name + ".csv");
  std::ofstream out = OpenOut(report.csv_path);
  WriteSweepCsv(out, report.sweep);
  Finish(out, report.csv_path);
  const fs::path summary = dir / ("sweep_" + name + "_summary.csv");
  std::ofstream s = OpenOut(summary);
  s << "solver,unmodified_nashconv,min_nashconv,argmin_delta1,argmin_delta2\n"
    << name << ',' << report.sweep.unmodified_nc << ',' << report.sweep.min_nc
    << ',' << report.sweep.argmin_delta1 << ',' << report.sweep.argmin_delta2
    << '\n';
  Finish(s, summary);
  return report;
}

namespace {

nn::Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng,
                        double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

std::vector<GradCheckRow> RunGradChecks(std::uint64_t seed, double eps) {
  using namespace nn;
  std::mt19937_64 rng(seed);
  std::vector<GradCheckRow> rows;

  {
    ParamStore p;
    p.Add("x", RandomMatrix(4, 6, rng));
    p.Add("w", RandomMatrix(6, 3, rng, 0.5));
    p.Add("b", RandomMatrix(1, 3, rng, 0.1));
    const Matrix proj = RandomMatrix(4, 3, rng);
    rows.push_back({"dense_tanh", GradCheck(
                                      [&](Tape& t) {
                                        Var h = Tanh(Add(
                                            MatMul(t.Param(p, "x"),
                                                   t.Param(p, "w")),
                                            t.Param(p, "b")));
                                        return Sum(Mul(h, t.Constant(proj)));
                                      },
                                      p, eps)});
  }
  {
    ParamStore p;
    Matrix adj = RandomMatrix(5, 5, rng).cwiseAbs();
    p.Add("adj", (adj + adj.transpose()) / 2.0);
    p.Add("h", RandomMatrix(5, 3, rng));
    p.Add("w", RandomMatrix(3, 4, rng));
    p.Add("b", RandomMatrix(1, 4, rng, 0.1));
    const Matrix proj = RandomMatrix(5, 4, rng);
    rows.push_back({"gcn", GradCheck(
                               [&](Tape& t) {
                                 Var out = GcnLayer(
                                     t.Param(p, "adj"), t.Param(p, "h"),
                                     t.Param(p, "w"), t.Param(p, "b"));
                                 return Sum(Mul(out, t.Constant(proj)));
                               },
                               p, eps)});
  }
  {
    ParamStore p;
    p.Add("h", RandomMatrix(6, 4, rng));
    const Matrix proj = RandomMatrix(1, 4, rng);
    rows.push_back({"mean_pool", GradCheck(
                                     [&](Tape& t) {
                                       return Sum(Mul(MeanRows(t.Param(p, "h")),
                                                      t.Constant(proj)));
                                     },
                                     p, eps)});
  }
  {
    ParamStore p;
    p.Add("mean", RandomMatrix(5, 3, rng));
    p.Add("log_std", RandomMatrix(1, 3, rng, 0.3));
    const Matrix actions = RandomMatrix(5, 3, rng);
    rows.push_back(
        {"gaussian_head", GradCheck(
                              [&](Tape& t) {
                                Var lp = GaussianLogProb(t.Param(p, "mean"),
                                                         t.Param(p, "log_std"),
                                                         actions);
                                return Add(Sum(lp),
                                           GaussianEntropy(t.Param(p, "log_std")));
                              },
                              p, eps)});
  }
  for (EncoderMode mode : {EncoderMode::kGraph, EncoderMode::kFlatMlp}) {
    NetworkConfig c;
    c.mode = mode;
    c.node_embed_dim = 4;
    c.mlp_hidden = 8;
    c.action_dim = 3;
    c.flat_input_dim = 2 * 2 * 6;
    ActorCritic net(c, rng());
    std::vector<Observation> obs;
    for (int i = 0; i < 3; ++i) {
      obs.push_back(MakeObservation(c, SampleRandomGame({{2, 3}}, rng()),
                                    SampleRandomGame({{2, 3}}, rng())));
    }
    std::vector<const Observation*> batch;
    for (const auto& o : obs) batch.push_back(&o);
    const Matrix proj = RandomMatrix(3, 3, rng);
    rows.push_back(
        {"actor_critic_" + EncoderName(mode),
         GradCheck(
             [&](Tape& t) {
               Var mean = net.PolicyMean(t, batch);
               return Add(Sum(Mul(mean, t.Constant(proj))),
                          Sum(Square(net.Value(t, batch))));
             },
             net.params(), eps)});

    // Composed PPO loss with ratios away from one and from the clip edges.
    const auto out = net.Forward(batch);
    Matrix actions = out.mean + RandomMatrix(3, 3, rng, 0.5);
    std::vector<double> old_lp, adv, ret;
    const double shift[] = {0.05, -0.1, 0.12};
    for (int i = 0; i < 3; ++i) {
      const Eigen::RowVectorXd m = out.mean.row(i), a = actions.row(i);
      DiagGaussian d{{m.data(), 3}, {out.log_std.data(), 3}};
      old_lp.push_back(d.LogProb({a.data(), 3}) + shift[i]);
      adv.push_back(std::normal_distribution<double>()(rng));
      ret.push_back(std::normal_distribution<double>()(rng));
    }
    const PPOConfig ppo;
    rows.push_back({"ppo_loss_" + EncoderName(mode),
                    GradCheck(
                        [&](Tape& t) {
                          return BuildPPOLoss(t, net, batch, actions, old_lp,
                                              adv, ret, ppo)
                              .total;
                        },
                        net.params(), eps)});
  }
  return rows;
}

std::vector<GradCheckRow> CmdGradCheck(const ExperimentConfig& config) {
  const fs::path dir = PrepareOutDir(config);
  WriteManifest(dir, "grad-check", config);
  const std::vector<GradCheckRow> rows = RunGradChecks(config.seeds.front());
  const fs::path path = dir / "grad_check.csv";
  std::ofstream out = OpenOut(path);
  out << "check,max_rel_error\n";
  for (const auto& r : rows) out << r.name << ',' << r.max_rel_error << '\n';
  Finish(out, path);
  return rows;
}

std::vector<SolverBenchRow> CmdSolverBench(const ExperimentConfig& config,
                                           int num_games) {
  if (num_games < 1) throw std::invalid_argument("num_games must be >= 1");
  const fs::path dir = PrepareOutDir(config);
  WriteManifest(dir, "solver-bench", config);
  const std::vector<DatasetEntry> entries =
      SampleDataset(CaseActionCounts(config.game_case), num_games,
                    TestDataSeed(config.data_seed));
  std::vector<SolverBenchRow> rows;
  for (SolverKind kind :
       {SolverKind::kAlphaRank, SolverKind::kRegretMatching,
        SolverKind::kFictitiousPlay, SolverKind::kProjectedReplicator}) {
    SolverConfig solver = kind == config.episode.solver.kind
                              ? config.episode.solver
                              : SolverConfig::Default(kind);
    SolverBenchRow row{SolverName(kind), num_games, 0.0, 0.0};
    for (const DatasetEntry& e : entries) {
      const auto start = std::chrono::steady_clock::now();
      const Solution s = Solve(e.game, solver);
      const auto stop = std::chrono::steady_clock::now();
      row.mean_micros +=
          std::chrono::duration<double, std::micro>(stop - start).count() /
          num_games;
      row.mean_nashconv += NashConv(e.game, s.profile) / num_games;
    }
    rows.push_back(row);
  }
  const fs::path path = dir / "solver_bench.csv";
  std::ofstream out = OpenOut(path);
  out << "solver,games,mean_micros,mean_nashconv\n";
  for (const auto& r : rows) {
    out << r.solver << ',' << r.games << ',' << r.mean_micros << ','
        << r.mean_nashconv << '\n';
  }
  Finish(out, path);
  return rows;
}

}  // namespace gamemod
