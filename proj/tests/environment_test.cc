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
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gamemod/environment.h"
#include "gamemod/game.h"

namespace gamemod {
namespace {

std::vector<double> RandomWeights(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> w(n);
  for (double& x : w) x = u(rng);
  return w;
}

EpisodeConfig Short(SolverKind kind, int horizon) {
  EpisodeConfig c;
  c.horizon = horizon;
  c.solver = SolverConfig::Default(kind);
  return c;
}

TEST_CASE("episode config validation") {
  EpisodeConfig c;
  CHECK(c.horizon == 50);
  CHECK(c.weight_step == 5.0);
  CHECK(c.rank == 10);
  CHECK(c.discount == 0.99);
  CHECK_NOTHROW(c.Validate());
  c.horizon = 0;
  CHECK_THROWS(c.Validate());
  c.horizon = 1;
  c.rank = 0;
  CHECK_THROWS(c.Validate());
  CHECK_THROWS(Reset(MatchingPennies(), c));
}

TEST_CASE("reset") {
  const EnvState rps = Reset(RockPaperScissors(), Short(SolverKind::kFictitiousPlay, 5));
  CHECK(rps.baseline_nc <= 0.05);
  CHECK(rps.step == 0);
  CHECK(rps.nc_trace == std::vector<double>{rps.baseline_nc});
  CHECK(rps.current.SameShape(rps.original));

  const EnvState flat =
      Reset(NormalFormGame::Constant({3, 3}, 2.0), Short(SolverKind::kAlphaRank, 5));
  CHECK(flat.baseline_nc == 0.0);
  CHECK(ComputeImprovementScore(flat.nc_trace, flat.baseline_nc).excluded);

  const NormalFormGame g = SampleRandomGame({{5, 5}}, 3);
  const EnvState s = Reset(g, Short(SolverKind::kAlphaRank, 5));
  CHECK(s.nc_trace.size() == 1);
  CHECK(s.factors.rank() == 10);
  CHECK(s.baseline_nc == doctest::Approx(NashConv(g, AlphaRankSolve(g))));
}

TEST_CASE("zero weights leave a deterministic episode unchanged") {
  const NormalFormGame g = SampleRandomGame({{5, 5}}, 4);
  EnvState s = Reset(g, Short(SolverKind::kAlphaRank, 6));
  const std::vector<double> zero(10, 0.0);
  for (int t = 0; t < 6; ++t) {
    const StepResult r = Step(s, zero);
    CHECK(std::abs(r.reward) <= 1e-12);
    CHECK(r.done == (t == 5));
    for (std::size_t e = 0; e < g.payoffs().size(); ++e) {
      CHECK(std::abs(s.current.payoffs()[e] - g.payoffs()[e]) <= 1e-12);
    }
  }
  for (double nc : s.nc_trace) {
    CHECK(nc == doctest::Approx(s.baseline_nc).epsilon(1e-10));
  }
  CHECK_THROWS_AS(Step(s, zero), std::logic_error);
}

TEST_CASE("weights are clipped to the unit box") {
  const NormalFormGame g = SampleRandomGame({{4, 4}}, 5);
  EnvState a = Reset(g, Short(SolverKind::kFictitiousPlay, 2));
  EnvState b = Reset(g, Short(SolverKind::kFictitiousPlay, 2));
  std::vector<double> big{7, -3, 1.5, -1, 0.2, 0, 2, -9, 0.5, 1};
  std::vector<double> clipped{1, -1, 1, -1, 0.2, 0, 1, -1, 0.5, 1};
  const StepResult ra = Step(a, big);
  const StepResult rb = Step(b, clipped);
  CHECK(ra.reward == rb.reward);
  CHECK(std::equal(a.current.payoffs().begin(), a.current.payoffs().end(),
                   b.current.payoffs().begin()));
}

TEST_CASE("rewards are NashConv decrements") {
  const NormalFormGame g = SampleRandomGame({{3, 3}}, 6);
  EnvState s = Reset(g, Short(SolverKind::kRegretMatching, 4));
  std::mt19937_64 rng(30);
  for (int t = 0; t < 4; ++t) {
    const double before = s.nc_trace.back();
    const StepResult r = Step(s, RandomWeights(rng, 10));
    CHECK(r.reward == before - r.current_nc);
    CHECK(r.current_nc == s.nc_trace.back());
    CHECK(r.min_nc == s.min_nc());
    CHECK(s.nc_trace.size() == static_cast<std::size_t>(t + 2));
  }
}

TEST_CASE("nash conv is always measured on the original game") {
  const NormalFormGame g = SampleRandomGame({{3, 4}}, 7);
  std::vector<NormalFormGame> seen;
  EpisodeConfig c = Short(SolverKind::kAlphaRank, 5);
  // A stub solver that plays the pure best joint action for player one of
  // whatever game it is handed.
  auto stub = [](const NormalFormGame& game) {
    int best = 0;
    for (int j = 1; j < game.num_joint_actions(); ++j) {
      if (game.payoff(0, j) > game.payoff(0, best)) best = j;
    }
    return Solution{MixedProfile::Pure(game, game.DecodeJoint(best)),
                    std::nullopt, 1};
  };
  c.solver_override = [&](const NormalFormGame& game) {
    seen.push_back(game);
    return stub(game);
  };
  EnvState s = Reset(g, c);
  std::mt19937_64 rng(31);
  for (int t = 0; t < 5; ++t) Step(s, RandomWeights(rng, 10));
  REQUIRE(seen.size() == 6);
  CHECK(std::equal(seen[0].payoffs().begin(), seen[0].payoffs().end(),
                   g.payoffs().begin()));
  bool differs = false;
  for (std::size_t t = 0; t < seen.size(); ++t) {
    const Solution played = stub(seen[t]);
    CHECK(s.nc_trace[t] == NashConv(g, played.profile));
    if (std::abs(NashConv(seen[t], played.profile) - s.nc_trace[t]) > 1e-9) {
      differs = true;
    }
  }
  // The modified games do give different values, so the check has teeth.
  CHECK(differs);
  for (double nc : s.nc_trace) CHECK(nc >= 0.0);
}

TEST_CASE("episode rewards telescope") {
  std::mt19937_64 rng(32);
  const SolverKind kinds[] = {SolverKind::kAlphaRank, SolverKind::kFictitiousPlay,
                              SolverKind::kRegretMatching,
                              SolverKind::kProjectedReplicator};
  for (int e = 0; e < 100; ++e) {
    EpisodeConfig c = Short(kinds[e % 4], 5);
    if (c.solver.kind == SolverKind::kProjectedReplicator) c.solver.iterations = 500;
    EnvState s = Reset(SampleRandomGame({{3, 3}}, rng()), c);
    double total = 0.0;
    while (!s.done()) total += Step(s, RandomWeights(rng, 10)).reward;
    CHECK(std::abs(total - (s.nc_trace.front() - s.nc_trace.back())) <= 1e-12);
    const ImprovementScore score =
        ComputeImprovementScore(s.nc_trace, s.baseline_nc);
    CHECK(score.score >= 0.0);
    CHECK(score.score <= 1.0);
  }
}

TEST_CASE("improvement score") {
  CHECK(ComputeImprovementScore(std::vector<double>{1.0, 0.5, 0.8}, 1.0).score ==
        doctest::Approx(0.5));
  CHECK(ComputeImprovementScore(std::vector<double>{1.0, 1.2, 1.5}, 1.0).score ==
        0.0);
  CHECK(ComputeImprovementScore(std::vector<double>{0.7, 0.0}, 0.7).score == 1.0);
  const ImprovementScore tiny =
      ComputeImprovementScore(std::vector<double>{5e-7, 0.0}, 5e-7);
  CHECK(tiny.excluded);
  CHECK(tiny.score == 0.0);
  CHECK_FALSE(
      ComputeImprovementScore(std::vector<double>{1e-6, 0.0}, 1e-6).excluded);

  std::mt19937_64 rng(33);
  std::exponential_distribution<double> nc(1.0);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> trace(1 + rng() % 30);
    for (double& x : trace) x = (rng() % 10 == 0) ? 0.0 : nc(rng);
    const ImprovementScore s = ComputeImprovementScore(trace, trace[0]);
    CHECK(s.score >= 0.0);
    CHECK(s.score <= 1.0);
  }
}

TEST_CASE("2x2 sweep") {
  const NormalFormGame mp = MatchingPennies();
  const SolverConfig fp = SolverConfig::Default(SolverKind::kFictitiousPlay);
  const SweepResult sweep = Sweep2x2(mp, fp);
  REQUIRE(sweep.deltas.size() == 41);
  CHECK(sweep.nashconv.size() == 41 * 41);
  CHECK(sweep.deltas.front() == doctest::Approx(-2.0));
  CHECK(sweep.deltas.back() == doctest::Approx(2.0));
  CHECK(sweep.deltas[20] == 0.0);
  CHECK(sweep.at(20, 20) == sweep.unmodified_nc);
  CHECK(sweep.unmodified_nc == NashConv(mp, SolveFictitiousPlay(mp, 1000).profile));
  double lowest = 1e300;
  for (double v : sweep.nashconv) lowest = std::min(lowest, v);
  CHECK(sweep.min_nc == lowest);

  // Cell (i, j) modifies only the (0, 0) entries of each player.
  std::vector<double> p(mp.payoffs().begin(), mp.payoffs().end());
  p[0] += sweep.deltas[3];
  p[4] += sweep.deltas[37];
  CHECK(sweep.at(3, 37) ==
        NashConv(mp, SolveFictitiousPlay(mp.WithPayoffs(p), 1000).profile));

  std::ostringstream csv;
  WriteSweepCsv(csv, sweep);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "delta1,delta2,nashconv");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 41 * 41);

  CHECK_THROWS_AS(Sweep2x2(RockPaperScissors(), fp), ShapeError);
  CHECK_THROWS_AS(Sweep2x2(SampleRandomGame({{2, 2, 2}}, 0), fp), ShapeError);
  CHECK_THROWS(Sweep2x2(mp, fp, 2.0, 0.0));
}

}  // namespace
}  // namespace gamemod
