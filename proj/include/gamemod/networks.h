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


#ifndef GAMEMOD_NETWORKS_H_
#define GAMEMOD_NETWORKS_H_

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gamemod/autodiff.h"
#include "gamemod/game.h"
#include "gamemod/response_graph.h"

namespace gamemod::nn {

enum class EncoderMode { kFlatMlp, kGraph };

std::string EncoderName(EncoderMode mode);
EncoderMode ParseEncoderMode(const std::string& name);

struct NetworkConfig {
  EncoderMode mode = EncoderMode::kGraph;
  int gcn_layers = 2;
  int node_embed_dim = 20;
  int mlp_hidden = 64;
  int mlp_layers = 3;
  int action_dim = 10;
  // Length of the flat observation; FLAT_MLP only.
  int flat_input_dim = 0;
  // Response graphs used by the GRAPH encoder.
  double alpha = kDefaultAlpha;
  double population = kDefaultPopulation;

  void Validate() const;
  // Width of the vector fed to the MLP head.
  int EncodedDim() const;
};

// What the policy sees of a state <M_0, M_{t-1}>. FLAT_MLP keeps both payoff
// tensors flattened and divided by the payoff bound; GRAPH keeps the
// symmetrized response-graph adjacency (C + C^T) / 2 of each game.
struct Observation {
  std::vector<double> flat;
  std::shared_ptr<const Matrix> original_adjacency;
  std::shared_ptr<const Matrix> current_adjacency;
};

Matrix SymmetrizedAdjacency(const ResponseGraph& graph);

Observation MakeObservation(const NetworkConfig& config,
                            const NormalFormGame& original,
                            const NormalFormGame& current);
// Reuses the original game's adjacency, which is fixed for an episode.
Observation MakeObservation(const NetworkConfig& config,
                            const std::shared_ptr<const Matrix>& original,
                            const NormalFormGame& original_game,
                            const NormalFormGame& current);

// relu(A H W + b).
Var GcnLayer(Var adjacency, Var features, Var weight, Var bias);

// Dense layers with tanh between them and a linear last layer.
Var Mlp(Tape& tape, ParamStore& params, const std::string& prefix, Var input,
        int num_layers);

// Orthogonal initialization scaled by `gain`, as in common PPO setups.
Matrix OrthogonalInit(int rows, int cols, double gain, std::mt19937_64& rng);

// Actor and critic networks sharing no weights. Each has its own encoder
// (GCN stack + mean pooling in GRAPH mode) followed by an MLP head. The
// policy's log standard deviation is a learned, state-independent vector.
class ActorCritic {
 public:
  ActorCritic(const NetworkConfig& config, std::uint64_t seed);
  ActorCritic(const NetworkConfig& config, ParamStore params);

  const NetworkConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Encoded features of a batch of observations, one row each. `net` is
  // "actor" or "critic".
  Var Encode(Tape& tape, const std::string& net,
             std::span<const Observation* const> batch);
  Var PolicyMean(Tape& tape, std::span<const Observation* const> batch);
  Var Value(Tape& tape, std::span<const Observation* const> batch);
  Var LogStd(Tape& tape);

  struct Output {
    Matrix mean;      // batch x action_dim
    Matrix value;     // batch x 1
    Matrix log_std;   // 1 x action_dim
  };
  Output Forward(std::span<const Observation* const> batch);

  // Encoder output as plain numbers, for inspection.
  std::vector<double> EncodeValues(const Observation& obs,
                                   const std::string& net = "actor");

 private:
  void Initialize(std::uint64_t seed);
  Var EncodeGraph(Tape& tape, const std::string& net, const Matrix& adjacency);

  NetworkConfig config_;
  ParamStore params_;
};

// Diagonal Gaussian over actions.
struct DiagGaussian {
  std::span<const double> mean;
  std::span<const double> log_std;

  std::vector<double> Sample(std::mt19937_64& rng) const;
  double LogProb(std::span<const double> action) const;
  double Entropy() const;
};

// Row-wise log-density of `actions` (batch x r) under N(mean, exp(log_std)).
Var GaussianLogProb(Var mean, Var log_std, const Matrix& actions);
// Entropy of the state-independent Gaussian, 1 x 1.
Var GaussianEntropy(Var log_std);

// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void Step(ParamStore& params);
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

// Checkpoint: JSON with a format version, the network config and every
// parameter block as {name, rows, cols, values} in row-major order.
inline constexpr int kCheckpointVersion = 1;
void SaveCheckpoint(const std::string& path, const ActorCritic& net);
ActorCritic LoadCheckpoint(const std::string& path);

}  // namespace gamemod::nn

#endif  // GAMEMOD_NETWORKS_H_
