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


#include "gamemod/networks.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace gamemod::nn {

std::string EncoderName(EncoderMode mode) {
  return mode == EncoderMode::kGraph ? "graph" : "flat_mlp";
}

EncoderMode ParseEncoderMode(const std::string& name) {
  if (name == "graph") return EncoderMode::kGraph;
  if (name == "flat_mlp" || name == "flat") return EncoderMode::kFlatMlp;
  throw std::invalid_argument("unknown encoder '" + name + "'");
}

void NetworkConfig::Validate() const {
  if (gcn_layers < 1 || node_embed_dim < 1 || mlp_hidden < 1 ||
      mlp_layers < 1 || action_dim < 1) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  if (mode == EncoderMode::kFlatMlp && flat_input_dim < 1) {
    throw std::invalid_argument("FLAT_MLP needs a positive input size");
  }
}

int NetworkConfig::EncodedDim() const {
  return mode == EncoderMode::kGraph ? 2 * node_embed_dim : flat_input_dim;
}

Matrix SymmetrizedAdjacency(const ResponseGraph& graph) {
  return 0.5 * (graph.transition + graph.transition.transpose());
}

namespace {

std::shared_ptr<const Matrix> AdjacencyOf(const NetworkConfig& config,
                                          const NormalFormGame& game) {
  return std::make_shared<const Matrix>(SymmetrizedAdjacency(
      BuildResponseGraph(game, config.alpha, config.population)));
}

}  // namespace

Observation MakeObservation(const NetworkConfig& config,
                            const NormalFormGame& original,
                            const NormalFormGame& current) {
  std::shared_ptr<const Matrix> adjacency;
  if (config.mode == EncoderMode::kGraph) {
    adjacency = AdjacencyOf(config, original);
  }
  return MakeObservation(config, adjacency, original, current);
}

Observation MakeObservation(const NetworkConfig& config,
                            const std::shared_ptr<const Matrix>& original,
                            const NormalFormGame& original_game,
                            const NormalFormGame& current) {
  Observation obs;
  if (config.mode == EncoderMode::kGraph) {
    obs.original_adjacency = original ? original : AdjacencyOf(config, original_game);
    obs.current_adjacency = AdjacencyOf(config, current);
    return obs;
  }
  if (!original_game.SameShape(current)) {
    throw ShapeError("original and current games differ in shape");
  }
  const auto a = original_game.payoffs();
  const auto b = current.payoffs();
  if (static_cast<int>(a.size() + b.size()) != config.flat_input_dim) {
    throw ShapeError("game size does not match the flat encoder input (" +
                     std::to_string(a.size() + b.size()) + " vs " +
                     std::to_string(config.flat_input_dim) + ")");
  }
  obs.flat.reserve(a.size() + b.size());
  for (double v : a) obs.flat.push_back(v / kPayoffBound);
  for (double v : b) obs.flat.push_back(v / kPayoffBound);
  return obs;
}

Var GcnLayer(Var adjacency, Var features, Var weight, Var bias) {
  return Relu(Add(MatMul(MatMul(adjacency, features), weight), bias));
}

Var Mlp(Tape& tape, ParamStore& params, const std::string& prefix, Var input,
        int num_layers) {
  Var h = input;
  for (int i = 0; i < num_layers; ++i) {
    const std::string name = prefix + "/mlp" + std::to_string(i);
    h = Add(MatMul(h, tape.Param(params, name + "/w")),
            tape.Param(params, name + "/b"));
    if (i + 1 < num_layers) h = Tanh(h);
  }
  return h;
}

Matrix OrthogonalInit(int rows, int cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Matrix a(big, small);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(big, small);
  // Sign fix so the distribution is uniform over orthogonal matrices.
  const Matrix r = qr.matrixQR().topLeftCorner(small, small);
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (rows < cols) return gain * q.transpose();
  return gain * q;
}

ActorCritic::ActorCritic(const NetworkConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.Validate();
  Initialize(seed);
}

ActorCritic::ActorCritic(const NetworkConfig& config, ParamStore params)
    : config_(config), params_(std::move(params)) {
  config_.Validate();
  ActorCritic reference(config_, 0);
  for (const auto& [name, block] : reference.params_.blocks()) {
    if (!params_.Contains(name)) {
      throw std::invalid_argument("missing parameter " + name);
    }
    const Matrix& got = params_.at(name).value;
    if (got.rows() != block.value.rows() || got.cols() != block.value.cols()) {
      throw std::invalid_argument("parameter " + name + " has the wrong shape");
    }
  }
  if (params_.blocks().size() != reference.params_.blocks().size()) {
    throw std::invalid_argument("checkpoint has unexpected parameters");
  }
}

void ActorCritic::Initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double hidden_gain = std::sqrt(2.0);
  for (const std::string net : {"actor", "critic"}) {
    if (config_.mode == EncoderMode::kGraph) {
      int in = 1;
      for (int i = 0; i < config_.gcn_layers; ++i) {
        const std::string name = net + "/gcn" + std::to_string(i);
        params_.Add(name + "/w",
                    OrthogonalInit(in, config_.node_embed_dim, hidden_gain, rng));
        params_.Add(name + "/b", Matrix::Zero(1, config_.node_embed_dim));
        in = config_.node_embed_dim;
      }
    }
    const int out = net == "actor" ? config_.action_dim : 1;
    int in = config_.EncodedDim();
    for (int i = 0; i < config_.mlp_layers; ++i) {
      const bool last = i + 1 == config_.mlp_layers;
      const int width = last ? out : config_.mlp_hidden;
      const double gain = !last ? hidden_gain : (net == "actor" ? 0.01 : 1.0);
      const std::string name = net + "/mlp" + std::to_string(i);
      params_.Add(name + "/w", OrthogonalInit(in, width, gain, rng));
      params_.Add(name + "/b", Matrix::Zero(1, width));
      in = width;
    }
  }
  params_.Add("actor/log_std", Matrix::Zero(1, config_.action_dim));
}

Var ActorCritic::EncodeGraph(Tape& tape, const std::string& net,
                             const Matrix& adjacency) {
  Var a = tape.Constant(adjacency);
  Var h = tape.Constant(Matrix::Ones(adjacency.rows(), 1));
  for (int i = 0; i < config_.gcn_layers; ++i) {
    const std::string name = net + "/gcn" + std::to_string(i);
    h = GcnLayer(a, h, tape.Param(params_, name + "/w"),
                 tape.Param(params_, name + "/b"));
  }
  return MeanRows(h);
}

Var ActorCritic::Encode(Tape& tape, const std::string& net,
                        std::span<const Observation* const> batch) {
  if (batch.empty()) throw std::invalid_argument("empty observation batch");
  if (config_.mode == EncoderMode::kFlatMlp) {
    Matrix x(static_cast<Eigen::Index>(batch.size()), config_.flat_input_dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (static_cast<int>(batch[i]->flat.size()) != config_.flat_input_dim) {
        throw ShapeError("flat observation has the wrong length");
      }
      for (int j = 0; j < config_.flat_input_dim; ++j) {
        x(i, j) = batch[i]->flat[j];
      }
    }
    return tape.Constant(std::move(x));
  }
  std::vector<Var> rows;
  rows.reserve(batch.size());
  for (const Observation* obs : batch) {
    if (!obs->original_adjacency || !obs->current_adjacency) {
      throw ShapeError("graph observation without adjacency");
    }
    rows.push_back(ConcatCols({EncodeGraph(tape, net, *obs->original_adjacency),
                               EncodeGraph(tape, net, *obs->current_adjacency)}));
  }
  return rows.size() == 1 ? rows[0] : ConcatRows(rows);
}

Var ActorCritic::PolicyMean(Tape& tape,
                            std::span<const Observation* const> batch) {
  return Mlp(tape, params_, "actor", Encode(tape, "actor", batch),
             config_.mlp_layers);
}

Var ActorCritic::Value(Tape& tape, std::span<const Observation* const> batch) {
  return Mlp(tape, params_, "critic", Encode(tape, "critic", batch),
             config_.mlp_layers);
}

Var ActorCritic::LogStd(Tape& tape) {
  return tape.Param(params_, "actor/log_std");
}

ActorCritic::Output ActorCritic::Forward(
    std::span<const Observation* const> batch) {
  Tape tape;
  Output out;
  out.mean = PolicyMean(tape, batch).value();
  out.value = Value(tape, batch).value();
  out.log_std = params_.at("actor/log_std").value;
  return out;
}

std::vector<double> ActorCritic::EncodeValues(const Observation& obs,
                                              const std::string& net) {
  Tape tape;
  const Observation* batch[] = {&obs};
  const Matrix m = Encode(tape, net, batch).value();
  return std::vector<double>(m.data(), m.data() + m.size());
}

std::vector<double> DiagGaussian::Sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> action(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    action[i] = mean[i] + std::exp(log_std[i]) * normal(rng);
  }
  return action;
}

double DiagGaussian::LogProb(std::span<const double> action) const {
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) / std::exp(log_std[i]);
    total += -0.5 * z * z - log_std[i] - half_log_two_pi;
  }
  return total;
}

double DiagGaussian::Entropy() const {
  const double per_dim = 0.5 + 0.5 * std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (double s : log_std) total += per_dim + s;
  return total;
}

Var GaussianLogProb(Var mean, Var log_std, const Matrix& actions) {
  Tape& tape = *mean.tape();
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Var diff = Sub(tape.Constant(actions), mean);
  Var z = Mul(diff, Exp(Scale(log_std, -1.0)));
  Var per_row = Scale(RowSum(Square(z)), -0.5);
  Var log_norm = AddScalar(Sum(log_std),
                           half_log_two_pi * static_cast<double>(actions.cols()));
  return Sub(per_row, log_norm);
}

Var GaussianEntropy(Var log_std) {
  const double per_dim = 0.5 + 0.5 * std::log(2.0 * std::numbers::pi);
  return AddScalar(Sum(log_std), per_dim * static_cast<double>(log_std.cols()));
}

void Adam::Step(ParamStore& params) {
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, block] : params.blocks()) {
    auto [it, inserted] = moments_.try_emplace(name);
    auto& [m, v] = it->second;
    if (inserted) {
      m = Matrix::Zero(block.value.rows(), block.value.cols());
      v = Matrix::Zero(block.value.rows(), block.value.cols());
    }
    m = beta1_ * m + (1.0 - beta1_) * block.grad;
    v = beta2_ * v + (1.0 - beta2_) * block.grad.cwiseAbs2();
    block.value.array() -= lr_ * (m.array() / correction1) /
                           ((v.array() / correction2).sqrt() + eps_);
  }
  ++params.step;
}

using nlohmann::json;

void SaveCheckpoint(const std::string& path, const ActorCritic& net) {
  const NetworkConfig& c = net.config();
  json j;
  j["format_version"] = kCheckpointVersion;
  j["config"] = {{"mode", EncoderName(c.mode)},
                 {"gcn_layers", c.gcn_layers},
                 {"node_embed_dim", c.node_embed_dim},
                 {"mlp_hidden", c.mlp_hidden},
                 {"mlp_layers", c.mlp_layers},
                 {"action_dim", c.action_dim},
                 {"flat_input_dim", c.flat_input_dim},
                 {"alpha", c.alpha},
                 {"population", c.population}};
  j["step"] = net.params().step;
  json blocks = json::array();
  for (const auto& [name, block] : net.params().blocks()) {
    std::vector<double> values;
    values.reserve(block.value.size());
    for (Eigen::Index r = 0; r < block.value.rows(); ++r) {
      for (Eigen::Index col = 0; col < block.value.cols(); ++col) {
        values.push_back(block.value(r, col));
      }
    }
    blocks.push_back({{"name", name},
                      {"rows", block.value.rows()},
                      {"cols", block.value.cols()},
                      {"values", values}});
  }
  j["params"] = std::move(blocks);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

ActorCritic LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const json j = json::parse(in);
  if (j.at("format_version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version");
  }
  const json& c = j.at("config");
  NetworkConfig config;
  config.mode = ParseEncoderMode(c.at("mode").get<std::string>());
  config.gcn_layers = c.at("gcn_layers");
  config.node_embed_dim = c.at("node_embed_dim");
  config.mlp_hidden = c.at("mlp_hidden");
  config.mlp_layers = c.at("mlp_layers");
  config.action_dim = c.at("action_dim");
  config.flat_input_dim = c.at("flat_input_dim");
  config.alpha = c.at("alpha");
  config.population = c.at("population");
  ParamStore params;
  for (const json& b : j.at("params")) {
    const int rows = b.at("rows");
    const int cols = b.at("cols");
    const auto values = b.at("values").get<std::vector<double>>();
    if (static_cast<int>(values.size()) != rows * cols) {
      throw std::runtime_error(path + ": block " +
                               b.at("name").get<std::string>() +
                               " has the wrong number of values");
    }
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int col = 0; col < cols; ++col) m(r, col) = values[r * cols + col];
    }
    params.Add(b.at("name").get<std::string>(), std::move(m));
  }
  params.step = j.value("step", 0L);
  return ActorCritic(config, std::move(params));
}

}  // namespace gamemod::nn
