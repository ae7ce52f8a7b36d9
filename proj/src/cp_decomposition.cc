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


#include "gamemod/cp_decomposition.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <stdexcept>

namespace gamemod {
namespace {

std::size_t NumEntries(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

// Calls fn(flat_index, multi_index) for every entry in row-major order.
template <typename Fn>
void ForEachEntry(const std::vector<int>& shape, Fn&& fn) {
  std::vector<int> index(shape.size(), 0);
  const std::size_t total = NumEntries(shape);
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, index);
    for (int m = static_cast<int>(shape.size()) - 1; m >= 0; --m) {
      if (++index[m] < shape[m]) break;
      index[m] = 0;
    }
  }
}

double ReconstructionError(std::span<const double> tensor,
                           const CPFactors& model, double tensor_norm) {
  const std::vector<double> approx = Reconstruct(
      model, std::span<const double>(model.base_weights.data(), model.rank()));
  double sq = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    const double d = tensor[i] - approx[i];
    sq += d * d;
  }
  return std::sqrt(sq) / (tensor_norm > 0.0 ? tensor_norm : 1.0);
}

// Rescale each rank-one component so all of its factor columns share the
// same norm. The represented tensor is unchanged.
void BalanceColumns(CPFactors& model) {
  const int modes = static_cast<int>(model.factors.size());
  for (int c = 0; c < model.rank(); ++c) {
    double log_product = 0.0;
    bool zero = false;
    for (const auto& f : model.factors) {
      const double norm = f.col(c).norm();
      if (norm == 0.0) zero = true;
      log_product += zero ? 0.0 : std::log(norm);
    }
    if (zero) continue;
    const double target = std::exp(log_product / modes);
    for (auto& f : model.factors) f.col(c) *= target / f.col(c).norm();
  }
}

// Orders rank-one components by decreasing magnitude so that action
// coordinate i refers to the i-th strongest component of every game.
void SortComponents(CPFactors& model) {
  std::vector<double> magnitude(model.rank(), 1.0);
  for (const auto& f : model.factors) {
    for (int c = 0; c < model.rank(); ++c) magnitude[c] *= f.col(c).norm();
  }
  std::vector<int> order(model.rank());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return magnitude[a] > magnitude[b];
  });
  for (auto& f : model.factors) {
    Eigen::MatrixXd sorted(f.rows(), f.cols());
    for (int c = 0; c < model.rank(); ++c) sorted.col(c) = f.col(order[c]);
    f = std::move(sorted);
  }
}

}  // namespace

CPFactors CpDecompose(std::span<const double> tensor,
                      const std::vector<int>& shape, int rank,
                      const AlsOptions& options) {
  if (rank < 1) throw std::invalid_argument("CP rank must be >= 1");
  if (shape.empty() || tensor.size() != NumEntries(shape)) {
    throw ShapeError("tensor size does not match its shape");
  }
  const int modes = static_cast<int>(shape.size());
  CPFactors model;
  model.shape = shape;
  model.base_weights = Eigen::VectorXd::Ones(rank);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int d : shape) {
    Eigen::MatrixXd f(d, rank);
    for (int i = 0; i < d; ++i) {
      for (int c = 0; c < rank; ++c) f(i, c) = normal(rng);
    }
    model.factors.push_back(std::move(f));
  }

  double tensor_norm = 0.0;
  for (double v : tensor) tensor_norm += v * v;
  tensor_norm = std::sqrt(tensor_norm);

  double previous = ReconstructionError(tensor, model, tensor_norm);
  Eigen::RowVectorXd product(rank);
  std::vector<Eigen::MatrixXd> accepted;
  for (int sweep = 0; sweep < options.max_iterations; ++sweep) {
    accepted = model.factors;
    for (int n = 0; n < modes; ++n) {
      // Matricized tensor times Khatri-Rao product of the other factors.
      Eigen::MatrixXd mttkrp = Eigen::MatrixXd::Zero(shape[n], rank);
      ForEachEntry(shape, [&](std::size_t flat, const std::vector<int>& idx) {
        const double x = tensor[flat];
        if (x == 0.0) return;
        product.setOnes();
        for (int m = 0; m < modes; ++m) {
          if (m != n) product.array() *= model.factors[m].row(idx[m]).array();
        }
        mttkrp.row(idx[n]) += x * product;
      });
      Eigen::MatrixXd gram = Eigen::MatrixXd::Ones(rank, rank);
      for (int m = 0; m < modes; ++m) {
        if (m != n) {
          gram.array() *=
              (model.factors[m].transpose() * model.factors[m]).array();
        }
      }
      gram.diagonal().array() += kAlsRidge;
      model.factors[n] = gram.ldlt().solve(mttkrp.transpose()).transpose();
    }
    const double error = ReconstructionError(tensor, model, tensor_norm);
    if (error > previous) {
      // Past convergence the ridge term and rounding can nudge the error up;
      // keep the better iterate so the trace stays nonincreasing.
      model.factors = std::move(accepted);
      break;
    }
    model.error_trace.push_back(error);
    if (previous - error < options.tolerance) break;
    previous = error;
  }
  if (model.error_trace.empty()) model.error_trace.push_back(previous);
  BalanceColumns(model);
  SortComponents(model);
  return model;
}

CPFactors CpDecompose(const NormalFormGame& game, int rank,
                      const AlsOptions& options) {
  return CpDecompose(game.payoffs(), game.shape(), rank, options);
}

std::vector<double> Reconstruct(const CPFactors& factors,
                                std::span<const double> weights) {
  if (static_cast<int>(weights.size()) != factors.rank()) {
    throw ShapeError("expected " + std::to_string(factors.rank()) +
                     " weights, got " + std::to_string(weights.size()));
  }
  const int modes = static_cast<int>(factors.shape.size());
  const Eigen::Map<const Eigen::RowVectorXd> w(weights.data(),
                                               factors.rank());
  std::vector<double> out(NumEntries(factors.shape));
  Eigen::RowVectorXd product(factors.rank());
  ForEachEntry(factors.shape,
               [&](std::size_t flat, const std::vector<int>& idx) {
                 product = w;
                 for (int m = 0; m < modes; ++m) {
                   product.array() *= factors.factors[m].row(idx[m]).array();
                 }
                 out[flat] = product.sum();
               });
  return out;
}

NormalFormGame ApplyModification(const NormalFormGame& current,
                                 const CPFactors& factors,
                                 std::span<const double> weights,
                                 double step) {
  if (current.shape() != factors.shape) {
    throw ShapeError("CP factors do not match the game's payoff tensor");
  }
  std::vector<double> payoffs = Reconstruct(factors, weights);
  const auto base = current.payoffs();
  for (std::size_t i = 0; i < payoffs.size(); ++i) {
    payoffs[i] = base[i] + step * payoffs[i];
  }
  return NormalizePayoffs(current.WithPayoffs(std::move(payoffs)));
}

}  // namespace gamemod
