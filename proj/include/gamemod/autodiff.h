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


#ifndef GAMEMOD_AUTODIFF_H_
#define GAMEMOD_AUTODIFF_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gamemod::nn {

using Matrix = Eigen::MatrixXd;

// Named parameter blocks with matching gradient accumulators.
class ParamStore {
 public:
  struct Block {
    Matrix value;
    Matrix grad;
  };

  void Add(const std::string& name, Matrix value);
  bool Contains(const std::string& name) const {
    return blocks_.count(name) > 0;
  }
  Block& at(const std::string& name);
  const Block& at(const std::string& name) const;

  void ZeroGrad();
  // Global L2 norm over every gradient block.
  double GradNorm() const;
  void ScaleGrad(double factor);
  // Throws std::runtime_error naming the first block with a non-finite value.
  void CheckFinite() const;
  std::size_t NumScalars() const;

  std::map<std::string, Block>& blocks() { return blocks_; }
  const std::map<std::string, Block>& blocks() const { return blocks_; }

  long step = 0;

 private:
  std::map<std::string, Block> blocks_;
};

class Tape;

// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records a forward computation over dense matrices and replays it in
// reverse. Parameters enter through Param(); Backward() adds their gradients
// to the owning ParamStore.
class Tape {
 public:
  Var Constant(Matrix value);
  Var Param(ParamStore& store, const std::string& name);

  // `loss` must be 1x1.
  void Backward(Var loss);

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;
  Var Record(Matrix value, BackwardFn backward);
  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  void Accumulate(int id, const Matrix& g);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool has_grad = false;
  };
  std::vector<Node> nodes_;
};

// Elementwise binary ops broadcast `b` when it is 1x1 or a single row.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var MatMul(Var a, Var b);
Var Scale(Var a, double factor);
Var AddScalar(Var a, double value);
Var Tanh(Var a);
Var Relu(Var a);
Var Exp(Var a);
Var Square(Var a);
// Elementwise minimum; ties route the gradient to `a`.
Var Minimum(Var a, Var b);
// Gradient passes only where lo <= a <= hi.
Var Clamp(Var a, double lo, double hi);
Var RowSum(Var a);    // n x d -> n x 1
Var Sum(Var a);       // -> 1 x 1
Var Mean(Var a);      // -> 1 x 1
Var MeanRows(Var a);  // n x d -> 1 x d
Var ConcatCols(const std::vector<Var>& parts);
Var ConcatRows(const std::vector<Var>& parts);

inline Var operator+(Var a, Var b) { return Add(a, b); }
inline Var operator-(Var a, Var b) { return Sub(a, b); }
inline Var operator*(Var a, double s) { return Scale(a, s); }

// Compares reverse-mode gradients of `loss` with central differences of
// step `eps` for every scalar in `params`. Returns the largest
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3); the floor keeps
// near-zero gradients from dominating. Throws when a gradient is NaN.
double GradCheck(const std::function<Var(Tape&)>& loss, ParamStore& params,
                 double eps = 1e-5);

}  // namespace gamemod::nn

#endif  // GAMEMOD_AUTODIFF_H_
