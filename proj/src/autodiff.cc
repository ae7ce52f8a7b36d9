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


#include "gamemod/autodiff.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gamemod::nn {

void ParamStore::Add(const std::string& name, Matrix value) {
  if (Contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  Matrix grad = Matrix::Zero(value.rows(), value.cols());
  blocks_.emplace(name, Block{std::move(value), std::move(grad)});
}

ParamStore::Block& ParamStore::at(const std::string& name) {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw std::out_of_range("no parameter " + name);
  return it->second;
}

const ParamStore::Block& ParamStore::at(const std::string& name) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw std::out_of_range("no parameter " + name);
  return it->second;
}

void ParamStore::ZeroGrad() {
  for (auto& [_, block] : blocks_) block.grad.setZero();
}

double ParamStore::GradNorm() const {
  double sq = 0.0;
  for (const auto& [_, block] : blocks_) sq += block.grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::ScaleGrad(double factor) {
  for (auto& [_, block] : blocks_) block.grad *= factor;
}

void ParamStore::CheckFinite() const {
  for (const auto& [name, block] : blocks_) {
    if (!block.value.allFinite()) {
      throw std::runtime_error("parameter " + name + " is not finite");
    }
  }
}

std::size_t ParamStore::NumScalars() const {
  std::size_t n = 0;
  for (const auto& [_, block] : blocks_) n += block.value.size();
  return n;
}

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::Record(Matrix value, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward)});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Constant(Matrix value) { return Record(std::move(value), nullptr); }

Var Tape::Param(ParamStore& store, const std::string& name) {
  ParamStore::Block* block = &store.at(name);
  return Record(block->value,
                [block](Tape&, const Matrix& g) { block->grad += g; });
}

void Tape::Accumulate(int id, const Matrix& g) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    node.grad = g;
    node.has_grad = true;
  } else {
    node.grad += g;
  }
}

void Tape::Backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("foreign variable");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw std::invalid_argument("backward needs a scalar loss");
  }
  for (auto& node : nodes_) node.has_grad = false;
  Accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    if (!node.grad.allFinite()) {
      throw std::runtime_error("non-finite gradient during backward pass");
    }
    node.backward(*this, node.grad);
  }
}

namespace {

Tape& TapeOf(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw std::invalid_argument("variables belong to different tapes");
  }
  return *a.tape();
}

enum class Broadcast { kNone, kRow, kScalar };

Broadcast BroadcastOf(const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kNone;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  throw std::invalid_argument("incompatible shapes for elementwise op");
}

Matrix Expand(const Matrix& b, Broadcast mode, Eigen::Index rows,
              Eigen::Index cols) {
  switch (mode) {
    case Broadcast::kNone:
      return b;
    case Broadcast::kRow:
      return b.replicate(rows, 1);
    case Broadcast::kScalar:
      return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

Matrix Reduce(const Matrix& g, Broadcast mode) {
  switch (mode) {
    case Broadcast::kNone:
      return g;
    case Broadcast::kRow:
      return g.colwise().sum();
    case Broadcast::kScalar:
      return Matrix::Constant(1, 1, g.sum());
  }
  return g;
}

template <typename Fn, typename Deriv>
Var Unary(Var a, Fn fn, Deriv deriv) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().unaryExpr(fn);
  return tape.Record(std::move(out),
                     [ia, deriv](Tape& t, const Matrix& g) {
                       t.Accumulate(ia, g.cwiseProduct(deriv(t.value(ia))));
                     });
}

}  // namespace

Var Add(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  const Broadcast mode = BroadcastOf(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value() + Expand(b.value(), mode, a.rows(), a.cols());
  return tape.Record(std::move(out), [ia, ib, mode](Tape& t, const Matrix& g) {
    t.Accumulate(ia, g);
    t.Accumulate(ib, Reduce(g, mode));
  });
}

Var Sub(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  const Broadcast mode = BroadcastOf(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value() - Expand(b.value(), mode, a.rows(), a.cols());
  return tape.Record(std::move(out), [ia, ib, mode](Tape& t, const Matrix& g) {
    t.Accumulate(ia, g);
    t.Accumulate(ib, -Reduce(g, mode));
  });
}

Var Mul(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  const Broadcast mode = BroadcastOf(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  Matrix out =
      a.value().cwiseProduct(Expand(b.value(), mode, a.rows(), a.cols()));
  return tape.Record(std::move(out), [ia, ib, mode](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(ia);
    const Matrix bv = Expand(t.value(ib), mode, av.rows(), av.cols());
    t.Accumulate(ia, g.cwiseProduct(bv));
    t.Accumulate(ib, Reduce(g.cwiseProduct(av), mode));
  });
}

Var MatMul(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul inner dimensions differ");
  }
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  return tape.Record(std::move(out), [ia, ib](Tape& t, const Matrix& g) {
    t.Accumulate(ia, g * t.value(ib).transpose());
    t.Accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var Scale(Var a, double factor) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  return tape.Record(a.value() * factor,
                     [ia, factor](Tape& t, const Matrix& g) {
                       t.Accumulate(ia, g * factor);
                     });
}

Var AddScalar(Var a, double value) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  return tape.Record(a.value().array() + value,
                     [ia](Tape& t, const Matrix& g) { t.Accumulate(ia, g); });
}

Var Tanh(Var a) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().array().tanh();
  const int io = static_cast<int>(tape.size());
  return tape.Record(std::move(out), [ia, io](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(io);
    t.Accumulate(ia, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var Relu(Var a) {
  return Unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](const Matrix& x) -> Matrix {
        return (x.array() > 0.0).cast<double>().matrix();
      });
}

Var Exp(Var a) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().array().exp();
  const int io = static_cast<int>(tape.size());
  return tape.Record(std::move(out), [ia, io](Tape& t, const Matrix& g) {
    t.Accumulate(ia, g.cwiseProduct(t.value(io)));
  });
}

Var Square(Var a) {
  return Unary(
      a, [](double x) { return x * x; },
      [](const Matrix& x) -> Matrix { return 2.0 * x; });
}

Var Minimum(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("minimum needs equal shapes");
  }
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseMin(b.value());
  return tape.Record(std::move(out), [ia, ib](Tape& t, const Matrix& g) {
    const Matrix take_a =
        (t.value(ia).array() <= t.value(ib).array()).cast<double>().matrix();
    t.Accumulate(ia, g.cwiseProduct(take_a));
    t.Accumulate(ib, g.cwiseProduct((1.0 - take_a.array()).matrix()));
  });
}

Var Clamp(Var a, double lo, double hi) {
  return Unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](const Matrix& x) -> Matrix {
        return ((x.array() >= lo) && (x.array() <= hi)).cast<double>().matrix();
      });
}

Var RowSum(Var a) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  const Eigen::Index cols = a.cols();
  return tape.Record(a.value().rowwise().sum(),
                     [ia, cols](Tape& t, const Matrix& g) {
                       t.Accumulate(ia, g.replicate(1, cols));
                     });
}

Var Sum(Var a) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return tape.Record(Matrix::Constant(1, 1, a.value().sum()),
                     [ia, rows, cols](Tape& t, const Matrix& g) {
                       t.Accumulate(ia, Matrix::Constant(rows, cols, g(0, 0)));
                     });
}

Var Mean(Var a) { return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var MeanRows(Var a) {
  Tape& tape = *a.tape();
  const int ia = a.id();
  const Eigen::Index rows = a.rows();
  return tape.Record(a.value().colwise().mean(),
                     [ia, rows](Tape& t, const Matrix& g) {
                       t.Accumulate(ia, g.replicate(rows, 1) / rows);
                     });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to concatenate");
  Tape& tape = *parts[0].tape();
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (Var p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("row count mismatch");
    cols += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return tape.Record(std::move(out), [ids, widths](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      t.Accumulate(ids[i], g.middleCols(off, widths[i]));
      off += widths[i];
    }
  });
}

Var ConcatRows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to concatenate");
  Tape& tape = *parts[0].tape();
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> heights;
  for (Var p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("column count mismatch");
    rows += p.rows();
    ids.push_back(p.id());
    heights.push_back(p.rows());
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  return tape.Record(std::move(out), [ids, heights](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      t.Accumulate(ids[i], g.middleRows(off, heights[i]));
      off += heights[i];
    }
  });
}

double GradCheck(const std::function<Var(Tape&)>& loss, ParamStore& params,
                 double eps) {
  params.ZeroGrad();
  {
    Tape tape;
    tape.Backward(loss(tape));
  }
  auto evaluate = [&]() {
    Tape tape;
    return loss(tape).value()(0, 0);
  };
  double worst = 0.0;
  for (auto& [name, block] : params.blocks()) {
    for (Eigen::Index i = 0; i < block.value.size(); ++i) {
      const double analytic = block.grad.data()[i];
      if (std::isnan(analytic)) {
        throw std::runtime_error("NaN gradient in " + name);
      }
      double& x = block.value.data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = evaluate();
      x = saved - eps;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double scale =
          std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(analytic - numeric) / scale);
    }
  }
  return worst;
}

}  // namespace gamemod::nn
