#pragma once

#include <iosfwd>
#include <vector>

#include "aerobat/types.hpp"

namespace aerobat {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Dense {
  Matrix weight;   // in x out
  RowVector bias;  // 1 x out
};

struct DenseGrad {
  Matrix weight;
  RowVector bias;
};

// Fully connected network with ELU hidden activations and a linear output
// layer. Batches are row-major: one sample per row.
class Mlp {
 public:
  Mlp() = default;
  // dims = [input, hidden..., output]; Xavier-uniform init, the final layer
  // scaled by `final_gain`.
  Mlp(const std::vector<int>& dims, Rng& rng, double final_gain = 1.0);

  int input_dim() const { return layers_.empty() ? 0 : int(layers_.front().weight.rows()); }
  int output_dim() const { return layers_.empty() ? 0 : int(layers_.back().weight.cols()); }
  std::size_t parameter_count() const;

  // Holds post-activation values per layer; acts[0] is the input batch.
  struct Workspace {
    std::vector<Matrix> acts;
  };

  Matrix forward(const Matrix& x) const;
  const Matrix& forward(const Matrix& x, Workspace& ws) const;

  // Backpropagates dL/d(output) and accumulates parameter gradients; returns
  // nothing (input gradients are not needed by any caller).
  void accumulate_gradients(const Workspace& ws, const Matrix& grad_output,
                            std::vector<DenseGrad>& grads) const;

  std::vector<DenseGrad> zero_gradients() const;

  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

  bool finite() const;

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

 private:
  std::vector<Dense> layers_;
};

// Adam optimizer over a set of MLPs plus any extra flat parameter vectors.
class Adam {
 public:
  Adam() = default;
  Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  // Applies one update to `params` given matching `grads`. State slots are
  // keyed by call order within a step; call update_begin() once per step.
  void update_begin();
  void update(Matrix& param, const Matrix& grad);
  void update(RowVector& param, const RowVector& grad);
  void update(Vec4& param, const Vec4& grad);
  void update_mlp(Mlp& net, const std::vector<DenseGrad>& grads);

  double learning_rate = 3e-4;

  void save(std::ostream& out) const;
  static Adam load(std::istream& in);

 private:
  Matrix& slot_m(std::size_t rows, std::size_t cols);
  Matrix& slot_v();

  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  long t_ = 0;
  std::size_t cursor_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace aerobat
