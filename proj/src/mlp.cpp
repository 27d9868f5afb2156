#include "aerobat/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace aerobat {

namespace {

void write_matrix(std::ostream& out, const Matrix& m) {
  const std::uint64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& in) {
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in) throw std::runtime_error("truncated matrix");
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw std::runtime_error("truncated matrix payload");
  return m;
}

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

}  // namespace

Mlp::Mlp(const std::vector<int>& dims, Rng& rng, double final_gain) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need >= 2 dims");
  layers_.reserve(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (in + out)) *
                         (l + 2 == dims.size() ? final_gain : 1.0);
    std::uniform_real_distribution<double> draw(-limit, limit);
    Dense layer;
    layer.weight.resize(in, out);
    for (int j = 0; j < out; ++j) {
      for (int i = 0; i < in; ++i) layer.weight(i, j) = draw(rng);
    }
    layer.bias = RowVector::Zero(out);
    layers_.push_back(std::move(layer));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Matrix Mlp::forward(const Matrix& x) const {
  Workspace ws;
  return forward(x, ws);
}

const Matrix& Mlp::forward(const Matrix& x, Workspace& ws) const {
  if (x.cols() != input_dim()) {
    throw std::invalid_argument("Mlp::forward: input width mismatch");
  }
  ws.acts.resize(layers_.size() + 1);
  ws.acts[0] = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix& z = ws.acts[l + 1];
    z.noalias() = ws.acts[l] * layers_[l].weight;
    z.rowwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      z = z.unaryExpr([](double v) { return elu(v); });
    }
    if (!z.allFinite()) {
      throw std::runtime_error("non-finite activation in layer " +
                               std::to_string(l));
    }
  }
  return ws.acts.back();
}

std::vector<DenseGrad> Mlp::zero_gradients() const {
  std::vector<DenseGrad> grads(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    grads[l].weight = Matrix::Zero(layers_[l].weight.rows(),
                                   layers_[l].weight.cols());
    grads[l].bias = RowVector::Zero(layers_[l].bias.size());
  }
  return grads;
}

void Mlp::accumulate_gradients(const Workspace& ws, const Matrix& grad_output,
                               std::vector<DenseGrad>& grads) const {
  Matrix delta = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    // ELU derivative from the stored post-activation: 1 above zero,
    // activation + 1 below.
    if (l + 1 < layers_.size()) {
      delta = delta.binaryExpr(ws.acts[l + 1], [](double d, double a) {
        return a > 0.0 ? d : d * (a + 1.0);
      });
    }
    grads[l].weight.noalias() += ws.acts[l].transpose() * delta;
    grads[l].bias += delta.colwise().sum();
    if (l > 0) delta = (delta * layers_[l].weight.transpose()).eval();
  }
}

bool Mlp::finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::save(std::ostream& out) const {
  const std::uint64_t n = layers_.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const auto& l : layers_) {
    write_matrix(out, l.weight);
    write_matrix(out, Matrix(l.bias));
  }
}

Mlp Mlp::load(std::istream& in) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in) throw std::runtime_error("truncated network");
  Mlp net;
  net.layers_.resize(n);
  for (auto& l : net.layers_) {
    l.weight = read_matrix(in);
    l.bias = read_matrix(in).row(0);
  }
  return net;
}

Adam::Adam(double lr, double beta1, double beta2, double epsilon)
    : learning_rate(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::update_begin() {
  ++t_;
  cursor_ = 0;
}

Matrix& Adam::slot_m(std::size_t rows, std::size_t cols) {
  if (cursor_ >= m_.size()) {
    m_.emplace_back(Matrix::Zero(rows, cols));
    v_.emplace_back(Matrix::Zero(rows, cols));
  }
  return m_[cursor_];
}

Matrix& Adam::slot_v() { return v_[cursor_]; }

void Adam::update(Matrix& param, const Matrix& grad) {
  Matrix& m = slot_m(param.rows(), param.cols());
  Matrix& v = slot_v();
  ++cursor_;
  m = beta1_ * m + (1.0 - beta1_) * grad;
  v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(beta1_, double(t_));
  const double bias2 = 1.0 - std::pow(beta2_, double(t_));
  param.array() -= learning_rate * (m.array() / bias1) /
                   ((v.array() / bias2).sqrt() + epsilon_);
}

void Adam::update(RowVector& param, const RowVector& grad) {
  Matrix p = param, g = grad;
  update(p, g);
  param = p.row(0);
}

void Adam::update(Vec4& param, const Vec4& grad) {
  Matrix p = param.transpose(), g = grad.transpose();
  update(p, g);
  param = p.row(0).transpose();
}

void Adam::update_mlp(Mlp& net, const std::vector<DenseGrad>& grads) {
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads[l].weight);
    RowVector b = layers[l].bias;
    update(b, grads[l].bias);
    layers[l].bias = b;
  }
}

void Adam::save(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&learning_rate),
            sizeof(learning_rate));
  out.write(reinterpret_cast<const char*>(&beta1_), sizeof(beta1_));
  out.write(reinterpret_cast<const char*>(&beta2_), sizeof(beta2_));
  out.write(reinterpret_cast<const char*>(&epsilon_), sizeof(epsilon_));
  const std::int64_t t = t_;
  out.write(reinterpret_cast<const char*>(&t), sizeof(t));
  const std::uint64_t n = m_.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    write_matrix(out, m_[i]);
    write_matrix(out, v_[i]);
  }
}

Adam Adam::load(std::istream& in) {
  Adam adam;
  in.read(reinterpret_cast<char*>(&adam.learning_rate),
          sizeof(adam.learning_rate));
  in.read(reinterpret_cast<char*>(&adam.beta1_), sizeof(adam.beta1_));
  in.read(reinterpret_cast<char*>(&adam.beta2_), sizeof(adam.beta2_));
  in.read(reinterpret_cast<char*>(&adam.epsilon_), sizeof(adam.epsilon_));
  std::int64_t t = 0;
  in.read(reinterpret_cast<char*>(&t), sizeof(t));
  adam.t_ = t;
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in) throw std::runtime_error("truncated optimizer state");
  for (std::uint64_t i = 0; i < n; ++i) {
    adam.m_.push_back(read_matrix(in));
    adam.v_.push_back(read_matrix(in));
  }
  return adam;
}

}  // namespace aerobat
