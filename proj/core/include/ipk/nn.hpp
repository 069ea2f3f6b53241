#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ipk/rng.hpp"

namespace ipk::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kSigmoid, kTanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected network: input -> hidden... -> linear output. Batches are
/// stored column-wise (one sample per column). Weights are initialized
/// uniformly in +-1/sqrt(fan_in).
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input, std::vector<int> hidden, int output, Activation act, Rng& rng);

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& x) const;

  int input_size() const { return input_; }
  int output_size() const { return output_; }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  Activation activation() const { return act_; }
  const std::vector<int>& hidden_sizes() const { return hidden_; }
  std::size_t parameter_count() const;

  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

 private:
  int input_ = 0;
  int output_ = 0;
  std::vector<int> hidden_;
  Activation act_ = Activation::kSigmoid;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

/// Per-parameter gradient accumulators, shaped like an Mlp's parameters.
struct MlpGrads {
  std::vector<Matrix> w;
  std::vector<Vector> b;

  static MlpGrads zeros_like(const Mlp& net);
  void set_zero();
};

/// Standard Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Mlp& net, double learning_rate);

  void step(Mlp& net, const MlpGrads& grads);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  std::int64_t step_count() const { return t_; }

  // Serialization access.
  std::vector<Matrix>& first_moments() { return mw_; }
  std::vector<Matrix>& second_moments() { return vw_; }
  std::vector<Vector>& first_moments_bias() { return mb_; }
  std::vector<Vector>& second_moments_bias() { return vb_; }
  void set_step_count(std::int64_t t) { t_ = t; }

 private:
  double lr_ = 3e-4;
  std::int64_t t_ = 0;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
};

/// Adam for a single scalar parameter (used for the entropy temperature).
class ScalarAdam {
 public:
  ScalarAdam() = default;
  explicit ScalarAdam(double learning_rate) : lr_(learning_rate) {}

  double step(double param, double grad);

  double learning_rate() const { return lr_; }
  std::int64_t step_count() const { return t_; }
  double first_moment() const { return m_; }
  double second_moment() const { return v_; }
  void restore(std::int64_t t, double m, double v) { t_ = t; m_ = m; v_ = v; }

 private:
  double lr_ = 3e-4;
  std::int64_t t_ = 0;
  double m_ = 0.0;
  double v_ = 0.0;
};

/// Reverse-mode tape over matrix-valued nodes. Covers exactly the operation
/// set the training losses need: affine layers, sigmoid/tanh/exp/log/square/
/// softplus, elementwise arithmetic, row slicing and concatenation, soft
/// bounds, elementwise min, and full-sum reduction.
class Tape {
 public:
  using Id = int;

  Id input(Matrix value, bool track_grad = false);
  Id constant(Matrix value) { return input(std::move(value), false); }

  /// Records the full forward pass of `net`. Parameter gradients accumulate
  /// into `grads` if non-null (pass null for a frozen network whose input
  /// gradient is still needed). Throws on non-finite activations, naming the
  /// offending layer.
  Id mlp(const Mlp& net, Id x, MlpGrads* grads);

  Id affine(const Matrix& w, const Vector& b, Id x, Matrix* dw, Vector* db);
  Id sigmoid(Id x);
  Id tanh(Id x);
  Id exp(Id x);
  Id log(Id x);
  Id square(Id x);
  Id softplus(Id x);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id min_elem(Id a, Id b);
  Id scale(Id x, double c);
  Id add_scalar(Id x, double c);
  Id rows(Id x, int begin, int count);
  Id vcat(Id top, Id bottom);
  /// Smoothly clamps into (lo, hi): hi - softplus(hi - x), then the mirrored
  /// bound from below. Differentiable everywhere, unlike a hard clamp.
  Id soft_bound(Id x, double lo, double hi);
  Id sum(Id x);

  const Matrix& value(Id id) const { return nodes_[id].value; }
  const Matrix& grad(Id id) const { return nodes_[id].grad; }

  /// Reverse pass from a 1x1 loss node.
  void backward(Id loss);

 private:
  enum class Op {
    kInput, kAffine, kSigmoid, kTanh, kExp, kLog, kSquare, kSoftplus,
    kAdd, kSub, kMul, kMinElem, kScale, kAddScalar, kRows, kVcat, kSum
  };

  struct Node {
    Op op;
    Id a = -1;
    Id b = -1;
    double c = 0.0;
    int r0 = 0, rn = 0;
    Matrix value;
    Matrix grad;
    const Matrix* w = nullptr;
    const Vector* bias = nullptr;
    Matrix* dw = nullptr;
    Vector* db = nullptr;
  };

  Id push(Node n);

  std::vector<Node> nodes_;
};

/// Plain-math twins of the tape's softplus / soft_bound, for inference paths
/// that must match training-time bounding exactly.
double softplus(double x);
double soft_bound(double x, double lo, double hi);

struct GradCheckReport {
  bool pass = false;
  double max_relative_error = 0.0;
  std::size_t checked_parameters = 0;
};

/// Maximum relative error between two gradient sets, with an absolute floor
/// so near-zero entries do not blow the ratio up.
double max_relative_error(const MlpGrads& a, const MlpGrads& b, double floor = 1e-6);

/// Compares tape gradients of a mean-squared-output loss against central
/// finite differences (step 1e-5) over every parameter of `net`.
GradCheckReport grad_check(const Mlp& net, double tolerance, Rng& rng, int batch = 4);

}  // namespace ipk::nn
