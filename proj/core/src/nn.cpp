#include "ipk/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace ipk::nn {

namespace {

Matrix apply_activation(Activation act, const Matrix& z) {
  if (act == Activation::kSigmoid) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return z.array().tanh().matrix();
}

}  // namespace

const char* to_string(Activation a) {
  return a == Activation::kSigmoid ? "sigmoid" : "tanh";
}

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + s);
}

Mlp::Mlp(int input, std::vector<int> hidden, int output, Activation act, Rng& rng)
    : input_(input), output_(output), hidden_(std::move(hidden)), act_(act) {
  if (input <= 0 || output <= 0) throw std::invalid_argument("Mlp: bad layer sizes");
  std::vector<int> sizes;
  sizes.push_back(input);
  for (int h : hidden_) sizes.push_back(h);
  sizes.push_back(output);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int fan_in = sizes[i];
    const int fan_out = sizes[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = uniform(rng, -bound, bound);
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(fan_out));
  }
}

Vector Mlp::forward(const Vector& x) const {
  Matrix y = forward(Matrix(x));
  return y.col(0);
}

Matrix Mlp::forward(const Matrix& x) const {
  if (x.rows() != input_) throw std::invalid_argument("Mlp::forward: input size mismatch");
  Matrix h = x;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    Matrix z = (weights_[i] * h).colwise() + biases_[i];
    h = (i + 1 < weights_.size()) ? apply_activation(act_, z) : std::move(z);
  }
  return h;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights_) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases_) n += static_cast<std::size_t>(b.size());
  return n;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
  MlpGrads g;
  for (const auto& w : net.weights()) g.w.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : net.biases()) g.b.push_back(Vector::Zero(b.size()));
  return g;
}

void MlpGrads::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

AdamState::AdamState(const Mlp& net, double learning_rate) : lr_(learning_rate) {
  for (const auto& w : net.weights()) {
    mw_.push_back(Matrix::Zero(w.rows(), w.cols()));
    vw_.push_back(Matrix::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : net.biases()) {
    mb_.push_back(Vector::Zero(b.size()));
    vb_.push_back(Vector::Zero(b.size()));
  }
}

void AdamState::step(Mlp& net, const MlpGrads& grads) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (grads.w.size() != net.weights().size() || grads.b.size() != net.biases().size())
    throw std::invalid_argument("AdamState::step: gradient shape mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grads.w.size(); ++i) {
    mw_[i] = kBeta1 * mw_[i] + (1.0 - kBeta1) * grads.w[i];
    vw_[i] = kBeta2 * vw_[i].array() + (1.0 - kBeta2) * grads.w[i].array().square();
    net.weights()[i].array() -=
        lr_ * (mw_[i].array() / c1) / ((vw_[i].array() / c2).sqrt() + kEps);
  }
  for (std::size_t i = 0; i < grads.b.size(); ++i) {
    mb_[i] = kBeta1 * mb_[i] + (1.0 - kBeta1) * grads.b[i];
    vb_[i] = kBeta2 * vb_[i].array() + (1.0 - kBeta2) * grads.b[i].array().square();
    net.biases()[i].array() -=
        lr_ * (mb_[i].array() / c1) / ((vb_[i].array() / c2).sqrt() + kEps);
  }
}

double ScalarAdam::step(double param, double grad) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad * grad;
  const double mh = m_ / (1.0 - std::pow(kBeta1, static_cast<double>(t_)));
  const double vh = v_ / (1.0 - std::pow(kBeta2, static_cast<double>(t_)));
  return param - lr_ * mh / (std::sqrt(vh) + kEps);
}

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(Matrix value, bool track_grad) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  n.c = track_grad ? 1.0 : 0.0;
  return push(std::move(n));
}

Tape::Id Tape::affine(const Matrix& w, const Vector& b, Id x, Matrix* dw, Vector* db) {
  Node n;
  n.op = Op::kAffine;
  n.a = x;
  n.w = &w;
  n.bias = &b;
  n.dw = dw;
  n.db = db;
  n.value = (w * nodes_[x].value).colwise() + b;
  return push(std::move(n));
}

Tape::Id Tape::mlp(const Mlp& net, Id x, MlpGrads* grads) {
  if (nodes_[x].value.rows() != net.input_size())
    throw std::invalid_argument("Tape::mlp: input size mismatch");
  Id h = x;
  const int layers = net.layer_count();
  for (int i = 0; i < layers; ++i) {
    Matrix* dw = grads ? &grads->w[static_cast<std::size_t>(i)] : nullptr;
    Vector* db = grads ? &grads->b[static_cast<std::size_t>(i)] : nullptr;
    h = affine(net.weights()[static_cast<std::size_t>(i)],
               net.biases()[static_cast<std::size_t>(i)], h, dw, db);
    if (!nodes_[h].value.allFinite())
      throw std::runtime_error("Tape::mlp: non-finite activation at layer " + std::to_string(i));
    if (i + 1 < layers)
      h = net.activation() == Activation::kSigmoid ? sigmoid(h) : tanh(h);
  }
  return h;
}

#define IPK_UNARY(NAME, OP_TAG, FWD)            \
  Tape::Id Tape::NAME(Id x) {                   \
    Node n;                                     \
    n.op = OP_TAG;                              \
    n.a = x;                                    \
    const auto& v = nodes_[x].value.array();    \
    n.value = (FWD).matrix();                   \
    return push(std::move(n));                  \
  }

IPK_UNARY(sigmoid, Op::kSigmoid, 1.0 / (1.0 + (-v).exp()))
IPK_UNARY(tanh, Op::kTanh, v.tanh())
IPK_UNARY(exp, Op::kExp, v.exp())
IPK_UNARY(log, Op::kLog, v.log())
IPK_UNARY(square, Op::kSquare, v.square())
// log1p(exp(x)) in a form stable for large |x|.
IPK_UNARY(softplus, Op::kSoftplus, v.max(0.0) + (1.0 + (-v.abs()).exp()).log())
#undef IPK_UNARY

Tape::Id Tape::add(Id a, Id b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value + nodes_[b].value;
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value - nodes_[b].value;
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value.cwiseProduct(nodes_[b].value);
  return push(std::move(n));
}

Tape::Id Tape::min_elem(Id a, Id b) {
  Node n;
  n.op = Op::kMinElem;
  n.a = a;
  n.b = b;
  n.value = nodes_[a].value.cwiseMin(nodes_[b].value);
  return push(std::move(n));
}

Tape::Id Tape::scale(Id x, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = x;
  n.c = c;
  n.value = c * nodes_[x].value;
  return push(std::move(n));
}

Tape::Id Tape::add_scalar(Id x, double c) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = x;
  n.c = c;
  n.value = nodes_[x].value.array() + c;
  return push(std::move(n));
}

Tape::Id Tape::rows(Id x, int begin, int count) {
  Node n;
  n.op = Op::kRows;
  n.a = x;
  n.r0 = begin;
  n.rn = count;
  n.value = nodes_[x].value.middleRows(begin, count);
  return push(std::move(n));
}

Tape::Id Tape::vcat(Id top, Id bottom) {
  Node n;
  n.op = Op::kVcat;
  n.a = top;
  n.b = bottom;
  const auto& t = nodes_[top].value;
  const auto& u = nodes_[bottom].value;
  Matrix v(t.rows() + u.rows(), t.cols());
  v.topRows(t.rows()) = t;
  v.bottomRows(u.rows()) = u;
  n.value = std::move(v);
  n.r0 = static_cast<int>(t.rows());
  return push(std::move(n));
}

Tape::Id Tape::soft_bound(Id x, double lo, double hi) {
  // x -> hi - softplus(hi - x) -> lo + softplus(. - lo)
  Id upper = add_scalar(scale(softplus(add_scalar(scale(x, -1.0), hi)), -1.0), hi);
  return add_scalar(softplus(add_scalar(upper, -lo)), lo);
}

Tape::Id Tape::sum(Id x) {
  Node n;
  n.op = Op::kSum;
  n.a = x;
  n.value = Matrix::Constant(1, 1, nodes_[x].value.sum());
  return push(std::move(n));
}

void Tape::backward(Id loss) {
  if (nodes_[loss].value.size() != 1)
    throw std::invalid_argument("Tape::backward: loss must be scalar");
  for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[loss].grad(0, 0) = 1.0;

  for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.isZero(0.0)) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kAffine: {
        nodes_[n.a].grad.noalias() += n.w->transpose() * g;
        if (n.dw) n.dw->noalias() += g * nodes_[n.a].value.transpose();
        if (n.db) *n.db += g.rowwise().sum();
        break;
      }
      case Op::kSigmoid: {
        const auto s = n.value.array();
        nodes_[n.a].grad.array() += g.array() * s * (1.0 - s);
        break;
      }
      case Op::kTanh: {
        const auto t = n.value.array();
        nodes_[n.a].grad.array() += g.array() * (1.0 - t.square());
        break;
      }
      case Op::kExp:
        nodes_[n.a].grad.array() += g.array() * n.value.array();
        break;
      case Op::kLog:
        nodes_[n.a].grad.array() += g.array() / nodes_[n.a].value.array();
        break;
      case Op::kSquare:
        nodes_[n.a].grad.array() += g.array() * 2.0 * nodes_[n.a].value.array();
        break;
      case Op::kSoftplus: {
        const auto x = nodes_[n.a].value.array();
        nodes_[n.a].grad.array() += g.array() / (1.0 + (-x).exp());
        break;
      }
      case Op::kAdd:
        nodes_[n.a].grad += g;
        nodes_[n.b].grad += g;
        break;
      case Op::kSub:
        nodes_[n.a].grad += g;
        nodes_[n.b].grad -= g;
        break;
      case Op::kMul:
        nodes_[n.a].grad.array() += g.array() * nodes_[n.b].value.array();
        nodes_[n.b].grad.array() += g.array() * nodes_[n.a].value.array();
        break;
      case Op::kMinElem: {
        // Ties route to the first argument.
        const auto pick_a =
            (nodes_[n.a].value.array() <= nodes_[n.b].value.array()).cast<double>();
        nodes_[n.a].grad.array() += g.array() * pick_a;
        nodes_[n.b].grad.array() += g.array() * (1.0 - pick_a);
        break;
      }
      case Op::kScale:
        nodes_[n.a].grad += n.c * g;
        break;
      case Op::kAddScalar:
        nodes_[n.a].grad += g;
        break;
      case Op::kRows:
        nodes_[n.a].grad.middleRows(n.r0, n.rn) += g;
        break;
      case Op::kVcat:
        nodes_[n.a].grad += g.topRows(n.r0);
        nodes_[n.b].grad += g.bottomRows(g.rows() - n.r0);
        break;
      case Op::kSum:
        nodes_[n.a].grad.array() += g(0, 0);
        break;
    }
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double soft_bound(double x, double lo, double hi) {
  return lo + softplus((hi - softplus(hi - x)) - lo);
}

double max_relative_error(const MlpGrads& a, const MlpGrads& b, double floor) {
  double worst = 0.0;
  auto acc = [&](double x, double y) {
    const double denom = std::max({std::abs(x), std::abs(y), floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  };
  for (std::size_t i = 0; i < a.w.size(); ++i)
    for (int k = 0; k < a.w[i].size(); ++k) acc(a.w[i].data()[k], b.w[i].data()[k]);
  for (std::size_t i = 0; i < a.b.size(); ++i)
    for (int k = 0; k < a.b[i].size(); ++k) acc(a.b[i].data()[k], b.b[i].data()[k]);
  return worst;
}

GradCheckReport grad_check(const Mlp& net, double tolerance, Rng& rng, int batch) {
  constexpr double kStep = 1e-5;
  Matrix x(net.input_size(), batch);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1.0, 1.0);

  // Mean squared output, the canonical scalar objective for checking.
  auto loss_of = [&](const Mlp& m) {
    const Matrix y = m.forward(x);
    return y.array().square().sum() / static_cast<double>(batch);
  };

  MlpGrads analytic = MlpGrads::zeros_like(net);
  {
    Tape tape;
    Tape::Id in = tape.constant(x);
    Tape::Id out = tape.mlp(net, in, &analytic);
    Tape::Id loss = tape.scale(tape.sum(tape.square(out)), 1.0 / batch);
    tape.backward(loss);
  }

  MlpGrads numeric = MlpGrads::zeros_like(net);
  Mlp probe = net;
  auto central_diff = [&](double* p, double* out) {
    const double saved = *p;
    *p = saved + kStep;
    const double hi = loss_of(probe);
    *p = saved - kStep;
    const double lo = loss_of(probe);
    *p = saved;
    *out = (hi - lo) / (2.0 * kStep);
  };
  for (std::size_t i = 0; i < probe.weights().size(); ++i)
    for (int k = 0; k < probe.weights()[i].size(); ++k)
      central_diff(probe.weights()[i].data() + k, numeric.w[i].data() + k);
  for (std::size_t i = 0; i < probe.biases().size(); ++i)
    for (int k = 0; k < probe.biases()[i].size(); ++k)
      central_diff(probe.biases()[i].data() + k, numeric.b[i].data() + k);

  GradCheckReport report;
  report.max_relative_error = max_relative_error(analytic, numeric);
  report.checked_parameters = net.parameter_count();
  report.pass = report.max_relative_error < tolerance;
  return report;
}

}  // namespace ipk::nn
