#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "ipk/rng.hpp"
#include "ipk/sim.hpp"

namespace ipk::replay {

/// Plain SARS tuple used for critic/actor updates and the model buffer.
struct Transition {
  Eigen::VectorXd obs;
  Eigen::Vector4d action = Eigen::Vector4d::Zero();
  double reward = 0.0;
  Eigen::VectorXd obs_next;
  bool done = false;
};

enum class Phase { kInitialExploration, kFusion };

/// One real interaction recorded twice: the executed (real) half and the
/// counterfactual policy half estimated from the same step.
struct AugmentedTransition {
  sim::Observation o_real;
  Eigen::Vector4d a_mbpo = Eigen::Vector4d::Zero();
  double r_mbpo = 0.0;
  sim::Observation o_next_mbpo;
  Eigen::Vector4d a_real = Eigen::Vector4d::Zero();
  double r_real = 0.0;
  sim::Observation o_next_real;
  bool done = false;       // both halves share the real step's termination
  double h_setpoint = 0.0;  // episode distance setpoint, needed to re-derive rewards
  Phase phase = Phase::kFusion;

  Transition real_half() const;
  Transition mbpo_half() const;
};

struct SampledHalf {
  Transition t;
  bool from_real_half = false;
  sim::Observation o_real;  // anchor observation for divergence bookkeeping
};

/// Fixed-capacity FIFO ring over augmented tuples.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(AugmentedTransition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }
  const AugmentedTransition& at(std::size_t i) const { return data_[i]; }

  const AugmentedTransition& sample(Rng& rng) const;

  /// Draws `batch` tuples uniformly; each contributes its real half with
  /// probability `zeta_bas`, its counterfactual half otherwise.
  std::vector<SampledHalf> weighted_sample(double zeta_bas, int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write position once full
  std::vector<AugmentedTransition> data_;
};

/// Fixed-capacity FIFO ring over plain transitions (model-generated data).
class ModelBuffer {
 public:
  explicit ModelBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  const Transition& at(std::size_t i) const { return data_[i]; }
  const Transition& sample(Rng& rng) const;
  void clear();

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

}  // namespace ipk::replay
