#include "ipk/replay.hpp"

#include <stdexcept>

namespace ipk::replay {

Transition AugmentedTransition::real_half() const {
  Transition t;
  t.obs = o_real.to_vector();
  t.action = a_real;
  t.reward = r_real;
  t.obs_next = o_next_real.to_vector();
  t.done = done;
  return t;
}

Transition AugmentedTransition::mbpo_half() const {
  Transition t;
  t.obs = o_real.to_vector();
  t.action = a_mbpo;
  t.reward = r_mbpo;
  t.obs_next = o_next_mbpo.to_vector();
  t.done = done;
  return t;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(AugmentedTransition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const AugmentedTransition& ReplayBuffer::sample(Rng& rng) const {
  if (data_.empty()) throw std::runtime_error("ReplayBuffer::sample: empty buffer");
  return data_[uniform_int(rng, data_.size())];
}

std::vector<SampledHalf> ReplayBuffer::weighted_sample(double zeta_bas, int batch,
                                                       Rng& rng) const {
  if (data_.empty()) throw std::runtime_error("ReplayBuffer::weighted_sample: empty buffer");
  std::vector<SampledHalf> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    const AugmentedTransition& src = sample(rng);
    SampledHalf h;
    h.from_real_half = uniform(rng, 0.0, 1.0) < zeta_bas;
    h.t = h.from_real_half ? src.real_half() : src.mbpo_half();
    h.o_real = src.o_real;
    out.push_back(std::move(h));
  }
  return out;
}

ModelBuffer::ModelBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ModelBuffer: capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ModelBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ModelBuffer::sample(Rng& rng) const {
  if (data_.empty()) throw std::runtime_error("ModelBuffer::sample: empty buffer");
  return data_[uniform_int(rng, data_.size())];
}

void ModelBuffer::clear() {
  data_.clear();
  head_ = 0;
}

}  // namespace ipk::replay
