#include <set>

#include "doctest.h"
#include "ipk/replay.hpp"
#include "ipk/rng.hpp"

using ipk::replay::AugmentedTransition;
using ipk::replay::ModelBuffer;
using ipk::replay::ReplayBuffer;
using ipk::replay::Transition;

namespace {

AugmentedTransition tagged(double tag) {
  AugmentedTransition t;
  t.o_real.w = tag;
  t.a_real.setConstant(tag);
  t.r_real = tag;
  t.o_next_real.w = tag + 0.5;
  t.a_mbpo.setConstant(-tag);
  t.r_mbpo = -tag;
  t.o_next_mbpo.w = tag - 0.5;
  t.h_setpoint = 0.7;
  t.done = false;
  return t;
}

}  // namespace

TEST_SUITE("replay") {

TEST_CASE("the two halves share the anchor state but differ in action and outcome") {
  const AugmentedTransition t = tagged(2.0);
  const Transition real = t.real_half();
  const Transition mbpo = t.mbpo_half();
  CHECK(real.obs == mbpo.obs);
  CHECK(real.obs(0) == 2.0);
  CHECK(real.action(0) == 2.0);
  CHECK(mbpo.action(0) == -2.0);
  CHECK(real.reward == 2.0);
  CHECK(mbpo.reward == -2.0);
  CHECK(real.obs_next(0) == 2.5);
  CHECK(mbpo.obs_next(0) == 1.5);
  CHECK(real.done == mbpo.done);
}

TEST_CASE("ring buffer keeps exactly the most recent tuples") {
  ReplayBuffer buf(3);
  CHECK(buf.empty());
  for (int i = 0; i < 5; ++i) buf.push(tagged(i));
  CHECK(buf.size() == 3);
  std::set<double> tags;
  for (std::size_t i = 0; i < buf.size(); ++i) tags.insert(buf.at(i).r_real);
  CHECK(tags == std::set<double>{2.0, 3.0, 4.0});
  CHECK(buf.capacity() == 3);
}

TEST_CASE("buffers reject zero capacity and empty sampling") {
  CHECK_THROWS(ReplayBuffer(0));
  CHECK_THROWS(ModelBuffer(0));
  ReplayBuffer buf(4);
  ModelBuffer mbuf(4);
  ipk::Rng rng(1);
  CHECK_THROWS(buf.sample(rng));
  CHECK_THROWS(buf.weighted_sample(0.5, 8, rng));
  CHECK_THROWS(mbuf.sample(rng));
}

TEST_CASE("weighted sampling at the endpoints picks one half exclusively") {
  ReplayBuffer buf(16);
  for (int i = 0; i < 16; ++i) buf.push(tagged(i));
  ipk::Rng rng(2);
  for (const auto& h : buf.weighted_sample(1.0, 64, rng)) {
    CHECK(h.from_real_half);
    CHECK(h.t.reward >= 0.0);  // real rewards carry the positive tag
    CHECK(h.o_real.w == h.t.obs(0));
  }
  for (const auto& h : buf.weighted_sample(0.0, 64, rng)) {
    CHECK(!h.from_real_half);
    CHECK(h.t.reward <= 0.0);
  }
}

TEST_CASE("weighted sampling mixes halves near the requested rate") {
  ReplayBuffer buf(8);
  for (int i = 0; i < 8; ++i) buf.push(tagged(i + 1));
  ipk::Rng rng(3);
  const int n = 20000;
  int real = 0;
  for (const auto& h : buf.weighted_sample(0.7, n, rng))
    if (h.from_real_half) ++real;
  const double rate = static_cast<double>(real) / n;
  CHECK(rate == doctest::Approx(0.7).epsilon(0.03));
}

TEST_CASE("model buffer wraps and clears") {
  ModelBuffer buf(2);
  Transition t;
  t.obs = Eigen::VectorXd::Zero(7);
  t.obs_next = Eigen::VectorXd::Zero(7);
  for (int i = 0; i < 5; ++i) {
    t.reward = i;
    buf.push(t);
  }
  CHECK(buf.size() == 2);
  std::set<double> rewards{buf.at(0).reward, buf.at(1).reward};
  CHECK(rewards == std::set<double>{3.0, 4.0});
  buf.clear();
  CHECK(buf.empty());
  // Refill works after clearing.
  t.reward = 9;
  buf.push(t);
  CHECK(buf.size() == 1);
  CHECK(buf.at(0).reward == 9.0);
}

}  // TEST_SUITE
