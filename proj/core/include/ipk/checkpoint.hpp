#pragma once

#include <memory>
#include <string>

#include "ipk/agent.hpp"

namespace ipk::checkpoint {

inline constexpr int kVersion = 1;

/// Everything needed to evaluate (or inspect) a finished run: resolved
/// configuration, learned networks with optimizer state, the prior-accuracy
/// estimate, the exploitation coefficient, and the rng engine states at save
/// time. Replay buffers are not persisted.
struct Bundle {
  config::ExperimentConfig cfg;
  long steps = 0;
  double zeta_bas = 0.0;
  prior::AccuracyEstimate accuracy;
  std::unique_ptr<policy::SacAgent> sac;              // null for the rule-only mode
  std::unique_ptr<dynamics::EnsembleModel> ensemble;  // null when the mode has no models
  agent::Trainer::RngStates rng;
};

void save(const std::string& path, agent::Trainer& trainer);
Bundle load(const std::string& path);  // throws on version mismatch or malformed file

}  // namespace ipk::checkpoint
