#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace ipk::cli {

struct TrainOptions {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

struct EvalOptions {
  std::string checkpoint_path;
  int episodes = 10;
  std::uint64_t seed = 0;
};

/// Applies the IPK_OUT_ROOT environment override: relative output paths are
/// rooted under it when it is set.
std::string resolve_out_dir(const std::string& requested);

int train_cmd(const TrainOptions& opt);
int eval_cmd(const EvalOptions& opt);
int export_cmd(const std::string& run_dir);

/// Full argv entry point (train | eval | export).
int run(int argc, const char* const* argv);

}  // namespace ipk::cli
