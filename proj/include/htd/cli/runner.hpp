#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "htd/cli/config.hpp"

namespace htd::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "HTDIFF_OUT_DIR";

enum ExitCode : int { kOk = 0, kOperationalError = 1, kInvariantViolation = 2 };

/// Command-line overrides; unset fields keep the config value.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool emit_svg = false;
  bool emit_paths = false;
};

/// Output directory precedence: --out, then $HTDIFF_OUT_DIR, then the config.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOverrides& o, const char* env_out_dir);

/// Runs the experiment and writes its artifacts. Returns 0 on success, 2 when an
/// invariant check fails (outputs kept), 1 on any operational error (outputs removed).
/// Progress goes to `log`, errors to `err`.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace htd::cli
