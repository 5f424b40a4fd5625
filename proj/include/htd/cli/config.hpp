#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/diagnostics.hpp"

namespace htd::cli {

/// Lists every offending field, one per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class ExperimentKind { Tv, Hitting, Lln, Bvp, Identities, Sweep, Compare };

const char* to_string(ExperimentKind k);

struct ProcessConfig {
  ProcessKind kind = ProcessKind::AcceleratedX;
  StepPolicy policy;
  Reflection reflection = Reflection::Absolute;
  double c1 = 1.0;  // accelerated only
  double c2 = 1.0;
};

struct ExperimentConfig {
  // [experiment]
  ExperimentKind kind = ExperimentKind::Tv;
  std::uint64_t master_seed = 42;
  std::string output_dir = "htdiff_out";
  std::size_t emit_paths = 0;  // number of per-step paths dumped per process
  bool emit_svg = false;
  int threads = 0;
  NormalMethod normal = NormalMethod::Polar;

  // [density]
  std::string model = "pareto";
  double m = 5.0;
  double s = 1.0;
  double eps = 0.3;

  // [processes] plus one section per process
  std::vector<ProcessConfig> processes;

  // [run]
  std::size_t ensemble_size = 10000;
  std::vector<double> checkpoints;
  std::string initial = "fixed";  // fixed | stationary
  double x0 = 50.0;
  std::vector<double> x0_list;
  double K = 1.0;
  double N = 1000.0;
  int q_max = 4;
  std::vector<double> alpha_fractions{0.5};  // alpha = fraction / C
  double horizon_multiple = 10.0;            // hitting horizon in units of the BVP mean
  std::vector<double> T_list;
  LlnFunction lln_g = LlnFunction::TailPower;
  double eps_rel = 0.1;
  double delta = 0.05;
  std::size_t bins = 64;
  std::size_t bootstrap = 200;

  DensityModel density_model() const;
  const ProcessConfig* process(ProcessKind k) const;
};

/// Parses the INI text; unknown keys and invalid values are collected into one ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical INI text. parse_config(serialize(c)) == c field by field.
std::string serialize(const ExperimentConfig& c);

/// FNV-1a over the canonical text without output_dir and threads, in hex.
std::string config_hash(const ExperimentConfig& c);

/// Throws ConfigError listing every violated precondition.
void validate(const ExperimentConfig& c);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace htd::cli
