#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace htd::cli {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds the text summary of a finished run: manifest, pass/fail table of checks.csv,
/// rate fits with the envelope comparison, and the moment table against q! C^q.
/// Throws ReportError("no manifest ...") or ReportError("corrupt manifest ...").
std::string build_report(const std::filesystem::path& run_dir);

/// build_report written to run_dir/summary.txt; returns the text.
std::string write_report(const std::filesystem::path& run_dir);

}  // namespace htd::cli
