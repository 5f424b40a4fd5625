#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace htd::cli {

/// Formats doubles with round-trip precision so reruns are byte-identical.
std::string num(double v);

/// Tracks every file written under one output directory so a failed run can be
/// rolled back.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  /// Writes `name` (relative) with the given content and records it.
  void write(const std::string& name, const std::string& content);
  /// Removes every recorded file, and the directory if this object created it and it is empty.
  void rollback();
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  bool created_ = false;
  std::vector<std::filesystem::path> files_;
};

/// Header plus rows, comma separated, '\n' line ends.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Minimal line plot; y is drawn on a log10 axis when log_y is set (non-positive
/// values are dropped).
std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, bool log_y);

/// Flat key=value text, one pair per line, in insertion order.
std::string manifest_text(const std::vector<std::pair<std::string, std::string>>& entries);
/// Parses manifest text; throws std::runtime_error on a malformed line.
std::map<std::string, std::string> parse_manifest(const std::string& text);

/// Reads a CSV file into rows of cells (header included).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file);

}  // namespace htd::cli
