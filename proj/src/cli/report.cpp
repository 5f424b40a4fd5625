#include "htd/cli/report.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "htd/cli/output.hpp"

namespace htd::cli {

namespace fs = std::filesystem;

namespace {

using Table = std::vector<std::vector<std::string>>;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Column index by header name; -1 when absent.
int column(const Table& t, const std::string& name) {
  if (t.empty()) return -1;
  for (std::size_t i = 0; i < t[0].size(); ++i) {
    if (t[0][i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::string cell(const Table& t, std::size_t row, const std::string& name) {
  const int c = column(t, name);
  return c < 0 || static_cast<std::size_t>(c) >= t[row].size() ? std::string() : t[row][c];
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string short_num(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end == s.c_str()) return s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void checks_section(std::ostringstream& o, const Table& t) {
  o << "\nChecks\n";
  std::size_t w = 5;
  for (std::size_t r = 1; r < t.size(); ++r) w = std::max(w, cell(t, r, "check").size() + cell(t, r, "subject").size() + 3);
  o << "  " << pad("check", w + 1) << pad("kind", 11) << pad("value", 14) << pad("threshold", 14) << "result\n";
  std::size_t failed = 0;
  for (std::size_t r = 1; r < t.size(); ++r) {
    const std::string name = cell(t, r, "check") + " [" + cell(t, r, "subject") + "]";
    o << "  " << pad(name, w + 1) << pad(cell(t, r, "kind"), 11) << pad(short_num(cell(t, r, "value")), 14)
      << pad(short_num(cell(t, r, "threshold")), 14) << (cell(t, r, "result") == "pass" ? "PASS" : "FAIL") << "\n";
    if (cell(t, r, "result") != "pass") ++failed;
  }
  o << "  " << (t.size() - 1 - failed) << " of " << (t.size() - 1) << " checks passed\n";
}

void fits_section(std::ostringstream& o, const Table& t) {
  o << "\nRate fits\n";
  for (std::size_t r = 1; r < t.size(); ++r) {
    o << "  " << pad(cell(t, r, "process"), 12) << pad(cell(t, r, "model"), 12);
    if (cell(t, r, "status") != "ok") {
      o << "lambda_hat = n/a, R^2 = n/a (" << cell(t, r, "points") << " points after burn-in, 5 needed)\n";
      continue;
    }
    o << "lambda_hat = " << short_num(cell(t, r, "rate")) << " [" << short_num(cell(t, r, "rate_ci_low")) << ", "
      << short_num(cell(t, r, "rate_ci_high")) << "], R^2 = " << short_num(cell(t, r, "r2")) << ", t in ["
      << short_num(cell(t, r, "t_first")) << ", " << short_num(cell(t, r, "t_last")) << "]\n";
  }
}

/// Compares the accelerated TV curve with the envelope after the first TV < 0.5.
void envelope_section(std::ostringstream& o, const Table& tv, const Table& env) {
  std::map<double, double> bound;
  for (std::size_t r = 1; r < env.size(); ++r) bound[std::stod(cell(env, r, "t"))] = std::stod(cell(env, r, "bound"));
  std::size_t compared = 0, below = 0;
  double worst = 0.0;
  bool burned = false;
  for (std::size_t r = 1; r < tv.size(); ++r) {
    if (cell(tv, r, "process") != "accelerated") continue;
    const double t = std::stod(cell(tv, r, "t"));
    const double v = std::stod(cell(tv, r, "tv"));
    burned = burned || v < 0.5;
    const auto it = bound.find(t);
    if (!burned || it == bound.end()) continue;
    ++compared;
    if (v <= it->second) ++below;
    worst = std::max(worst, v / it->second);
  }
  o << "\nEnvelope\n  accelerated TV below 2 exp(-alpha t) / (1 - alpha C) at " << below << " of " << compared
    << " checkpoints after burn-in, worst TV/bound = " << short_num(num(worst)) << "\n";
}

void moments_section(std::ostringstream& o, const Table& t) {
  o << "\nHitting-time moments\n  " << pad("x0", 10) << pad("q", 4) << pad("v_hat_q", 14) << pad("se", 14)
    << pad("bvp v_q", 14) << pad("q! C^q", 14) << "within\n";
  for (std::size_t r = 1; r < t.size(); ++r) {
    if (cell(t, r, "quantity") != "moment") continue;
    const double est = std::stod(cell(t, r, "estimate"));
    const double se = std::stod(cell(t, r, "se"));
    const double b = std::stod(cell(t, r, "bound"));
    o << "  " << pad(short_num(cell(t, r, "x0")), 10) << pad(cell(t, r, "order"), 4) << pad(short_num(cell(t, r, "estimate")), 14)
      << pad(short_num(cell(t, r, "se")), 14) << pad(short_num(cell(t, r, "oracle")), 14)
      << pad(short_num(cell(t, r, "bound")), 14) << (est <= b + 3.0 * se ? "yes" : "no") << "\n";
  }
  bool header = false;
  for (std::size_t r = 1; r < t.size(); ++r) {
    if (cell(t, r, "quantity") != "exp_moment") continue;
    if (!header) {
      o << "\n  " << pad("x0", 10) << pad("alpha*C", 9) << pad("E exp(alpha g)", 16) << pad("se", 14)
        << pad("ladder bound", 14) << "1/(1-alpha C)\n";
      header = true;
    }
    o << "  " << pad(short_num(cell(t, r, "x0")), 10) << pad(short_num(cell(t, r, "order")), 9)
      << pad(short_num(cell(t, r, "estimate")), 16) << pad(short_num(cell(t, r, "se")), 14)
      << pad(short_num(cell(t, r, "oracle")), 14) << short_num(cell(t, r, "bound")) << "\n";
  }
}

void lln_section(std::ostringstream& o, const Table& t) {
  o << "\nLaw of large numbers (Langevin time averages)\n  " << pad("T", 10) << pad("exceedance", 14) << "mean average\n";
  for (std::size_t r = 1; r < t.size(); ++r) {
    o << "  " << pad(short_num(cell(t, r, "T")), 10) << pad(short_num(cell(t, r, "exceedance")), 14)
      << short_num(cell(t, r, "mean_average")) << "\n";
  }
  if (t.size() > 1) o << "  a_g = " << short_num(cell(t, 1, "a_g")) << ", eps = " << short_num(cell(t, 1, "eps")) << "\n";
}

}  // namespace

std::string build_report(const fs::path& run_dir) {
  const fs::path mf = run_dir / "manifest.txt";
  if (!fs::exists(mf)) throw ReportError("no manifest in " + run_dir.string());
  std::map<std::string, std::string> m;
  try {
    m = parse_manifest(slurp(mf));
  } catch (const std::exception& e) {
    throw ReportError(e.what());
  }
  for (const char* key : {"tool", "experiment", "config_hash", "status"}) {
    if (!m.count(key)) throw ReportError(std::string("corrupt manifest: missing ") + key);
  }

  std::ostringstream o;
  o << "Run summary: " << run_dir.string() << "\n";
  for (const char* key : {"experiment", "status", "exit_code", "config_hash", "master_seed", "density", "normal",
                          "threads", "version", "started_utc", "wall_clock_seconds"}) {
    if (m.count(key)) o << "  " << pad(key, 20) << m[key] << "\n";
  }
  auto table = [&](const char* name) { return fs::exists(run_dir / name) ? read_csv(run_dir / name) : Table{}; };
  if (const Table t = table("checks.csv"); !t.empty()) checks_section(o, t);
  if (const Table t = table("identities.csv"); !t.empty()) {
    o << "\nResiduals\n";
    for (std::size_t r = 1; r < t.size(); ++r) {
      o << "  " << pad(cell(t, r, "quantity") + " [" + cell(t, r, "subject") + "]", 44)
        << pad(short_num(cell(t, r, "value")), 14) << "tol " << short_num(cell(t, r, "tolerance")) << "\n";
    }
  }
  if (const Table t = table("fits.csv"); !t.empty()) fits_section(o, t);
  if (const Table env = table("envelope.csv"); !env.empty()) envelope_section(o, table("tv_curve.csv"), env);
  if (const Table t = table("ladder_constants.csv"); !t.empty()) {
    o << "\nLadder constants\n";
    for (std::size_t r = 1; r < t.size(); ++r) o << "  " << pad(t[r][0], 16) << short_num(t[r][1]) << "\n";
  }
  if (const Table t = table("hitting_summary.csv"); !t.empty()) moments_section(o, t);
  if (const Table t = table("sweep_summary.csv"); !t.empty()) {
    o << "\nInitial-condition sweep\n";
    for (std::size_t r = 1; r < t.size(); ++r) {
      o << "  " << pad(cell(t, r, "process"), 12) << "final spread " << short_num(cell(t, r, "final_spread"))
        << ", 3 x pooled SE " << short_num(num(3.0 * std::stod(cell(t, r, "pooled_se"))))
        << (cell(t, r, "collapsed") == "true" ? ", collapsed\n" : ", not collapsed\n");
    }
  }
  if (const Table t = table("lln.csv"); !t.empty()) lln_section(o, t);
  return o.str();
}

std::string write_report(const fs::path& run_dir) {
  const std::string text = build_report(run_dir);
  std::ofstream out(run_dir / "summary.txt", std::ios::binary);
  if (!out) throw ReportError("cannot write " + (run_dir / "summary.txt").string());
  out << text;
  return text;
}

}  // namespace htd::cli
