#include "htd/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace htd::cli {

namespace pt = boost::property_tree;

namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::set<std::string> process_keys{"step", "h", "h_max", "kappa", "h_min", "reflection", "c1", "c2"};
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"kind", "master_seed", "output_dir", "emit_paths", "emit_svg", "threads", "normal"}},
      {"density", {"model", "m", "s", "eps"}},
      {"processes", {"kinds"}},
      {"langevin", process_keys},
      {"accelerated", process_keys},
      {"mean_reverting", process_keys},
      {"run",
       {"ensemble_size", "checkpoints", "initial", "x0", "x0_list", "K", "N", "q_max", "alpha_fractions",
        "horizon_multiple", "T_list", "lln_g", "eps", "delta", "bins", "bootstrap"}},
  };
  return keys;
}

// Collects conversion problems instead of throwing at the first one.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::vector<std::string> problems;

  std::optional<std::string> raw(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void real(const std::string& key, double& out) {
    if (auto v = raw(key)) {
      double x = 0.0;
      if (!parse_double(*v, x)) {
        problems.push_back(key + ": '" + *v + "' is not a number");
      } else {
        out = x;
      }
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (auto v = raw(key)) {
      Int x{};
      const auto* end = v->data() + v->size();
      auto [p, ec] = std::from_chars(v->data(), end, x);
      if (ec != std::errc() || p != end) {
        problems.push_back(key + ": '" + *v + "' is not a valid integer");
      } else {
        out = x;
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        out = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        out = false;
      } else {
        problems.push_back(key + ": '" + *v + "' is not a boolean");
      }
    }
  }

  // Comma list, or a range "start:step:stop" (inclusive up to rounding).
  void list(const std::string& key, std::vector<double>& out) {
    auto v = raw(key);
    if (!v) return;
    std::vector<double> vals;
    if (v->find(':') != std::string::npos) {
      std::vector<double> parts;
      std::stringstream ss(*v);
      std::string item;
      while (std::getline(ss, item, ':')) {
        double x = 0.0;
        if (!parse_double(trim(item), x)) {
          problems.push_back(key + ": bad range '" + *v + "'");
          return;
        }
        parts.push_back(x);
      }
      if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
        problems.push_back(key + ": range must be start:step:stop with step > 0");
        return;
      }
      const auto n = static_cast<long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
      for (long k = 0; k <= n; ++k) vals.push_back(parts[0] + static_cast<double>(k) * parts[1]);
    } else {
      std::stringstream ss(*v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        double x = 0.0;
        if (!parse_double(item, x)) {
          problems.push_back(key + ": '" + item + "' is not a number");
          return;
        }
        vals.push_back(x);
      }
    }
    out = std::move(vals);
  }

  static bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
  }

 private:
  const pt::ptree& tree_;
};

ProcessKind process_kind(const std::string& name, bool& ok) {
  ok = true;
  if (name == "langevin") return ProcessKind::LangevinY;
  if (name == "accelerated") return ProcessKind::AcceleratedX;
  if (name == "mean_reverting") return ProcessKind::MeanRevertingZ;
  ok = false;
  return ProcessKind::Custom;
}

ProcessConfig default_process(ProcessKind kind) {
  ProcessConfig p;
  p.kind = kind;
  p.policy = StepPolicy::adaptive_scale(1e-2, 1e-3);
  p.reflection = kind == ProcessKind::MeanRevertingZ ? Reflection::Clamp : Reflection::Absolute;
  return p;
}

const char* to_string(Reflection r) {
  switch (r) {
    case Reflection::Absolute: return "absolute";
    case Reflection::Projection: return "projection";
    case Reflection::Clamp: return "clamp";
  }
  return "?";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Tv: return "tv";
    case ExperimentKind::Hitting: return "hitting";
    case ExperimentKind::Lln: return "lln";
    case ExperimentKind::Bvp: return "bvp";
    case ExperimentKind::Identities: return "identities";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Compare: return "compare";
  }
  return "?";
}

DensityModel ExperimentConfig::density_model() const {
  if (model == "half_student") return HalfStudentLike{m, s};
  if (model == "perturbed_pareto") return PerturbedPareto{m, eps};
  return ParetoShifted{m};
}

const ProcessConfig* ExperimentConfig::process(ProcessKind k) const {
  for (const auto& p : processes) {
    if (p.kind == k) return &p;
  }
  return nullptr;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  Reader r(tree);
  for (const auto& [section, body] : tree) {
    const auto it = allowed_keys().find(section);
    if (it == allowed_keys().end()) {
      r.problems.push_back("unknown section [" + section + "]");
      continue;
    }
    if (body.empty() && !body.data().empty()) {
      r.problems.push_back("key '" + section + "' outside any section");
      continue;
    }
    for (const auto& kv : body) {
      if (!it->second.count(kv.first)) r.problems.push_back(section + "." + kv.first + ": unknown key");
    }
  }

  ExperimentConfig c;
  if (auto v = r.raw("experiment.kind")) {
    static const std::map<std::string, ExperimentKind> kinds{
        {"tv", ExperimentKind::Tv},         {"hitting", ExperimentKind::Hitting},
        {"lln", ExperimentKind::Lln},       {"bvp", ExperimentKind::Bvp},
        {"identities", ExperimentKind::Identities}, {"sweep", ExperimentKind::Sweep},
        {"compare", ExperimentKind::Compare}};
    const auto it = kinds.find(*v);
    if (it == kinds.end()) {
      r.problems.push_back("experiment.kind: unknown experiment '" + *v +
                           "' (expected tv, hitting, lln, bvp, identities, sweep or compare)");
    } else {
      c.kind = it->second;
    }
  }
  r.integer("experiment.master_seed", c.master_seed);
  if (auto v = r.raw("experiment.output_dir")) c.output_dir = *v;
  r.integer("experiment.emit_paths", c.emit_paths);
  r.boolean("experiment.emit_svg", c.emit_svg);
  r.integer("experiment.threads", c.threads);
  if (auto v = r.raw("experiment.normal")) {
    if (*v == "polar") {
      c.normal = NormalMethod::Polar;
    } else if (*v == "inverse_cdf") {
      c.normal = NormalMethod::InverseCdf;
    } else {
      r.problems.push_back("experiment.normal: expected polar or inverse_cdf, got '" + *v + "'");
    }
  }

  if (auto v = r.raw("density.model")) c.model = *v;
  r.real("density.m", c.m);
  r.real("density.s", c.s);
  r.real("density.eps", c.eps);

  std::vector<std::string> names{"accelerated"};
  if (auto v = r.raw("processes.kinds")) {
    names.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) names.push_back(item);
    }
  }
  for (const auto& name : names) {
    bool ok = false;
    const ProcessKind kind = process_kind(name, ok);
    if (!ok) {
      r.problems.push_back("processes.kinds: unknown process '" + name + "' (expected langevin, accelerated, mean_reverting)");
      continue;
    }
    if (c.process(kind)) {
      r.problems.push_back("processes.kinds: '" + name + "' listed twice");
      continue;
    }
    ProcessConfig p = default_process(kind);
    if (auto v = r.raw(name + ".step")) {
      if (*v == "uniform") {
        p.policy.mode = StepPolicy::Mode::Uniform;
      } else if (*v == "adaptive_speed") {
        p.policy.mode = StepPolicy::Mode::AdaptiveSpeed;
      } else if (*v == "adaptive_scale") {
        p.policy.mode = StepPolicy::Mode::AdaptiveScale;
      } else {
        r.problems.push_back(name + ".step: expected uniform, adaptive_speed or adaptive_scale, got '" + *v + "'");
      }
    }
    r.real(name + ".h", p.policy.h);
    r.real(name + ".h_max", p.policy.h_max);
    r.real(name + ".kappa", p.policy.kappa);
    r.real(name + ".h_min", p.policy.h_min);
    r.real(name + ".c1", p.c1);
    r.real(name + ".c2", p.c2);
    if (auto v = r.raw(name + ".reflection")) {
      if (*v == "absolute") {
        p.reflection = Reflection::Absolute;
      } else if (*v == "projection") {
        p.reflection = Reflection::Projection;
      } else if (*v == "clamp") {
        p.reflection = Reflection::Clamp;
      } else {
        r.problems.push_back(name + ".reflection: expected absolute, projection or clamp, got '" + *v + "'");
      }
    }
    c.processes.push_back(p);
  }

  r.integer("run.ensemble_size", c.ensemble_size);
  c.checkpoints.clear();
  r.list("run.checkpoints", c.checkpoints);
  if (auto v = r.raw("run.initial")) c.initial = *v;
  r.real("run.x0", c.x0);
  r.list("run.x0_list", c.x0_list);
  r.real("run.K", c.K);
  r.real("run.N", c.N);
  r.integer("run.q_max", c.q_max);
  r.list("run.alpha_fractions", c.alpha_fractions);
  r.real("run.horizon_multiple", c.horizon_multiple);
  r.list("run.T_list", c.T_list);
  if (auto v = r.raw("run.lln_g")) {
    if (*v == "tail_power") {
      c.lln_g = LlnFunction::TailPower;
    } else if (*v == "cauchy") {
      c.lln_g = LlnFunction::Cauchy;
    } else if (*v == "constant") {
      c.lln_g = LlnFunction::Constant;
    } else {
      r.problems.push_back("run.lln_g: expected tail_power, cauchy or constant, got '" + *v + "'");
    }
  }
  r.real("run.eps", c.eps_rel);
  r.real("run.delta", c.delta);
  r.integer("run.bins", c.bins);
  r.integer("run.bootstrap", c.bootstrap);

  if (!tree.get_child_optional("run.checkpoints")) {
    for (int k = 1; k <= 20; ++k) c.checkpoints.push_back(0.5 * k);
  }
  if (!tree.get_child_optional("run.T_list")) c.T_list = {50, 100, 200, 400};

  if (!r.problems.empty()) throw ConfigError(r.problems);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string serialize_impl(const ExperimentConfig& c, bool for_hash) {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "kind = " << to_string(c.kind) << "\n";
  os << "master_seed = " << c.master_seed << "\n";
  if (!for_hash) os << "output_dir = " << c.output_dir << "\n";
  os << "emit_paths = " << c.emit_paths << "\n";
  os << "emit_svg = " << (c.emit_svg ? "true" : "false") << "\n";
  if (!for_hash) os << "threads = " << c.threads << "\n";
  os << "normal = " << to_string(c.normal) << "\n\n";

  os << "[density]\n";
  os << "model = " << c.model << "\n";
  os << "m = " << fmt(c.m) << "\n";
  os << "s = " << fmt(c.s) << "\n";
  os << "eps = " << fmt(c.eps) << "\n\n";

  os << "[processes]\nkinds = ";
  for (std::size_t i = 0; i < c.processes.size(); ++i) os << (i ? ", " : "") << htd::to_string(c.processes[i].kind);
  os << "\n";
  for (const auto& p : c.processes) {
    os << "\n[" << htd::to_string(p.kind) << "]\n";
    os << "step = " << htd::to_string(p.policy.mode) << "\n";
    os << "h = " << fmt(p.policy.h) << "\n";
    os << "h_max = " << fmt(p.policy.h_max) << "\n";
    os << "kappa = " << fmt(p.policy.kappa) << "\n";
    os << "h_min = " << fmt(p.policy.h_min) << "\n";
    os << "reflection = " << to_string(p.reflection) << "\n";
    os << "c1 = " << fmt(p.c1) << "\n";
    os << "c2 = " << fmt(p.c2) << "\n";
  }

  os << "\n[run]\n";
  os << "ensemble_size = " << c.ensemble_size << "\n";
  os << "checkpoints = " << fmt_list(c.checkpoints) << "\n";
  os << "initial = " << c.initial << "\n";
  os << "x0 = " << fmt(c.x0) << "\n";
  os << "x0_list = " << fmt_list(c.x0_list) << "\n";
  os << "K = " << fmt(c.K) << "\n";
  os << "N = " << fmt(c.N) << "\n";
  os << "q_max = " << c.q_max << "\n";
  os << "alpha_fractions = " << fmt_list(c.alpha_fractions) << "\n";
  os << "horizon_multiple = " << fmt(c.horizon_multiple) << "\n";
  os << "T_list = " << fmt_list(c.T_list) << "\n";
  os << "lln_g = " << to_string(c.lln_g) << "\n";
  os << "eps = " << fmt(c.eps_rel) << "\n";
  os << "delta = " << fmt(c.delta) << "\n";
  os << "bins = " << c.bins << "\n";
  os << "bootstrap = " << c.bootstrap << "\n";
  return os.str();
}

}  // namespace

std::string serialize(const ExperimentConfig& c) { return serialize_impl(c, false); }

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : serialize_impl(c, true)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return serialize(a) == serialize(b); }

void validate(const ExperimentConfig& c) {
  std::vector<std::string> p;
  auto finite = [](double v) { return std::isfinite(v); };

  if (c.model != "pareto" && c.model != "half_student" && c.model != "perturbed_pareto") {
    p.push_back("density.model: unknown model '" + c.model + "' (expected pareto, half_student, perturbed_pareto)");
  }
  if (!finite(c.m) || !(c.m > 3.0)) p.push_back("density.m: tail exponent m must satisfy m > 3 (got " + fmt(c.m) + ")");
  if (c.model == "half_student" && !(c.s > 0.0 && finite(c.s))) p.push_back("density.s: scale must be > 0");
  if (c.model == "perturbed_pareto" && !(std::abs(c.eps) < 0.5)) p.push_back("density.eps: need |eps| < 1/2");

  if (c.threads < 0) p.push_back("experiment.threads: must be >= 0");
  if (c.emit_paths > 1000) p.push_back("experiment.emit_paths: at most 1000 paths may be dumped");
  if (c.output_dir.empty()) p.push_back("experiment.output_dir: must not be empty");

  if (c.processes.empty()) p.push_back("processes.kinds: need at least one process");
  for (const auto& pc : c.processes) {
    const std::string name = htd::to_string(pc.kind);
    try {
      pc.policy.validate();
    } catch (const std::exception& e) {
      p.push_back(name + ": " + e.what());
    }
    if (!(pc.policy.h_max > 0.0)) p.push_back(name + ".h_max: must be > 0");
    if (!(pc.c1 > 0.0 && finite(pc.c1)) || !(pc.c2 > 0.0 && finite(pc.c2))) {
      p.push_back(name + ": c1 and c2 must be > 0");
    }
  }

  if (c.ensemble_size < 1) p.push_back("run.ensemble_size: must be >= 1");
  const bool needs_tv =
      c.kind == ExperimentKind::Tv || c.kind == ExperimentKind::Sweep || c.kind == ExperimentKind::Compare;
  if (needs_tv) {
    if (c.ensemble_size < 1000) p.push_back("run.ensemble_size: TV experiments need at least 1000 paths");
    if (c.bins < 1) p.push_back("run.bins: must be >= 1");
    const double smallest = std::min(0.999 / static_cast<double>(std::max<std::size_t>(c.bins, 1)), 0.001);
    if (smallest * static_cast<double>(c.ensemble_size) < 5.0) {
      p.push_back("run.ensemble_size: expected count per bin below 5 (need ensemble_size >= " +
                  std::to_string(static_cast<long>(std::ceil(5.0 / smallest))) + " for " + std::to_string(c.bins) +
                  " bins plus the tail bin)");
    }
  }
  if (c.checkpoints.empty()) p.push_back("run.checkpoints: need at least one checkpoint");
  for (std::size_t k = 0; k < c.checkpoints.size(); ++k) {
    if (!finite(c.checkpoints[k]) || c.checkpoints[k] < 0.0 || (k > 0 && !(c.checkpoints[k] > c.checkpoints[k - 1]))) {
      p.push_back("run.checkpoints: must be finite, >= 0 and strictly increasing");
      break;
    }
  }
  if (c.initial != "fixed" && c.initial != "stationary") p.push_back("run.initial: expected fixed or stationary");
  if (!finite(c.x0) || c.x0 < 0.0) p.push_back("run.x0: must be finite and >= 0");
  for (double x : c.x0_list) {
    if (!finite(x) || x < 0.0) {
      p.push_back("run.x0_list: entries must be finite and >= 0");
      break;
    }
  }
  if (!(c.K > 0.0) || !finite(c.K)) p.push_back("run.K: must be > 0");
  if (!(c.N > c.K) || !finite(c.N)) p.push_back("run.N: must be finite and > K");
  if (c.q_max < 1 || c.q_max > 8) p.push_back("run.q_max: must lie in [1, 8]");
  for (double a : c.alpha_fractions) {
    if (!(a >= 0.0 && a < 1.0)) {
      p.push_back("run.alpha_fractions: entries are fractions of 1/C and must lie in [0, 1)");
      break;
    }
  }
  if (!(c.horizon_multiple > 1.0)) p.push_back("run.horizon_multiple: must be > 1");
  if (c.T_list.empty()) p.push_back("run.T_list: need at least one horizon");
  for (std::size_t k = 0; k < c.T_list.size(); ++k) {
    if (!(c.T_list[k] > 0.0) || !finite(c.T_list[k]) || (k > 0 && !(c.T_list[k] > c.T_list[k - 1]))) {
      p.push_back("run.T_list: must be positive and strictly increasing");
      break;
    }
  }
  if (!(c.eps_rel > 0.0)) p.push_back("run.eps: must be > 0");
  if (!(c.delta > 0.0 && c.delta < 1.0)) p.push_back("run.delta: must lie in (0, 1)");

  if ((c.kind == ExperimentKind::Hitting || c.kind == ExperimentKind::Bvp) && !c.process(ProcessKind::AcceleratedX)) {
    p.push_back("processes.kinds: hitting and bvp experiments need the accelerated process");
  }
  if (!p.empty()) throw ConfigError(p);
}

}  // namespace htd::cli
