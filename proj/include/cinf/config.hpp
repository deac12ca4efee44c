#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cinf/cascade_io.hpp"
#include "cinf/degrade.hpp"
#include "cinf/error.hpp"
#include "cinf/network.hpp"

namespace cinf {

enum class TestKind { ranker, hp, shuffle };

inline std::optional<TestKind> parse_test_kind(std::string_view s) {
  if (s == "ranker") return TestKind::ranker;
  if (s == "hp") return TestKind::hp;
  if (s == "shuffle") return TestKind::shuffle;
  return std::nullopt;
}

inline const char* to_string(TestKind t) {
  switch (t) {
    case TestKind::ranker: return "ranker";
    case TestKind::hp: return "hp";
    case TestKind::shuffle: return "shuffle";
  }
  return "?";
}

/// Everything a sweep needs. Defaults are the desk-scale setup.
struct ExperimentConfig {
  // [network]
  std::string network_path;  // empty: generate
  NetworkKind network_kind = NetworkKind::preferential_attachment;
  std::size_t nodes = 300;
  double network_param = 1.0;
  std::uint64_t network_seed = 1;
  std::size_t embedding_dim = 8;

  // [model]
  std::vector<double> a_grid{0.0, 0.5};
  std::vector<double> b_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> beta_grid{7.0};
  double eta = -5.0;
  double omega_true = 1.0;
  std::vector<double> omega_test{0.25, 1.0, 4.0};
  std::size_t length = 1500;
  bool allow_supercritical = true;

  // [tests]
  std::vector<TestKind> tests{TestKind::ranker, TestKind::hp, TestKind::shuffle};
  std::vector<double> alpha{0.01, 0.05, 0.1};
  std::size_t n_perm = 2000;
  std::size_t n_shuffles = 1000;

  // [ranker]
  double learning_rate = 0.02;
  double split = 0.5;
  std::size_t hidden = 16;

  // [missing]
  std::vector<std::size_t> missing_lengths{5000, 10000, 20000};
  std::vector<DegradeMode> missing_modes{DegradeMode::random, DegradeMode::doubly_censored};
  double missing_rate = 0.99;

  // null / alternative influence levels for the misspecification and
  // missing-data sweeps
  std::vector<double> contrast_b{0.0, 1.0};

  // [run]
  std::size_t n_cascades = 50;
  std::uint64_t master_seed = 0;

  bool runs(TestKind t) const {
    for (auto x : tests)
      if (x == t) return true;
    return false;
  }
};

struct RunConfig : ExperimentConfig {
  std::size_t jobs = 1;
  std::string output_dir = "results";
};

struct ConfigIssue {
  std::size_t line = 0;  // 0 when not tied to a line
  std::string message;
};

/// Thrown with every problem found in a config file.
class ConfigError : public DataError {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues) : DataError(join(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<ConfigIssue>& v) {
    std::string s = "invalid config:";
    for (const auto& i : v) s += (i.line ? "\n  line " + std::to_string(i.line) + ": " : "\n  ") + i.message;
    return s;
  }
  std::vector<ConfigIssue> issues_;
};

namespace detail {

// Snap grid points to 12 decimals so 0:1:0.1 yields 0.3 rather than
// 0.30000000000000004.
inline double snap(double x) {
  const double r = std::round(x * 1e12) / 1e12;
  return r == 0.0 ? 0.0 : r;
}

inline std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

/// "start:stop:step" (inclusive) or a comma list. Empty optional on bad input.
inline std::optional<std::vector<double>> parse_grid(const std::string& text) {
  const auto s = detail::trim(text);
  if (s.empty()) return std::nullopt;
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    const auto parts = detail::split_list(s, ':');
    double lo, hi, step;
    if (parts.size() != 3 || !parse_double(parts[0], lo) || !parse_double(parts[1], hi) ||
        !parse_double(parts[2], step) || !(step > 0.0) || hi < lo)
      return std::nullopt;
    const double count = std::floor((hi - lo) / step + 1e-9);
    if (count > 1e6) return std::nullopt;
    for (std::size_t k = 0; k <= static_cast<std::size_t>(count); ++k)
      out.push_back(detail::snap(lo + static_cast<double>(k) * step));
    return out;
  }
  for (const auto& p : detail::split_list(s, ',')) {
    double v;
    if (!parse_double(p, v)) return std::nullopt;
    out.push_back(v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

namespace detail {

class ConfigParser {
 public:
  ConfigParser(RunConfig& cfg, std::vector<ConfigIssue>& issues) : c_(cfg), issues_(issues) {}

  void set(const std::string& key, const std::string& v, std::size_t line) {
    line_ = line;
    key_ = key;
    if (key == "network.path") c_.network_path = v;
    else if (key == "network.kind") {
      if (auto k = parse_network_kind(v)) c_.network_kind = *k;
      else bad("expected erdos_renyi_directed or preferential_attachment");
    } else if (key == "network.nodes") count(v, c_.nodes, 10, 1000000);
    else if (key == "network.param") real(v, c_.network_param, 0.0, 1e6, false);
    else if (key == "network.seed") seed(v, c_.network_seed);
    else if (key == "network.embedding_dim") count(v, c_.embedding_dim, 1, 1000);
    else if (key == "model.a_grid") grid(v, c_.a_grid, 0.0, 1.0);
    else if (key == "model.b_grid") grid(v, c_.b_grid, 0.0, 1.0);
    else if (key == "model.beta_grid") grid(v, c_.beta_grid, -1e3, 1e3);
    else if (key == "model.eta") real(v, c_.eta, -1e3, 1e3, true);
    else if (key == "model.omega_true") real(v, c_.omega_true, 0.0, 1e6, false);
    else if (key == "model.omega_test") grid(v, c_.omega_test, 0.0, 1e6, false);
    else if (key == "model.length") count(v, c_.length, 10, 100000000);
    else if (key == "model.contrast_b") grid(v, c_.contrast_b, 0.0, 1.0);
    else if (key == "model.allow_supercritical") boolean(v, c_.allow_supercritical);
    else if (key == "tests.tests") test_list(v);
    else if (key == "tests.alpha") grid(v, c_.alpha, 0.0, 1.0, false);
    else if (key == "tests.n_perm") count(v, c_.n_perm, 1, 100000000);
    else if (key == "tests.n_shuffles") count(v, c_.n_shuffles, 100, 100000000);
    else if (key == "ranker.learning_rate") real(v, c_.learning_rate, 0.0, 10.0, false);
    else if (key == "ranker.split") real(v, c_.split, 0.0, 1.0, false, false);
    else if (key == "ranker.hidden") count(v, c_.hidden, 1, 100000);
    else if (key == "missing.lengths") length_list(v);
    else if (key == "missing.modes") mode_list(v);
    else if (key == "missing.rate") real(v, c_.missing_rate, 0.0, 1.0, true, false);
    else if (key == "run.n_cascades") count(v, c_.n_cascades, 2, 100000000);
    else if (key == "run.seed") seed(v, c_.master_seed);
    else if (key == "run.jobs") count(v, c_.jobs, 1, 1024);
    else if (key == "run.output_dir") {
      if (v.empty()) bad("must be nonempty");
      else c_.output_dir = v;
    } else
      issues_.push_back({line, "unknown key '" + key + "'"});
  }

 private:
  void bad(const std::string& why) { issues_.push_back({line_, "'" + key_ + "': " + why}); }

  void real(const std::string& v, double& out, double lo, double hi, bool lo_closed, bool hi_closed = true) {
    double x;
    if (!parse_double(v, x)) return bad("not a number: '" + v + "'");
    const bool ok = (lo_closed ? x >= lo : x > lo) && (hi_closed ? x <= hi : x < hi);
    if (!ok) return bad("value " + v + " out of range " + (lo_closed ? "[" : "(") + format_double(lo) + ", " +
                        format_double(hi) + (hi_closed ? "]" : ")"));
    out = x;
  }

  void count(const std::string& v, std::size_t& out, std::size_t lo, std::size_t hi) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 12)
      return bad("not a nonnegative integer: '" + v + "'");
    const auto x = static_cast<std::size_t>(std::stoull(v));
    if (x < lo || x > hi)
      return bad("value " + v + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out = x;
  }

  void seed(const std::string& v, std::uint64_t& out) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 20)
      return bad("not a 64-bit unsigned integer: '" + v + "'");
    try {
      out = std::stoull(v);
    } catch (const std::exception&) {
      bad("not a 64-bit unsigned integer: '" + v + "'");
    }
  }

  void boolean(const std::string& v, bool& out) {
    if (v == "true" || v == "1") out = true;
    else if (v == "false" || v == "0") out = false;
    else bad("expected true or false");
  }

  void grid(const std::string& v, std::vector<double>& out, double lo, double hi, bool lo_closed = true) {
    auto g = parse_grid(v);
    if (!g) return bad("bad grid '" + v + "' (use start:stop:step or a comma list)");
    for (double x : *g)
      if ((lo_closed ? x < lo : x <= lo) || x > hi)
        return bad("grid value " + format_double(x) + " out of range " + (lo_closed ? "[" : "(") +
                   format_double(lo) + ", " + format_double(hi) + "]");
    out = std::move(*g);
  }

  void test_list(const std::string& v) {
    std::vector<TestKind> t;
    for (const auto& s : split_list(v, ',')) {
      auto k = parse_test_kind(s);
      if (!k) return bad("unknown test '" + s + "' (ranker, hp, shuffle)");
      t.push_back(*k);
    }
    if (t.empty()) return bad("empty test list");
    c_.tests = std::move(t);
  }

  void length_list(const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& s : split_list(v, ',')) {
      std::size_t x = 0;
      const auto before = issues_.size();
      count(s, x, 10, 100000000);
      if (issues_.size() != before) return;
      out.push_back(x);
    }
    if (out.empty()) return bad("empty list");
    c_.missing_lengths = std::move(out);
  }

  void mode_list(const std::string& v) {
    std::vector<DegradeMode> out;
    for (const auto& s : split_list(v, ',')) {
      auto m = parse_degrade_mode(s);
      if (!m || *m == DegradeMode::none) return bad("unknown mode '" + s + "' (random, doubly_censored)");
      out.push_back(*m);
    }
    if (out.empty()) return bad("empty list");
    c_.missing_modes = std::move(out);
  }

  RunConfig& c_;
  std::vector<ConfigIssue>& issues_;
  std::size_t line_ = 0;
  std::string key_;
};

}  // namespace detail

/// Parse the sectioned key=value format. `run.seed` is required unless
/// `default_seed` is given. Throws ConfigError listing every problem.
inline RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> default_seed = std::nullopt) {
  RunConfig cfg;
  std::vector<ConfigIssue> issues;
  detail::ConfigParser p(cfg, issues);
  std::string section;
  std::map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const auto line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        issues.push_back({lineno, "malformed section header '" + line + "'"});
        continue;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({lineno, "expected key = value, got '" + line + "'"});
      continue;
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto full = section.empty() ? key : section + "." + key;
    if (auto it = seen.find(full); it != seen.end()) {
      issues.push_back({lineno, "duplicate key '" + full + "' (first on line " + std::to_string(it->second) + ")"});
      continue;
    }
    seen[full] = lineno;
    p.set(full, value, lineno);
  }
  if (!seen.count("run.seed")) {
    if (default_seed) cfg.master_seed = *default_seed;
    else issues.push_back({0, "missing required key 'run.seed'"});
  }
  if (cfg.network_kind == NetworkKind::preferential_attachment && !seen.count("network.path") &&
      cfg.network_param != std::floor(cfg.network_param))
    issues.push_back({seen.count("network.param") ? seen["network.param"] : 0,
                      "'network.param': preferential attachment needs an integer edge count"});
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

namespace detail {
template <class T, class F>
std::string join_list(const std::vector<T>& v, F f) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + f(v[k]);
  return s;
}
}  // namespace detail

/// Canonical text of a config; parse_config(to_text(c)) == c.
inline std::string to_text(const RunConfig& c) {
  const auto num = [](double x) { return format_double(x); };
  std::ostringstream o;
  o << "[network]\n";
  if (!c.network_path.empty()) o << "path = " << c.network_path << '\n';
  o << "kind = " << to_string(c.network_kind) << "\nnodes = " << c.nodes << "\nparam = " << num(c.network_param)
    << "\nseed = " << c.network_seed << "\nembedding_dim = " << c.embedding_dim << "\n\n[model]\n"
    << "a_grid = " << detail::join_list(c.a_grid, num) << "\nb_grid = " << detail::join_list(c.b_grid, num)
    << "\nbeta_grid = " << detail::join_list(c.beta_grid, num) << "\neta = " << num(c.eta)
    << "\nomega_true = " << num(c.omega_true) << "\nomega_test = " << detail::join_list(c.omega_test, num)
    << "\ncontrast_b = " << detail::join_list(c.contrast_b, num) << "\nlength = " << c.length << "\nallow_supercritical = " << (c.allow_supercritical ? "true" : "false")
    << "\n\n[tests]\ntests = "
    << detail::join_list(c.tests, [](TestKind t) { return std::string(to_string(t)); })
    << "\nalpha = " << detail::join_list(c.alpha, num) << "\nn_perm = " << c.n_perm
    << "\nn_shuffles = " << c.n_shuffles << "\n\n[ranker]\nlearning_rate = " << num(c.learning_rate)
    << "\nsplit = " << num(c.split) << "\nhidden = " << c.hidden << "\n\n[missing]\nlengths = "
    << detail::join_list(c.missing_lengths, [](std::size_t x) { return std::to_string(x); })
    << "\nmodes = " << detail::join_list(c.missing_modes, [](DegradeMode m) { return std::string(to_string(m)); })
    << "\nrate = " << num(c.missing_rate)
    << "\n\n[run]\nn_cascades = " << c.n_cascades << "\nseed = " << c.master_seed << "\njobs = " << c.jobs
    << "\noutput_dir = " << c.output_dir << '\n';
  return o.str();
}

}  // namespace cinf
