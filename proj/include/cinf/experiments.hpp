#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "cinf/cascade_io.hpp"
#include "cinf/config.hpp"
#include "cinf/degrade.hpp"
#include "cinf/influence_tests.hpp"
#include "cinf/spectral.hpp"

namespace cinf {

enum class ExperimentKind { calibration, power, misspec, missing };

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  if (s == "calibration") return ExperimentKind::calibration;
  if (s == "power") return ExperimentKind::power;
  if (s == "misspec") return ExperimentKind::misspec;
  if (s == "missing") return ExperimentKind::missing;
  return std::nullopt;
}

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::calibration: return "calibration";
    case ExperimentKind::power: return "power";
    case ExperimentKind::misspec: return "misspec";
    case ExperimentKind::missing: return "missing";
  }
  return "?";
}

/// One long-format result row.
struct ResultRow {
  std::string experiment;
  double a = 0.0, b = 0.0, beta = 0.0, omega_true = 1.0, omega_test = 1.0;
  std::size_t length = 0;
  std::string mode = "none";
  std::string test;
  std::size_t cascade = 0;
  double p_value = 0.0;
  std::string status = "ok";  // "ok" or "error: <message>"

  bool ok() const { return status == "ok"; }

  auto key() const { return std::tie(experiment, a, b, beta, omega_true, omega_test, length, mode, test, cascade); }
  static auto value_key(const ResultRow& r) {
    return std::make_tuple(r.experiment, r.a, r.b, r.beta, r.omega_true, r.omega_test, r.length, r.mode, r.test,
                           r.cascade);
  }
  bool operator<(const ResultRow& o) const { return key() < o.key(); }
  bool operator==(const ResultRow& o) const { return key() == o.key() && status == o.status && (ok() ? p_value == o.p_value : true); }
};

inline constexpr const char* kDetailHeader = "experiment,a,b,beta,omega_true,omega_test,length,mode,test,cascade,p_value,status";

namespace detail {

// Commas and newlines would break the CSV; messages are free text.
inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

}  // namespace detail

inline std::string to_csv_line(const ResultRow& r) {
  std::string s = r.experiment;
  for (double x : {r.a, r.b, r.beta, r.omega_true, r.omega_test}) s += "," + format_double(x);
  s += "," + std::to_string(r.length) + "," + r.mode + "," + r.test + "," + std::to_string(r.cascade) + ",";
  if (r.ok()) s += format_double(r.p_value);
  s += "," + detail::csv_safe(r.status);
  return s;
}

/// Parses one detail line; nullopt for malformed (e.g. truncated) lines.
inline std::optional<ResultRow> parse_csv_line(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) f.push_back(cur);
  if (!line.empty() && line.back() == ',') f.push_back("");
  if (f.size() != 12) return std::nullopt;
  ResultRow r;
  r.experiment = f[0];
  double* nums[] = {&r.a, &r.b, &r.beta, &r.omega_true, &r.omega_test};
  for (int k = 0; k < 5; ++k)
    if (!parse_double(f[1 + k], *nums[k])) return std::nullopt;
  NodeId tmp = 0;
  if (!detail::parse_node_id(f[6], tmp)) return std::nullopt;
  r.length = tmp;
  r.mode = f[7];
  r.test = f[8];
  if (!detail::parse_node_id(f[9], tmp)) return std::nullopt;
  r.cascade = tmp;
  r.status = f[11];
  if (r.status.empty()) return std::nullopt;
  if (r.ok() && !parse_double(f[10], r.p_value)) return std::nullopt;
  return r;
}

/// Aggregate per (condition, test) over cascades.
struct SummaryRow {
  ResultRow condition;  // cascade and p_value unused
  std::size_t n_ok = 0;
  std::size_t n_error = 0;
  std::vector<std::size_t> rejections;  // one per alpha
  double mean_p = 0.0;

  double rate(std::size_t k) const {
    return n_ok ? static_cast<double>(rejections[k]) / static_cast<double>(n_ok) : 0.0;
  }
};

struct ResultTable {
  std::vector<ResultRow> rows;  // sorted
  std::vector<double> alpha;

  std::vector<SummaryRow> summary() const {
    using Key = std::tuple<std::string, double, double, double, double, double, std::size_t, std::string, std::string>;
    std::map<Key, std::size_t> index;
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> ps;
    for (const auto& r : rows) {
      const Key key{r.experiment, r.a, r.b, r.beta, r.omega_true, r.omega_test, r.length, r.mode, r.test};
      auto [it, fresh] = index.try_emplace(key, out.size());
      if (fresh) {
        ResultRow c = r;
        c.cascade = 0;
        c.p_value = 0.0;
        c.status = "ok";
        out.push_back({c, 0, 0, std::vector<std::size_t>(alpha.size(), 0), 0.0});
        ps.emplace_back();
      }
      const std::size_t k = it->second;
      if (!r.ok()) {
        ++out[k].n_error;
        continue;
      }
      ++out[k].n_ok;
      ps[k].push_back(r.p_value);
      for (std::size_t q = 0; q < alpha.size(); ++q)
        if (r.p_value <= alpha[q]) ++out[k].rejections[q];
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k].mean_p = mean(ps[k]);
    return out;
  }

  /// Rejection rate at alpha for rows matching `pred` (ok rows only).
  double rejection_rate(const std::function<bool(const ResultRow&)>& pred, double a) const {
    std::vector<double> p;
    for (const auto& r : rows)
      if (r.ok() && pred(r)) p.push_back(r.p_value);
    return cinf::rejection_rate(p, a);
  }

  std::vector<double> p_values(const std::function<bool(const ResultRow&)>& pred) const {
    std::vector<double> p;
    for (const auto& r : rows)
      if (r.ok() && pred(r)) p.push_back(r.p_value);
    return p;
  }
};

inline void write_detail_csv(std::ostream& out, const ResultTable& t) {
  out << kDetailHeader << '\n';
  for (const auto& r : t.rows) out << to_csv_line(r) << '\n';
}

inline void write_summary_csv(std::ostream& out, const ResultTable& t) {
  out << "experiment,a,b,beta,omega_true,omega_test,length,mode,test,n_ok,n_error,mean_p";
  for (double a : t.alpha) out << ",reject_" << format_double(a) << ",rate_" << format_double(a);
  out << '\n';
  for (const auto& s : t.summary()) {
    const auto& c = s.condition;
    out << c.experiment << ',' << format_double(c.a) << ',' << format_double(c.b) << ',' << format_double(c.beta) << ','
        << format_double(c.omega_true) << ',' << format_double(c.omega_test) << ',' << c.length << ',' << c.mode << ','
        << c.test << ',' << s.n_ok << ',' << s.n_error << ',' << format_double(s.mean_p);
    for (std::size_t k = 0; k < t.alpha.size(); ++k) out << ',' << s.rejections[k] << ',' << format_double(s.rate(k));
    out << '\n';
  }
}

/// Sorted p-values per (condition, test) against uniform plotting positions k/(n+1).
inline void write_qq_csv(std::ostream& out, const ResultTable& t) {
  out << "experiment,a,b,beta,test,rank,p_value,uniform_quantile\n";
  std::map<std::tuple<std::string, double, double, double, std::string>, std::vector<double>> groups;
  for (const auto& r : t.rows)
    if (r.ok()) groups[{r.experiment, r.a, r.b, r.beta, r.test}].push_back(r.p_value);
  for (auto& [k, p] : groups) {
    std::sort(p.begin(), p.end());
    for (std::size_t q = 0; q < p.size(); ++q)
      out << std::get<0>(k) << ',' << format_double(std::get<1>(k)) << ',' << format_double(std::get<2>(k)) << ','
          << format_double(std::get<3>(k)) << ',' << std::get<4>(k) << ',' << q + 1 << ',' << format_double(p[q]) << ','
          << format_double(static_cast<double>(q + 1) / static_cast<double>(p.size() + 1)) << '\n';
  }
}

// ---- cells ---------------------------------------------------------------

/// Everything that determines a generated cascade.
struct GenCondition {
  double a = 0.0, b = 0.0, beta = 0.0, eta = -5.0, omega_true = 1.0;
  std::size_t length = 0;

  /// Hash of the condition values. Identical conditions in different sweeps
  /// therefore see identical cascades.
  std::uint64_t key() const {
    return derive_seed(0x636f6e64, {std::bit_cast<std::uint64_t>(a), std::bit_cast<std::uint64_t>(b),
                                    std::bit_cast<std::uint64_t>(beta), std::bit_cast<std::uint64_t>(eta),
                                    std::bit_cast<std::uint64_t>(omega_true), length});
  }
};

/// One test applied to (a degraded view of) the cascade.
struct Evaluation {
  TestKind test;
  double omega_test = 1.0;
  DegradeMode mode = DegradeMode::none;
};

struct Cell {
  GenCondition gen;
  std::size_t cascade = 0;
  std::vector<Evaluation> evals;
};

/// Seed of cell (condition, cascade): derive_seed(master, {condition.key(), cascade}).
/// Per-cell sub-seeds: {1} ranker, {2} shuffle, {3} random drop.
inline std::uint64_t cell_seed(std::uint64_t master, const GenCondition& g, std::size_t cascade) {
  return derive_seed(master, {g.key(), cascade});
}

/// Network and embedding shared by all cells.
struct ExperimentContext {
  Network net;
  Embedding emb;
};

inline ExperimentContext make_context(const ExperimentConfig& cfg) {
  ExperimentContext ctx;
  ctx.net = cfg.network_path.empty()
                ? generate_network(cfg.network_kind, cfg.nodes, cfg.network_param, cfg.network_seed)
                : load_network(cfg.network_path);
  ctx.emb = spectral_embedding(ctx.net, std::min(cfg.embedding_dim, ctx.net.node_count() - 1));
  return ctx;
}

/// Train fraction used on a cascade of n events: the configured split,
/// lowered when needed so that at least 30 events remain for testing.
inline double effective_split(double split, std::size_t n) {
  if (n <= 30) return split;
  return std::min(split, 1.0 - 30.0 / static_cast<double>(n));
}

namespace detail {

inline std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, const ExperimentContext& ctx, ExperimentKind kind,
                                       const Cell& cell) {
  std::vector<ResultRow> rows;
  const std::uint64_t seed = cell_seed(cfg.master_seed, cell.gen, cell.cascade);
  auto base_row = [&](const Evaluation& e) {
    ResultRow r;
    r.experiment = to_string(kind);
    r.a = cell.gen.a;
    r.b = cell.gen.b;
    r.beta = cell.gen.beta;
    r.omega_true = cell.gen.omega_true;
    r.omega_test = e.test == TestKind::shuffle ? cell.gen.omega_true : e.omega_test;
    r.length = cell.gen.length;
    r.mode = to_string(e.mode);
    r.test = to_string(e.test);
    r.cascade = cell.cascade;
    return r;
  };

  Cascade full;
  try {
    HawkesParams p{cell.gen.a, cell.gen.b, cell.gen.beta, cell.gen.eta, cell.gen.omega_true};
    full = simulate(p, ctx.net, ctx.emb, cell.gen.length, seed, cfg.allow_supercritical);
  } catch (const std::exception& e) {
    for (const auto& ev : cell.evals) {
      auto r = base_row(ev);
      r.status = std::string("error: simulate: ") + e.what();
      rows.push_back(r);
    }
    return rows;
  }

  std::map<DegradeMode, Cascade> views;
  std::map<DegradeMode, std::string> view_errors;
  for (const auto& ev : cell.evals) {
    if (views.count(ev.mode) || view_errors.count(ev.mode)) continue;
    try {
      views[ev.mode] = degrade(full, {ev.mode, cfg.missing_rate, derive_seed(seed, {3})});
    } catch (const std::exception& e) {
      view_errors[ev.mode] = std::string("degrade: ") + e.what();
    }
  }

  for (const auto& ev : cell.evals) {
    auto r = base_row(ev);
    if (auto it = view_errors.find(ev.mode); it != view_errors.end()) {
      r.status = "error: " + it->second;
      rows.push_back(r);
      continue;
    }
    const Cascade& c = views.at(ev.mode);
    try {
      switch (ev.test) {
        case TestKind::ranker: {
          RankerTestOptions o;
          o.seed = derive_seed(seed, {1});
          o.n_perm = cfg.n_perm;
          o.split = effective_split(cfg.split, c.size());
          o.features.omega = ev.omega_test;
          o.features.hidden = cfg.hidden;
          o.schedule.learning_rate = cfg.learning_rate;
          r.p_value = ranker_influence_test(ctx.net, ctx.emb, c, o).p_value;
          break;
        }
        case TestKind::hp:
          r.p_value = hp_influence_test(ctx.net, ctx.emb, c, ev.omega_test).p_value;
          break;
        case TestKind::shuffle:
          r.p_value = shuffle_test(ctx.net, c, cfg.n_shuffles, derive_seed(seed, {2})).p_value;
          break;
      }
    } catch (const std::exception& e) {
      r.status = std::string("error: ") + e.what();
      r.p_value = 0.0;
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace detail

/// Cells of a sweep, in a fixed order.
inline std::vector<Cell> plan_cells(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (cfg.n_cascades < 2) throw DataError("n_cascades must be >= 2");
  std::vector<Cell> cells;
  auto add = [&](const GenCondition& g, const std::vector<Evaluation>& evals) {
    if (evals.empty()) return;
    for (std::size_t c = 0; c < cfg.n_cascades; ++c) cells.push_back({g, c, evals});
  };
  std::vector<TestKind> param_tests;  // tests that take a kernel bandwidth
  for (auto t : cfg.tests)
    if (t != TestKind::shuffle) param_tests.push_back(t);

  for (double a : cfg.a_grid)
    for (double beta : cfg.beta_grid) {
      GenCondition g{a, 0.0, beta, cfg.eta, cfg.omega_true, cfg.length};
      switch (kind) {
        case ExperimentKind::calibration:
        case ExperimentKind::power: {
          std::vector<Evaluation> ev;
          for (auto t : cfg.tests) ev.push_back({t, cfg.omega_true, DegradeMode::none});
          const std::vector<double> bs = kind == ExperimentKind::calibration ? std::vector<double>{0.0} : cfg.b_grid;
          for (double b : bs) {
            g.b = b;
            add(g, ev);
          }
          break;
        }
        case ExperimentKind::misspec: {
          std::vector<Evaluation> ev;
          for (double w : cfg.omega_test)
            for (auto t : param_tests) ev.push_back({t, w, DegradeMode::none});
          for (double b : cfg.contrast_b) {
            g.b = b;
            add(g, ev);
          }
          break;
        }
        case ExperimentKind::missing: {
          std::vector<Evaluation> ev;
          for (auto m : cfg.missing_modes)
            for (auto t : param_tests) ev.push_back({t, cfg.omega_true, m});
          for (double b : cfg.contrast_b)
            for (std::size_t len : cfg.missing_lengths) {
              g.b = b;
              g.length = len;
              add(g, ev);
            }
          break;
        }
      }
    }
  return cells;
}

struct RunOptions {
  std::size_t jobs = 1;
  std::ostream* progress = nullptr;
  /// Rows already computed (e.g. from an interrupted run); their cells are skipped.
  std::vector<ResultRow> completed;
  /// Called once per finished cell, serialized; used for checkpointing.
  std::function<void(const std::vector<ResultRow>&)> on_cell;
};

namespace detail {

inline std::tuple<double, double, double, double, std::size_t, std::size_t> cell_id(const ResultRow& r) {
  return {r.a, r.b, r.beta, r.omega_true, r.length, r.cascade};
}

}  // namespace detail

/// Run a sweep. Output rows are sorted and do not depend on `jobs` or on
/// which cells came from `completed`.
inline ResultTable run_experiment(const ExperimentConfig& cfg, ExperimentKind kind, RunOptions opt = {}) {
  const auto cells = plan_cells(cfg, kind);
  const auto ctx = make_context(cfg);

  // A cell counts as done only when all of its rows are present.
  std::map<std::tuple<double, double, double, double, std::size_t, std::size_t>, std::vector<ResultRow>> done;
  std::set<std::tuple<std::string, double, double, double, double, double, std::size_t, std::string, std::string,
                      std::size_t>>
      seen;
  for (const auto& r : opt.completed)
    if (r.experiment == to_string(kind) && seen.insert(ResultRow::value_key(r)).second)
      done[detail::cell_id(r)].push_back(r);

  std::vector<std::vector<ResultRow>> results(cells.size());
  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    ResultRow probe;
    probe.a = c.gen.a;
    probe.b = c.gen.b;
    probe.beta = c.gen.beta;
    probe.omega_true = c.gen.omega_true;
    probe.length = c.gen.length;
    probe.cascade = c.cascade;
    auto it = done.find(detail::cell_id(probe));
    if (it != done.end() && it->second.size() == c.evals.size()) results[k] = it->second;
    else todo.push_back(k);
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t finished = 0;
  auto worker = [&] {
    for (;;) {
      const std::size_t q = next.fetch_add(1);
      if (q >= todo.size()) return;
      const std::size_t k = todo[q];
      auto rows = detail::run_cell(cfg, ctx, kind, cells[k]);
      std::lock_guard lock(mu);
      if (opt.on_cell) opt.on_cell(rows);
      results[k] = std::move(rows);
      ++finished;
      if (opt.progress)
        *opt.progress << '[' << to_string(kind) << "] " << finished << '/' << todo.size() << " cells\n" << std::flush;
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(opt.jobs, todo.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ResultTable table;
  table.alpha = cfg.alpha;
  for (auto& rs : results)
    for (auto& r : rs) table.rows.push_back(std::move(r));
  std::sort(table.rows.begin(), table.rows.end());
  return table;
}

inline ResultTable run_calibration(const ExperimentConfig& cfg, RunOptions opt = {}) {
  return run_experiment(cfg, ExperimentKind::calibration, std::move(opt));
}
inline ResultTable run_power(const ExperimentConfig& cfg, RunOptions opt = {}) {
  return run_experiment(cfg, ExperimentKind::power, std::move(opt));
}
inline ResultTable run_misspec(const ExperimentConfig& cfg, RunOptions opt = {}) {
  return run_experiment(cfg, ExperimentKind::misspec, std::move(opt));
}
inline ResultTable run_missing(const ExperimentConfig& cfg, RunOptions opt = {}) {
  return run_experiment(cfg, ExperimentKind::missing, std::move(opt));
}

// ---- files ---------------------------------------------------------------

/// Rows from a (possibly truncated) detail or checkpoint file. Malformed
/// lines are skipped.
inline std::vector<ResultRow> read_detail_rows(const std::filesystem::path& path) {
  std::vector<ResultRow> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line == kDetailHeader || line.empty()) continue;
    if (auto r = parse_csv_line(line)) rows.push_back(*r);
  }
  return rows;
}

/// Run a sweep writing results/<experiment>/{detail,summary}.csv (and
/// qq.csv for calibration) under `out_dir`. With `resume`, rows of an
/// earlier partial run are reused. Rows are appended to partial.csv as
/// cells finish; it is removed once the final files are written.
inline ResultTable run_to_directory(const RunConfig& cfg, ExperimentKind kind, bool resume,
                                    std::ostream* progress = nullptr) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(cfg.output_dir) / to_string(kind);
  fs::create_directories(dir);
  const fs::path partial = dir / "partial.csv", detail_path = dir / "detail.csv";

  RunOptions opt;
  opt.jobs = cfg.jobs;
  opt.progress = progress;
  if (resume) {
    opt.completed = read_detail_rows(partial);
    for (auto& r : read_detail_rows(detail_path)) opt.completed.push_back(std::move(r));
  }
  std::ofstream log(partial, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot write '" + partial.string() + "'");
  opt.on_cell = [&](const std::vector<ResultRow>& rows) {
    for (const auto& r : rows) log << to_csv_line(r) << '\n';
    log.flush();
  };

  auto table = run_experiment(cfg, kind, std::move(opt));
  log.close();

  auto write = [&](const fs::path& p, auto&& fn) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    fn(out);
  };
  write(detail_path, [&](std::ostream& o) { write_detail_csv(o, table); });
  write(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, table); });
  if (kind == ExperimentKind::calibration) write(dir / "qq.csv", [&](std::ostream& o) { write_qq_csv(o, table); });
  fs::remove(partial);
  return table;
}

}  // namespace cinf
