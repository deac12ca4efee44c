#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cinf/cascade_io.hpp"
#include "cinf/config.hpp"
#include "cinf/degrade.hpp"
#include "cinf/experiments.hpp"
#include "cinf/hawkes.hpp"
#include "cinf/influence_tests.hpp"
#include "cinf/network.hpp"
#include "cinf/ranker.hpp"
#include "cinf/spectral.hpp"

namespace cinf::cli {

inline constexpr const char* kSeedEnv = "CASCADE_INFLUENCE_SEED";

/// Master seed default: $CASCADE_INFLUENCE_SEED when set, else 0.
inline std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv(kSeedEnv);
  if (!s || !*s) return std::nullopt;
  const std::string v(s);
  if (v.find_first_not_of("0123456789") != std::string::npos || v.size() > 20)
    throw UsageError(std::string(kSeedEnv) + " must be an unsigned integer");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw UsageError(std::string(kSeedEnv) + " out of range");
  }
}

inline Embedding embed_for(const Network& net, std::size_t dim) {
  if (net.node_count() < 2) throw DataError("degenerate graph");
  return spectral_embedding(net, std::min(dim, net.node_count() - 1));
}

inline void emit(std::ostream& out, const Json& j) { out << j.dump() << '\n'; }

struct GenNetArgs {
  std::string kind = "preferential_attachment";
  std::size_t nodes = 300;
  double param = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct EmbedArgs {
  std::string net, out, solver = "lanczos";
  std::size_t dim = 8;
};

struct SimulateArgs {
  std::string net, out;
  double a = 0.0, b = 0.0, beta = 0.0, eta = -5.0, omega = 1.0, horizon = 0.0;
  std::size_t length = 1500, dim = 8;
  std::uint64_t seed = 0;
  bool allow_supercritical = false;
};

struct TrainArgs {
  std::string net, cascade, out;
  std::size_t dim = 8, hidden = 16;
  double omega = 1.0, lr = 0.05, split = 1.0;
  bool no_social = false;
  std::uint64_t seed = 0;
};

struct RankEvalArgs {
  std::string net, cascade, model, baseline;
  double from = 0.0;
  std::uint64_t seed = 0;
};

struct TestArgs {
  std::string method, net, cascade;
  double omega = 1.0, split = 0.5, lr = 0.02;
  std::size_t n_resamples = 2000, dim = 8, hidden = 16;
  std::uint64_t seed = 0;
};

struct ExperimentArgs {
  std::string config, which, out_dir;
  bool resume = false;
  std::size_t jobs = 0;
};

struct DegradeArgs {
  std::string cascade, mode, out;
  double rate = 0.99;
  std::uint64_t seed = 0;
};

inline void cmd_gen_net(const GenNetArgs& a, std::ostream& out) {
  const auto kind = parse_network_kind(a.kind);
  if (!kind) throw UsageError("--kind must be erdos_renyi_directed or preferential_attachment");
  const auto net = generate_network(*kind, a.nodes, a.param, a.seed);
  save_network(a.out, net);
  emit(out, Json{{"nodes", net.node_count()}, {"edges", net.edge_count()}, {"max_in_degree", net.max_in_degree()},
                 {"path", a.out}});
}

inline void cmd_embed(const EmbedArgs& a, std::ostream& out) {
  const auto net = load_network(a.net);
  EigenSolver solver;
  if (a.solver == "lanczos") solver = EigenSolver::lanczos;
  else if (a.solver == "dense") solver = EigenSolver::dense;
  else throw UsageError("--solver must be lanczos or dense");
  const auto emb = spectral_embedding(net, a.dim, solver);
  std::ofstream f(a.out, std::ios::binary);
  if (!f) throw DataError("cannot write '" + a.out + "'");
  f << "node";
  for (std::size_t k = 0; k < emb.dim; ++k) f << ",e" << k + 1;
  f << '\n';
  for (std::size_t i = 0; i < emb.node_count; ++i) {
    f << i;
    for (std::size_t k = 0; k < emb.dim; ++k) f << ',' << format_double(emb(i, k));
    f << '\n';
  }
  emit(out, Json{{"dim", emb.dim},
                 {"nodes", emb.node_count},
                 {"component_size", emb.component_size},
                 {"eigenvalues", emb.eigenvalues},
                 {"warnings", emb.warnings},
                 {"path", a.out}});
}

inline void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.length == 0 && a.horizon <= 0.0) throw UsageError("need --length > 0 or --horizon > 0");
  const auto net = load_network(a.net);
  const auto emb = embed_for(net, a.dim);
  const HawkesParams p{a.a, a.b, a.beta, a.eta, a.omega};
  const auto c = simulate(p, net, emb, SimulationOptions{a.length, a.horizon, a.allow_supercritical}, a.seed);
  write_cascade(a.out, c);
  out << "events=" << c.size() << " horizon=" << format_double(c.horizon)
      << " branching=" << format_double(branching_proxy(p, net)) << '\n';
}

inline void cmd_train(const TrainArgs& a, std::ostream& out) {
  if (!(a.split > 0.0 && a.split <= 1.0)) throw UsageError("--split must be in (0, 1]");
  const auto net = load_network(a.net);
  const auto emb = embed_for(net, a.dim);
  const auto c = read_cascade(a.cascade);
  FeatureConfig fc;
  fc.use_social = !a.no_social;
  fc.omega = a.omega;
  fc.hidden = a.hidden;
  auto m = RankerModel::init(fc, emb, derive_seed(a.seed, {0}));
  const std::size_t n = std::min(c.size(), static_cast<std::size_t>(std::floor(a.split * static_cast<double>(c.size()))));
  TrainSchedule s;
  s.learning_rate = a.lr;
  s.seed = derive_seed(a.seed, {1});
  train(m, net, std::span<const Event>(c.events.data(), n), s);
  save_model(a.out, m);
  emit(out, Json{{"train_events", n}, {"theta", m.theta}, {"path", a.out}});
}

inline void cmd_rank_eval(const RankEvalArgs& a, std::ostream& out) {
  if (!(a.from >= 0.0 && a.from < 1.0)) throw UsageError("--from must be in [0, 1)");
  if (a.model.empty() == a.baseline.empty()) throw UsageError("give exactly one of --model or --baseline");
  const auto net = load_network(a.net);
  const auto c = read_cascade(a.cascade);
  const auto begin = split_index(c.size(), a.from);
  if (begin >= c.size()) throw DataError("no events to evaluate");
  std::vector<double> rr;
  if (!a.model.empty()) {
    const auto m = load_model(a.model);
    if (m.node_count != net.node_count()) throw DataError("model and network disagree on node count");
    rr = evaluate_mrr(m, net, c, begin, c.size());
  } else {
    BaselineKind kind;
    if (a.baseline == "random") kind = BaselineKind::random;
    else if (a.baseline == "activity") kind = BaselineKind::activity_then_degree;
    else throw UsageError("--baseline must be random or activity");
    for (std::size_t k = begin; k < c.size(); ++k) {
      const auto order = baseline_rank(kind, net, std::span<const Event>(c.events.data(), k), derive_seed(a.seed, {k}));
      const auto pos = std::find(order.begin(), order.end(), c.events[k].source) - order.begin();
      rr.push_back(1.0 / static_cast<double>(pos + 1));
    }
  }
  emit(out, Json{{"events", rr.size()}, {"mrr", mean(rr)}});
}

inline void cmd_test_influence(const TestArgs& a, std::ostream& out) {
  const auto net = load_network(a.net);
  const auto c = read_cascade(a.cascade);
  TestReport r;
  if (a.method == "shuffle") {
    r = shuffle_test(net, c, a.n_resamples, a.seed);
  } else if (a.method == "hp") {
    r = hp_influence_test(net, embed_for(net, a.dim), c, a.omega);
  } else if (a.method == "ranker") {
    RankerTestOptions o;
    o.seed = a.seed;
    o.split = a.split;
    o.n_perm = a.n_resamples;
    o.features.omega = a.omega;
    o.features.hidden = a.hidden;
    o.schedule.learning_rate = a.lr;
    r = ranker_influence_test(net, embed_for(net, a.dim), c, o);
  } else {
    throw UsageError("--method must be ranker, hp or shuffle");
  }
  emit(out, r.to_json());
}

inline void cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  const auto kind = parse_experiment_kind(a.which);
  if (!kind) throw UsageError("--which must be calibration, power, misspec or missing");
  std::ifstream in(a.config);
  if (!in) throw DataError("cannot open config '" + a.config + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str(), env_seed());
  if (a.jobs) cfg.jobs = a.jobs;
  if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
  const auto table = run_to_directory(cfg, *kind, a.resume, &err);
  std::size_t errors = 0;
  for (const auto& r : table.rows) errors += r.ok() ? 0 : 1;
  const auto dir = std::filesystem::path(cfg.output_dir) / to_string(*kind);
  emit(out, Json{{"experiment", a.which},
                 {"rows", table.rows.size()},
                 {"error_rows", errors},
                 {"detail", (dir / "detail.csv").string()},
                 {"summary", (dir / "summary.csv").string()}});
}

inline void cmd_degrade(const DegradeArgs& a, std::ostream& out) {
  const auto mode = parse_degrade_mode(a.mode);
  if (!mode || *mode == DegradeMode::none) throw UsageError("--mode must be random or doubly_censored");
  const auto c = read_cascade(a.cascade);
  const auto d = degrade(c, {*mode, a.rate, a.seed});
  write_cascade(a.out, d);
  emit(out, Json{{"events_in", c.size()}, {"events_out", d.size()}, {"horizon", d.horizon}, {"path", a.out}});
}

inline int report_error(std::ostream& err, const char* kind, const std::string& msg, int code) {
  err << Json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << '\n';
  return code;
}

/// Entry point. Returns the process exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate event cascades on networks and test for social influence.", "cascade-influence"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "cascade-influence 0.1");

  std::uint64_t default_seed = 0;
  try {
    default_seed = env_seed().value_or(0);
  } catch (const UsageError& e) {
    return report_error(err, "usage", e.what(), 2);
  }
  const std::string seed_help = std::string("random seed (default from ") + kSeedEnv + ", else 0)";

  GenNetArgs gn;
  gn.seed = default_seed;
  auto* c_gen = app.add_subcommand("gen-net", "Generate a directed network and write it as an edge list.");
  c_gen->add_option("--kind", gn.kind, "erdos_renyi_directed or preferential_attachment");
  c_gen->add_option("--nodes", gn.nodes, "number of nodes before taking the largest weak component");
  c_gen->add_option("--param", gn.param, "edge probability (Erdos-Renyi) or edges per newcomer (attachment)");
  c_gen->add_option("--seed", gn.seed, seed_help);
  c_gen->add_option("--out", gn.out, "output edge-list path")->required();

  EmbedArgs em;
  auto* c_emb = app.add_subcommand("embed", "Write the spectral embedding of a network as CSV.");
  c_emb->add_option("--net", em.net, "edge-list path")->required();
  c_emb->add_option("--dim", em.dim, "embedding dimension K");
  c_emb->add_option("--solver", em.solver, "lanczos or dense");
  c_emb->add_option("--out", em.out, "output CSV path")->required();

  SimulateArgs sm;
  sm.seed = default_seed;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a cascade from the multivariate Hawkes model.");
  c_sim->add_option("--net", sm.net, "edge-list path")->required();
  c_sim->add_option("--a", sm.a, "self-excitation weight");
  c_sim->add_option("--b", sm.b, "social influence weight");
  c_sim->add_option("--beta", sm.beta, "homophily strength");
  c_sim->add_option("--eta", sm.eta, "base-rate offset");
  c_sim->add_option("--omega", sm.omega, "kernel decay rate");
  c_sim->add_option("--length", sm.length, "stop after this many events (0 = use --horizon)");
  c_sim->add_option("--horizon", sm.horizon, "stop at this time (0 = no limit)");
  c_sim->add_option("--dim", sm.dim, "embedding dimension K");
  c_sim->add_option("--seed", sm.seed, seed_help);
  c_sim->add_flag("--allow-supercritical", sm.allow_supercritical, "simulate even when the branching proxy is >= 1");
  c_sim->add_option("--out", sm.out, "output cascade CSV path")->required();

  TrainArgs tr;
  tr.seed = default_seed;
  auto* c_train = app.add_subcommand("train", "Train a ranker on a cascade and write a checkpoint.");
  c_train->add_option("--net", tr.net, "edge-list path")->required();
  c_train->add_option("--cascade", tr.cascade, "cascade CSV path")->required();
  c_train->add_option("--dim", tr.dim, "embedding dimension K");
  c_train->add_option("--hidden", tr.hidden, "hidden units of the node network");
  c_train->add_option("--omega", tr.omega, "kernel decay rate of the dyadic features");
  c_train->add_option("--lr", tr.lr, "learning rate");
  c_train->add_option("--split", tr.split, "fraction of events used for training");
  c_train->add_flag("--no-social", tr.no_social, "drop the social feature");
  c_train->add_option("--seed", tr.seed, seed_help);
  c_train->add_option("--out", tr.out, "checkpoint path")->required();

  RankEvalArgs re;
  re.seed = default_seed;
  auto* c_eval = app.add_subcommand("rank-eval", "Mean reciprocal rank of a model or baseline on a cascade.");
  c_eval->add_option("--net", re.net, "edge-list path")->required();
  c_eval->add_option("--cascade", re.cascade, "cascade CSV path")->required();
  c_eval->add_option("--model", re.model, "checkpoint path")->default_str("unset");
  c_eval->add_option("--baseline", re.baseline, "random or activity (instead of --model)")->default_str("unset");
  c_eval->add_option("--from", re.from, "fraction of events skipped before scoring");
  c_eval->add_option("--seed", re.seed, seed_help);

  TestArgs te;
  te.seed = default_seed;
  auto* c_test = app.add_subcommand("test-influence", "Run one influence test; prints a JSON report.");
  c_test->add_option("--method", te.method, "ranker, hp or shuffle")->required();
  c_test->add_option("--net", te.net, "edge-list path")->required();
  c_test->add_option("--cascade", te.cascade, "cascade CSV path")->required();
  c_test->add_option("--omega", te.omega, "kernel decay rate assumed by the test");
  c_test->add_option("--split", te.split, "train fraction for the ranker test");
  c_test->add_option("--n-resamples", te.n_resamples, "permutations (ranker) or shuffles (shuffle)");
  c_test->add_option("--lr", te.lr, "ranker learning rate");
  c_test->add_option("--dim", te.dim, "embedding dimension K");
  c_test->add_option("--hidden", te.hidden, "hidden units of the node network");
  c_test->add_option("--seed", te.seed, seed_help);

  ExperimentArgs ex;
  auto* c_exp = app.add_subcommand("experiment", "Run a sweep from a config file and write result CSVs.");
  c_exp->add_option("--config", ex.config, "config file path")->required();
  c_exp->add_option("--which", ex.which, "calibration, power, misspec or missing")->required();
  c_exp->add_flag("--resume", ex.resume, "reuse rows of an interrupted run");
  c_exp->add_option("--jobs", ex.jobs, "worker threads (0 = value from config)");
  c_exp->add_option("--out-dir", ex.out_dir, "output directory (unset = value from config)")->default_str("unset");

  DegradeArgs dg;
  dg.seed = default_seed;
  auto* c_deg = app.add_subcommand("degrade", "Drop events from a cascade.");
  c_deg->add_option("--cascade", dg.cascade, "input cascade CSV path")->required();
  c_deg->add_option("--mode", dg.mode, "random or doubly_censored")->required();
  c_deg->add_option("--rate", dg.rate, "fraction of events removed");
  c_deg->add_option("--seed", dg.seed, seed_help);
  c_deg->add_option("--out", dg.out, "output cascade CSV path")->required();

  try {
    std::reverse(args.begin(), args.end());  // CLI11 takes them reversed
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << app.version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error(err, "usage", e.what(), 2);
  }

  try {
    if (*c_gen) cmd_gen_net(gn, out);
    else if (*c_emb) cmd_embed(em, out);
    else if (*c_sim) cmd_simulate(sm, out);
    else if (*c_train) cmd_train(tr, out);
    else if (*c_eval) cmd_rank_eval(re, out);
    else if (*c_test) cmd_test_influence(te, out);
    else if (*c_exp) cmd_experiment(ex, out, err);
    else if (*c_deg) cmd_degrade(dg, out);
  } catch (const Error& e) {
    const char* kind = e.kind() == ErrorKind::usage ? "usage" : e.kind() == ErrorKind::data ? "data" : "numeric";
    return report_error(err, kind, e.what(), static_cast<int>(e.kind()));
  } catch (const std::exception& e) {
    return report_error(err, "data", e.what(), 3);
  }
  return 0;
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace cinf::cli
