// ramanml command-line tool: drives the full pipeline (simulate, gen, train,
// predict, eval, sweep, bench). Every command echoes its fully resolved
// parameter set on one "effective-config:" line so runs are reproducible from
// the log alone. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ramanml/config.hpp"
#include "ramanml/dataset.hpp"
#include "ramanml/eval.hpp"
#include "ramanml/nn.hpp"
#include "ramanml/parallel.hpp"
#include "ramanml/solver.hpp"
#include "ramanml/train_bp.hpp"
#include "ramanml/train_rp.hpp"

namespace {

using namespace ramanml;

struct GlobalArgs {
  std::string config_path;
  unsigned threads = default_thread_count();
  std::uint64_t seed = 1;
};

RunConfig resolve_config(const GlobalArgs& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg = load_config_file(g.config_path);
  return cfg;
}

void print_effective_config(const std::string& cmd, const RunConfig& cfg,
                            std::map<std::string, std::string> extra) {
  extra["cmd"] = cmd;
  for (const auto& [k, v] : config_entries(cfg)) extra[k] = v;
  std::cout << "effective-config:";
  for (const auto& [k, v] : extra) std::cout << " " << k << "=" << v;
  std::cout << "\n";
}

PumpSet parse_pumps(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--pumps", "not a number: '" + item + "'");
    }
  }
  if (vals.size() % 2 != 0)
    throw CLI::ValidationError("--pumps", "need lambda,power pairs (odd value count)");
  PumpSet ps;
  for (std::size_t i = 0; i < vals.size(); i += 2)
    ps.pumps.push_back(Pump{vals[i], vals[i + 1]});
  return ps;
}

std::string fmt(double x, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string pumps;
  std::string out;
};

int cmd_simulate(const GlobalArgs& g, const SimulateArgs& a) {
  RunConfig cfg = resolve_config(g);
  PumpSet pumps = parse_pumps(a.pumps);
  if (pumps.size() != 5)
    throw CLI::ValidationError("--pumps", "expected exactly 5 lambda,power pairs, got " +
                                              std::to_string(pumps.size()));
  print_effective_config("simulate", cfg,
                         {{"pumps", a.pumps}, {"out", a.out}, {"threads", std::to_string(g.threads)}});

  SamplingRanges ranges;
  for (std::size_t i = 0; i < pumps.size(); ++i) {
    const Pump& p = pumps.pumps[i];
    if (i < ranges.lambda_nm.size() &&
        (p.lambda_nm < ranges.lambda_nm[i].first || p.lambda_nm > ranges.lambda_nm[i].second))
      std::cout << "warning: pump " << i + 1 << " wavelength " << p.lambda_nm
                << " nm is outside the sampled interval [" << ranges.lambda_nm[i].first << ", "
                << ranges.lambda_nm[i].second << "] nm\n";
  }

  AmplifierResponse resp = solve_bvp(cfg.fiber, cfg.band, pumps, cfg.solver);
  if (!resp.converged)
    throw std::runtime_error("simulate: solver did not converge within max_bvp_iterations");
  GainProfile gain = gain_profile(resp, cfg.band);
  auto [mn, mx] = std::minmax_element(gain.values_db.begin(), gain.values_db.end());
  std::printf("gain min %.2f dB, max %.2f dB over %zu bins (bvp iterations: %d)\n", *mn, *mx,
              gain.values_db.size(), resp.iterations_used);

  bool have_noise = cfg.solver.include_ase;
  NoiseProfile noise;
  if (have_noise) noise = noise_profile(resp, cfg.band);

  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw std::runtime_error("simulate: cannot open " + a.out);
    out << (have_noise ? "frequency_THz,gain_dB,noise_dBm\n" : "frequency_THz,gain_dB\n");
    char buf[120];
    for (std::size_t b = 0; b < gain.values_db.size(); ++b) {
      if (have_noise)
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", gain.grid_thz[b], gain.values_db[b],
                      noise.values_dbm[b]);
      else
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", gain.grid_thz[b], gain.values_db[b]);
      out << buf;
    }
    std::cout << "profiles written to " << a.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::uint64_t count = 0;
  std::string out;
  std::string prune;  // "lo,hi"
  bool seed_set = false;
  std::uint64_t seed = 0;
};

int cmd_gen(const GlobalArgs& g, const GenArgs& a) {
  RunConfig cfg = resolve_config(g);
  std::uint64_t seed = a.seed_set ? a.seed : g.seed;
  double prune_lo = 4.0, prune_hi = 12.0;
  bool do_prune = !a.prune.empty();
  if (do_prune && std::sscanf(a.prune.c_str(), "%lf,%lf", &prune_lo, &prune_hi) != 2)
    throw CLI::ValidationError("--prune", "expected lo,hi in dB");

  print_effective_config("gen", cfg,
                         {{"count", std::to_string(a.count)},
                          {"seed", std::to_string(seed)},
                          {"out", a.out},
                          {"prune", do_prune ? fmt(prune_lo) + "," + fmt(prune_hi) : "off"},
                          {"threads", std::to_string(g.threads)}});

  auto t0 = std::chrono::steady_clock::now();
  Dataset ds = generate_dataset(a.count, seed, cfg.fiber, cfg.band, cfg.solver, g.threads);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("generated %zu records in %.1f s (%zu redrawn for non-convergence)\n",
              ds.records.size(), secs, static_cast<std::size_t>(ds.meta.regenerated_count));

  if (do_prune) {
    std::size_t before = ds.records.size();
    ds = prune_by_gain_window(ds, prune_lo, prune_hi);
    std::printf("pruned to gain window [%.2f, %.2f] dB: kept %zu, dropped %zu (%.1f%% kept)\n",
                prune_lo, prune_hi, ds.records.size(), before - ds.records.size(),
                100.0 * ds.records.size() / before);
  }
  write_dataset(ds, a.out);
  std::cout << "dataset written to " << a.out << " (config " << ds.meta.config_hash << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string method;
  std::string target = "gain";
  std::string data;
  std::string out;
  std::string activation;
  std::string hidden;
  int ensemble = -1;
  double ridge = -1.0;
  int max_epochs = -1;
  int patience = -1;
  double subsample = -1.0;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

int cmd_train(const GlobalArgs& g, const TrainArgs& a) {
  RunConfig cfg = resolve_config(g);
  std::uint64_t seed = a.seed_set ? a.seed : g.seed;
  TargetKind kind = target_kind_from_string(a.target);

  if (a.method != "rp" && a.method != "bp")
    throw CLI::ValidationError("--method", "must be rp or bp");
  const bool is_rp = a.method == "rp";
  if (is_rp && (a.max_epochs >= 0 || a.patience >= 0 || a.subsample >= 0.0))
    throw CLI::ValidationError("--method", "rp does not take --max-epochs/--patience/--subsample");
  if (!is_rp && a.ridge >= 0.0)
    throw CLI::ValidationError("--ridge", "only the rp method takes a ridge term");
  if (is_rp && a.hidden.find(',') != std::string::npos)
    throw CLI::ValidationError("--hidden", "rp takes a single hidden count, not a list");

  Dataset train_set = read_dataset(a.data);
  if (train_set.records.empty()) throw std::runtime_error("train: dataset is empty");

  std::map<std::string, std::string> echo{{"method", a.method},
                                          {"target", a.target},
                                          {"data", a.data},
                                          {"out", a.out},
                                          {"seed", std::to_string(seed)},
                                          {"threads", std::to_string(g.threads)}};

  Ensemble ensemble;
  auto t0 = std::chrono::steady_clock::now();
  if (is_rp) {
    RpConfig rp;
    rp.seed = seed;
    if (!a.activation.empty()) rp.activation = activation_from_string(a.activation);
    if (!a.hidden.empty()) rp.n_hidden = std::stoi(a.hidden);
    if (a.ensemble > 0) rp.ensemble_size = a.ensemble;
    if (a.ridge >= 0.0) rp.ridge_lambda = a.ridge;
    try {
      rp.validate();
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("train", e.what());
    }
    echo["activation"] = to_string(rp.activation);
    echo["n_hidden"] = std::to_string(rp.n_hidden);
    echo["ensemble_size"] = std::to_string(rp.ensemble_size);
    echo["ridge_lambda"] = fmt(rp.ridge_lambda);
    print_effective_config("train", cfg, echo);
    ensemble = train_rp(train_set, rp, kind, g.threads);
  } else {
    BpConfig bp;
    bp.seed = seed;
    if (!a.activation.empty()) bp.activation = activation_from_string(a.activation);
    if (!a.hidden.empty()) {
      bp.hidden_layers.clear();
      std::stringstream ss(a.hidden);
      std::string item;
      while (std::getline(ss, item, ',')) bp.hidden_layers.push_back(std::stoi(item));
    }
    if (a.ensemble > 0) bp.ensemble_size = a.ensemble;
    if (a.max_epochs > 0) bp.max_epochs = a.max_epochs;
    if (a.patience > 0) bp.patience = a.patience;
    if (a.subsample > 0.0) bp.subsample_fraction = a.subsample;
    try {
      bp.validate();
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("train", e.what());
    }
    echo["activation"] = to_string(bp.activation);
    echo["hidden_layers"] = a.hidden.empty() ? "10,10" : a.hidden;
    echo["ensemble_size"] = std::to_string(bp.ensemble_size);
    echo["max_epochs"] = std::to_string(bp.max_epochs);
    print_effective_config("train", cfg, echo);

    std::vector<BpMemberLog> logs;
    ensemble = train_bp(train_set, bp, kind, g.threads, &logs);
    for (std::size_t m = 0; m < logs.size(); ++m) {
      std::string path = a.out + ".member" + std::to_string(m) + ".log.csv";
      write_training_log_csv(logs[m], path);
    }
    std::cout << "per-member training logs written next to " << a.out << "\n";
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ensemble.meta.hyperparameters["config_hash"] = train_set.meta.config_hash;
  save_ensemble(ensemble, a.out);

  for (std::size_t m = 0; m < ensemble.meta.member_train_rmse.size(); ++m) {
    std::printf("member %2zu: train RMSE %.4f %s", m, ensemble.meta.member_train_rmse[m],
                kind == TargetKind::Gain ? "dB" : "dBm");
    if (m < ensemble.meta.member_epochs.size())
      std::printf(" (epochs %d, best val %.4f)", ensemble.meta.member_epochs[m],
                  ensemble.meta.member_val_rmse[m]);
    std::printf("\n");
  }
  std::printf("trained %zu members in %.2f s; model written to %s\n", ensemble.size(), secs,
              a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string pumps;
  std::string out;
};

int cmd_predict(const GlobalArgs& g, const PredictArgs& a) {
  RunConfig cfg = resolve_config(g);
  Ensemble e = load_ensemble(a.model);
  PumpSet pumps = parse_pumps(a.pumps);
  if (pumps.size() * 2 != e.members.front().input_dim())
    throw CLI::ValidationError("--pumps", "model expects " +
                                              std::to_string(e.members.front().input_dim() / 2) +
                                              " pumps, got " + std::to_string(pumps.size()));
  print_effective_config("predict", cfg, {{"model", a.model}, {"pumps", a.pumps}, {"out", a.out}});

  std::vector<double> y = ensemble_predict(e, pumps);
  auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  const char* unit = e.members.front().target_kind == TargetKind::Gain ? "dB" : "dBm";
  std::printf("predicted %s profile: min %.3f %s, max %.3f %s over %zu points\n",
              to_string(e.members.front().target_kind).c_str(), *mn, unit, *mx, unit, y.size());

  if (!a.out.empty()) {
    std::vector<double> grid;
    try {
      grid = build_reporting_grid(cfg.band);
    } catch (const std::exception&) {
    }
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw std::runtime_error("predict: cannot open " + a.out);
    bool with_grid = grid.size() == y.size();
    out << (with_grid ? "frequency_THz," : "bin,")
        << (e.members.front().target_kind == TargetKind::Gain ? "gain_dB" : "noise_dBm") << "\n";
    char buf[80];
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (with_grid)
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", grid[j], y[j]);
      else
        std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", j, y[j]);
      out << buf;
    }
    std::cout << "prediction written to " << a.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out;
  bool allow_unpruned = false;
  int bins = 40;
};

int cmd_eval(const GlobalArgs& g, const EvalArgs& a) {
  RunConfig cfg = resolve_config(g);
  Ensemble e = load_ensemble(a.model);
  Dataset test = read_dataset(a.data);
  print_effective_config("eval", cfg,
                         {{"model", a.model},
                          {"data", a.data},
                          {"out", a.out},
                          {"allow_unpruned", a.allow_unpruned ? "true" : "false"}});

  auto hash_it = e.meta.hyperparameters.find("config_hash");
  if (hash_it != e.meta.hyperparameters.end() && hash_it->second != test.meta.config_hash)
    throw std::runtime_error("eval: model was trained under config " + hash_it->second +
                             " but the dataset was generated under " + test.meta.config_hash);

  EvalOptions opts;
  opts.allow_unpruned = a.allow_unpruned;
  opts.histogram_bins = a.bins;
  ErrorReport rep = evaluate(e, test, opts);

  std::printf("samples: %zu\n", rep.per_sample_rmse.size());
  std::printf("RMSE mean %.4f %s, std %.4f %s, max %.4f %s\n", rep.rmse_mean, rep.unit.c_str(),
              rep.rmse_std, rep.unit.c_str(), rep.rmse_max, rep.unit.c_str());
  std::printf("max abs error <= 0.5 %s for %.1f%% of samples, <= 1.0 %s for %.1f%%\n",
              rep.unit.c_str(), 100.0 * rep.cdf_at(0.5), rep.unit.c_str(),
              100.0 * rep.cdf_at(1.0));
  std::printf("worst sample index %zu (max abs error %.4f %s)\n", rep.worst_index,
              rep.per_sample_max_abs[rep.worst_index], rep.unit.c_str());

  if (!a.out.empty()) {
    std::vector<double> grid;
    try {
      grid = build_reporting_grid(cfg.band);
    } catch (const std::exception&) {
    }
    write_report_json(rep, a.out + ".json");
    write_histogram_csv(rep, a.out + "_pdf.csv");
    write_cdf_csv(rep, a.out + "_cdf.csv");
    write_worst_case_csv(rep, grid, a.out + "_worst.csv");
    std::cout << "report written to " << a.out << ".json (+ _pdf/_cdf/_worst csv)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string data;
  std::string val;
  std::string activation = "sine";
  std::string target = "gain";
  std::string out;
  std::string grid;  // "lo,hi,step"
  int ensemble = 20;
  double ridge = 1e-8;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

int cmd_sweep(const GlobalArgs& g, const SweepArgs& a) {
  RunConfig cfg = resolve_config(g);
  std::uint64_t seed = a.seed_set ? a.seed : g.seed;
  Activation act = activation_from_string(a.activation);
  TargetKind kind = target_kind_from_string(a.target);

  std::vector<int> grid = default_sweep_grid();
  if (!a.grid.empty()) {
    int lo, hi, step;
    if (std::sscanf(a.grid.c_str(), "%d,%d,%d", &lo, &hi, &step) != 3 || step <= 0 || lo < 1)
      throw CLI::ValidationError("--grid", "expected lo,hi,step");
    grid.clear();
    for (int n = lo; n <= hi; n += step) grid.push_back(n);
  }

  Dataset pool = read_dataset(a.data);
  Dataset train_part, val_part;
  if (a.val.empty()) {
    std::tie(train_part, val_part) = split_dataset(pool, 0.2, substream_seed(seed, "sweep-split"));
  } else {
    train_part = std::move(pool);
    val_part = read_dataset(a.val);
    if (train_part.meta.config_hash != val_part.meta.config_hash)
      throw std::runtime_error("sweep: train/val config_hash mismatch");
  }

  print_effective_config("sweep", cfg,
                         {{"data", a.data},
                          {"val", a.val.empty() ? "(80/20 split)" : a.val},
                          {"activation", a.activation},
                          {"target", a.target},
                          {"grid_points", std::to_string(grid.size())},
                          {"ensemble_size", std::to_string(a.ensemble)},
                          {"seed", std::to_string(seed)},
                          {"out", a.out}});

  SweepResult res = sweep_hidden_nodes(train_part, val_part, act, kind, grid, a.ensemble, a.ridge,
                                       seed, g.threads);
  for (const SweepRow& r : res.rows)
    std::printf("n_hidden %3d: val RMSE %.4f +- %.4f, train RMSE %.4f\n", r.n_hidden,
                r.mean_val_rmse_db, r.std_val_rmse_db, r.train_rmse_db);
  std::printf("best n_hidden: %d\n", res.best_n_hidden);
  if (!a.out.empty()) {
    write_sweep_csv(res, a.out);
    std::cout << "sweep table written to " << a.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string model;
  int trials = 10;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

int cmd_bench(const GlobalArgs& g, const BenchArgs& a) {
  if (a.trials < 10) throw CLI::ValidationError("--trials", "need at least 10 trials");
  RunConfig cfg = resolve_config(g);
  std::uint64_t seed = a.seed_set ? a.seed : g.seed;
  Ensemble e = load_ensemble(a.model);
  print_effective_config("bench", cfg,
                         {{"model", a.model},
                          {"trials", std::to_string(a.trials)},
                          {"seed", std::to_string(seed)}});

  BenchResult res = latency_bench(cfg.fiber, cfg.band, cfg.solver, e, a.trials, seed);
  std::printf("oracle solve:     %.4f s mean over %d trials\n", res.oracle_mean_s, res.n_trials);
  std::printf("ensemble predict: %.3e s mean\n", res.predict_mean_s);
  std::printf("speedup factor:   %.0fx\n", res.speedup);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raman amplifier gain/noise surrogate pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global --config/--threads/--seed may follow the subcommand

  GlobalArgs g;
  app.add_option("--config", g.config_path, "key=value physics config file");
  app.add_option("--threads", g.threads, "worker threads (default: hardware)");
  app.add_option("--seed", g.seed, "master seed for all named substreams");

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "solve one pump configuration");
  c_sim->add_option("--pumps", sim.pumps, "lambda1,P1,...,lambda5,P5 (nm, mW)")->required();
  c_sim->add_option("--out", sim.out, "profile CSV path");

  GenArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen", "generate a labeled dataset");
  c_gen->add_option("--count", gen.count, "number of samples")->required();
  c_gen->add_option("--seed", gen.seed, "dataset seed (overrides global)")
      ->each([&](const std::string&) { gen.seed_set = true; });
  c_gen->add_option("--out", gen.out, "output JSONL path")->required();
  c_gen->add_option("--prune", gen.prune, "keep profiles inside lo,hi dB");

  TrainArgs tr;
  CLI::App* c_tr = app.add_subcommand("train", "train a surrogate ensemble");
  c_tr->add_option("--method", tr.method, "rp | bp")->required();
  c_tr->add_option("--target", tr.target, "gain | noise");
  c_tr->add_option("--data", tr.data, "training dataset JSONL")->required();
  c_tr->add_option("--out", tr.out, "model JSON path")->required();
  c_tr->add_option("--activation", tr.activation, "sine|tanh|logistic (default per method)");
  c_tr->add_option("--hidden", tr.hidden, "hidden nodes: int for rp, comma list for bp");
  c_tr->add_option("--ensemble", tr.ensemble, "ensemble size (default rp 20, bp 10)");
  c_tr->add_option("--ridge", tr.ridge, "rp ridge lambda (default 1e-8)");
  c_tr->add_option("--max-epochs", tr.max_epochs, "bp epoch cap (default 1000)");
  c_tr->add_option("--patience", tr.patience, "bp early-stopping patience (default 6)");
  c_tr->add_option("--subsample", tr.subsample, "bp per-epoch sample fraction (default 1)");
  c_tr->add_option("--seed", tr.seed, "training seed (overrides global)")
      ->each([&](const std::string&) { tr.seed_set = true; });

  PredictArgs pr;
  CLI::App* c_pr = app.add_subcommand("predict", "run the surrogate on one pump set");
  c_pr->add_option("--model", pr.model, "model JSON")->required();
  c_pr->add_option("--pumps", pr.pumps, "lambda1,P1,... (nm, mW)")->required();
  c_pr->add_option("--out", pr.out, "prediction CSV path");

  EvalArgs ev;
  CLI::App* c_ev = app.add_subcommand("eval", "evaluate a model on a test dataset");
  c_ev->add_option("--model", ev.model, "model JSON")->required();
  c_ev->add_option("--data", ev.data, "test dataset JSONL")->required();
  c_ev->add_option("--out", ev.out, "report prefix (.json, _pdf/_cdf/_worst.csv)");
  c_ev->add_flag("--allow-unpruned", ev.allow_unpruned, "evaluate an unpruned test set");
  c_ev->add_option("--bins", ev.bins, "histogram bins (default 40)");

  SweepArgs sw;
  CLI::App* c_sw = app.add_subcommand("sweep", "hidden-node sweep for the rp method");
  c_sw->add_option("--data", sw.data, "training pool JSONL")->required();
  c_sw->add_option("--val", sw.val, "validation dataset (default: 80/20 split)");
  c_sw->add_option("--activation", sw.activation, "sine|tanh|logistic");
  c_sw->add_option("--target", sw.target, "gain | noise");
  c_sw->add_option("--grid", sw.grid, "lo,hi,step (default 20,600,20)");
  c_sw->add_option("--ensemble", sw.ensemble, "ensemble size per grid point");
  c_sw->add_option("--ridge", sw.ridge, "ridge lambda");
  c_sw->add_option("--out", sw.out, "sweep table CSV");
  c_sw->add_option("--seed", sw.seed, "sweep seed (overrides global)")
      ->each([&](const std::string&) { sw.seed_set = true; });

  BenchArgs be;
  CLI::App* c_be = app.add_subcommand("bench", "oracle vs surrogate latency");
  c_be->add_option("--model", be.model, "model JSON")->required();
  c_be->add_option("--trials", be.trials, "number of pump sets (>= 10)");
  c_be->add_option("--seed", be.seed, "bench seed (overrides global)")
      ->each([&](const std::string&) { be.seed_set = true; });

  try {
    app.parse(argc, argv);
    if (*c_sim) return cmd_simulate(g, sim);
    if (*c_gen) return cmd_gen(g, gen);
    if (*c_tr) return cmd_train(g, tr);
    if (*c_pr) return cmd_predict(g, pr);
    if (*c_ev) return cmd_eval(g, ev);
    if (*c_sw) return cmd_sweep(g, sw);
    if (*c_be) return cmd_bench(g, be);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
