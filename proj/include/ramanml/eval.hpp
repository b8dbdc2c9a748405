#pragma once

// Prediction-error statistics over a test set: per-sample RMSE and maximum
// absolute error, their distribution (pdf histogram, empirical cdf), the
// worst-case profile pair, and the oracle-vs-ensemble latency benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ramanml/dataset.hpp"
#include "ramanml/nn.hpp"
#include "ramanml/solver.hpp"

namespace ramanml {

/// Componentwise prediction minus target, in physical units (dB or dBm).
inline std::vector<double> prediction_error(const std::vector<double>& pred,
                                            const std::vector<double>& target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("prediction_error: length mismatch (" +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(target.size()) + ")");
  std::vector<double> err(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) err[i] = pred[i] - target[i];
  return err;
}

struct ErrorReport {
  TargetKind target_kind = TargetKind::Gain;
  std::string unit;  // "dB" or "dBm"
  std::vector<double> per_sample_rmse;
  std::vector<double> per_sample_max_abs;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double rmse_max = 0.0;
  std::size_t worst_index = 0;  // sample with the largest max-abs error
  std::vector<std::pair<double, double>> cdf;  // (threshold, fraction of samples <=)
  std::vector<double> hist_edges;    // histogram of per-sample RMSE, bins+1 edges
  std::vector<double> hist_density;  // integrates to 1
  std::vector<double> worst_target;
  std::vector<double> worst_pred;

  double cdf_at(double threshold) const {
    double frac = 0.0;
    for (const auto& [thr, f] : cdf)
      if (thr <= threshold + 1e-12) frac = f;
    return frac;
  }
};

struct EvalOptions {
  bool allow_unpruned = false;
  int histogram_bins = 40;
};

/// Full evaluation of an ensemble on a labeled test set. The test set must be
/// pruned to the practical gain window unless explicitly overridden.
inline ErrorReport evaluate(const Ensemble& e, const Dataset& test,
                            const EvalOptions& opts = EvalOptions{}) {
  e.validate();
  if (test.records.empty()) throw std::invalid_argument("evaluate: empty test set");
  if (!test.meta.pruned && !opts.allow_unpruned)
    throw std::invalid_argument(
        "evaluate: test set is not pruned to the gain window (set allow_unpruned to override)");
  if (opts.histogram_bins < 1) throw std::invalid_argument("evaluate: histogram_bins must be >= 1");

  const TargetKind kind = e.members.front().target_kind;
  ErrorReport rep;
  rep.target_kind = kind;
  rep.unit = kind == TargetKind::Gain ? "dB" : "dBm";
  rep.per_sample_rmse.reserve(test.records.size());
  rep.per_sample_max_abs.reserve(test.records.size());

  double worst_max = -1.0;
  for (std::size_t s = 0; s < test.records.size(); ++s) {
    const SampleRecord& rec = test.records[s];
    std::vector<double> pred = ensemble_predict(e, rec.pumps);
    const std::vector<double>& targ = target_of(rec, kind);
    std::vector<double> err = prediction_error(pred, targ);

    double acc = 0.0, max_abs = 0.0;
    std::size_t counted = 0;
    for (std::size_t j = 0; j < err.size(); ++j) {
      // Degenerate zero-ASE bins: skip only when both sides sit at the
      // sentinel (cannot occur post-pruning, but the rule is defined).
      if (kind == TargetKind::Noise && targ[j] == kSentinelDbm && pred[j] == kSentinelDbm)
        continue;
      acc += err[j] * err[j];
      max_abs = std::max(max_abs, std::abs(err[j]));
      ++counted;
    }
    if (counted == 0)
      throw std::runtime_error("evaluate: sample " + std::to_string(s) +
                               " has no comparable bins (all sentinel)");
    double rmse = std::sqrt(acc / static_cast<double>(counted));
    if (max_abs + 1e-12 < rmse)
      throw std::logic_error("evaluate: max|e| < RMSE, statistics are inconsistent");
    rep.per_sample_rmse.push_back(rmse);
    rep.per_sample_max_abs.push_back(max_abs);
    if (max_abs > worst_max) {
      worst_max = max_abs;
      rep.worst_index = s;
      rep.worst_target = targ;
      rep.worst_pred = std::move(pred);
    }
  }

  const double n = static_cast<double>(rep.per_sample_rmse.size());
  for (double v : rep.per_sample_rmse) {
    rep.rmse_mean += v;
    rep.rmse_max = std::max(rep.rmse_max, v);
  }
  rep.rmse_mean /= n;
  for (double v : rep.per_sample_rmse) rep.rmse_std += (v - rep.rmse_mean) * (v - rep.rmse_mean);
  rep.rmse_std = std::sqrt(rep.rmse_std / n);

  // Histogram of per-sample RMSE over [0, max], normalized to unit integral.
  double hist_span = rep.rmse_max > 0.0 ? rep.rmse_max : 1.0;
  double width = hist_span / opts.histogram_bins;
  rep.hist_edges.resize(opts.histogram_bins + 1);
  for (int b = 0; b <= opts.histogram_bins; ++b) rep.hist_edges[b] = b * width;
  rep.hist_density.assign(opts.histogram_bins, 0.0);
  for (double v : rep.per_sample_rmse) {
    int b = std::min(static_cast<int>(v / width), opts.histogram_bins - 1);
    rep.hist_density[b] += 1.0;
  }
  for (double& d : rep.hist_density) d /= n * width;

  // Empirical cdf of the max absolute error on a 0.1 grid (0.5 and 1.0 land
  // on it exactly), extended to cover the observed maximum.
  double cdf_top = std::max(1.0, worst_max);
  int k_max = static_cast<int>(std::ceil(cdf_top / 0.1 - 1e-9));
  for (int k = 0; k <= k_max; ++k) {
    double thr = k / 10.0;
    double count = 0.0;
    for (double v : rep.per_sample_max_abs)
      if (v <= thr) count += 1.0;
    rep.cdf.emplace_back(thr, count / n);
  }
  return rep;
}

// --------------------------------------------------------------------------
// Report output
// --------------------------------------------------------------------------

inline void write_report_json(const ErrorReport& rep, const std::string& path) {
  json doc{{"target_kind", to_string(rep.target_kind)},
           {"unit", rep.unit},
           {"summary",
            {{"n_samples", rep.per_sample_rmse.size()},
             {"rmse_mean", rep.rmse_mean},
             {"rmse_std", rep.rmse_std},
             {"rmse_max", rep.rmse_max},
             {"max_abs_error_worst", rep.per_sample_max_abs.empty()
                                         ? 0.0
                                         : rep.per_sample_max_abs[rep.worst_index]},
             {"worst_index", rep.worst_index},
             {"cdf_at_0.5", rep.cdf_at(0.5)},
             {"cdf_at_1.0", rep.cdf_at(1.0)}}},
           {"cdf", rep.cdf},
           {"histogram", {{"edges", rep.hist_edges}, {"density", rep.hist_density}}},
           {"per_sample",
            {{"rmse", rep.per_sample_rmse}, {"max_abs_error", rep.per_sample_max_abs}}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_report_json: cannot open " + path);
  out << doc.dump(2) << "\n";
}

inline void write_histogram_csv(const ErrorReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_histogram_csv: cannot open " + path);
  out << "bin_lo,bin_hi,density\n";
  char buf[120];
  for (std::size_t b = 0; b + 1 < rep.hist_edges.size(); ++b) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", rep.hist_edges[b], rep.hist_edges[b + 1],
                  rep.hist_density[b]);
    out << buf;
  }
}

inline void write_cdf_csv(const ErrorReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_cdf_csv: cannot open " + path);
  out << "threshold_" << (rep.unit == "dB" ? "db" : "dbm") << ",fraction\n";
  char buf[80];
  for (const auto& [thr, frac] : rep.cdf) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", thr, frac);
    out << buf;
  }
}

/// Worst-case (target, prediction) pair; pass the reporting grid for a
/// frequency column, or leave it empty to index bins.
inline void write_worst_case_csv(const ErrorReport& rep, const std::vector<double>& grid_thz,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_worst_case_csv: cannot open " + path);
  const bool with_grid = grid_thz.size() == rep.worst_target.size();
  out << (with_grid ? "frequency_THz" : "bin") << ",target,prediction\n";
  char buf[140];
  for (std::size_t j = 0; j < rep.worst_target.size(); ++j) {
    if (with_grid)
      std::snprintf(buf, sizeof(buf), "%.9g,%.12g,%.12g\n", grid_thz[j], rep.worst_target[j],
                    rep.worst_pred[j]);
    else
      std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g\n", j, rep.worst_target[j],
                    rep.worst_pred[j]);
    out << buf;
  }
}

// --------------------------------------------------------------------------
// Latency benchmark
// --------------------------------------------------------------------------

struct BenchResult {
  int n_trials = 0;
  double oracle_mean_s = 0.0;
  double predict_mean_s = 0.0;
  double speedup = 0.0;
};

/// Wall-clock comparison of one oracle solve against one ensemble prediction
/// over identical random pump sets. Predictions are repeated in a loop until
/// enough time accumulates for a stable mean.
inline BenchResult latency_bench(const FiberSpec& fiber, const BandSpec& band,
                                 const SolverOptions& opts, const Ensemble& e, int n_trials,
                                 std::uint64_t seed) {
  if (n_trials < 10) throw std::invalid_argument("latency_bench: n_trials must be >= 10");
  e.validate();
  using clock = std::chrono::steady_clock;

  std::vector<PumpSet> trials;
  trials.reserve(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    Rng rng(substream_seed(seed, "bench", static_cast<std::uint64_t>(i)));
    trials.push_back(sample_pump_config(rng));
  }

  BenchResult res;
  res.n_trials = n_trials;

  auto t0 = clock::now();
  for (const PumpSet& p : trials) {
    AmplifierResponse resp = solve_bvp(fiber, band, p, opts);
    if (resp.signal_out_mw.empty()) throw std::runtime_error("latency_bench: empty response");
  }
  res.oracle_mean_s = std::chrono::duration<double>(clock::now() - t0).count() / n_trials;

  double sink = 0.0;
  std::size_t passes = 0;
  t0 = clock::now();
  double elapsed = 0.0;
  while (elapsed < 0.2 && passes < 100000) {
    for (const PumpSet& p : trials) sink += ensemble_predict(e, p)[0];
    ++passes;
    elapsed = std::chrono::duration<double>(clock::now() - t0).count();
  }
  res.predict_mean_s = elapsed / static_cast<double>(passes * trials.size());
  if (sink == std::numeric_limits<double>::infinity())  // keep the sink live
    throw std::runtime_error("latency_bench: prediction overflow");
  res.speedup = res.oracle_mean_s / res.predict_mean_s;
  return res;
}

}  // namespace ramanml
