#pragma once

// Dataset generation and handling: draw pump configurations from the
// sampling distributions, label them with the BVP solver, prune to the
// practical gain window, normalize features/targets, and persist as
// JSON-lines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ramanml/config.hpp"
#include "ramanml/parallel.hpp"
#include "ramanml/rng.hpp"
#include "ramanml/solver.hpp"
#include "ramanml/types.hpp"

namespace ramanml {

using json = nlohmann::json;

inline constexpr int kDatasetSchemaVersion = 1;

/// Sampling ranges for the five pump wavelengths (nm) and powers (mW).
struct SamplingRanges {
  std::vector<std::pair<double, double>> lambda_nm = {
      {1424.0, 1436.2}, {1436.2, 1458.4}, {1458.4, 1480.6}, {1480.6, 1502.8}, {1502.8, 1525.0}};
  double power_min_mw = 0.0;
  double power_max_mw = 160.0;
};

struct SampleRecord {
  PumpSet pumps;
  std::vector<double> gain_db;
  std::vector<double> noise_dbm;
  bool converged = true;
  std::uint64_t seed_index = 0;
};

struct DatasetMeta {
  int schema_version = kDatasetSchemaVersion;
  std::uint64_t seed = 0;
  std::uint64_t count = 0;
  std::string config_hash;
  bool pruned = false;
  std::uint64_t regenerated_count = 0;
  std::time_t created = 0;  // in-memory only, never serialized
};

struct Dataset {
  DatasetMeta meta;
  std::vector<SampleRecord> records;

  std::size_t size() const { return records.size(); }
};

/// One pump configuration draw: wavelengths from the per-pump intervals, then
/// powers from U[min, max], interleaved per pump.
inline PumpSet sample_pump_config(Rng& rng, const SamplingRanges& ranges = SamplingRanges{}) {
  PumpSet ps;
  ps.pumps.reserve(ranges.lambda_nm.size());
  for (const auto& [lo, hi] : ranges.lambda_nm) {
    Pump p;
    p.lambda_nm = rng.uniform(lo, hi);
    p.power_mw = rng.uniform(ranges.power_min_mw, ranges.power_max_mw);
    ps.pumps.push_back(p);
  }
  return ps;
}

/// Labels `count` sampled pump configurations with the oracle. Draws that do
/// not converge are redrawn from a per-index attempt substream (scheduling
/// cannot change the result) and counted in metadata.
inline Dataset generate_dataset(std::uint64_t count, std::uint64_t seed, const FiberSpec& fiber,
                                const BandSpec& band, const SolverOptions& opts,
                                unsigned threads = 1,
                                const SamplingRanges& ranges = SamplingRanges{}) {
  if (count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
  Dataset ds;
  ds.meta.seed = seed;
  ds.meta.count = count;
  ds.meta.config_hash = config_hash(RunConfig{fiber, band, opts});
  ds.meta.created = std::time(nullptr);
  ds.records.resize(count);

  std::vector<std::uint64_t> regen_per_record(count, 0);
  parallel_for(count, threads, [&](std::size_t i) {
    std::uint64_t stream = substream_seed(seed, "sampling", i);
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(substream_seed(stream, "attempt", attempt));
      PumpSet pumps = sample_pump_config(rng, ranges);
      AmplifierResponse resp;
      try {
        resp = solve_bvp(fiber, band, pumps, opts);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << e.what() << " [pumps:";
        for (const Pump& p : pumps.pumps) os << " (" << p.lambda_nm << " nm, " << p.power_mw << " mW)";
        os << "]";
        throw std::runtime_error(os.str());
      }
      if (!resp.converged) {
        ++regen_per_record[i];
        continue;
      }
      SampleRecord rec;
      rec.pumps = std::move(pumps);
      rec.gain_db = gain_profile(resp, band).values_db;
      rec.noise_dbm = noise_profile(resp, band).values_dbm;
      rec.converged = true;
      rec.seed_index = i;
      ds.records[i] = std::move(rec);
      break;
    }
  });
  for (std::uint64_t r : regen_per_record) ds.meta.regenerated_count += r;
  return ds;
}

/// Keeps records whose gain profile lies entirely inside [lo_db, hi_db].
inline Dataset prune_by_gain_window(const Dataset& ds, double lo_db = 4.0, double hi_db = 12.0) {
  Dataset out;
  out.meta = ds.meta;
  out.meta.pruned = true;
  for (const SampleRecord& rec : ds.records) {
    auto [mn, mx] = std::minmax_element(rec.gain_db.begin(), rec.gain_db.end());
    if (*mn >= lo_db && *mx <= hi_db) out.records.push_back(rec);
  }
  out.meta.count = out.records.size();
  return out;
}

enum class TargetKind { Gain, Noise };

inline std::string to_string(TargetKind k) { return k == TargetKind::Gain ? "gain" : "noise"; }

inline TargetKind target_kind_from_string(const std::string& s) {
  if (s == "gain") return TargetKind::Gain;
  if (s == "noise") return TargetKind::Noise;
  throw std::invalid_argument("unknown target kind '" + s + "'");
}

/// What fit_normalizer does with a degenerate column (constant input, or zero
/// output spread): Error refuses, Center maps it to 0 / unit scale.
enum class DegeneratePolicy { Error, Center };

/// Input min-max scaling to [-1, 1] plus per-dimension output z-scoring.
struct Normalizer {
  std::vector<double> input_min, input_max;   // feature space (2 per pump)
  std::vector<double> output_mean, output_std;  // target space
  TargetKind target_kind = TargetKind::Gain;

  std::size_t input_dim() const { return input_min.size(); }
  std::size_t output_dim() const { return output_mean.size(); }

  std::vector<double> apply_input(const std::vector<double>& x) const {
    if (x.size() != input_min.size())
      throw std::invalid_argument("Normalizer: input dimension mismatch");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      double span = input_max[j] - input_min[j];
      out[j] = span > 0.0 ? 2.0 * (x[j] - input_min[j]) / span - 1.0 : 0.0;
    }
    return out;
  }

  std::vector<double> apply_output(const std::vector<double>& y) const {
    if (y.size() != output_mean.size())
      throw std::invalid_argument("Normalizer: output dimension mismatch");
    std::vector<double> out(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) out[j] = (y[j] - output_mean[j]) / output_std[j];
    return out;
  }

  std::vector<double> invert_output(const std::vector<double>& y_norm) const {
    if (y_norm.size() != output_mean.size())
      throw std::invalid_argument("Normalizer: output dimension mismatch");
    std::vector<double> out(y_norm.size());
    for (std::size_t j = 0; j < y_norm.size(); ++j)
      out[j] = output_mean[j] + output_std[j] * y_norm[j];
    return out;
  }
};

inline const std::vector<double>& target_of(const SampleRecord& rec, TargetKind kind) {
  return kind == TargetKind::Gain ? rec.gain_db : rec.noise_dbm;
}

inline Normalizer fit_normalizer(const Dataset& ds, TargetKind kind,
                                 DegeneratePolicy policy = DegeneratePolicy::Error) {
  if (ds.records.empty()) throw std::invalid_argument("fit_normalizer: empty dataset");
  const std::size_t in_dim = ds.records.front().pumps.size() * 2;
  const std::size_t out_dim = target_of(ds.records.front(), kind).size();

  Normalizer n;
  n.target_kind = kind;
  n.input_min.assign(in_dim, std::numeric_limits<double>::infinity());
  n.input_max.assign(in_dim, -std::numeric_limits<double>::infinity());
  n.output_mean.assign(out_dim, 0.0);
  n.output_std.assign(out_dim, 0.0);

  for (const SampleRecord& rec : ds.records) {
    std::vector<double> x = rec.pumps.features();
    if (x.size() != in_dim) throw std::invalid_argument("fit_normalizer: ragged input dims");
    for (std::size_t j = 0; j < in_dim; ++j) {
      n.input_min[j] = std::min(n.input_min[j], x[j]);
      n.input_max[j] = std::max(n.input_max[j], x[j]);
    }
    const std::vector<double>& t = target_of(rec, kind);
    if (t.size() != out_dim) throw std::invalid_argument("fit_normalizer: ragged target dims");
    for (std::size_t j = 0; j < out_dim; ++j) n.output_mean[j] += t[j];
  }
  const double m = static_cast<double>(ds.records.size());
  for (std::size_t j = 0; j < out_dim; ++j) n.output_mean[j] /= m;
  for (const SampleRecord& rec : ds.records) {
    const std::vector<double>& t = target_of(rec, kind);
    for (std::size_t j = 0; j < out_dim; ++j) {
      double d = t[j] - n.output_mean[j];
      n.output_std[j] += d * d;
    }
  }
  static const char* kInputNames[] = {"lambda_1", "power_1", "lambda_2", "power_2", "lambda_3",
                                      "power_3", "lambda_4", "power_4", "lambda_5", "power_5"};
  for (std::size_t j = 0; j < in_dim; ++j) {
    if (n.input_max[j] - n.input_min[j] <= 0.0) {
      if (policy == DegeneratePolicy::Error) {
        std::string name = j < 10 ? kInputNames[j] : ("input_" + std::to_string(j));
        throw std::runtime_error("fit_normalizer: constant input column '" + name + "'");
      }
      // Center policy: apply_input maps a zero span to 0 directly.
    }
  }
  for (std::size_t j = 0; j < out_dim; ++j) {
    n.output_std[j] = std::sqrt(n.output_std[j] / m);
    if (n.output_std[j] <= 0.0) {
      if (policy == DegeneratePolicy::Error)
        throw std::runtime_error("fit_normalizer: constant output column " + std::to_string(j));
      n.output_std[j] = 1.0;
    }
  }
  return n;
}

/// (normalized input, normalized target) pair for one record.
inline std::pair<std::vector<double>, std::vector<double>> apply_normalizer(
    const Normalizer& n, const SampleRecord& rec) {
  return {n.apply_input(rec.pumps.features()), n.apply_output(target_of(rec, n.target_kind))};
}

// ---------------------------------------------------------------------------
// JSON-lines persistence. Header line:
//   {"schema_version":1,"seed":..,"count":..,"config_hash":"..","pruned":..,
//    "regenerated_count":..}
// then one record per line.
// ---------------------------------------------------------------------------

inline json normalizer_to_json(const Normalizer& n) {
  return json{{"input_min", n.input_min},
              {"input_max", n.input_max},
              {"output_mean", n.output_mean},
              {"output_std", n.output_std},
              {"target_kind", to_string(n.target_kind)}};
}

inline Normalizer normalizer_from_json(const json& j) {
  Normalizer n;
  n.input_min = j.at("input_min").get<std::vector<double>>();
  n.input_max = j.at("input_max").get<std::vector<double>>();
  n.output_mean = j.at("output_mean").get<std::vector<double>>();
  n.output_std = j.at("output_std").get<std::vector<double>>();
  n.target_kind = target_kind_from_string(j.at("target_kind").get<std::string>());
  if (n.input_min.size() != n.input_max.size() || n.output_mean.size() != n.output_std.size())
    throw std::runtime_error("normalizer: inconsistent dimension lists");
  return n;
}

inline void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  json header{{"schema_version", ds.meta.schema_version},
              {"seed", ds.meta.seed},
              {"count", ds.records.size()},
              {"config_hash", ds.meta.config_hash},
              {"pruned", ds.meta.pruned},
              {"regenerated_count", ds.meta.regenerated_count}};
  out << header.dump() << "\n";
  for (const SampleRecord& rec : ds.records) {
    json pumps = json::array();
    for (const Pump& p : rec.pumps.pumps)
      pumps.push_back(json{{"lambda_nm", p.lambda_nm}, {"power_mw", p.power_mw}});
    json line{{"seed_index", rec.seed_index},
              {"pumps", pumps},
              {"gain_db", rec.gain_db},
              {"noise_dbm", rec.noise_dbm},
              {"converged", rec.converged}};
    out << line.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_dataset: " + path + " is empty (no header line)");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error("read_dataset: malformed header line 1: " + std::string(e.what()));
  }
  int version = header.at("schema_version").get<int>();
  if (version != kDatasetSchemaVersion)
    throw std::runtime_error("read_dataset: unsupported schema_version " + std::to_string(version) +
                             " (expected " + std::to_string(kDatasetSchemaVersion) + ")");
  Dataset ds;
  ds.meta.schema_version = version;
  ds.meta.seed = header.at("seed").get<std::uint64_t>();
  ds.meta.count = header.at("count").get<std::uint64_t>();
  ds.meta.config_hash = header.at("config_hash").get<std::string>();
  ds.meta.pruned = header.at("pruned").get<bool>();
  ds.meta.regenerated_count = header.at("regenerated_count").get<std::uint64_t>();

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
      SampleRecord rec;
      rec.seed_index = j.at("seed_index").get<std::uint64_t>();
      for (const json& pj : j.at("pumps")) {
        Pump p;
        p.lambda_nm = pj.at("lambda_nm").get<double>();
        p.power_mw = pj.at("power_mw").get<double>();
        rec.pumps.pumps.push_back(p);
      }
      rec.gain_db = j.at("gain_db").get<std::vector<double>>();
      rec.noise_dbm = j.at("noise_dbm").get<std::vector<double>>();
      rec.converged = j.at("converged").get<bool>();
      ds.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw std::runtime_error("read_dataset: malformed record at line " + std::to_string(lineno) +
                               " (last good line " + std::to_string(lineno - 1) + "): " + e.what());
    }
  }
  if (ds.records.size() != ds.meta.count)
    throw std::runtime_error("read_dataset: truncated file; header promises " +
                             std::to_string(ds.meta.count) + " records but " +
                             std::to_string(ds.records.size()) + " were read (last good line " +
                             std::to_string(lineno) + ")");
  return ds;
}

/// Deterministic shuffled split: first (1 - holdout_fraction) of the records
/// into the first dataset, the rest into the second.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double holdout_fraction,
                                                 std::uint64_t seed) {
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
    throw std::invalid_argument("split_dataset: holdout_fraction must be in (0, 1)");
  if (ds.records.size() < 2) throw std::invalid_argument("split_dataset: need >= 2 records");
  std::vector<std::size_t> order(ds.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(substream_seed(seed, "split"));
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform() * (i + 1));
    std::swap(order[i], order[j]);
  }
  std::size_t n_holdout = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(holdout_fraction * ds.records.size())));
  n_holdout = std::min(n_holdout, ds.records.size() - 1);

  Dataset main_part, holdout;
  main_part.meta = ds.meta;
  holdout.meta = ds.meta;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < order.size() - n_holdout ? main_part : holdout).records.push_back(ds.records[order[i]]);
  main_part.meta.count = main_part.records.size();
  holdout.meta.count = holdout.records.size();
  return {std::move(main_part), std::move(holdout)};
}

/// Appends `extra` onto `base`; both must come from the same physics config.
inline void merge_datasets(Dataset& base, const Dataset& extra) {
  if (base.meta.config_hash != extra.meta.config_hash)
    throw std::runtime_error("merge_datasets: config_hash mismatch (" + base.meta.config_hash +
                             " vs " + extra.meta.config_hash + ")");
  base.records.insert(base.records.end(), extra.records.begin(), extra.records.end());
  base.meta.count = base.records.size();
  base.meta.regenerated_count += extra.meta.regenerated_count;
}

}  // namespace ramanml
