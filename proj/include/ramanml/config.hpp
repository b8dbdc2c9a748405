#pragma once

// Key-value configuration file handling. Every parameter has a built-in
// default, so a config file is optional; a file overrides defaults and CLI
// flags override the file. Format: one `key = value` per line, `#` comments.
// See the README for the full key list.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramanml/rng.hpp"
#include "ramanml/types.hpp"

namespace ramanml {

struct RunConfig {
  FiberSpec fiber;
  BandSpec band;
  SolverOptions solver;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for '" + key + "': " + v);
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean value for '" + key + "': " + v);
}

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// Applies one key/value pair onto the config. Unknown keys error.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  if (key == "fiber.span_length_km") cfg.fiber.span_length_km = parse_double(key, value);
  else if (key == "fiber.alpha_signal_db_km") cfg.fiber.alpha_signal_db_km = parse_double(key, value);
  else if (key == "fiber.alpha_pump_db_km") cfg.fiber.alpha_pump_db_km = parse_double(key, value);
  else if (key == "fiber.raman_peak_w_km") cfg.fiber.raman_peak_w_km = parse_double(key, value);
  else if (key == "fiber.raman_peak_shift_thz") cfg.fiber.raman_peak_shift_thz = parse_double(key, value);
  else if (key == "fiber.effective_area_um2") cfg.fiber.effective_area_um2 = parse_double(key, value);
  else if (key == "fiber.temperature_k") cfg.fiber.temperature_k = parse_double(key, value);
  else if (key == "fiber.dispersion_ps_nm_km") cfg.fiber.dispersion_ps_nm_km = parse_double(key, value);
  else if (key == "fiber.nonlinear_gamma_w_km") cfg.fiber.nonlinear_gamma_w_km = parse_double(key, value);
  else if (key == "fiber.raman_profile") {
    if (value == "triangular") cfg.fiber.profile_kind = RamanProfileKind::Triangular;
    else if (value == "tabulated") cfg.fiber.profile_kind = RamanProfileKind::Tabulated;
    else throw std::invalid_argument("config: fiber.raman_profile must be triangular|tabulated");
  } else if (key == "fiber.raman_profile_points") {
    // "f1:g1,f2:g2,..." offsets in THz, efficiencies in 1/(W*km)
    cfg.fiber.profile_table.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t colon = item.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("config: raman_profile_points entries must be f:g");
      cfg.fiber.profile_table.emplace_back(parse_double(key, item.substr(0, colon)),
                                           parse_double(key, item.substr(colon + 1)));
    }
  }
  else if (key == "band.f_min_thz") cfg.band.f_min_thz = parse_double(key, value);
  else if (key == "band.f_max_thz") cfg.band.f_max_thz = parse_double(key, value);
  else if (key == "band.resolution_bw_ghz") cfg.band.resolution_bw_ghz = parse_double(key, value);
  else if (key == "band.n_channels") cfg.band.n_channels = static_cast<int>(parse_double(key, value));
  else if (key == "band.channel_power_dbm") cfg.band.channel_power_dbm = parse_double(key, value);
  else if (key == "solver.step_size_m") cfg.solver.step_size_m = parse_double(key, value);
  else if (key == "solver.max_bvp_iterations") cfg.solver.max_bvp_iterations = static_cast<int>(parse_double(key, value));
  else if (key == "solver.convergence_tol_db") cfg.solver.convergence_tol_db = parse_double(key, value);
  else if (key == "solver.include_pump_pump_srs") cfg.solver.include_pump_pump_srs = parse_bool(key, value);
  else if (key == "solver.include_signal_signal_srs") cfg.solver.include_signal_signal_srs = parse_bool(key, value);
  else if (key == "solver.include_ase") cfg.solver.include_ase = parse_bool(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = RunConfig{}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not key = value");
    std::string key = detail::trim(s.substr(0, eq));
    std::string value = detail::trim(s.substr(eq + 1));
    try {
      apply_config_entry(base, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
    }
  }
  return base;
}

/// Canonical flat key=value dump of the physics configuration (sorted keys,
/// full double precision). Used for echoing and hashing.
inline std::map<std::string, std::string> config_entries(const RunConfig& cfg) {
  using detail::fmt_double;
  std::map<std::string, std::string> m;
  m["fiber.span_length_km"] = fmt_double(cfg.fiber.span_length_km);
  m["fiber.alpha_signal_db_km"] = fmt_double(cfg.fiber.alpha_signal_db_km);
  m["fiber.alpha_pump_db_km"] = fmt_double(cfg.fiber.alpha_pump_db_km);
  m["fiber.raman_peak_w_km"] = fmt_double(cfg.fiber.raman_peak_w_km);
  m["fiber.raman_peak_shift_thz"] = fmt_double(cfg.fiber.raman_peak_shift_thz);
  m["fiber.effective_area_um2"] = fmt_double(cfg.fiber.effective_area_um2);
  m["fiber.temperature_k"] = fmt_double(cfg.fiber.temperature_k);
  m["fiber.dispersion_ps_nm_km"] = fmt_double(cfg.fiber.dispersion_ps_nm_km);
  m["fiber.nonlinear_gamma_w_km"] = fmt_double(cfg.fiber.nonlinear_gamma_w_km);
  m["fiber.raman_profile"] = to_string(cfg.fiber.profile_kind);
  {
    std::string pts;
    for (const auto& [f, g] : cfg.fiber.profile_table) {
      if (!pts.empty()) pts += ",";
      pts += fmt_double(f) + ":" + fmt_double(g);
    }
    m["fiber.raman_profile_points"] = pts;
  }
  m["band.f_min_thz"] = fmt_double(cfg.band.f_min_thz);
  m["band.f_max_thz"] = fmt_double(cfg.band.f_max_thz);
  m["band.resolution_bw_ghz"] = fmt_double(cfg.band.resolution_bw_ghz);
  m["band.n_channels"] = std::to_string(cfg.band.n_channels);
  m["band.channel_power_dbm"] = fmt_double(cfg.band.channel_power_dbm);
  m["solver.step_size_m"] = fmt_double(cfg.solver.step_size_m);
  m["solver.max_bvp_iterations"] = std::to_string(cfg.solver.max_bvp_iterations);
  m["solver.convergence_tol_db"] = fmt_double(cfg.solver.convergence_tol_db);
  m["solver.include_pump_pump_srs"] = cfg.solver.include_pump_pump_srs ? "true" : "false";
  m["solver.include_signal_signal_srs"] = cfg.solver.include_signal_signal_srs ? "true" : "false";
  m["solver.include_ase"] = cfg.solver.include_ase ? "true" : "false";
  return m;
}

/// FNV-1a hash of the canonical config dump, as fixed-width hex. Datasets and
/// models record it so mismatched physics configurations are caught early.
inline std::string config_hash(const RunConfig& cfg) {
  std::string blob;
  for (const auto& [k, v] : config_entries(cfg)) blob += k + "=" + v + "\n";
  std::uint64_t h = fnv1a64(blob);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ramanml
