#pragma once

// Domain types for the single-span Raman amplifier simulator: fiber, band,
// pumps, solver options and the solver response.

#include <array>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ramanml/common.hpp"

namespace ramanml {

enum class RamanProfileKind { Triangular, Tabulated };

inline std::string to_string(RamanProfileKind k) {
  return k == RamanProfileKind::Triangular ? "triangular" : "tabulated";
}

/// Single-mode fiber parameters. dispersion and nonlinear_gamma are carried
/// for completeness but do not enter the power-evolution equations.
struct FiberSpec {
  double span_length_km = 100.0;
  double alpha_signal_db_km = 0.2;
  double alpha_pump_db_km = 0.25;
  double raman_peak_w_km = 0.4125;       // peak gain efficiency, 1/(W*km)
  double raman_peak_shift_thz = 13.2;    // offset of the peak, THz
  double effective_area_um2 = 80.0;
  double temperature_k = 298.0;
  double dispersion_ps_nm_km = 16.7;     // inert
  double nonlinear_gamma_w_km = 1.26;    // inert

  RamanProfileKind profile_kind = RamanProfileKind::Triangular;
  // Tabulated profile: sorted (offset THz, efficiency 1/(W*km)) nodes,
  // linearly interpolated, zero outside the tabulated support.
  std::vector<std::pair<double, double>> profile_table;

  void validate() const {
    if (span_length_km <= 0.0) throw std::invalid_argument("FiberSpec: span_length must be > 0");
    if (alpha_signal_db_km <= 0.0) throw std::invalid_argument("FiberSpec: alpha_signal must be > 0");
    if (alpha_pump_db_km <= 0.0) throw std::invalid_argument("FiberSpec: alpha_pump must be > 0");
    if (raman_peak_w_km <= 0.0) throw std::invalid_argument("FiberSpec: raman_peak must be > 0");
    if (raman_peak_shift_thz <= 0.0) throw std::invalid_argument("FiberSpec: raman_peak_shift must be > 0");
    if (temperature_k <= 0.0) throw std::invalid_argument("FiberSpec: temperature must be > 0");
    if (profile_kind == RamanProfileKind::Tabulated) {
      if (profile_table.size() < 2)
        throw std::invalid_argument("FiberSpec: tabulated profile needs >= 2 nodes");
      for (std::size_t i = 0; i < profile_table.size(); ++i) {
        if (profile_table[i].first < 0.0 || profile_table[i].second < 0.0)
          throw std::invalid_argument("FiberSpec: tabulated profile nodes must be >= 0");
        if (i > 0 && profile_table[i].first <= profile_table[i - 1].first)
          throw std::invalid_argument("FiberSpec: tabulated profile offsets must be strictly increasing");
      }
    }
  }
};

/// Signal band: WDM comb definition plus the gain/noise reporting resolution.
struct BandSpec {
  double f_min_thz = 185.0;
  double f_max_thz = 196.0;
  double resolution_bw_ghz = 100.0;
  int n_channels = 343;
  double channel_power_dbm = 0.0;

  double width_thz() const { return f_max_thz - f_min_thz; }

  void validate() const {
    if (f_min_thz <= 0.0 || f_max_thz <= 0.0)
      throw std::invalid_argument("BandSpec: frequencies must be > 0");
    if (f_max_thz <= f_min_thz)
      throw std::invalid_argument("BandSpec: f_max must exceed f_min (degenerate band)");
    if (resolution_bw_ghz <= 0.0)
      throw std::invalid_argument("BandSpec: resolution bandwidth must be > 0");
    if (n_channels < 1) throw std::invalid_argument("BandSpec: n_channels must be >= 1");
  }
};

struct Pump {
  double lambda_nm = 0.0;
  double power_mw = 0.0;
};

/// Counter-propagating pump set; the 2*n_pumps values are also the NN input.
struct PumpSet {
  std::vector<Pump> pumps;

  std::size_t size() const { return pumps.size(); }

  /// Flattened [lambda_1, P_1, ..., lambda_n, P_n] feature vector.
  std::vector<double> features() const {
    std::vector<double> x;
    x.reserve(2 * pumps.size());
    for (const Pump& p : pumps) {
      x.push_back(p.lambda_nm);
      x.push_back(p.power_mw);
    }
    return x;
  }

  void validate(const BandSpec& band) const {
    if (pumps.empty()) throw std::invalid_argument("PumpSet: no pumps");
    for (const Pump& p : pumps) {
      if (p.power_mw < 0.0) throw std::invalid_argument("PumpSet: pump power must be >= 0 mW");
      if (p.lambda_nm <= 0.0) throw std::invalid_argument("PumpSet: pump wavelength must be > 0 nm");
      // Pumps sit above the signal band in frequency (below in wavelength).
      if (frequency_thz(p.lambda_nm) <= band.f_max_thz) {
        std::ostringstream os;
        os << "PumpSet: pump at " << p.lambda_nm
           << " nm is not above the signal band (" << band.f_max_thz << " THz)";
        throw std::invalid_argument(os.str());
      }
    }
  }
};

struct SolverOptions {
  double step_size_m = 100.0;
  int max_bvp_iterations = 50;
  double convergence_tol_db = 1e-4;
  bool include_pump_pump_srs = true;
  bool include_signal_signal_srs = true;
  bool include_ase = true;

  void validate() const {
    if (step_size_m <= 0.0) throw std::invalid_argument("SolverOptions: step_size must be > 0");
    if (convergence_tol_db <= 0.0)
      throw std::invalid_argument("SolverOptions: convergence_tol must be > 0");
    if (max_bvp_iterations < 1)
      throw std::invalid_argument("SolverOptions: max_bvp_iterations must be >= 1");
  }
};

/// Output of one boundary-value solve. Signal/ASE powers are reported at
/// z = L, pump powers at z = 0, all in mW. ase_out is empty when ASE was
/// disabled in the options.
struct AmplifierResponse {
  std::vector<double> signal_out_mw;
  std::vector<double> signal_out_pumps_off_mw;
  std::vector<double> ase_out_mw;
  std::vector<double> pump_out_mw;
  bool converged = false;
  int iterations_used = 0;
};

struct GainProfile {
  std::vector<double> values_db;
  std::vector<double> grid_thz;
};

struct NoiseProfile {
  std::vector<double> values_dbm;
  std::vector<double> grid_thz;
};

/// Polarization-averaged Raman gain efficiency at frequency offset |delta_f|,
/// in 1/(W*km). Zero at zero shift and beyond the profile support; the default
/// triangular profile ramps linearly to raman_peak at raman_peak_shift.
inline double raman_efficiency(double delta_f_thz, const FiberSpec& fiber) {
  double df = std::abs(delta_f_thz);
  if (df == 0.0) return 0.0;
  if (fiber.profile_kind == RamanProfileKind::Triangular) {
    if (df > fiber.raman_peak_shift_thz) return 0.0;
    return fiber.raman_peak_w_km * df / fiber.raman_peak_shift_thz;
  }
  const auto& tab = fiber.profile_table;
  if (tab.empty() || df < tab.front().first || df > tab.back().first) return 0.0;
  // Find the segment containing df and interpolate.
  std::size_t hi = 1;
  while (hi < tab.size() && tab[hi].first < df) ++hi;
  if (hi == tab.size()) return tab.back().second;
  double f0 = tab[hi - 1].first, f1 = tab[hi].first;
  double g0 = tab[hi - 1].second, g1 = tab[hi].second;
  double t = (df - f0) / (f1 - f0);
  return g0 + t * (g1 - g0);
}

}  // namespace ramanml
