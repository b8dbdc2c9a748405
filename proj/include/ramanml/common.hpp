#pragma once

// Shared physical constants and unit helpers. Conventions: wavelengths in nm,
// frequencies in THz, fiber lengths in km, powers in W inside the solver and
// mW/dBm at interfaces (see watt/dbm helpers below).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ramanml {

namespace constants {
inline constexpr double kSpeedOfLightThzNm = 299792.458;  // c as THz*nm
inline constexpr double kPlanckJs = 6.62607015e-34;
inline constexpr double kBoltzmannJK = 1.380649e-23;
inline constexpr double kLn10 = 2.302585092994045684;
}  // namespace constants

/// Finite stand-in for -inf dBm when a power is exactly zero.
inline constexpr double kSentinelDbm = -200.0;

inline double frequency_thz(double lambda_nm) {
  if (lambda_nm <= 0.0) throw std::invalid_argument("wavelength must be > 0 nm");
  return constants::kSpeedOfLightThzNm / lambda_nm;
}

inline double wavelength_nm(double f_thz) {
  if (f_thz <= 0.0) throw std::invalid_argument("frequency must be > 0 THz");
  return constants::kSpeedOfLightThzNm / f_thz;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// dB/km attenuation to the linear 1/km coefficient used in the ODEs.
inline double alpha_per_km(double alpha_db_km) {
  return alpha_db_km * constants::kLn10 / 10.0;
}

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

/// Power to dBm, clamped at the -200 dBm sentinel (zero power maps there).
inline double watt_to_dbm(double watt) {
  if (watt <= 0.0) return kSentinelDbm;
  double dbm = 10.0 * std::log10(watt * 1e3);
  return dbm < kSentinelDbm ? kSentinelDbm : dbm;
}

inline double milliwatt_to_watt(double mw) { return mw * 1e-3; }
inline double watt_to_milliwatt(double w) { return w * 1e3; }

}  // namespace ramanml
