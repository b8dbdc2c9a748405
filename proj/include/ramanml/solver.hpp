#pragma once

// Frequency-resolved single-span simulator: forward WDM signals and ASE,
// backward pumps, coupled by stimulated Raman scattering. The two-point
// boundary-value problem is solved by fixed-point relaxation, alternating a
// forward RK4 sweep (signals + ASE, pumps frozen) with a backward RK4 sweep
// (pumps, signals frozen) until the boundary powers settle.
//
// Governing equation per wave i with direction s_i (+1 forward, -1 backward):
//   s_i dP_i/dz = -alpha_i P_i
//                 + P_i * sum_{f_j > f_i} g(f_j - f_i) P_j
//                 - P_i * sum_{f_j < f_i} (f_i/f_j) g(f_i - f_j) P_j
// with alpha in 1/km, g the gain efficiency in 1/(W*km), powers in W. The
// (f_i/f_j) factor keeps photon-number bookkeeping in the depletion term.
// ASE per reporting bin evolves as
//   dA/dz = -alpha_s A + sum_p g_p P_p(z) * (A + 2 h f B_W (1 + eta_p))
// with eta the phonon occupancy at the pump-bin offset; ASE neither depletes
// the pumps nor amplifies anything itself.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ramanml/common.hpp"
#include "ramanml/types.hpp"

namespace ramanml {

/// Bin-center frequencies of the reporting grid: width/resolution bins at
/// f_min + (k + 1/2) * resolution. Errors when the band width is not an
/// integer number of resolution bandwidths.
inline std::vector<double> build_reporting_grid(const BandSpec& band) {
  band.validate();
  double rbw_thz = band.resolution_bw_ghz * 1e-3;
  double ratio = band.width_thz() / rbw_thz;
  int n_bins = static_cast<int>(std::lround(ratio));
  if (n_bins < 1 || std::abs(ratio - n_bins) > 1e-9) {
    std::ostringstream os;
    os << "band width " << band.width_thz() << " THz is not an integer multiple of "
       << band.resolution_bw_ghz << " GHz";
    throw std::invalid_argument(os.str());
  }
  std::vector<double> grid(n_bins);
  for (int k = 0; k < n_bins; ++k) grid[k] = band.f_min_thz + (k + 0.5) * rbw_thz;
  return grid;
}

/// Channel center frequencies (ascending): n_channels centered uniformly in
/// [f_min, f_max].
inline std::vector<double> build_channel_comb(const BandSpec& band) {
  band.validate();
  double spacing = band.width_thz() / band.n_channels;
  std::vector<double> f(band.n_channels);
  for (int i = 0; i < band.n_channels; ++i) f[i] = band.f_min_thz + (i + 0.5) * spacing;
  return f;
}

/// Reporting-bin index of every channel.
inline std::vector<int> channel_bin_indices(const BandSpec& band) {
  double rbw_thz = band.resolution_bw_ghz * 1e-3;
  int n_bins = static_cast<int>(std::lround(band.width_thz() / rbw_thz));
  std::vector<double> comb = build_channel_comb(band);
  std::vector<int> bin(comb.size());
  for (std::size_t i = 0; i < comb.size(); ++i) {
    int b = static_cast<int>((comb[i] - band.f_min_thz) / rbw_thz);
    bin[i] = std::clamp(b, 0, n_bins - 1);
  }
  return bin;
}

namespace detail {

struct SolverWorkspace {
  // Geometry
  int n_steps = 0;
  double h_km = 0.0;
  double alpha_s = 0.0;  // 1/km
  double alpha_p = 0.0;

  // Wave frequencies (THz)
  std::vector<double> sig_f;   // ascending
  std::vector<double> ase_f;   // reporting grid (empty when ASE disabled)
  std::vector<double> pump_f;  // input order

  // Precomputed couplings
  std::vector<std::vector<double>> g_ps;     // [pump][signal] gain efficiency
  std::vector<std::vector<double>> g_pa;     // [pump][bin]
  std::vector<std::vector<double>> q_pa;     // [pump][bin] spontaneous source per W of pump
  std::vector<std::vector<double>> pp_coef;  // [pump][pump], signed
  std::vector<std::vector<double>> w_dep;    // [pump][signal] depletion weight
  std::vector<std::vector<double>> ss_coef;  // [signal][signal], generic path only

  bool fast_signal_signal = false;
  double tri_slope = 0.0;  // peak / peak_shift

  // Scratch buffers (sized once)
  std::vector<double> suffix_p, suffix_fp, prefix_p, prefix_pof;
  std::vector<double> sig_tmp, ase_tmp, dsig[4], dase[4];
};

inline SolverWorkspace make_workspace(const FiberSpec& fiber, const BandSpec& band,
                                      const PumpSet& pumps, const SolverOptions& opts) {
  SolverWorkspace ws;
  double h_req = opts.step_size_m * 1e-3;
  ws.n_steps = static_cast<int>(std::ceil(fiber.span_length_km / h_req - 1e-12));
  ws.n_steps = std::max(ws.n_steps, 1);
  ws.h_km = fiber.span_length_km / ws.n_steps;
  ws.alpha_s = alpha_per_km(fiber.alpha_signal_db_km);
  ws.alpha_p = alpha_per_km(fiber.alpha_pump_db_km);

  ws.sig_f = build_channel_comb(band);
  if (opts.include_ase) ws.ase_f = build_reporting_grid(band);
  ws.pump_f.reserve(pumps.size());
  for (const Pump& p : pumps.pumps) ws.pump_f.push_back(frequency_thz(p.lambda_nm));

  const std::size_t S = ws.sig_f.size(), B = ws.ase_f.size(), P = ws.pump_f.size();

  ws.g_ps.assign(P, std::vector<double>(S));
  ws.w_dep.assign(P, std::vector<double>(S));
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t i = 0; i < S; ++i) {
      double g = raman_efficiency(ws.pump_f[p] - ws.sig_f[i], fiber);
      ws.g_ps[p][i] = g;
      ws.w_dep[p][i] = (ws.pump_f[p] / ws.sig_f[i]) * g;
    }

  ws.g_pa.assign(P, std::vector<double>(B));
  ws.q_pa.assign(P, std::vector<double>(B));
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t b = 0; b < B; ++b) {
      double df = ws.pump_f[p] - ws.ase_f[b];
      double g = raman_efficiency(df, fiber);
      ws.g_pa[p][b] = g;
      if (g > 0.0 && df > 0.0) {
        double x = constants::kPlanckJs * df * 1e12 /
                   (constants::kBoltzmannJK * fiber.temperature_k);
        double eta = 1.0 / std::expm1(x);
        double seed_w = 2.0 * constants::kPlanckJs * (ws.ase_f[b] * 1e12) *
                        (band.resolution_bw_ghz * 1e9) * (1.0 + eta);
        ws.q_pa[p][b] = g * seed_w;
      }
    }

  ws.pp_coef.assign(P, std::vector<double>(P, 0.0));
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t q = 0; q < P; ++q) {
      if (q == i) continue;
      if (ws.pump_f[q] > ws.pump_f[i])
        ws.pp_coef[i][q] = raman_efficiency(ws.pump_f[q] - ws.pump_f[i], fiber);
      else if (ws.pump_f[q] < ws.pump_f[i])
        ws.pp_coef[i][q] = -(ws.pump_f[i] / ws.pump_f[q]) *
                           raman_efficiency(ws.pump_f[i] - ws.pump_f[q], fiber);
    }

  // Signal-signal SRS: with the triangular profile and the whole band inside
  // the profile support, the pairwise sums collapse to prefix/suffix sums.
  ws.fast_signal_signal = fiber.profile_kind == RamanProfileKind::Triangular &&
                          band.width_thz() <= fiber.raman_peak_shift_thz;
  ws.tri_slope = fiber.raman_peak_w_km / fiber.raman_peak_shift_thz;
  if (opts.include_signal_signal_srs && !ws.fast_signal_signal) {
    ws.ss_coef.assign(S, std::vector<double>(S, 0.0));
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = 0; j < S; ++j) {
        if (j == i) continue;
        if (ws.sig_f[j] > ws.sig_f[i])
          ws.ss_coef[i][j] = raman_efficiency(ws.sig_f[j] - ws.sig_f[i], fiber);
        else
          ws.ss_coef[i][j] = -(ws.sig_f[i] / ws.sig_f[j]) *
                             raman_efficiency(ws.sig_f[i] - ws.sig_f[j], fiber);
      }
  }

  ws.suffix_p.resize(S + 1);
  ws.suffix_fp.resize(S + 1);
  ws.prefix_p.resize(S + 1);
  ws.prefix_pof.resize(S + 1);
  ws.sig_tmp.resize(S);
  ws.ase_tmp.resize(B);
  for (int k = 0; k < 4; ++k) {
    ws.dsig[k].resize(S);
    ws.dase[k].resize(B);
  }
  return ws;
}

/// d/dz of signals and ASE at one RK4 stage, given pump powers at that z.
inline void forward_rhs(SolverWorkspace& ws, const SolverOptions& opts,
                        const std::vector<double>& sig, const std::vector<double>& ase,
                        const double* pump_w, std::vector<double>& dsig,
                        std::vector<double>& dase) {
  const std::size_t S = ws.sig_f.size(), B = ws.ase_f.size(), P = ws.pump_f.size();

  if (opts.include_signal_signal_srs && ws.fast_signal_signal) {
    ws.suffix_p[S] = 0.0;
    ws.suffix_fp[S] = 0.0;
    for (std::size_t i = S; i-- > 0;) {
      ws.suffix_p[i] = ws.suffix_p[i + 1] + sig[i];
      ws.suffix_fp[i] = ws.suffix_fp[i + 1] + ws.sig_f[i] * sig[i];
    }
    ws.prefix_p[0] = 0.0;
    ws.prefix_pof[0] = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      ws.prefix_p[i + 1] = ws.prefix_p[i] + sig[i];
      ws.prefix_pof[i + 1] = ws.prefix_pof[i] + sig[i] / ws.sig_f[i];
    }
  }

  for (std::size_t i = 0; i < S; ++i) {
    double net = 0.0;
    if (opts.include_signal_signal_srs) {
      if (ws.fast_signal_signal) {
        double fi = ws.sig_f[i];
        double gain = ws.suffix_fp[i + 1] - fi * ws.suffix_p[i + 1];
        double depl = fi * fi * ws.prefix_pof[i] - fi * ws.prefix_p[i];
        net = ws.tri_slope * (gain - depl);
      } else {
        const std::vector<double>& row = ws.ss_coef[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < S; ++j) acc += row[j] * sig[j];
        net = acc;
      }
    }
    double pump_gain = 0.0;
    for (std::size_t p = 0; p < P; ++p) pump_gain += ws.g_ps[p][i] * pump_w[p];
    dsig[i] = (-ws.alpha_s + net + pump_gain) * sig[i];
  }

  for (std::size_t b = 0; b < B; ++b) {
    double stim = 0.0, spont = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      stim += ws.g_pa[p][b] * pump_w[p];
      spont += ws.q_pa[p][b] * pump_w[p];
    }
    dase[b] = (-ws.alpha_s + stim) * ase[b] + spont;
  }
}

inline void check_non_negative(const std::vector<double>& v, const char* what, int step) {
  for (double x : v)
    if (x < 0.0) {
      std::ostringstream os;
      os << "negative " << what << " power at integration step " << step
         << "; step size too coarse";
      throw std::runtime_error(os.str());
    }
}

/// Forward sweep over the span. pump_profile is [pump][node] in W (frozen).
/// On return sig/ase hold the z = L state and dep_profile[pump][node] holds
/// the signal-depletion rate sum_j w_dep[p][j] P_j(z) used by the backward
/// sweep.
inline void forward_pass(SolverWorkspace& ws, const SolverOptions& opts,
                         const std::vector<std::vector<double>>& pump_profile,
                         std::vector<double>& sig, std::vector<double>& ase,
                         std::vector<std::vector<double>>* dep_profile) {
  const std::size_t S = ws.sig_f.size(), B = ws.ase_f.size(), P = ws.pump_f.size();
  const double h = ws.h_km;

  auto record_dep = [&](int node, const std::vector<double>& s) {
    if (!dep_profile) return;
    for (std::size_t p = 0; p < P; ++p) {
      double acc = 0.0;
      const std::vector<double>& w = ws.w_dep[p];
      for (std::size_t j = 0; j < S; ++j) acc += w[j] * s[j];
      (*dep_profile)[p][node] = acc;
    }
  };

  record_dep(0, sig);
  std::vector<double>& st = ws.sig_tmp;
  std::vector<double>& at = ws.ase_tmp;
  std::vector<double> pa(P), pb(P), pc(P);

  for (int k = 0; k < ws.n_steps; ++k) {
    // Stage pump values at z_k, z_k + h/2 (interpolated), z_k + h.
    for (std::size_t p = 0; p < P; ++p) {
      pa[p] = pump_profile[p][k];
      pc[p] = pump_profile[p][k + 1];
      pb[p] = 0.5 * (pa[p] + pc[p]);
    }
    const double* p0 = pa.data();
    const double* p1 = pb.data();
    const double* p2 = pc.data();

    forward_rhs(ws, opts, sig, ase, p0, ws.dsig[0], ws.dase[0]);
    for (std::size_t i = 0; i < S; ++i) st[i] = sig[i] + 0.5 * h * ws.dsig[0][i];
    for (std::size_t b = 0; b < B; ++b) at[b] = ase[b] + 0.5 * h * ws.dase[0][b];
    forward_rhs(ws, opts, st, at, p1, ws.dsig[1], ws.dase[1]);
    for (std::size_t i = 0; i < S; ++i) st[i] = sig[i] + 0.5 * h * ws.dsig[1][i];
    for (std::size_t b = 0; b < B; ++b) at[b] = ase[b] + 0.5 * h * ws.dase[1][b];
    forward_rhs(ws, opts, st, at, p1, ws.dsig[2], ws.dase[2]);
    for (std::size_t i = 0; i < S; ++i) st[i] = sig[i] + h * ws.dsig[2][i];
    for (std::size_t b = 0; b < B; ++b) at[b] = ase[b] + h * ws.dase[2][b];
    forward_rhs(ws, opts, st, at, p2, ws.dsig[3], ws.dase[3]);

    for (std::size_t i = 0; i < S; ++i)
      sig[i] += h / 6.0 * (ws.dsig[0][i] + 2.0 * ws.dsig[1][i] + 2.0 * ws.dsig[2][i] + ws.dsig[3][i]);
    for (std::size_t b = 0; b < B; ++b)
      ase[b] += h / 6.0 * (ws.dase[0][b] + 2.0 * ws.dase[1][b] + 2.0 * ws.dase[2][b] + ws.dase[3][b]);

    check_non_negative(sig, "signal", k + 1);
    check_non_negative(ase, "ASE", k + 1);
    record_dep(k + 1, sig);
  }
}

/// Backward sweep for the pumps from z = L down to z = 0 against the frozen
/// signal depletion profile. pump holds launch powers (W) on entry and the
/// z = 0 values on return; the full profile is written to pump_profile.
inline void backward_pass(SolverWorkspace& ws, const SolverOptions& opts,
                          const std::vector<std::vector<double>>& dep_profile,
                          std::vector<double>& pump,
                          std::vector<std::vector<double>>& pump_profile) {
  const std::size_t P = ws.pump_f.size();
  const double h = ws.h_km;

  auto rhs = [&](const std::vector<double>& q, const double* dep, std::vector<double>& dq) {
    for (std::size_t i = 0; i < P; ++i) {
      double pp = 0.0;
      if (opts.include_pump_pump_srs) {
        const std::vector<double>& row = ws.pp_coef[i];
        for (std::size_t j = 0; j < P; ++j) pp += row[j] * q[j];
      }
      // s_i = -1: dP/dz = +alpha_p P - P*(pump-pump net) + P*(signal depletion)
      dq[i] = (ws.alpha_p - pp + dep[i]) * q[i];
    }
  };

  std::vector<double> k1(P), k2(P), k3(P), k4(P), tmp(P);
  std::vector<double> d0(P), dm(P), d1(P);

  for (std::size_t p = 0; p < P; ++p) pump_profile[p][ws.n_steps] = pump[p];

  for (int k = ws.n_steps; k > 0; --k) {
    for (std::size_t p = 0; p < P; ++p) {
      d0[p] = dep_profile[p][k];
      d1[p] = dep_profile[p][k - 1];
      dm[p] = 0.5 * (d0[p] + d1[p]);
    }
    rhs(pump, d0.data(), k1);
    for (std::size_t p = 0; p < P; ++p) tmp[p] = pump[p] - 0.5 * h * k1[p];
    rhs(tmp, dm.data(), k2);
    for (std::size_t p = 0; p < P; ++p) tmp[p] = pump[p] - 0.5 * h * k2[p];
    rhs(tmp, dm.data(), k3);
    for (std::size_t p = 0; p < P; ++p) tmp[p] = pump[p] - h * k3[p];
    rhs(tmp, d1.data(), k4);
    for (std::size_t p = 0; p < P; ++p)
      pump[p] -= h / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
    check_non_negative(pump, "pump", k - 1);
    for (std::size_t p = 0; p < P; ++p) pump_profile[p][k - 1] = pump[p];
  }
}

inline double change_db(double p_new, double p_old) {
  const double floor_w = 1e-30;
  if (p_new < floor_w && p_old < floor_w) return 0.0;
  return std::abs(10.0 * std::log10(std::max(p_new, floor_w) / std::max(p_old, floor_w)));
}

}  // namespace detail

/// Solves the counter-propagating two-point boundary-value problem and the
/// matching pumps-off reference propagation. `converged` is true iff the
/// max boundary power change between successive relaxation sweeps dropped
/// below opts.convergence_tol_db. Throws on negative powers (step too coarse).
inline AmplifierResponse solve_bvp(const FiberSpec& fiber, const BandSpec& band,
                                   const PumpSet& pumps, const SolverOptions& opts) {
  fiber.validate();
  band.validate();
  opts.validate();
  pumps.validate(band);

  detail::SolverWorkspace ws = detail::make_workspace(fiber, band, pumps, opts);
  const std::size_t S = ws.sig_f.size(), B = ws.ase_f.size(), P = ws.pump_f.size();
  const int N = ws.n_steps;

  const double sig_in_w = dbm_to_watt(band.channel_power_dbm);

  std::vector<std::vector<double>> pump_profile(P, std::vector<double>(N + 1));
  std::vector<std::vector<double>> dep_profile(P, std::vector<double>(N + 1, 0.0));
  for (std::size_t p = 0; p < P; ++p) {
    double launch_w = milliwatt_to_watt(pumps.pumps[p].power_mw);
    for (int k = 0; k <= N; ++k) {
      double z = ws.h_km * k;
      pump_profile[p][k] = launch_w * std::exp(-ws.alpha_p * (fiber.span_length_km - z));
    }
  }

  std::vector<double> sig(S), ase(B, 0.0), pump_out(P);
  std::vector<double> prev_sig, prev_ase, prev_pump;
  bool converged = false;
  int iterations = 0;

  for (int iter = 1; iter <= opts.max_bvp_iterations; ++iter) {
    iterations = iter;
    std::fill(sig.begin(), sig.end(), sig_in_w);
    std::fill(ase.begin(), ase.end(), 0.0);
    detail::forward_pass(ws, opts, pump_profile, sig, ase, &dep_profile);

    for (std::size_t p = 0; p < P; ++p)
      pump_out[p] = milliwatt_to_watt(pumps.pumps[p].power_mw);
    detail::backward_pass(ws, opts, dep_profile, pump_out, pump_profile);

    if (iter > 1) {
      double change = 0.0;
      for (std::size_t i = 0; i < S; ++i)
        change = std::max(change, detail::change_db(sig[i], prev_sig[i]));
      for (std::size_t b = 0; b < B; ++b)
        change = std::max(change, detail::change_db(ase[b], prev_ase[b]));
      for (std::size_t p = 0; p < P; ++p)
        change = std::max(change, detail::change_db(pump_out[p], prev_pump[p]));
      if (change < opts.convergence_tol_db) {
        converged = true;
        break;
      }
    }
    prev_sig = sig;
    prev_ase = ase;
    prev_pump = pump_out;
  }

  // Final forward sweep so the reported signals/ASE match the final pumps.
  std::fill(sig.begin(), sig.end(), sig_in_w);
  std::fill(ase.begin(), ase.end(), 0.0);
  detail::forward_pass(ws, opts, pump_profile, sig, ase, nullptr);

  // Pumps-off reference with the same comb and toggles.
  std::vector<std::vector<double>> zero_profile(P, std::vector<double>(N + 1, 0.0));
  std::vector<double> sig_off(S, sig_in_w), ase_off(B, 0.0);
  detail::forward_pass(ws, opts, zero_profile, sig_off, ase_off, nullptr);

  AmplifierResponse resp;
  resp.converged = converged;
  resp.iterations_used = iterations;
  resp.signal_out_mw.resize(S);
  resp.signal_out_pumps_off_mw.resize(S);
  for (std::size_t i = 0; i < S; ++i) {
    resp.signal_out_mw[i] = watt_to_milliwatt(sig[i]);
    resp.signal_out_pumps_off_mw[i] = watt_to_milliwatt(sig_off[i]);
  }
  if (opts.include_ase) {
    resp.ase_out_mw.resize(B);
    for (std::size_t b = 0; b < B; ++b) resp.ase_out_mw[b] = watt_to_milliwatt(ase[b]);
  }
  resp.pump_out_mw.resize(P);
  for (std::size_t p = 0; p < P; ++p) resp.pump_out_mw[p] = watt_to_milliwatt(pump_out[p]);
  return resp;
}

/// On/off gain per reporting bin: 10*log10 of summed channel power with pumps
/// on over pumps off, over the channels whose center falls in the bin.
inline GainProfile gain_profile(const AmplifierResponse& resp, const BandSpec& band) {
  if (!resp.converged)
    throw std::invalid_argument("gain_profile: response did not converge");
  GainProfile out;
  out.grid_thz = build_reporting_grid(band);
  std::vector<int> bins = channel_bin_indices(band);
  if (resp.signal_out_mw.size() != bins.size() ||
      resp.signal_out_pumps_off_mw.size() != bins.size())
    throw std::invalid_argument("gain_profile: response/band channel count mismatch");

  std::vector<double> on(out.grid_thz.size(), 0.0), off(out.grid_thz.size(), 0.0);
  std::vector<int> count(out.grid_thz.size(), 0);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    on[bins[i]] += resp.signal_out_mw[i];
    off[bins[i]] += resp.signal_out_pumps_off_mw[i];
    ++count[bins[i]];
  }
  out.values_db.resize(out.grid_thz.size());
  for (std::size_t b = 0; b < out.grid_thz.size(); ++b) {
    if (count[b] == 0) {
      std::ostringstream os;
      os << "gain_profile: reporting bin " << b << " (" << out.grid_thz[b]
         << " THz) contains no channels";
      throw std::runtime_error(os.str());
    }
    out.values_db[b] = linear_to_db(on[b] / off[b]);
  }
  return out;
}

/// Output ASE power per reporting bin in dBm (within the resolution
/// bandwidth); exact zeros map to the -200 dBm sentinel.
inline NoiseProfile noise_profile(const AmplifierResponse& resp, const BandSpec& band) {
  if (!resp.converged)
    throw std::invalid_argument("noise_profile: response did not converge");
  if (resp.ase_out_mw.empty())
    throw std::runtime_error("noise_profile: ASE was disabled in the solver options");
  NoiseProfile out;
  out.grid_thz = build_reporting_grid(band);
  if (resp.ase_out_mw.size() != out.grid_thz.size())
    throw std::invalid_argument("noise_profile: response/band bin count mismatch");
  out.values_dbm.resize(out.grid_thz.size());
  for (std::size_t b = 0; b < out.grid_thz.size(); ++b)
    out.values_dbm[b] = watt_to_dbm(milliwatt_to_watt(resp.ase_out_mw[b]));
  return out;
}

}  // namespace ramanml
