// Copyright 2026 The catpump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Device parameters of the pumped qubit/readout/storage circuit, the
// parameter pipeline xi_p -> g2 -> (eps2, kappa2) -> alpha_inf, the
// working-frame Hamiltonian and the calibration formulas.
//
// Units: every angular frequency and rate is stored in rad/s (or 1/s),
// every duration in seconds. Hz enters only through `hz()` at the
// configuration boundary.

#pragma once

#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "catpump/dynamics.hpp"
#include "catpump/fock.hpp"

namespace catpump {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double hz(double f) { return kTwoPi * f; }
constexpr double to_hz(double w) { return w / kTwoPi; }

struct DeviceParams {
  // Mode frequencies (rad/s).
  double omega_q = 0, omega_r = 0, omega_s = 0;
  // Lifetimes (s): T1_s = 1/kappa_s, T1_r = 1/kappa_r.
  double T1_q = 0, T1_s = 0, T1_r = 0, T2_q = 0;
  // Thermal populations.
  double nth_q = 0, nth_r = 0, nth_s = 0;
  // Self- and cross-Kerr (rad/s).
  double chi_qq = 0, chi_qr = 0, chi_qs = 0, chi_rr = 0, chi_rs = 0, chi_ss = 0;
  // Second-order dispersive shift of the number-splitting ladder (rad/s).
  double chi3_rq = 0;
  // Pump and drive tones: complex amplitude and frequency (rad/s).
  cplx eps_p{};
  double omega_p = 0;
  cplx eps_d{};
  double omega_d = 0;
  // When false the drive and pump are taken as well tuned and the
  // working-frame detunings are `delta_d`, `delta_p` directly.
  bool use_tone_frequencies = false;
  double delta_d = 0, delta_p = 0;
  // Include the pump-induced AC Stark shifts in detunings computed from tone
  // frequencies. The operator-ordering shifts are absorbed in omega_m.
  bool apply_stark_shifts = true;
  // Linewidth of the number-resolved qubit spectroscopy, as a time 1/kappa_spec (s).
  double T_spec = 0;

  double kappa_s() const { return 1.0 / T1_s; }
  double kappa_r() const { return 1.0 / T1_r; }

  /// Throws ConfigError when a rate is not positive or a thermal population
  /// lies outside [0, 1).
  void validate() const;

  /// Published device values with the pump calibrated to |xi_p|^2 = 1.2 and
  /// the drive calibrated to a semiclassical |alpha_inf|^2 of 4.
  static DeviceParams published();
};

struct StarkShifts {
  double q = 0, r = 0, s = 0;  // rad/s, linear in |xi_p|^2
};

struct DerivedParams {
  cplx xi_p{};
  cplx g2{};
  cplx eps2{};
  double kappa2 = 0;
  /// The nonzero semiclassical fixed point in the right half plane (zero
  /// below threshold); -alpha_inf is the other one.
  cplx alpha_inf{};
  double delta_d = 0, delta_p = 0;
  StarkShifts stark;
};

/// xi_p = -i eps_p / (kappa_r/2 + i (omega_r - omega_p)).
cplx pump_amplitude(const DeviceParams& p);
StarkShifts stark_shifts(const DeviceParams& p, cplx xi_p);
DerivedParams derive_params(const DeviceParams& p);

/// Pump amplitude giving |xi_p|^2 = xi_sq with xi_p real and positive.
cplx calibrate_pump(const DeviceParams& p, double xi_sq);
/// Drive amplitude whose semiclassical fixed point has |alpha_inf|^2 =
/// alpha_sq (Kerr and single-photon loss included). The drive phase is
/// chosen so that the pair of fixed points +-alpha_inf lies on the real axis.
/// Throws ConfigError when g2 = 0 and alpha_sq > 0.
cplx calibrate_drive(const DeviceParams& p, double alpha_sq);

/// Working-frame Hamiltonian of the readout/storage pair, in rad/s:
///   Delta_d n_r + (Delta_p + Delta_d)/2 n_s + g2* a_s^2 a_r^dag + g2 a_s^dag^2 a_r
///   + eps_d a_r^dag + eps_d* a_r - chi_rs n_r n_s - sum_m chi_mm/2 a_m^dag^2 a_m^2.
/// Throws TruncationError if the storage cannot hold |alpha_inf|^2 with
/// the default guard.
Operator build_two_mode_hamiltonian(const DeviceParams& p, const DerivedParams& d, const FockSpace& space,
                                    const std::string& readout = "readout", const std::string& storage = "storage",
                                    double guard = kTruncationGuard);

/// Readout/storage Lindblad model: the Hamiltonian above with
/// sqrt(kappa (1 + nth)) a and sqrt(kappa nth) a^dag on both modes.
LindbladModel build_two_mode_model(const DeviceParams& p, const DerivedParams& d, const FockSpace& space,
                                   const std::string& readout = "readout", const std::string& storage = "storage",
                                   double guard = kTruncationGuard);

/// Thermal loss channels sqrt(kappa (1 + nth)) a and, when nth > 0, sqrt(kappa nth) a^dag.
std::vector<Operator> thermal_loss(const FockSpace& space, const std::string& mode, double kappa, double nth);

struct KerrMatrix {
  double qq = 0, rr = 0, ss = 0, qr = 0, qs = 0, rs = 0;
};

/// Fourth-order expansion of the junction cosine: chi_mm = E_J phi_m^4 / 2,
/// chi_mm' = E_J phi_m^2 phi_m'^2, with E_J given in rad/s.
KerrMatrix kerr_from_junction(double ej, double phi_q, double phi_r, double phi_s);

/// chi_ss estimated from chi_qs^2 / (4 chi_qq).
double storage_kerr_estimate(const DeviceParams& p);
/// |chi_rs - 2 sqrt(chi_rr chi_ss)| / chi_rs
double geometric_mismatch(const DeviceParams& p);

struct CalibrationReport {
  double readout_thermal_bound = 0;  // 1 / (T2 kappa_r)
  double storage_thermal_bound = 0;  // (kappa_spec / 2 chi_qs)^2
  double chi_ss_estimate = 0;        // rad/s
  double geometric_mismatch = 0;
};

CalibrationReport calibration_bounds(const DeviceParams& p, double kappa_spec);
inline CalibrationReport calibration_bounds(const DeviceParams& p) { return calibration_bounds(p, 1.0 / p.T_spec); }

/// Qubit line (Hz) with exactly n storage photons:
/// f_n = f_q - chi_qs/2pi n + chi3_rq/2pi n^2.
double number_splitting_frequency(const DeviceParams& p, int n);

// ---------------------------------------------------------------- config IO

/// Flat key/value configuration: `key = value [unit]` per line, `#` comments.
/// Complex values use the `(re,im)` form. Without a unit, frequencies are
/// in Hz and times in microseconds.
struct KeyValue {
  std::string value;
  std::string unit;
  int line = 0;
};
using KeyValueMap = std::map<std::string, KeyValue>;

KeyValueMap parse_key_values(const std::string& text, const std::string& origin = "<string>");
KeyValueMap load_key_values(const std::string& path);
/// Parses a `--set key=value [unit]` override.
std::pair<std::string, KeyValue> parse_override(const std::string& arg);

enum class Quantity { frequency, time, dimensionless, flag };

/// Value of `kv` in rad/s (frequency) or s (time), or a plain number;
/// flags give 0 or 1. Throws ConfigError naming the key.
double parse_quantity(const std::string& key, const KeyValue& kv, Quantity q);
/// Comma-separated list without spaces, one unit for all entries.
std::vector<double> parse_quantity_list(const std::string& key, const KeyValue& kv, Quantity q);

/// Names of every key understood by `resolve_device_params`.
const std::vector<std::string>& device_keys();

/// Starts from `DeviceParams::published()`, applies every device key found
/// in `kv` (unknown keys are left for the caller) and runs the pump/drive
/// calibrations when eps_p / eps_d are not given explicitly. Calibration
/// targets: `xi_p_sq` (default 1.2) and `alpha_inf_sq` (default 4). With no
/// pump (g2 = 0) an uncalibrated drive is left at zero.
DeviceParams resolve_device_params(const KeyValueMap& kv);

/// One `key = value unit` line per device quantity, in the units the
/// configuration file uses.
std::vector<std::pair<std::string, std::string>> describe_device(const DeviceParams& p);

}  // namespace catpump
