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

// Scenario runner behind the command-line tool. Each scenario turns a
// parameter map into CSV files under an output directory; the computational
// pieces are exposed separately so tests can check them without file IO.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "catpump/csv.hpp"
#include "catpump/device.hpp"
#include "catpump/fock.hpp"
#include "catpump/semiclassical.hpp"
#include "catpump/wigner.hpp"

namespace catpump {

/// spectroscopy, bistability, cat-evolution, fock-evolution, flowfield,
/// tomography-roundtrip
const std::vector<std::string>& scenario_names();

struct RunRequest {
  std::string scenario;
  /// Device and scenario keys with overrides already applied.
  KeyValueMap params;
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  /// Recorded in every output header.
  std::string params_origin;
};

struct RunSummary {
  std::vector<std::filesystem::path> files;
  /// Headline numbers of the run.
  csv::Meta metrics;
  /// Per-point failures and model warnings; the run still succeeded.
  std::vector<std::string> warnings;
};

/// Throws ConfigError for unknown scenarios or keys the scenario does not use.
RunSummary run_scenario(const RunRequest& req);

// ------------------------------------------------------------ building blocks

/// Quadratures x = (a + a^dag)/2 and q = (a - a^dag)/2i, so the vacuum has
/// variance 1/4 in both.
struct Observables {
  double nbar = 0;
  double parity = 0;
  double min_wigner = 0;  // over the supplied grid; NaN without one
  double mean_x = 0, mean_q = 0;
  double var_x = 0, var_q = 0;
  double cum4_x = 0, cum4_q = 0;  // fourth cumulants
};

Observables storage_observables(const QuantumState& storage, const std::vector<cplx>& grid = {});

struct EvolutionSettings {
  /// "reduced" (storage only) or "two-mode" (readout and storage).
  std::string model = "reduced";
  int n_storage = 40;
  int n_readout = 3;
  /// Sample times (s), non-decreasing.
  std::vector<double> times;
};

struct EvolutionRun {
  std::vector<double> times;
  std::vector<QuantumState> storage;  // reduced storage state per time
  std::vector<std::string> warnings;
};

/// Evolves from `initial_storage` (single-mode, dimension n_storage) with the
/// readout in vacuum for the two-mode model.
EvolutionRun evolve_storage(const DeviceParams& p, const QuantumState& initial_storage, const EvolutionSettings& s);

/// p with |eps_d| chosen (pair of fixed points kept on the real axis) so the
/// reduced model started in vacuum holds `nbar` photons at time t.
DeviceParams calibrate_drive_to_population(const DeviceParams& p, int n_storage, double nbar, double t);

struct SpectroscopySettings {
  /// Pump offsets span [-pump_span, pump_span] (rad/s); probe columns use the
  /// same step, centered so the dip line passes through grid points.
  double pump_span = hz(10e6);
  int pump_rows = 40;
  int probe_cols = 60;
  /// Resonant readout population set by the probe without pumping.
  double probe_nbar = 4e-3;
  int n_readout = 3;
  int n_storage = 14;
  bool quantum = true;
  /// The quantum dip is a few tens of kHz wide, far below the grid step, so
  /// each pump row is scanned finely over +-dip_window_steps grid steps
  /// around the matching line: a coarse pass with `dip_points` points, then
  /// `refine_points` points over two coarse spacings around its minimum.
  double dip_window_steps = 1.5;
  int dip_points = 77;
  int refine_points = 21;
  /// A row has a dip only if n_r falls below dip_threshold times the bare
  /// Lorentzian somewhere in the window.
  double dip_threshold = 0.9;
  /// Quantum cut at zero pump offset: uniform over the probe range plus the
  /// refined points around the dip.
  int cut_points = 121;
};

struct QuantumPoint {
  double pump_offset = 0, probe_offset = 0;  // rad/s
  double nr = 0;          // NaN when the solver failed
  double lorentzian = 0;  // response without conversion
};

struct SpectroscopyResult {
  /// Offsets (rad/s) of the pump from 2 omega_s - omega_r and of the probe
  /// from omega_r.
  std::vector<double> pump_offset, probe_offset;
  semiclassical::ResponseMap semiclassical;
  /// Every quantum steady state evaluated along row j.
  std::vector<std::vector<QuantumPoint>> quantum_rows;
  /// Quantum cut at zero pump offset, sorted by probe offset.
  std::vector<QuantumPoint> cut;
  std::vector<std::string> failures;
  /// Probe offset of the dip per pump row; NaN when the row shows no dip.
  std::vector<double> quantum_dip, semiclassical_dip;
  std::vector<double> quantum_depth;
  /// Dip on the zero-pump-offset cut.
  double cut_dip = 0, cut_depth = 0;
  double floor = 0;
  cplx eps_d{};
};

SpectroscopyResult spectroscopy_sweep(const DeviceParams& p, const SpectroscopySettings& s);

/// Kerr rotates the classical basin boundary away from the imaginary axis.
/// Returns the rotation phi such that, after eps_d -> eps_d e^{2 i phi}, the
/// boundary crosses the circle |alpha| = radius at arg(alpha) = +-pi/2.
/// Throws ConfigError below threshold.
double separatrix_rotation(const DeviceParams& p, double radius);

/// Fraction of the positive Wigner mass closer to +target than to -target.
double lobe_fraction(const TomographyGrid& w, cplx target);

}  // namespace catpump
