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

// Wigner functions, photon statistics, the two-phase parity measurement and
// density-matrix reconstruction from sampled Wigner values.
//
// W(alpha) = (2/pi) Tr[D(-alpha) rho D(alpha) P] is evaluated as
// (2/pi) Tr[rho D(2 alpha) P], which only needs the matrix elements of D
// inside the support of rho and is therefore free of truncation error.

#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "catpump/csv.hpp"
#include "catpump/fock.hpp"

namespace catpump {

/// Guard for Wigner sampling: |alpha|^2 <= guard * N. Looser than the state
/// guard because the evaluation itself is exact.
inline constexpr double kWignerGuard = 1.0;

enum class GridKind { wigner, parity };
std::string to_string(GridKind k);

struct TomographyGrid {
  GridKind kind = GridKind::wigner;
  std::vector<cplx> alphas;
  std::vector<double> values;
  /// Repetitions behind each value; 0 for exact values.
  std::vector<long> shots;
  /// Measurement-model description, copied into the CSV header.
  csv::Meta meta;

  std::size_t size() const { return alphas.size(); }
  /// Values as Wigner function values (parity grids are scaled by 2/pi).
  std::vector<double> wigner_values() const;
};

/// n_re x n_im points over the rectangle, row-major along the real axis.
std::vector<cplx> square_grid(double re_min, double re_max, int n_re, double im_min, double im_max, int n_im);
inline std::vector<cplx> default_grid() { return square_grid(-3.5, 3.5, 41, -3.5, 3.5, 41); }

double wigner_at(const DenseMatrix& rho, cplx alpha);

/// Throws TruncationError when some |alpha|^2 exceeds guard * N of the mode.
TomographyGrid wigner(const QuantumState& state, const std::vector<cplx>& alphas, double guard = kWignerGuard);
/// Wigner function of `mode` after tracing out the others.
TomographyGrid wigner(const QuantumState& state, const std::string& mode, const std::vector<cplx>& alphas,
                      double guard = kWignerGuard);

/// p_n = <n|rho|n> of a single-mode state (or of `mode`).
std::vector<double> photon_distribution(const QuantumState& state);
std::vector<double> photon_distribution(const QuantumState& state, const std::string& mode);

struct Confusion {
  double e_given_g = 0;  // p(e|g)
  double g_given_e = 0;  // p(g|e)
};

struct MeasurementModel {
  /// Largest photon number the selective qubit pulses still rotate; larger
  /// populations leave the qubit in g. Negative means no cutoff.
  int n_max = -1;
  Confusion confusion;
  /// Optional |alpha|-dependent confusion replacing the constant one.
  std::function<Confusion(double)> confusion_at;
  /// Repetitions per pulse phase; 0 gives exact expectation values.
  long shots = 0;

  Confusion confusion_for(cplx alpha) const;
  /// C = (p(g|g) + p(e|e) - p(e|g) - p(g|e)) / 2
  double contrast(cplx alpha) const;
  /// Throws ConfigError on probabilities outside [0, 1].
  void validate() const;
  csv::Meta describe() const;
};

struct ParityMeasurement {
  double sigma_plus = 0;   // <sigma_z> with the second pulse at +pi/2
  double sigma_minus = 0;  // and at -pi/2
  /// (sigma_plus - sigma_minus) / 2 = C_alpha (|P_even psi_alpha|^2 - |P_odd psi_alpha|^2)
  double delta = 0;
  double contrast = 0;
};

/// `rng` is required when model.shots > 0.
ParityMeasurement simulate_parity_measurement(const DenseMatrix& rho, cplx alpha, const MeasurementModel& model,
                                              std::mt19937_64* rng = nullptr);

/// Measured parity grid: the value at each point is delta / C_alpha, the
/// contrast-corrected estimate of the displaced parity.
TomographyGrid measure_parity_grid(const QuantumState& state, const std::vector<cplx>& alphas,
                                   const MeasurementModel& model, std::uint64_t seed);

struct ReconstructionOptions {
  int max_iterations = 20000;
  /// Stop when the Frobenius change of one step drops below this.
  double tolerance = 1e-10;
  bool throw_on_nonconvergence = true;
};

struct ReconstructionReport {
  QuantumState state;
  /// Root-mean-square misfit of the Wigner values.
  double residual = 0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> fidelity;
  std::vector<std::string> warnings;
};

/// Least squares over density matrices of dimension `dim`:
///   min sum_k (Tr[M_k rho] - W_k)^2,  M_k = (2/pi) D(alpha_k) P D(-alpha_k),
/// by FISTA with projection onto the unit-trace PSD set. Throws
/// ConvergenceError after max_iterations unless told otherwise.
ReconstructionReport reconstruct_density_matrix(const TomographyGrid& grid, int dim,
                                                const std::optional<DenseMatrix>& reference = std::nullopt,
                                                const ReconstructionOptions& opt = {});

/// Projection of a Hermitian matrix onto {rho >= 0, Tr rho = 1}.
DenseMatrix project_density(const DenseMatrix& h);

struct GaussianFit {
  double amplitude = 0;
  double center = 0;
  double sigma = 0;
};

/// Least-squares fit of a exp(-(x - c)^2 / 2 s^2) to positive samples.
GaussianFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y);

void write_grid_csv(std::ostream& os, const TomographyGrid& grid);
TomographyGrid read_grid_csv(std::istream& is, const std::string& origin = "<stream>");

}  // namespace catpump
