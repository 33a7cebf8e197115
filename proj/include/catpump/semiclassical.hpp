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

// Classical limit of the storage and readout dynamics.

#pragma once

#include <complex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "catpump/device.hpp"

namespace catpump::semiclassical {

/// Coefficients of the single-mode coherent-state flow
///   d alpha/dt = -2i eps2 alpha* - (-i chi_ss + kappa2) |alpha|^2 alpha - kappa_s/2 alpha.
struct StorageCoefficients {
  cplx eps2{};
  double kappa2 = 0;
  double chi_ss = 0;
  double kappa_s = 0;

  static StorageCoefficients from(const DerivedParams& d, const DeviceParams& p) {
    return {d.eps2, d.kappa2, p.chi_ss, p.kappa_s()};
  }
};

cplx flow(cplx alpha, const StorageCoefficients& c);

enum class Stability { stable, saddle, unstable, marginal };
std::string to_string(Stability s);

struct FixedPoint {
  cplx alpha{};
  Stability stability = Stability::marginal;
  /// Eigenvalues of the real 2x2 Jacobian of the flow at alpha.
  std::complex<double> jacobian_eigs[2];
};

struct FixedPointSet {
  /// Vacuum first, then alpha_inf e^{i theta-} and alpha_inf e^{i theta+}
  /// when above threshold.
  std::vector<FixedPoint> points;
  double r_inf = 0;
  double theta_minus = 0;
  double theta_plus = 0;
  double phi_k = 0;
  double r2 = 0;    // modulus of -i chi_ss + kappa2
  double phi2 = 0;  // phase of -i chi_ss + kappa2
  double threshold = 0;  // kappa_s / 4
  double discriminant = 0;
  bool above_threshold = false;
};

FixedPointSet fixed_points(const StorageCoefficients& c);

/// Real Jacobian d(Re f, Im f)/d(Re a, Im a) by central differences.
Eigen::Matrix2d flow_jacobian(cplx alpha, const StorageCoefficients& c);

struct GridSpec {
  double re_min = -3.5, re_max = 3.5;
  double im_min = -3.5, im_max = 3.5;
  int n_re = 41, n_im = 41;

  double re_at(int i) const { return n_re == 1 ? re_min : re_min + (re_max - re_min) * i / (n_re - 1); }
  double im_at(int j) const { return n_im == 1 ? im_min : im_min + (im_max - im_min) * j / (n_im - 1); }
};

struct TrajectoryOptions {
  int seeds_per_side = 6;
  double t_max = 2e-3;  // s
  /// Stop once |d alpha/dt| drops below this fraction of kappa2 max(r_inf, 1)^3.
  double flow_tolerance = 1e-7;
  /// Record one point every `record_every` accepted steps.
  int record_every = 1;
  double rtol = 1e-9;
  double atol = 1e-12;
};

struct Trajectory {
  cplx seed{};
  std::vector<double> times;
  std::vector<cplx> points;
  bool converged = false;
  int fixed_point = -1;  // index into FixedPointSet::points, -1 if none within 1e-3
  double endpoint_distance = 0;
  /// Unwrapped change of arg(alpha) along the trajectory.
  double winding = 0;
};

Trajectory integrate_trajectory(cplx seed, const StorageCoefficients& c, const FixedPointSet& fps,
                                const TrajectoryOptions& opt = {});

struct FlowField {
  GridSpec grid;
  /// flow[j][i] at alpha = re_at(i) + i im_at(j): rows follow the imaginary axis.
  std::vector<std::vector<cplx>> flow;
  FixedPointSet fixed;
  std::vector<Trajectory> trajectories;
};

/// |flow| on the grid plus trajectories seeded uniformly on its border.
FlowField flow_field_grid(const StorageCoefficients& c, const GridSpec& grid, const TrajectoryOptions& opt = {});

/// Border seeds, uniformly spaced, `per_side` per edge, corners once.
std::vector<cplx> border_seeds(const GridSpec& grid, int per_side);

// ------------------------------------------------------------- readout dip

struct ResponsePoint {
  double delta_d = 0;
  double delta_p = 0;
  double lorentzian = 0;  // |eps_d|^2 / (kappa_r^2/4 + Delta_d^2)
  double dark = 0;        // ((Delta_p + Delta_d)^2 + kappa_s^2) / (16 |g2|^2)
  double response = 0;    // min of the two
  bool dark_state_exists = false;
  cplx dark_amplitude{};  // (-Delta_p - Delta_d + i kappa_s) e^{2i theta_s} / (4 g2), theta_s = 0
};

ResponsePoint readout_response_at(const DeviceParams& p, const DerivedParams& d, double delta_d, double delta_p);

struct ResponseMap {
  std::vector<double> delta_d;  // columns
  std::vector<double> delta_p;  // rows
  std::vector<std::vector<ResponsePoint>> points;  // [row][col]
};

ResponseMap readout_response(const DeviceParams& p, const DerivedParams& d, const std::vector<double>& delta_d,
                             const std::vector<double>& delta_p);

/// Depth of the dip floor kappa_s^2 / (16 |g2|^2).
double dip_floor(const DeviceParams& p, const DerivedParams& d);

// -------------------------------------------------------------------- CSV

void write_flow_csv(std::ostream& os, const FlowField& f);
void write_trajectories_csv(std::ostream& os, const FlowField& f);
void write_fixed_points_csv(std::ostream& os, const FixedPointSet& f);

}  // namespace catpump::semiclassical
