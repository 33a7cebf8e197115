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

#include "catpump/semiclassical.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "catpump/csv.hpp"
#include "catpump/ode.hpp"

namespace catpump::semiclassical {

using std::numbers::pi;

cplx flow(cplx alpha, const StorageCoefficients& c) {
  const cplx k2(c.kappa2, -c.chi_ss);
  return -2.0 * kI * c.eps2 * std::conj(alpha) - k2 * std::norm(alpha) * alpha - 0.5 * c.kappa_s * alpha;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::saddle: return "saddle";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "marginal";
}

Eigen::Matrix2d flow_jacobian(cplx alpha, const StorageCoefficients& c) {
  const double h = 1e-6 * std::max(1.0, std::abs(alpha));
  const cplx dx = (flow(alpha + h, c) - flow(alpha - h, c)) / (2 * h);
  const cplx dy = (flow(alpha + kI * h, c) - flow(alpha - kI * h, c)) / (2 * h);
  Eigen::Matrix2d j;
  j << dx.real(), dy.real(), dx.imag(), dy.imag();
  return j;
}

namespace {

FixedPoint classify(cplx alpha, const StorageCoefficients& c) {
  FixedPoint fp;
  fp.alpha = alpha;
  const Eigen::Matrix2d j = flow_jacobian(alpha, c);
  Eigen::EigenSolver<Eigen::Matrix2d> es(j, false);
  fp.jacobian_eigs[0] = es.eigenvalues()[0];
  fp.jacobian_eigs[1] = es.eigenvalues()[1];
  const double scale = std::max({j.cwiseAbs().maxCoeff(), c.kappa_s, 1e-300});
  const double tol = 1e-7 * scale;
  int neg = 0, pos = 0;
  for (const auto& e : fp.jacobian_eigs) {
    if (e.real() < -tol) ++neg;
    else if (e.real() > tol) ++pos;
  }
  if (neg == 2) fp.stability = Stability::stable;
  else if (pos == 2) fp.stability = Stability::unstable;
  else if (neg == 1 && pos == 1) fp.stability = Stability::saddle;
  else fp.stability = Stability::marginal;
  return fp;
}

}  // namespace

FixedPointSet fixed_points(const StorageCoefficients& c) {
  FixedPointSet out;
  const cplx k2(c.kappa2, -c.chi_ss);
  out.r2 = std::abs(k2);
  out.phi2 = out.r2 > 0 ? std::arg(k2) : 0.0;
  out.threshold = 0.25 * c.kappa_s;
  const double e = std::abs(c.eps2);
  const double ks = c.kappa_s;
  const double b = out.r2 * ks * std::cos(out.phi2);
  const double a = out.r2 * out.r2;
  const double c0 = 0.25 * ks * ks - 4.0 * e * e;
  out.discriminant = b * b - 4.0 * a * c0;
  out.points.push_back(classify(0.0, c));

  // Nonzero roots need a positive solution of a R^2 + b R + c0 = 0 in R = r^2.
  if (a > 0.0 && out.discriminant >= 0.0 && e > out.threshold) {
    const double r_sq = (-b + std::sqrt(out.discriminant)) / (2.0 * a);
    if (r_sq > 0.0) {
      out.above_threshold = true;
      out.r_inf = std::sqrt(r_sq);
      out.phi_k = std::atan2(r_sq * out.r2 * std::sin(out.phi2), r_sq * out.r2 * std::cos(out.phi2) + 0.5 * ks);
      const double theta2 = std::arg(c.eps2);
      out.theta_minus = 0.5 * theta2 + 0.75 * pi - 0.5 * out.phi_k;
      out.theta_plus = out.theta_minus + pi;
      out.points.push_back(classify(std::polar(out.r_inf, out.theta_minus), c));
      out.points.push_back(classify(std::polar(out.r_inf, out.theta_plus), c));
    }
  }
  return out;
}

// ------------------------------------------------------------ trajectories

Trajectory integrate_trajectory(cplx seed, const StorageCoefficients& c, const FixedPointSet& fps,
                                const TrajectoryOptions& opt) {
  Trajectory tr;
  tr.seed = seed;
  const double scale = std::max(c.kappa2, c.kappa_s) * std::pow(std::max(fps.r_inf, 1.0), 3);
  const double stop = opt.flow_tolerance * scale;

  Eigen::Vector2d y(seed.real(), seed.imag());
  auto rhs = [&c](double, const Eigen::Vector2d& v, Eigen::Vector2d& dv) {
    const cplx f = flow(cplx(v[0], v[1]), c);
    dv[0] = f.real();
    dv[1] = f.imag();
  };
  double prev_arg = std::arg(seed);
  long step = 0;
  tr.times.push_back(0.0);
  tr.points.push_back(seed);
  auto observer = [&](double t, const Eigen::Vector2d& v) {
    const cplx a(v[0], v[1]);
    if (std::abs(a) > 0.0) {
      const double ar = std::arg(a);
      double d = ar - prev_arg;
      while (d > pi) d -= 2 * pi;
      while (d < -pi) d += 2 * pi;
      tr.winding += d;
      prev_arg = ar;
    }
    const bool done = std::abs(flow(a, c)) < stop;
    if (++step % std::max(opt.record_every, 1) == 0 || done) {
      tr.times.push_back(t);
      tr.points.push_back(a);
    }
    return !done;
  };
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  ode::Stats stats;
  double hint = 0.0;
  ode::integrate(rhs, y, 0.0, opt.t_max, o, stats, observer, hint);
  const cplx end(y[0], y[1]);
  if (tr.points.back() != end) {
    tr.times.push_back(opt.t_max);
    tr.points.push_back(end);
  }
  tr.converged = std::abs(flow(end, c)) < stop;
  tr.endpoint_distance = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < fps.points.size(); ++k) {
    const double dist = std::abs(end - fps.points[k].alpha);
    if (dist < tr.endpoint_distance) {
      tr.endpoint_distance = dist;
      if (dist < 1e-3) tr.fixed_point = static_cast<int>(k);
    }
  }
  return tr;
}

std::vector<cplx> border_seeds(const GridSpec& g, int per_side) {
  std::vector<cplx> seeds;
  if (per_side < 1) return seeds;
  const cplx corners[4] = {{g.re_min, g.im_min}, {g.re_max, g.im_min}, {g.re_max, g.im_max}, {g.re_min, g.im_max}};
  for (int side = 0; side < 4; ++side) {
    const cplx a = corners[side], b = corners[(side + 1) % 4];
    for (int k = 0; k < per_side; ++k) seeds.push_back(a + (b - a) * (static_cast<double>(k) / per_side));
  }
  return seeds;
}

FlowField flow_field_grid(const StorageCoefficients& c, const GridSpec& grid, const TrajectoryOptions& opt) {
  FlowField f;
  f.grid = grid;
  f.fixed = fixed_points(c);
  f.flow.assign(grid.n_im, std::vector<cplx>(grid.n_re));
  for (int j = 0; j < grid.n_im; ++j)
    for (int i = 0; i < grid.n_re; ++i) f.flow[j][i] = flow(cplx(grid.re_at(i), grid.im_at(j)), c);
  for (cplx s : border_seeds(grid, opt.seeds_per_side)) f.trajectories.push_back(integrate_trajectory(s, c, f.fixed, opt));
  return f;
}

// ------------------------------------------------------------- readout dip

ResponsePoint readout_response_at(const DeviceParams& p, const DerivedParams& d, double delta_d, double delta_p) {
  ResponsePoint r;
  r.delta_d = delta_d;
  r.delta_p = delta_p;
  const double kr = p.kappa_r(), ks = p.kappa_s();
  const double sum = delta_p + delta_d;
  const double g = std::abs(d.g2);
  r.lorentzian = std::norm(p.eps_d) / (0.25 * kr * kr + delta_d * delta_d);
  if (g > 0.0) {
    r.dark = (sum * sum + ks * ks) / (16.0 * g * g);
    r.dark_amplitude = cplx(-sum, ks) / (4.0 * d.g2);
    const double lhs = std::abs(cplx(delta_d, -0.5 * kr)) * std::abs(cplx(sum, -ks));
    r.dark_state_exists = lhs <= 4.0 * g * std::abs(p.eps_d);
  } else {
    r.dark = std::numeric_limits<double>::infinity();
  }
  r.response = std::min(r.lorentzian, r.dark);
  return r;
}

ResponseMap readout_response(const DeviceParams& p, const DerivedParams& d, const std::vector<double>& delta_d,
                             const std::vector<double>& delta_p) {
  ResponseMap m;
  m.delta_d = delta_d;
  m.delta_p = delta_p;
  m.points.resize(delta_p.size());
  for (std::size_t j = 0; j < delta_p.size(); ++j) {
    m.points[j].reserve(delta_d.size());
    for (double dd : delta_d) m.points[j].push_back(readout_response_at(p, d, dd, delta_p[j]));
  }
  return m;
}

double dip_floor(const DeviceParams& p, const DerivedParams& d) {
  const double ks = p.kappa_s();
  return ks * ks / (16.0 * std::norm(d.g2));
}

// -------------------------------------------------------------------- CSV

void write_flow_csv(std::ostream& os, const FlowField& f) {
  csv::write_meta(os, {{"kind", "flow"},
                       {"n_re", std::to_string(f.grid.n_re)},
                       {"n_im", std::to_string(f.grid.n_im)},
                       {"re_range", csv::num(f.grid.re_min) + ":" + csv::num(f.grid.re_max)},
                       {"im_range", csv::num(f.grid.im_min) + ":" + csv::num(f.grid.im_max)},
                       {"units", "flow in 1/s"}});
  csv::write_row(os, {"row", "col", "re_alpha", "im_alpha", "re_flow", "im_flow", "abs_flow"});
  for (int j = 0; j < f.grid.n_im; ++j)
    for (int i = 0; i < f.grid.n_re; ++i) {
      const cplx v = f.flow[j][i];
      csv::write_row(os, {std::to_string(j), std::to_string(i), csv::num(f.grid.re_at(i)), csv::num(f.grid.im_at(j)),
                          csv::num(v.real()), csv::num(v.imag()), csv::num(std::abs(v))});
    }
}

void write_trajectories_csv(std::ostream& os, const FlowField& f) {
  csv::write_meta(os, {{"kind", "trajectories"}, {"count", std::to_string(f.trajectories.size())}});
  csv::write_row(os, {"trajectory", "point", "t_us", "re_alpha", "im_alpha", "converged", "fixed_point", "winding"});
  for (std::size_t k = 0; k < f.trajectories.size(); ++k) {
    const auto& tr = f.trajectories[k];
    for (std::size_t i = 0; i < tr.points.size(); ++i)
      csv::write_row(os, {std::to_string(k), std::to_string(i), csv::num(tr.times[i] * 1e6),
                          csv::num(tr.points[i].real()), csv::num(tr.points[i].imag()), tr.converged ? "1" : "0",
                          std::to_string(tr.fixed_point), csv::num(tr.winding)});
  }
}

void write_fixed_points_csv(std::ostream& os, const FixedPointSet& f) {
  csv::write_meta(os, {{"kind", "fixed_points"},
                       {"r_inf", csv::num(f.r_inf)},
                       {"theta_minus", csv::num(f.theta_minus)},
                       {"theta_plus", csv::num(f.theta_plus)},
                       {"phi_k", csv::num(f.phi_k)},
                       {"r2", csv::num(f.r2)},
                       {"phi2", csv::num(f.phi2)},
                       {"threshold", csv::num(f.threshold)},
                       {"above_threshold", f.above_threshold ? "1" : "0"}});
  csv::write_row(os, {"index", "re_alpha", "im_alpha", "stable", "saddle", "eig1_re", "eig1_im", "eig2_re", "eig2_im"});
  for (std::size_t k = 0; k < f.points.size(); ++k) {
    const auto& p = f.points[k];
    csv::write_row(os, {std::to_string(k), csv::num(p.alpha.real()), csv::num(p.alpha.imag()),
                        p.stability == Stability::stable ? "1" : "0", p.stability == Stability::saddle ? "1" : "0",
                        csv::num(p.jacobian_eigs[0].real()), csv::num(p.jacobian_eigs[0].imag()),
                        csv::num(p.jacobian_eigs[1].real()), csv::num(p.jacobian_eigs[1].imag())});
  }
}

}  // namespace catpump::semiclassical
