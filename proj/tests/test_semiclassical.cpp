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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "catpump/csv.hpp"
#include "catpump/semiclassical.hpp"

using namespace catpump;
using namespace catpump::semiclassical;

namespace {

constexpr double pi = std::numbers::pi;

StorageCoefficients plain(double eps2, double kappa2, double chi = 0.0, double kappa_s = 0.0) {
  return {cplx(eps2, 0.0), kappa2, chi, kappa_s};
}

// Newton iteration on the real 2x2 system, starting from `guess`.
cplx newton_root(cplx guess, const StorageCoefficients& c) {
  cplx a = guess;
  for (int it = 0; it < 100; ++it) {
    const cplx f = flow(a, c);
    const double h = 1e-7 * std::max(1.0, std::abs(a));
    const cplx fx = (flow(a + h, c) - flow(a - h, c)) / (2 * h);
    const cplx fy = (flow(a + kI * h, c) - flow(a - kI * h, c)) / (2 * h);
    Eigen::Matrix2d j;
    j << fx.real(), fy.real(), fx.imag(), fy.imag();
    const Eigen::Vector2d step = j.lu().solve(Eigen::Vector2d(f.real(), f.imag()));
    a -= cplx(step[0], step[1]);
    if (step.norm() < 1e-14 * std::max(1.0, std::abs(a))) break;
  }
  return a;
}

}  // namespace

TEST_CASE("flow vanishes at the origin") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    StorageCoefficients c{cplx(u(rng), u(rng)) * 1e5, 1e4 * (1.5 + u(rng)), 1e4 * u(rng), 1e4 * (1 + u(rng))};
    CHECK(flow(0.0, c) == cplx(0.0));
  }
}

TEST_CASE("fixed points of the Kerr-free flow") {
  const double eps2 = 1.125e5, kappa2 = 5e4, kappa_s = 5e4;
  const auto c = plain(eps2, kappa2, 0.0, kappa_s);
  const auto f = fixed_points(c);
  REQUIRE(f.above_threshold);
  REQUIRE(f.points.size() == 3);
  CHECK(std::abs(f.r_inf - 2.0) < 1e-12);
  CHECK(std::abs(f.r_inf * f.r_inf - (2 * eps2 - kappa_s / 2) / kappa2) < 1e-12);
  // Real positive eps2 puts the pair on the 3pi/4 diagonal.
  CHECK(std::abs(f.theta_minus - 3 * pi / 4) < 1e-12);
  CHECK(std::abs(f.points[1].alpha - std::polar(2.0, 3 * pi / 4)) < 1e-12);
  CHECK(std::abs(f.points[2].alpha + f.points[1].alpha) < 1e-12);
  CHECK(f.points[0].alpha == cplx(0.0));
  CHECK(f.points[0].stability == Stability::saddle);
  CHECK(f.points[1].stability == Stability::stable);
  CHECK(f.points[2].stability == Stability::stable);

  // Vacuum eigenvalues are -kappa_s/2 +- 2|eps2|.
  std::vector<double> ev{f.points[0].jacobian_eigs[0].real(), f.points[0].jacobian_eigs[1].real()};
  std::sort(ev.begin(), ev.end());
  CHECK(std::abs(ev[0] - (-kappa_s / 2 - 2 * eps2)) < 1e-4 * eps2);
  CHECK(std::abs(ev[1] - (-kappa_s / 2 + 2 * eps2)) < 1e-4 * eps2);

  // Lossless limit.
  const auto f0 = fixed_points(plain(eps2, kappa2));
  CHECK(std::abs(f0.r_inf * f0.r_inf - 2 * eps2 / kappa2) < 1e-12);
}

TEST_CASE("analytic roots agree with Newton iteration on random coefficients") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int above = 0;
  for (int k = 0; k < 300; ++k) {
    StorageCoefficients c{std::polar(1e5 * (0.05 + u(rng)), 2 * pi * u(rng)), 1e4 * (0.2 + u(rng)),
                          1e4 * (u(rng) - 0.3) * 2, 1e5 * u(rng)};
    const auto f = fixed_points(c);
    CHECK(f.above_threshold == (std::abs(c.eps2) > c.kappa_s / 4));
    if (!f.above_threshold) {
      CHECK(f.points.size() == 1);
      continue;
    }
    ++above;
    CHECK(std::abs(f.theta_plus - f.theta_minus - pi) < 1e-14);
    for (int i = 1; i <= 2; ++i) {
      const cplx a = f.points[i].alpha;
      const double scale = std::abs(c.eps2) * std::abs(a);
      CHECK(std::abs(flow(a, c)) < 1e-10 * scale);
      const cplx b = newton_root(a * cplx(1.02, 0.01), c);
      CHECK(std::abs(b - a) < 1e-8 * std::abs(a));
      CHECK(std::abs(std::abs(a) - f.r_inf) < 1e-12 * f.r_inf);
    }
  }
  CHECK(above > 100);
}

TEST_CASE("bifurcation at kappa_s / 4") {
  const double kappa_s = 5e4;
  for (double chi : {0.0, 2.5e4}) {
    const auto below = fixed_points(plain(0.99 * kappa_s / 4, 5e4, chi, kappa_s));
    CHECK_FALSE(below.above_threshold);
    CHECK(below.points.size() == 1);
    CHECK(below.points[0].stability == Stability::stable);
    const auto above = fixed_points(plain(1.01 * kappa_s / 4, 5e4, chi, kappa_s));
    CHECK(above.above_threshold);
    CHECK(above.points.size() == 3);
    CHECK(above.points[0].stability == Stability::saddle);
    CHECK(std::abs(above.threshold - kappa_s / 4) < 1e-12);
  }
  const auto far = fixed_points(plain(kappa_s / 8, 5e4, 0.0, kappa_s));
  CHECK(far.points.size() == 1);
  CHECK(far.r_inf == 0.0);
}

TEST_CASE("flow grid minima sit at the fixed points") {
  for (double chi : {0.0, hz(4e3), 2e4}) {
    const auto c = plain(1.125e5, 5e4, chi, 5e4);
    GridSpec g;
    g.n_re = g.n_im = 71;
    TrajectoryOptions topt;
    topt.seeds_per_side = 2;
    const auto field = flow_field_grid(c, g, topt);
    const double dx = (g.re_max - g.re_min) / (g.n_re - 1);
    for (const auto& fp : field.fixed.points) {
      double best = std::numeric_limits<double>::infinity();
      cplx at;
      for (int j = 0; j < g.n_im; ++j)
        for (int i = 0; i < g.n_re; ++i) {
          const cplx a(g.re_at(i), g.im_at(j));
          if (std::abs(a - fp.alpha) > 3 * dx) continue;
          if (std::abs(field.flow[j][i]) < best) {
            best = std::abs(field.flow[j][i]);
            at = a;
          }
        }
      CHECK(std::abs(at - fp.alpha) <= std::sqrt(2.0) * dx + 1e-12);
    }
  }
}

TEST_CASE("trajectories end at fixed points") {
  for (double chi : {0.0, hz(4e3)}) {
    const auto c = plain(1.125e5, 5e4, chi, 5e4);
    const auto field = flow_field_grid(c, GridSpec{});
    REQUIRE(field.trajectories.size() == 4u * 6u);
    int to_vacuum = 0;
    for (const auto& t : field.trajectories) {
      CHECK(t.converged);
      CHECK(t.fixed_point >= 0);
      CHECK(t.endpoint_distance < 1e-3);
      CHECK(t.points.front() == t.seed);
      to_vacuum += t.fixed_point == 0;
    }
    // Only seeds on the stable manifold of the saddle (the corners on the
    // diagonal, without Kerr) may reach the vacuum.
    CHECK(to_vacuum <= 2);
  }
}

TEST_CASE("mirror symmetry without Kerr and winding with it") {
  const auto c0 = plain(1.125e5, 5e4, 0.0, 5e4);
  const auto f0 = fixed_points(c0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.5, 3.5);
  for (int k = 0; k < 10; ++k) {
    const cplx s(u(rng), u(rng));
    const auto a = integrate_trajectory(s, c0, f0);
    const auto b = integrate_trajectory(-s, c0, f0);
    CHECK(std::abs(a.points.back() + b.points.back()) < 1e-6);
    CHECK(a.fixed_point + b.fixed_point == 3);
  }

  // The drive-aligned axis is invariant without Kerr. Seeded on it, the
  // phase never moves; Kerr rotates it.
  const cplx axis = std::polar(3.0, f0.theta_minus);
  const auto straight = integrate_trajectory(axis, c0, f0);
  CHECK(std::abs(straight.winding) < 1e-9);
  const auto ck = plain(1.125e5, 5e4, 2e4, 5e4);
  const auto bent = integrate_trajectory(axis, ck, fixed_points(ck));
  CHECK(std::abs(bent.winding) > 1e-2);
}

TEST_CASE("border seeds") {
  GridSpec g;
  const auto s = border_seeds(g, 6);
  CHECK(s.size() == 24u);
  for (const auto& z : s) {
    const bool on_edge = std::abs(std::abs(z.real()) - 3.5) < 1e-12 || std::abs(std::abs(z.imag()) - 3.5) < 1e-12;
    CHECK(on_edge);
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) CHECK(std::abs(s[i] - s[j]) > 1e-9);
}

TEST_CASE("readout response") {
  DeviceParams p = DeviceParams::published();
  SUBCASE("no conversion gives a Lorentzian") {
    p.eps_p = 0.0;
    const auto d = derive_params(p);
    for (double dd : {-3e6, 0.0, 1e6}) {
      const auto r = readout_response_at(p, d, dd, 2e5);
      const double lor = std::norm(p.eps_d) / (0.25 * p.kappa_r() * p.kappa_r() + dd * dd);
      CHECK(std::abs(r.response - lor) <= 1e-14 * lor);
      CHECK_FALSE(r.dark_state_exists);
    }
  }
  SUBCASE("dip floor") {
    DeviceParams q = p;
    q.chi_rs = 2 * hz(111e3) / std::abs(derive_params(p).xi_p);
    const auto d = derive_params(q);
    CHECK(std::abs(std::abs(d.g2) - hz(111e3)) < 1e-6);
    CHECK(std::abs(dip_floor(q, d) - 3.21e-4) < 0.01e-4);
    const auto r = readout_response_at(q, d, 1e5, -1e5);
    CHECK(std::abs(r.dark - dip_floor(q, d)) < 1e-18);
    CHECK(r.dark_state_exists);
  }
  SUBCASE("dip follows the matching line") {
    const auto d = derive_params(p);
    std::vector<double> dd, dp;
    for (int i = -20; i <= 20; ++i) dd.push_back(hz(0.25e6) * i);
    for (int i = -8; i <= 8; ++i) dp.push_back(hz(0.25e6) * i);
    const auto m = readout_response(p, d, dd, dp);
    REQUIRE(m.points.size() == dp.size());
    for (std::size_t j = 0; j < dp.size(); ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < dd.size(); ++i)
        if (m.points[j][i].response < m.points[j][best].response) best = i;
      CHECK(std::abs(dd[best] + dp[j]) < 1e-6);
      CHECK(m.points[j][best].response == doctest::Approx(dip_floor(p, d)).epsilon(1e-12));
    }
  }
  SUBCASE("existence condition") {
    const auto d = derive_params(p);
    const double kr = p.kappa_r(), ks = p.kappa_s();
    // At Delta = 0 the dark state exists iff kappa_r kappa_s / 2 <= 4 |g2 eps_d|.
    const double need = kr * ks / (8.0 * std::abs(d.g2));
    DeviceParams lo = p, hi = p;
    lo.eps_d = 0.99 * need;
    hi.eps_d = 1.01 * need;
    CHECK_FALSE(readout_response_at(lo, d, 0.0, 0.0).dark_state_exists);
    CHECK(readout_response_at(hi, d, 0.0, 0.0).dark_state_exists);
  }
}

TEST_CASE("fixed point and flow CSV round trip") {
  const auto c = plain(1.125e5, 5e4, hz(4e3), 5e4);
  GridSpec g;
  g.n_re = 9;
  g.n_im = 7;
  const auto field = flow_field_grid(c, g);

  std::stringstream fs;
  write_fixed_points_csv(fs, field.fixed);
  const auto ft = csv::read(fs);
  REQUIRE(ft.rows.size() == 3);
  CHECK(*ft.meta_value("kind") == "fixed_points");
  const int re = ft.column("re_alpha"), im = ft.column("im_alpha");
  for (int k = 0; k < 3; ++k) CHECK(cplx(ft.rows[k][re], ft.rows[k][im]) == field.fixed.points[k].alpha);

  std::stringstream gs;
  write_flow_csv(gs, field);
  const auto gt = csv::read(gs);
  REQUIRE(gt.rows.size() == 63u);
  const int ab = gt.column("abs_flow");
  CHECK(gt.rows[10][ab] == std::abs(field.flow[1][1]));

  std::stringstream ts;
  write_trajectories_csv(ts, field);
  const auto tt = csv::read(ts);
  std::size_t total = 0;
  for (const auto& t : field.trajectories) total += t.points.size();
  CHECK(tt.rows.size() == total);
}
