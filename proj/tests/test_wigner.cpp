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

#include "catpump/wigner.hpp"
#include "support.hpp"

using namespace catpump;
using testsupport::random_density;
using testsupport::random_vector;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

FockSpace osc(int n) { return FockSpace::single("storage", n); }

// Analytic Wigner function of the Fock state |n>.
double fock_wigner(int n, cplx a) {
  const double x = std::norm(a);
  return (2 / pi) * (n % 2 ? -1.0 : 1.0) * std::exp(-2 * x) * std::laguerre(n, 4 * x);
}

// Even cat with real amplitude a0, from the two Gaussians and the fringe term.
double even_cat_wigner(double a0, cplx a) {
  const double n2 = 1.0 / (2.0 * (1.0 + std::exp(-2 * a0 * a0)));
  return n2 * (2 / pi) *
         (std::exp(-2 * std::norm(a - a0)) + std::exp(-2 * std::norm(a + a0)) +
          2 * std::exp(-2 * std::norm(a)) * std::cos(4 * a0 * a.imag()));
}

double riemann_sum(const TomographyGrid& g, double step) {
  double s = 0;
  for (double v : g.values) s += v;
  return s * step * step;
}

}  // namespace

TEST_CASE("Wigner anchors") {
  const auto vac = wigner(fock_state(osc(20), "storage", 0), {cplx(0.0)});
  CHECK(std::abs(vac.values[0] - 2 / pi) < 1e-9);
  const auto one = wigner(fock_state(osc(20), "storage", 1), {cplx(0.0)});
  CHECK(std::abs(one.values[0] + 2 / pi) < 1e-9);
}

TEST_CASE("Wigner functions against closed forms") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<cplx> pts;
  for (int i = 0; i < 60; ++i) pts.emplace_back(u(rng), u(rng));

  for (int n : {0, 1, 2, 5, 9}) {
    const auto g = wigner(fock_state(osc(40), "storage", n), pts);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(g.values[i] - fock_wigner(n, pts[i])) < 1e-10);
  }
  const cplx beta(0.7, -1.1);
  const auto coh = wigner(coherent_state(osc(40), "storage", beta), pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(std::abs(coh.values[i] - (2 / pi) * std::exp(-2 * std::norm(pts[i] - beta))) < 1e-10);

  const auto cat = wigner(cat_state(osc(40), "storage", 2.0, +1), pts);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(cat.values[i] - even_cat_wigner(2.0, pts[i])) < 1e-10);

  // Fringes along the imaginary axis: maxima pi/4 apart, W(0) = 2/pi.
  std::vector<cplx> axis{0.0, cplx(0, pi / 8), cplx(0, pi / 4), cplx(0, pi / 2)};
  const auto f = wigner(cat_state(osc(40), "storage", 2.0, +1), axis);
  CHECK(std::abs(f.values[0] - 2 / pi) < 1e-9);
  CHECK(f.values[1] < 0.0);
  CHECK(f.values[2] > 0.0);
  CHECK(f.values[3] > 0.0);
}

TEST_CASE("Wigner bound and normalization") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 30; ++k) {
    const int n = 4 + k % 9;
    const auto s = QuantumState::mixed(osc(n), random_density(rng, n, 1 + k % 3));
    std::vector<cplx> pts;
    for (int i = 0; i < 40; ++i) pts.emplace_back(u(rng), u(rng));
    for (double v : wigner(s, pts, inf).values) CHECK(std::abs(v) <= 2 / pi + 1e-9);
  }

  const auto grid = default_grid();
  const double step = 7.0 / 40;
  for (const auto& s : {fock_state(osc(30), "storage", 0), fock_state(osc(30), "storage", 3),
                        cat_state(osc(40), "storage", 2.0, +1), cat_state(osc(40), "storage", cplx(0, 1.5), -1)}) {
    CHECK(std::abs(riemann_sum(wigner(s, grid), step) - 1.0) < 0.02);
  }
}

TEST_CASE("vacuum Wigner cut is a Gaussian of width 1/2") {
  const auto grid = default_grid();
  const auto w = wigner(fock_state(osc(30), "storage", 0), grid);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i].imag()) < 1e-12) {
      x.push_back(grid[i].real());
      y.push_back(w.values[i]);
    }
  REQUIRE(x.size() == 41u);
  const auto fit = fit_gaussian(x, y);
  CHECK(std::abs(fit.sigma - 0.5) < 0.005);
  CHECK(std::abs(fit.center) < 1e-9);
  CHECK(std::abs(fit.amplitude - 2 / pi) < 1e-6);

  // Synthetic data with known parameters.
  std::vector<double> xs, ys;
  for (int i = 0; i < 50; ++i) {
    xs.push_back(-2 + 0.1 * i);
    ys.push_back(1.7 * std::exp(-0.5 * std::pow((xs.back() - 0.3) / 0.42, 2)));
  }
  const auto g = fit_gaussian(xs, ys);
  CHECK(std::abs(g.sigma - 0.42) < 1e-9);
  CHECK(std::abs(g.center - 0.3) < 1e-9);
  CHECK(std::abs(g.amplitude - 1.7) < 1e-9);
  CHECK_THROWS_AS(fit_gaussian({1.0, 2.0}, {1.0, 1.0}), ConfigError);
}

TEST_CASE("Wigner guards") {
  const auto s = fock_state(osc(10), "storage", 0);
  CHECK_THROWS_AS(wigner(s, {cplx(3.3, 0)}), TruncationError);
  CHECK_NOTHROW(wigner(s, {cplx(3.1, 0)}));
  CHECK_NOTHROW(wigner(s, {cplx(10, 0)}, inf));

  FockSpace two({{"readout", 2}, {"storage", 10}});
  const auto t = fock_state(two, "storage", 1);
  CHECK_THROWS_AS(wigner(t, {cplx(0.0)}), SpaceMismatchError);
  CHECK(std::abs(wigner(t, "storage", {cplx(0.0)}).values[0] + 2 / pi) < 1e-12);
  CHECK(std::abs(wigner(t, "readout", {cplx(0.0)}).values[0] - 2 / pi) < 1e-12);
}

TEST_CASE("photon distributions") {
  const auto coh = photon_distribution(coherent_state(osc(40), "storage", 2.0));
  double sum = 0, term = std::exp(-4.0);
  for (int n = 0; n < 40; ++n) {
    CHECK(std::abs(coh[n] - term) < 1e-12);
    sum += coh[n];
    term *= 4.0 / (n + 1);
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);

  const auto cat = photon_distribution(cat_state(osc(40), "storage", cplx(1.2, 1.7), +1));
  for (int n = 1; n < 40; n += 2) CHECK(cat[n] == 0.0);

  std::mt19937_64 rng(2);
  const auto mixed = photon_distribution(QuantumState::mixed(osc(9), random_density(rng, 9, 3)));
  double total = 0;
  for (double p : mixed) {
    CHECK(p >= -1e-12);
    total += p;
  }
  CHECK(std::abs(total - 1.0) < 1e-9);

  FockSpace two({{"readout", 3}, {"storage", 6}});
  const auto p = photon_distribution(fock_state(two, "storage", 4), "storage");
  CHECK(p.size() == 6u);
  CHECK(p[4] == doctest::Approx(1.0));
}

TEST_CASE("parity measurement identity") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_real_distribution<double> pr(0.0, 0.3);
  for (int k = 0; k < 40; ++k) {
    const int n = 3 + k % 6;
    const DenseMatrix rho = QuantumState::pure(osc(n), random_vector(rng, n)).density();
    const cplx a(u(rng), u(rng));
    const double parity = (pi / 2) * wigner_at(rho, a);

    MeasurementModel perfect;
    const auto m0 = simulate_parity_measurement(rho, a, perfect);
    CHECK(m0.contrast == 1.0);
    CHECK(std::abs(m0.delta - parity) < 1e-10);

    // A cutoff far above the displaced support changes nothing.
    MeasurementModel cut;
    cut.n_max = 80;
    CHECK(std::abs(simulate_parity_measurement(rho, a, cut).delta - parity) < 1e-10);

    MeasurementModel noisy;
    noisy.confusion = {pr(rng), pr(rng)};
    const auto m1 = simulate_parity_measurement(rho, a, noisy);
    CHECK(std::abs(m1.delta - noisy.contrast(a) * parity) < 1e-10);
    // The plain difference of the two maps is twice C P.
    CHECK(std::abs((m1.sigma_plus - m1.sigma_minus) - 2 * m1.contrast * parity) < 1e-10);
  }

  MeasurementModel blind;
  blind.confusion = {0.5, 0.5};
  const DenseMatrix vac = fock_state(osc(5), "storage", 0).density();
  CHECK(blind.contrast(0.3) == 0.0);
  CHECK(std::abs(simulate_parity_measurement(vac, 0.3, blind).delta) < 1e-15);
  CHECK_THROWS_AS(measure_parity_grid(fock_state(osc(5), "storage", 0), {cplx(0.3)}, blind, 1), ConfigError);
}

TEST_CASE("finite pulse selectivity only shifts both branches") {
  const int big = 160;
  const auto cat = cat_state(osc(40), "storage", 2.0, +1);
  const DenseMatrix rho = cat.density();
  MeasurementModel m;
  m.n_max = 6;
  m.confusion = {0.08, 0.15};
  const double gg = 1 - m.confusion.e_given_g, ee = 1 - m.confusion.g_given_e;
  const double eg = m.confusion.e_given_g, ge = m.confusion.g_given_e;
  for (cplx a : {cplx(0.0), cplx(0.4, -0.2), cplx(-1.0, 0.7), cplx(2.0, 0.0)}) {
    // Displace in a much larger space and split the populations by hand.
    StateVector psi = StateVector::Zero(big);
    psi.head(40) = cat.vector();
    const StateVector shifted = displacement_block(big, -a) * psi;
    double even = 0, odd = 0, above = 0;
    for (int n = 0; n < big; ++n) {
      const double p = std::norm(shifted(n));
      (n > m.n_max ? above : (n % 2 ? odd : even)) += p;
    }
    const double plus = even * (ee - ge) - odd * (gg - eg) + above * (eg - gg);
    const double minus = even * (eg - gg) - odd * (ge - ee) + above * (eg - gg);
    const auto r = simulate_parity_measurement(rho, a, m);
    CHECK(std::abs(r.sigma_plus - plus) < 1e-10);
    CHECK(std::abs(r.sigma_minus - minus) < 1e-10);
    CHECK(std::abs(r.delta - m.contrast(a) * (even - odd)) < 1e-10);
    CHECK(above > 1e-4);
  }
}

TEST_CASE("alpha-dependent confusion and shot noise") {
  MeasurementModel m;
  m.confusion_at = [](double r) { return Confusion{0.02 + 0.01 * r, 0.05 + 0.02 * r}; };
  CHECK(std::abs(m.contrast(cplx(0, 2)) - 0.5 * (0.96 + 0.91 - 0.04 - 0.09)) < 1e-15);

  const auto cat = cat_state(osc(30), "storage", 1.5, +1);
  const DenseMatrix rho = cat.density();
  const cplx a(0.3, 0.1);
  const auto exact = simulate_parity_measurement(rho, a, m);
  m.shots = 10000;
  CHECK_THROWS_AS(simulate_parity_measurement(rho, a, m, nullptr), ConfigError);
  std::mt19937_64 rng(99);
  double mean = 0, sq = 0;
  const int reps = 400;
  for (int i = 0; i < reps; ++i) {
    const double d = simulate_parity_measurement(rho, a, m, &rng).delta;
    mean += d;
    sq += d * d;
  }
  mean /= reps;
  const double var = sq / reps - mean * mean;
  // Two independent binomials, each contributing p(1-p)/shots to (sigma/2)^2.
  auto pe = [](double s) { return 0.5 * (1 + s); };
  const double expected_var =
      (pe(exact.sigma_plus) * (1 - pe(exact.sigma_plus)) + pe(exact.sigma_minus) * (1 - pe(exact.sigma_minus))) /
      m.shots;
  CHECK(std::abs(mean - exact.delta) < 5 * std::sqrt(expected_var / reps));
  CHECK(var == doctest::Approx(expected_var).epsilon(0.25));

  // Grids are reproducible for a seed, whatever the thread count.
  const auto pts = square_grid(-1, 1, 5, -1, 1, 5);
  const auto g1 = measure_parity_grid(cat, pts, m, 7);
  const auto g2 = measure_parity_grid(cat, pts, m, 7);
  const auto g3 = measure_parity_grid(cat, pts, m, 8);
  CHECK(g1.values == g2.values);
  CHECK(g1.values != g3.values);
  CHECK(g1.kind == GridKind::parity);
  CHECK(g1.shots[0] == 10000);
}

TEST_CASE("projection onto density matrices") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    const int n = 2 + k % 7;
    const DenseMatrix h = testsupport::random_hermitian(rng, n);
    const DenseMatrix p = project_density(h);
    CHECK(std::abs(p.trace() - 1.0) < 1e-12);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(p);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    CHECK((project_density(p) - p).norm() < 1e-12);
    const DenseMatrix rho = random_density(rng, n, 2);
    CHECK((project_density(rho) - rho).norm() < 1e-12);
  }
}

TEST_CASE("reconstruction round trips") {
  const auto grid = default_grid();

  SUBCASE("coherent state") {
    const auto s = coherent_state(osc(12), "storage", cplx(0.8, -0.5));
    const auto w = wigner(s, grid, inf);
    const auto r = reconstruct_density_matrix(w, 12, s.density());
    CHECK(r.converged);
    CHECK(*r.fidelity > 0.999);
    CHECK(r.residual < 1e-6);
    CHECK(r.warnings.empty());
  }
  SUBCASE("random rank-2 states") {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 3; ++k) {
      const auto s = QuantumState::mixed(osc(10), random_density(rng, 10, 2));
      const auto r = reconstruct_density_matrix(wigner(s, grid, inf), 10, s.density());
      CHECK(*r.fidelity > 0.99);
    }
  }
  SUBCASE("Gaussian noise on the Wigner values") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int k = 0; k < 3; ++k) {
      const auto s = QuantumState::mixed(osc(10), random_density(rng, 10, 2));
      auto w = wigner(s, grid, inf);
      for (double& v : w.values) v += noise(rng);
      const auto r = reconstruct_density_matrix(w, 10, s.density());
      CHECK(*r.fidelity > 0.95);
      CHECK(r.residual > 0.008);
      CHECK(r.residual < 0.012);
      const auto p0 = photon_distribution(s);
      const auto p1 = photon_distribution(r.state);
      for (int n = 0; n < 10; ++n) CHECK(std::abs(p0[n] - p1[n]) < 0.02);
    }
  }
  SUBCASE("measured parity grid") {
    const auto s = cat_state(osc(12), "storage", 1.2, +1);
    MeasurementModel m;
    m.n_max = 90;
    m.confusion = {0.05, 0.1};
    const auto g = measure_parity_grid(s, grid, m, 3);
    const auto r = reconstruct_density_matrix(g, 12, s.density());
    CHECK(*r.fidelity > 0.999);
  }
  SUBCASE("underdetermined grid") {
    const auto s = fock_state(osc(8), "storage", 1);
    const auto r = reconstruct_density_matrix(wigner(s, square_grid(-1, 1, 3, -1, 1, 3)), 8);
    CHECK_FALSE(r.warnings.empty());
    CHECK_FALSE(r.fidelity.has_value());
  }
  SUBCASE("iteration limit") {
    const auto s = fock_state(osc(8), "storage", 2);
    ReconstructionOptions opt;
    opt.max_iterations = 3;
    CHECK_THROWS_AS(reconstruct_density_matrix(wigner(s, grid, inf), 8, std::nullopt, opt), ConvergenceError);
    opt.throw_on_nonconvergence = false;
    const auto r = reconstruct_density_matrix(wigner(s, grid, inf), 8, std::nullopt, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
  }
}

TEST_CASE("grid CSV round trip") {
  MeasurementModel m;
  m.n_max = 9;
  m.confusion = {0.01, 0.03};
  m.shots = 200;
  const auto g = measure_parity_grid(cat_state(osc(20), "storage", 1.0, -1), square_grid(-2, 2, 7, -1, 1, 3), m, 4);
  std::stringstream ss;
  write_grid_csv(ss, g);
  const auto back = read_grid_csv(ss);
  CHECK(back.kind == GridKind::parity);
  CHECK(back.alphas == g.alphas);
  CHECK(back.values == g.values);
  CHECK(back.shots == g.shots);
  CHECK(back.meta == g.meta);

  std::stringstream bad("# kind=banana\nre_alpha,im_alpha,value,shots\n0,0,1,0\n");
  CHECK_THROWS_AS(read_grid_csv(bad), ConfigError);
}
