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
#include <random>

#include "catpump/device.hpp"
#include "catpump/semiclassical.hpp"

using namespace catpump;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("pump amplitude") {
  DeviceParams p = DeviceParams::published();
  p.eps_p = 0.0;
  CHECK(pump_amplitude(p) == cplx(0.0));
  p.eps_p = cplx(3e6, -1e6);
  p.omega_p = p.omega_r;
  CHECK(std::abs(pump_amplitude(p) - (-2.0 * kI * p.eps_p / p.kappa_r())) < 1e-15);
  // Calibration inverts the formula at the published detuning.
  DeviceParams q = DeviceParams::published();
  CHECK(std::abs(std::norm(pump_amplitude(q)) - 1.2) < 1e-12);
  CHECK(std::abs(pump_amplitude(q).imag()) < 1e-12);
}

TEST_CASE("published parameter pipeline") {
  const auto p = DeviceParams::published();
  const auto d = derive_params(p);
  CHECK(rel(std::abs(d.g2) / kTwoPi, 111e3) < 0.02);
  CHECK(std::abs(d.kappa2 / p.kappa_s() - 1.0) < 0.05);
  CHECK(rel(d.kappa2, 5.03e4) < 2e-3);
  CHECK(std::abs(d.kappa2 / p.kappa_s() - 1.01) < 0.01);
  CHECK(rel(d.kappa2, 4.0 * std::norm(d.g2) / p.kappa_r()) < 1e-12);
  CHECK(std::abs(std::norm(d.alpha_inf) - 4.0) < 1e-9);
  CHECK(d.alpha_inf.real() > 0.0);
  CHECK(std::abs(d.alpha_inf.imag()) < 1e-9);
}

TEST_CASE("no pump means no conversion") {
  DeviceParams p = DeviceParams::published();
  p.eps_p = 0.0;
  const auto d = derive_params(p);
  CHECK(d.xi_p == cplx(0.0));
  CHECK(d.g2 == cplx(0.0));
  CHECK(d.eps2 == cplx(0.0));
  CHECK(d.kappa2 == 0.0);
  CHECK(d.alpha_inf == cplx(0.0));
  CHECK_THROWS_AS(calibrate_drive(p, 4.0), ConfigError);
}

TEST_CASE("two published kappa2 forms agree for arbitrary inputs") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    DeviceParams p = DeviceParams::published();
    p.chi_rs = hz(1e3 + 1e6 * u(rng));
    p.T1_r = 1e-9 + 1e-6 * u(rng);
    p.eps_p = cplx(u(rng) - 0.5, u(rng) - 0.5) * 1e8;
    p.omega_p = p.omega_r + hz(20e6 * (u(rng) - 0.5));
    const auto d = derive_params(p);
    CHECK(rel(d.kappa2, 4.0 * std::norm(d.g2) / p.kappa_r()) < 1e-12);
    CHECK(std::abs(d.g2 - 0.5 * p.chi_rs * std::conj(d.xi_p)) <= 1e-12 * std::abs(d.g2));
  }
}

TEST_CASE("drive calibration inverts the fixed-point amplitude") {
  DeviceParams p = DeviceParams::published();
  p.chi_ss = 0.0;
  p.T1_s = 1.0 / 5e4;
  // chi_rs chosen so that kappa2 = 5e4 exactly at |xi_p|^2 = 1.2.
  p.chi_rs = std::sqrt(5e4 * p.kappa_r() / 1.2);
  p.eps_p = calibrate_pump(p, 1.2);
  p.eps_d = calibrate_drive(p, 4.0);
  const auto d = derive_params(p);
  CHECK(rel(d.kappa2, 5e4) < 1e-12);
  CHECK(rel(std::abs(d.eps2), (4 * 5e4 + 0.5 * 5e4) / 2) < 1e-12);
  CHECK(rel(std::abs(d.eps2), 1.125e5) < 1e-12);
  CHECK(rel(std::norm(d.alpha_inf), 4.0) < 1e-12);

  // Lossless, Kerr-free branch: |alpha_inf|^2 = 2|eps2|/kappa2, and with eps_d
  // and xi_p real and positive alpha_inf = i sqrt(2 eps_d / (xi_p chi_rs)).
  p.T1_s = std::numeric_limits<double>::infinity();
  p.eps_d = 3e6;
  const auto d0 = derive_params(p);
  CHECK(rel(std::norm(d0.alpha_inf), 2 * std::abs(d0.eps2) / d0.kappa2) < 1e-12);
  const cplx main_text = kI * std::sqrt(2.0 * p.eps_d.real() / (d0.xi_p.real() * p.chi_rs));
  CHECK(std::abs(d0.alpha_inf - main_text) < 1e-9 * std::abs(main_text));
}

TEST_CASE("two-mode Hamiltonian") {
  DeviceParams p = DeviceParams::published();
  FockSpace s({{"readout", 3}, {"storage", 18}});
  const int ns = 18;
  auto idx = [ns](int r, int st) { return r * ns + st; };

  SUBCASE("diagonal without couplings") {
    DeviceParams q = p;
    q.eps_p = 0.0;
    q.eps_d = 0.0;
    q.chi_rs = q.chi_rr = q.chi_ss = 0.0;
    q.delta_d = 1.5e5;
    q.delta_p = -0.5e5;
    auto d = derive_params(q);
    DenseMatrix h = build_two_mode_hamiltonian(q, d, s).dense();
    DenseMatrix off = h;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(h(idx(2, 3), idx(2, 3)) - (2 * 1.5e5 + 3 * 0.5 * (1.5e5 - 0.5e5))) < 1e-9);
  }
  SUBCASE("pair conversion elements") {
    DeviceParams q = p;
    q.eps_p = std::polar(std::abs(p.eps_p), 0.9);  // complex g2
    q.eps_d = 0.0;
    auto d = derive_params(q);
    REQUIRE(std::abs(d.g2.imag()) > 0.1 * std::abs(d.g2));
    DenseMatrix h = build_two_mode_hamiltonian(q, d, s).dense();
    // <2_s 0_r| g2 a_s^dag^2 a_r |0_s 1_r> = sqrt(2) g2, and its transpose carries g2*.
    CHECK(std::abs(h(idx(0, 2), idx(1, 0)) - std::sqrt(2.0) * d.g2) < 1e-9);
    CHECK(std::abs(h(idx(1, 0), idx(0, 2)) - std::sqrt(2.0) * std::conj(d.g2)) < 1e-9);
  }
  SUBCASE("Hermitian for published parameters") {
    auto d = derive_params(p);
    auto h = build_two_mode_hamiltonian(p, d, s);
    CHECK(h.hermitian());
    CHECK(h.hermiticity_defect() < 1e-12);
  }
  SUBCASE("truncation guard") {
    auto d = derive_params(p);
    CHECK_THROWS_AS(build_two_mode_hamiltonian(p, d, FockSpace({{"readout", 3}, {"storage", 15}})), TruncationError);
  }
}

TEST_CASE("frequency matching and Stark shifts") {
  DeviceParams p = DeviceParams::published();
  p.use_tone_frequencies = true;
  p.apply_stark_shifts = false;
  p.omega_d = p.omega_r;
  p.omega_p = 2 * p.omega_s - p.omega_r;
  auto d = derive_params(p);
  CHECK(std::abs(d.delta_d) < 1e-3);
  CHECK(std::abs(d.delta_p) < 1e-3);

  p.apply_stark_shifts = true;
  d = derive_params(p);
  const double x2 = std::norm(d.xi_p);
  CHECK(std::abs(d.delta_d - (-2 * p.chi_rr * x2)) < 1e-3);
  CHECK(std::abs(0.5 * (d.delta_p + d.delta_d) - (-p.chi_rs * x2)) < 1e-3);

  for (double xi : {0.1, 0.5, 1.0, 2.0}) {
    auto st = stark_shifts(p, xi);
    CHECK(rel(st.q / st.r, p.chi_qr / (2 * p.chi_rr)) < 1e-14);
    CHECK(rel(st.q / st.s, p.chi_qr / p.chi_rs) < 1e-14);
    CHECK(rel(st.q, -p.chi_qr * xi * xi) < 1e-14);
  }
}

TEST_CASE("Kerr coefficients from the junction expansion") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 0.4);
  for (int k = 0; k < 100; ++k) {
    const double ej = hz(20e9);
    const auto c = kerr_from_junction(ej, u(rng), u(rng), u(rng));
    CHECK(rel(c.qs * c.qs / (4 * c.qq), c.ss) < 1e-12);
    CHECK(rel(c.qr, 2 * std::sqrt(c.qq * c.rr)) < 1e-12);
    CHECK(rel(c.rs, 2 * std::sqrt(c.rr * c.ss)) < 1e-12);
  }
  const auto z = kerr_from_junction(1e10, 0.3, 0.1, 0.0);
  CHECK(z.ss == 0.0);
  CHECK(z.qs == 0.0);
  CHECK(z.rs == 0.0);

  const auto p = DeviceParams::published();
  CHECK(std::abs(to_hz(storage_kerr_estimate(p)) - 4.8e3) < 0.05e3);
  CHECK(geometric_mismatch(p) > 0.0);
}

TEST_CASE("calibration bounds and number splitting") {
  const auto p = DeviceParams::published();
  const auto r = calibration_bounds(p, 1.0 / 0.23e-6);
  CHECK(std::abs(r.storage_thermal_bound - 0.048) < 1e-3);
  CHECK(std::abs(r.storage_thermal_bound - 0.05) < 3e-3);
  CHECK(std::abs(r.readout_thermal_bound - 0.025) < 1e-12);
  CHECK(calibration_bounds(p).storage_thermal_bound == r.storage_thermal_bound);
  CHECK(number_splitting_frequency(p, 0) == to_hz(p.omega_q));
  CHECK(std::abs(number_splitting_frequency(p, 3) - (4.9007e9 - 3 * 1.585e6 + 9 * 5e3)) < 1e-3);
}

TEST_CASE("configuration files") {
  const std::string text = R"(
# measured values
omega_r = 7.152 GHz
T1_s    = 20 us      # storage lifetime
chi_ss  = 4.8 kHz
nth_s   = 0.01
eps_p   = (1e6, -2.5e5) Hz
apply_stark_shifts = false
)";
  auto kv = parse_key_values(text, "test");
  REQUIRE(kv.size() == 6);
  CHECK(kv["T1_s"].value == "20");
  CHECK(kv["T1_s"].unit == "us");
  CHECK(kv["eps_p"].value == "(1e6, -2.5e5)");
  auto p = resolve_device_params(kv);
  CHECK(rel(p.omega_r, hz(7.152e9)) < 1e-15);
  CHECK(rel(p.T1_s, 20e-6) < 1e-15);
  CHECK(rel(p.chi_ss, hz(4.8e3)) < 1e-15);
  CHECK(p.nth_s == 0.01);
  CHECK(std::abs(p.eps_p - hz(1.0) * cplx(1e6, -2.5e5)) < 1e-6);
  CHECK_FALSE(p.apply_stark_shifts);
  // eps_d was not given: it is calibrated to |alpha_inf|^2 = 4 with the new values.
  CHECK(std::abs(std::norm(derive_params(p).alpha_inf) - 4.0) < 1e-9);

  CHECK_THROWS_AS(parse_key_values("omega_r 7 GHz\n"), ConfigError);
  CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(resolve_device_params(parse_key_values("omega_r = 7 parsec\n")), ConfigError);
  CHECK_THROWS_AS(resolve_device_params(parse_key_values("chi_rs = abc Hz\n")), ConfigError);
  CHECK_THROWS_AS(resolve_device_params(parse_key_values("nth_s = 1.0\n")), ConfigError);
  CHECK_THROWS_AS(resolve_device_params(parse_key_values("omega_r = (1,2) Hz\n")), ConfigError);
  try {
    resolve_device_params(parse_key_values("\n\nchi_ss = 1 light-year\n", "f"));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  auto [key, val] = parse_override("chi_ss=0");
  CHECK(key == "chi_ss");
  CHECK(val.value == "0");
  auto [key2, val2] = parse_override("T1_s=30 us");
  CHECK(key2 == "T1_s");
  CHECK(val2.unit == "us");
  CHECK_THROWS_AS(parse_override("novalue"), ConfigError);
}

TEST_CASE("resolved parameters round-trip through their description") {
  KeyValueMap none;
  const auto p = resolve_device_params(none);
  const auto q = DeviceParams::published();
  CHECK(p.eps_d == q.eps_d);
  CHECK(p.eps_p == q.eps_p);

  std::string text;
  for (const auto& [k, v] : describe_device(p)) text += k + " = " + v + "\n";
  const auto r = resolve_device_params(parse_key_values(text));
  CHECK(rel(r.chi_rs, p.chi_rs) < 1e-15);
  CHECK(std::abs(r.eps_d - p.eps_d) < 1e-9 * std::abs(p.eps_d));
  CHECK(rel(r.T1_r, p.T1_r) < 1e-15);

  // Without a pump the drive stays at zero instead of failing.
  const auto off = resolve_device_params(parse_key_values("xi_p_sq = 0\n"));
  CHECK(off.eps_d == cplx(0.0));
  CHECK(derive_params(off).g2 == cplx(0.0));
}
