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

#include "catpump/device.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "catpump/semiclassical.hpp"

namespace catpump {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt(cplx v) {
  if (v.imag() == 0.0) return fmt(v.real());
  return "(" + fmt(v.real()) + "," + fmt(v.imag()) + ")";
}

}  // namespace

void DeviceParams::validate() const {
  auto positive = [](double v, const char* name) {
    // An infinite lifetime switches the corresponding loss off.
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive, got " + fmt(v));
  };
  positive(T1_q, "T1_q");
  positive(T1_s, "T1_s");
  positive(T1_r, "T1_r");
  positive(T2_q, "T2_q");
  positive(T_spec, "T_spec");
  for (auto [v, name] : {std::pair{nth_q, "nth_q"}, {nth_r, "nth_r"}, {nth_s, "nth_s"}}) {
    if (!(v >= 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1), got " + fmt(v));
  }
  for (auto [v, name] : {std::pair{chi_qq, "chi_qq"}, {chi_qr, "chi_qr"}, {chi_qs, "chi_qs"}, {chi_rr, "chi_rr"},
                         {chi_rs, "chi_rs"}, {chi_ss, "chi_ss"}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be non-negative");
  }
}

DeviceParams DeviceParams::published() {
  DeviceParams p;
  p.omega_q = hz(4.9007e9);
  p.omega_r = hz(7.152e9);
  p.omega_s = hz(7.57861e9);
  p.T1_q = 23e-6;
  p.T1_s = 20e-6;
  p.T1_r = 25e-9;
  p.T2_q = 1e-6;
  p.T_spec = 0.23e-6;
  p.nth_q = 0.2;
  p.chi_qq = hz(130e6);
  p.chi_qr = hz(35e6);
  p.chi_qs = hz(1.585e6);
  p.chi_rr = hz(2.14e6);
  p.chi_rs = hz(206e3);
  p.chi_ss = hz(4e3);
  p.chi3_rq = hz(5e3);
  p.omega_p = hz(8.011e9);
  p.omega_d = p.omega_r;
  p.eps_p = calibrate_pump(p, 1.2);
  p.eps_d = calibrate_drive(p, 4.0);
  return p;
}

cplx pump_amplitude(const DeviceParams& p) {
  return -kI * p.eps_p / cplx(0.5 * p.kappa_r(), p.omega_r - p.omega_p);
}

StarkShifts stark_shifts(const DeviceParams& p, cplx xi_p) {
  const double x2 = std::norm(xi_p);
  return {-p.chi_qr * x2, -2.0 * p.chi_rr * x2, -p.chi_rs * x2};
}

DerivedParams derive_params(const DeviceParams& p) {
  DerivedParams d;
  d.xi_p = pump_amplitude(p);
  d.g2 = 0.5 * p.chi_rs * std::conj(d.xi_p);
  d.kappa2 = p.chi_rs * p.chi_rs * std::norm(d.xi_p) / p.kappa_r();
  d.eps2 = -2.0 * kI * d.g2 * p.eps_d / p.kappa_r();
  d.stark = stark_shifts(p, d.xi_p);
  if (p.use_tone_frequencies) {
    const double sr = p.apply_stark_shifts ? d.stark.r : 0.0;
    const double ss = p.apply_stark_shifts ? d.stark.s : 0.0;
    d.delta_d = p.omega_r + sr - p.omega_d;
    d.delta_p = -d.delta_d + 2.0 * (p.omega_s + ss - 0.5 * (p.omega_p + p.omega_d));
  } else {
    d.delta_d = p.delta_d;
    d.delta_p = p.delta_p;
  }
  const auto fps = semiclassical::fixed_points({d.eps2, d.kappa2, p.chi_ss, p.kappa_s()});
  // Of the pair +-alpha_inf report the one in the right half plane (upper
  // half of the imaginary axis when both lie on it).
  if (fps.above_threshold) {
    const cplx a = fps.points[1].alpha;
    const bool flip = a.real() < -1e-12 * std::abs(a) || (std::abs(a.real()) <= 1e-12 * std::abs(a) && a.imag() < 0);
    d.alpha_inf = flip ? -a : a;
  }
  return d;
}

cplx calibrate_pump(const DeviceParams& p, double xi_sq) {
  if (xi_sq < 0.0) throw ConfigError("xi_p_sq must be non-negative");
  // Invert xi_p = -i eps_p / (kappa_r/2 + i (omega_r - omega_p)) for xi_p = sqrt(xi_sq).
  return kI * std::sqrt(xi_sq) * cplx(0.5 * p.kappa_r(), p.omega_r - p.omega_p);
}

cplx calibrate_drive(const DeviceParams& p, double alpha_sq) {
  if (alpha_sq < 0.0) throw ConfigError("alpha_inf_sq must be non-negative");
  if (alpha_sq == 0.0) return 0.0;
  DeviceParams q = p;
  q.eps_d = 0.0;
  const DerivedParams d = derive_params(q);
  if (std::abs(d.g2) == 0.0) throw ConfigError("cannot calibrate the drive without two-photon coupling (g2 = 0)");
  // Fixed point condition: 4 |eps2|^2 = r2^2 R^2 + r2 kappa_s cos(phi2) R + kappa_s^2/4, and the
  // root phase theta- = theta2/2 + 3 pi/4 - phi_K/2 is set to zero.
  const cplx k2 = cplx(d.kappa2, -p.chi_ss);
  const double r2 = std::abs(k2), phi2 = std::arg(k2);
  const double ks = p.kappa_s();
  const double mod_sq = r2 * r2 * alpha_sq * alpha_sq + r2 * ks * std::cos(phi2) * alpha_sq + 0.25 * ks * ks;
  const double eps2_mod = 0.5 * std::sqrt(mod_sq);
  const double phi_k = std::atan2(alpha_sq * r2 * std::sin(phi2), alpha_sq * r2 * std::cos(phi2) + 0.5 * ks);
  // theta- = 0 needs theta2 = phi_K - 3 pi/2; the principal value phi_K + pi/2
  // moves theta- to pi, so the pair still sits on the real axis.
  const double theta2 = phi_k + 0.5 * std::numbers::pi;
  const cplx eps2 = std::polar(eps2_mod, theta2);
  // eps2 = -2i g2 eps_d / kappa_r
  return kI * p.kappa_r() * eps2 / (2.0 * d.g2);
}

Operator build_two_mode_hamiltonian(const DeviceParams& p, const DerivedParams& d, const FockSpace& space,
                                    const std::string& readout, const std::string& storage, double guard) {
  const int ns = space.mode_dim(storage);
  if (std::norm(d.alpha_inf) > guard * ns) {
    std::ostringstream os;
    os << "storage truncation N_s = " << ns << " cannot hold |alpha_inf|^2 = " << std::norm(d.alpha_inf)
       << " (guard " << guard << ")";
    throw TruncationError(os.str());
  }
  const Operator ar = annihilation(space, readout), as = annihilation(space, storage);
  const Operator nr = number(space, readout), ns_op = number(space, storage);
  const Operator ard = ar.adjoint(), asd = as.adjoint();

  Operator h = nr * d.delta_d + ns_op * (0.5 * (d.delta_p + d.delta_d));
  h = h - (nr * ns_op) * p.chi_rs;
  h = h - (ard * ard * ar * ar) * (0.5 * p.chi_rr);
  h = h - (asd * asd * as * as) * (0.5 * p.chi_ss);
  // g2* a_s^2 a_r^dag + eps_d a_r^dag plus their adjoints.
  const Operator drive = (as * as * ard) * std::conj(d.g2) + ard * p.eps_d;
  h = h + drive.plus_adjoint();
  return Operator(space, h.matrix(), true);
}

std::vector<Operator> thermal_loss(const FockSpace& space, const std::string& mode, double kappa, double nth) {
  std::vector<Operator> out;
  const Operator a = annihilation(space, mode);
  if (kappa <= 0.0) return out;
  out.push_back(a * std::sqrt(kappa * (1.0 + nth)));
  if (nth > 0.0) out.push_back(a.adjoint() * std::sqrt(kappa * nth));
  return out;
}

LindbladModel build_two_mode_model(const DeviceParams& p, const DerivedParams& d, const FockSpace& space,
                                   const std::string& readout, const std::string& storage, double guard) {
  Operator h = build_two_mode_hamiltonian(p, d, space, readout, storage, guard);
  std::vector<Operator> c = thermal_loss(space, readout, p.kappa_r(), p.nth_r);
  for (auto& op : thermal_loss(space, storage, p.kappa_s(), p.nth_s)) c.push_back(std::move(op));
  return LindbladModel(std::move(h), std::move(c));
}

KerrMatrix kerr_from_junction(double ej, double phi_q, double phi_r, double phi_s) {
  const double q2 = phi_q * phi_q, r2 = phi_r * phi_r, s2 = phi_s * phi_s;
  KerrMatrix k;
  k.qq = 0.5 * ej * q2 * q2;
  k.rr = 0.5 * ej * r2 * r2;
  k.ss = 0.5 * ej * s2 * s2;
  k.qr = ej * q2 * r2;
  k.qs = ej * q2 * s2;
  k.rs = ej * r2 * s2;
  return k;
}

double storage_kerr_estimate(const DeviceParams& p) { return p.chi_qs * p.chi_qs / (4.0 * p.chi_qq); }

double geometric_mismatch(const DeviceParams& p) {
  return std::abs(p.chi_rs - 2.0 * std::sqrt(p.chi_rr * p.chi_ss)) / p.chi_rs;
}

CalibrationReport calibration_bounds(const DeviceParams& p, double kappa_spec) {
  CalibrationReport r;
  r.readout_thermal_bound = 1.0 / (p.T2_q * p.kappa_r());
  const double x = kappa_spec / (2.0 * p.chi_qs);
  r.storage_thermal_bound = x * x;
  r.chi_ss_estimate = storage_kerr_estimate(p);
  r.geometric_mismatch = geometric_mismatch(p);
  return r;
}

double number_splitting_frequency(const DeviceParams& p, int n) {
  return to_hz(p.omega_q) - to_hz(p.chi_qs) * n + to_hz(p.chi3_rq) * n * n;
}

// ---------------------------------------------------------------- config IO

namespace {

using Dim = Quantity;

struct KeySpec {
  const char* key;
  Dim dim;
};

constexpr KeySpec kKeys[] = {
    {"omega_q", Dim::frequency}, {"omega_r", Dim::frequency},  {"omega_s", Dim::frequency},
    {"T1_q", Dim::time},         {"T1_s", Dim::time},          {"T1_r", Dim::time},
    {"T2_q", Dim::time},         {"T_spec", Dim::time},        {"nth_q", Dim::dimensionless},
    {"nth_r", Dim::dimensionless}, {"nth_s", Dim::dimensionless}, {"chi_qq", Dim::frequency},
    {"chi_qr", Dim::frequency},  {"chi_qs", Dim::frequency},   {"chi_rr", Dim::frequency},
    {"chi_rs", Dim::frequency},  {"chi_ss", Dim::frequency},   {"chi3_rq", Dim::frequency},
    {"eps_p", Dim::frequency},   {"omega_p", Dim::frequency},  {"eps_d", Dim::frequency},
    {"omega_d", Dim::frequency}, {"delta_d", Dim::frequency},  {"delta_p", Dim::frequency},
    {"use_tone_frequencies", Dim::flag}, {"apply_stark_shifts", Dim::flag},
    {"xi_p_sq", Dim::dimensionless}, {"alpha_inf_sq", Dim::dimensionless},
};

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Splits "value [unit]" where value may be "(re, im)".
void split_value(const std::string& rhs, KeyValue& kv) {
  std::string r = trim(rhs);
  if (!r.empty() && r.front() == '(') {
    const auto close = r.find(')');
    if (close == std::string::npos) throw ConfigError("unterminated complex value '" + r + "'");
    kv.value = r.substr(0, close + 1);
    kv.unit = trim(r.substr(close + 1));
  } else {
    const auto sp = r.find_first_of(" \t");
    kv.value = r.substr(0, sp);
    kv.unit = sp == std::string::npos ? "" : trim(r.substr(sp));
  }
}

std::string where(const std::string& key, const KeyValue& kv) {
  return kv.line > 0 ? "key '" + key + "' (line " + std::to_string(kv.line) + ")" : "key '" + key + "'";
}

double parse_real(const std::string& key, const KeyValue& kv, const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where(key, kv) + ": cannot parse number '" + text + "'");
  }
  if (pos != text.size()) throw ConfigError(where(key, kv) + ": trailing characters in '" + text + "'");
  return v;
}

cplx parse_number(const std::string& key, const KeyValue& kv) {
  const std::string& v = kv.value;
  if (!v.empty() && v.front() == '(') {
    const auto comma = v.find(',');
    if (comma == std::string::npos || v.back() != ')')
      throw ConfigError(where(key, kv) + ": complex values are written (re,im)");
    return {parse_real(key, kv, trim(v.substr(1, comma - 1))),
            parse_real(key, kv, trim(v.substr(comma + 1, v.size() - comma - 2)))};
  }
  return parse_real(key, kv, v);
}

double unit_scale(const std::string& key, const KeyValue& kv, Dim dim) {
  const std::string& u = kv.unit;
  switch (dim) {
    case Dim::frequency:
      if (u.empty() || u == "Hz") return kTwoPi;
      if (u == "kHz") return kTwoPi * 1e3;
      if (u == "MHz") return kTwoPi * 1e6;
      if (u == "GHz") return kTwoPi * 1e9;
      if (u == "rad/s" || u == "1/s") return 1.0;
      break;
    case Dim::time:
      if (u == "s") return 1.0;
      if (u == "ms") return 1e-3;
      if (u.empty() || u == "us") return 1e-6;
      if (u == "ns") return 1e-9;
      break;
    case Dim::dimensionless:
    case Dim::flag:
      if (u.empty() || u == "1") return 1.0;
      break;
  }
  throw ConfigError(where(key, kv) + ": unit '" + u + "' is not valid here");
}

bool parse_flag(const std::string& key, const KeyValue& kv) {
  const std::string& v = kv.value;
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError(where(key, kv) + ": expected a boolean, got '" + v + "'");
}

}  // namespace

double parse_quantity(const std::string& key, const KeyValue& kv, Quantity q) {
  if (q == Quantity::flag) {
    unit_scale(key, kv, q);
    return parse_flag(key, kv) ? 1.0 : 0.0;
  }
  const cplx v = parse_number(key, kv);
  if (v.imag() != 0.0) throw ConfigError(where(key, kv) + ": value must be real");
  return v.real() * unit_scale(key, kv, q);
}

std::vector<double> parse_quantity_list(const std::string& key, const KeyValue& kv, Quantity q) {
  const double scale = unit_scale(key, kv, q);
  std::vector<double> out;
  std::stringstream ss(kv.value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, kv, trim(item)) * scale);
  if (out.empty()) throw ConfigError(where(key, kv) + ": empty list");
  return out;
}

KeyValueMap parse_key_values(const std::string& text, const std::string& origin) {
  KeyValueMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value [unit]'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    KeyValue kv;
    kv.line = lineno;
    split_value(line.substr(eq + 1), kv);
    if (kv.value.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": missing value");
    if (out.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out[key] = kv;
  }
  return out;
}

KeyValueMap load_key_values(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open parameter file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_key_values(ss.str(), path);
}

std::pair<std::string, KeyValue> parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + arg + "' is not of the form key=value");
  KeyValue kv;
  split_value(arg.substr(eq + 1), kv);
  if (kv.value.empty()) throw ConfigError("override '" + arg + "' has no value");
  return {trim(arg.substr(0, eq)), kv};
}

const std::vector<std::string>& device_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : kKeys) k.emplace_back(s.key);
    return k;
  }();
  return keys;
}

DeviceParams resolve_device_params(const KeyValueMap& kv) {
  DeviceParams p = DeviceParams::published();
  double xi_sq = 1.2, alpha_sq = 4.0;
  for (const auto& spec : kKeys) {
    auto it = kv.find(spec.key);
    if (it == kv.end()) continue;
    const std::string key = spec.key;
    const KeyValue& v = it->second;
    if (spec.dim == Dim::flag) {
      unit_scale(key, v, spec.dim);
      const bool b = parse_flag(key, v);
      if (key == "use_tone_frequencies") p.use_tone_frequencies = b;
      else p.apply_stark_shifts = b;
      continue;
    }
    const cplx raw = parse_number(key, v) * unit_scale(key, v, spec.dim);
    const bool complex_ok = key == "eps_p" || key == "eps_d";
    if (!complex_ok && raw.imag() != 0.0) throw ConfigError(where(key, v) + ": value must be real");
    const double x = raw.real();
    if (key == "omega_q") p.omega_q = x;
    else if (key == "omega_r") p.omega_r = x;
    else if (key == "omega_s") p.omega_s = x;
    else if (key == "T1_q") p.T1_q = x;
    else if (key == "T1_s") p.T1_s = x;
    else if (key == "T1_r") p.T1_r = x;
    else if (key == "T2_q") p.T2_q = x;
    else if (key == "T_spec") p.T_spec = x;
    else if (key == "nth_q") p.nth_q = x;
    else if (key == "nth_r") p.nth_r = x;
    else if (key == "nth_s") p.nth_s = x;
    else if (key == "chi_qq") p.chi_qq = x;
    else if (key == "chi_qr") p.chi_qr = x;
    else if (key == "chi_qs") p.chi_qs = x;
    else if (key == "chi_rr") p.chi_rr = x;
    else if (key == "chi_rs") p.chi_rs = x;
    else if (key == "chi_ss") p.chi_ss = x;
    else if (key == "chi3_rq") p.chi3_rq = x;
    else if (key == "eps_p") p.eps_p = raw;
    else if (key == "omega_p") p.omega_p = x;
    else if (key == "eps_d") p.eps_d = raw;
    else if (key == "omega_d") p.omega_d = x;
    else if (key == "delta_d") p.delta_d = x;
    else if (key == "delta_p") p.delta_p = x;
    else if (key == "xi_p_sq") xi_sq = x;
    else if (key == "alpha_inf_sq") alpha_sq = x;
  }
  p.validate();
  if (!kv.count("eps_p")) p.eps_p = calibrate_pump(p, xi_sq);
  if (!kv.count("eps_d")) {
    DeviceParams q = p;
    q.eps_d = 0.0;
    p.eps_d = std::abs(derive_params(q).g2) == 0.0 ? cplx{} : calibrate_drive(p, alpha_sq);
  }
  return p;
}

std::vector<std::pair<std::string, std::string>> describe_device(const DeviceParams& p) {
  auto f = [](double w) { return fmt(to_hz(w)) + " Hz"; };
  auto c = [](cplx w) { return fmt(w / kTwoPi) + " Hz"; };
  auto t = [](double s) { return fmt(s) + " s"; };
  return {
      {"omega_q", f(p.omega_q)},   {"omega_r", f(p.omega_r)},   {"omega_s", f(p.omega_s)},
      {"T1_q", t(p.T1_q)},         {"T1_s", t(p.T1_s)},         {"T1_r", t(p.T1_r)},
      {"T2_q", t(p.T2_q)},         {"T_spec", t(p.T_spec)},     {"nth_q", fmt(p.nth_q)},
      {"nth_r", fmt(p.nth_r)},     {"nth_s", fmt(p.nth_s)},     {"chi_qq", f(p.chi_qq)},
      {"chi_qr", f(p.chi_qr)},     {"chi_qs", f(p.chi_qs)},     {"chi_rr", f(p.chi_rr)},
      {"chi_rs", f(p.chi_rs)},     {"chi_ss", f(p.chi_ss)},     {"chi3_rq", f(p.chi3_rq)},
      {"eps_p", c(p.eps_p)},       {"omega_p", f(p.omega_p)},   {"eps_d", c(p.eps_d)},
      {"omega_d", f(p.omega_d)},   {"delta_d", f(p.delta_d)},   {"delta_p", f(p.delta_p)},
      {"use_tone_frequencies", p.use_tone_frequencies ? "1" : "0"},
      {"apply_stark_shifts", p.apply_stark_shifts ? "1" : "0"},
  };
}

}  // namespace catpump
