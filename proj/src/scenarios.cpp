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

#include "catpump/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include "catpump/dynamics.hpp"
#include "catpump/error.hpp"
#include "catpump/parallel.hpp"
#include "catpump/reduction.hpp"

namespace catpump {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double inf = std::numeric_limits<double>::infinity();

std::string cnum(cplx z) { return "(" + csv::num(z.real()) + "," + csv::num(z.imag()) + ")"; }

// Microseconds, rounded to the nanosecond so 7e-6 prints as 7.
std::string us(double t) { return csv::num(std::round(t * 1e9) / 1e3); }

// Typed access to the scenario keys; remembers what was read so leftovers can
// be reported as typos.
class Settings {
 public:
  explicit Settings(const KeyValueMap& kv) : kv_(kv) {}

  double quantity(const std::string& key, double def, Quantity q) {
    used_.insert(key);
    auto it = kv_.find(key);
    const double v = it == kv_.end() ? def : parse_quantity(key, it->second, q);
    resolved_.emplace_back("setting." + key, show(v, q));
    return v;
  }

  int integer(const std::string& key, int def, int min) {
    const double v = quantity(key, def, Quantity::dimensionless);
    if (v != std::floor(v) || v < min)
      throw ConfigError("key '" + key + "' must be an integer >= " + std::to_string(min));
    return static_cast<int>(v);
  }

  bool flag(const std::string& key, bool def) { return quantity(key, def ? 1.0 : 0.0, Quantity::flag) != 0.0; }

  std::vector<double> list(const std::string& key, std::vector<double> def, Quantity q) {
    used_.insert(key);
    auto it = kv_.find(key);
    std::vector<double> v = it == kv_.end() ? std::move(def) : parse_quantity_list(key, it->second, q);
    std::string text;
    for (double x : v) text += (text.empty() ? "" : ";") + show(x, q);
    resolved_.emplace_back("setting." + key, text);
    return v;
  }

  std::string word(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    used_.insert(key);
    auto it = kv_.find(key);
    const std::string v = it == kv_.end() ? def : it->second.value;
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
      throw ConfigError("key '" + key + "' must be one of: " + opts);
    }
    resolved_.emplace_back("setting." + key, v);
    return v;
  }

  void reject_unknown(const std::string& scenario) const {
    const auto& dev = device_keys();
    for (const auto& [key, value] : kv_) {
      if (used_.count(key) || std::find(dev.begin(), dev.end(), key) != dev.end()) continue;
      throw ConfigError("key '" + key + "' is not used by scenario '" + scenario + "'");
    }
  }

  const csv::Meta& resolved() const { return resolved_; }

 private:
  static std::string show(double v, Quantity q) {
    switch (q) {
      case Quantity::frequency:
        return csv::num(to_hz(v)) + " Hz";
      case Quantity::time:
        return us(v) + " us";
      default:
        return csv::num(v);
    }
  }

  const KeyValueMap& kv_;
  std::set<std::string> used_;
  csv::Meta resolved_;
};

// Header shared by every file of a run: enough to regenerate it.
csv::Meta run_header(const RunRequest& req, const DeviceParams& p, const Settings& st) {
  csv::Meta m{{"scenario", req.scenario},
              {"seed", std::to_string(req.seed)},
              {"params_file", req.params_origin.empty() ? "<defaults>" : req.params_origin}};
  for (const auto& [k, v] : describe_device(p)) m.emplace_back("param." + k, v);
  const DerivedParams d = derive_params(p);
  m.emplace_back("derived.xi_p", cnum(d.xi_p));
  m.emplace_back("derived.g2", cnum(d.g2 / kTwoPi) + " Hz");
  m.emplace_back("derived.eps2", cnum(d.eps2) + " 1/s");
  m.emplace_back("derived.kappa2", csv::num(d.kappa2) + " 1/s");
  m.emplace_back("derived.kappa_s", csv::num(p.kappa_s()) + " 1/s");
  m.emplace_back("derived.alpha_inf", cnum(d.alpha_inf));
  m.emplace_back("derived.delta_d", csv::num(to_hz(d.delta_d)) + " Hz");
  m.emplace_back("derived.delta_p", csv::num(to_hz(d.delta_p)) + " Hz");
  m.insert(m.end(), st.resolved().begin(), st.resolved().end());
  return m;
}

class Writer {
 public:
  Writer(const RunRequest& req, csv::Meta header, RunSummary& summary)
      : dir_(req.out_dir), header_(std::move(header)), summary_(summary) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void file(const std::string& name, const csv::Meta& extra, const std::function<void(std::ostream&)>& body) {
    const auto path = dir_ / name;
    std::ofstream os(path);
    if (!os) throw IoError("cannot write '" + path.string() + "'");
    csv::write_meta(os, header_);
    csv::write_meta(os, extra);
    body(os);
    if (!os) throw IoError("write to '" + path.string() + "' failed");
    summary_.files.push_back(path);
  }

  void grid(const std::string& name, TomographyGrid g, const csv::Meta& extra) {
    csv::Meta meta = header_;
    meta.insert(meta.end(), extra.begin(), extra.end());
    meta.insert(meta.end(), g.meta.begin(), g.meta.end());
    g.meta = std::move(meta);
    const auto path = dir_ / name;
    std::ofstream os(path);
    if (!os) throw IoError("cannot write '" + path.string() + "'");
    write_grid_csv(os, g);
    if (!os) throw IoError("write to '" + path.string() + "' failed");
    summary_.files.push_back(path);
  }

 private:
  std::filesystem::path dir_;
  csv::Meta header_;
  RunSummary& summary_;
};

std::vector<double> merge_times(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  for (double t : a)
    if (!(t >= 0.0)) throw ConfigError("times must be non-negative");
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }), a.end());
  return a;
}

std::vector<double> uniform_times(double t_end, double step) {
  if (!(step > 0.0)) throw ConfigError("summary_step must be positive");
  std::vector<double> t;
  const int n = static_cast<int>(std::floor(t_end / step + 1e-9));
  for (int i = 0; i <= n; ++i) t.push_back(i * step);
  return t;
}

std::size_t index_of(const std::vector<double>& v, double t) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - t) < 1e-12) return i;
  throw std::logic_error("time not sampled");
}

std::vector<cplx> settings_grid(Settings& st) {
  const double ext = st.quantity("grid_extent", 3.5, Quantity::dimensionless);
  const int n = st.integer("grid_points", 41, 2);
  if (!(ext > 0)) throw ConfigError("grid_extent must be positive");
  return square_grid(-ext, ext, n, -ext, ext, n);
}

semiclassical::GridSpec flow_grid(Settings& st) {
  semiclassical::GridSpec g;
  const double ext = st.quantity("flow_extent", 3.5, Quantity::dimensionless);
  g.re_min = g.im_min = -ext;
  g.re_max = g.im_max = ext;
  g.n_re = g.n_im = st.integer("flow_points", 41, 2);
  return g;
}

void write_summary(Writer& w, const std::vector<double>& times, const std::vector<Observables>& obs) {
  w.file("summary.csv", {{"kind", "observables"}, {"quadratures", "x=(a+a^dag)/2;q=(a-a^dag)/2i"}},
         [&](std::ostream& os) {
           csv::write_row(os, {"t_us", "nbar", "parity", "min_wigner", "mean_x", "mean_q", "var_x", "var_q", "cum4_x",
                               "cum4_q"});
           for (std::size_t i = 0; i < times.size(); ++i) {
             const auto& o = obs[i];
             csv::write_row(os, {us(times[i]), csv::num(o.nbar), csv::num(o.parity), csv::num(o.min_wigner),
                                 csv::num(o.mean_x), csv::num(o.mean_q), csv::num(o.var_x), csv::num(o.var_q),
                                 csv::num(o.cum4_x), csv::num(o.cum4_q)});
           }
         });
}

// ------------------------------------------------------------------ scenarios

RunSummary run_evolution(const RunRequest& req, bool from_fock) {
  Settings st(req.params);
  EvolutionSettings es;
  es.model = st.word("model", "reduced", {"reduced", "two-mode"});
  es.n_storage = st.integer("n_storage", 40, 2);
  es.n_readout = st.integer("n_readout", 3, 2);
  const int fock_n = from_fock ? st.integer("fock_n", 1, 0) : 0;
  const auto snaps = st.list("snapshots", {0.0, 2e-6, 7e-6, 19e-6}, Quantity::time);
  const double t_end = st.quantity("t_end", 20e-6, Quantity::time);
  const double step = st.quantity("summary_step", 1e-6, Quantity::time);
  const double target_nbar = from_fock ? 0.0 : st.quantity("target_nbar", 0.0, Quantity::dimensionless);
  const double target_time = from_fock ? 0.0 : st.quantity("target_time", 7e-6, Quantity::time);
  const auto grid = settings_grid(st);
  st.reject_unknown(req.scenario);

  DeviceParams p = resolve_device_params(req.params);
  if (target_nbar > 0.0) p = calibrate_drive_to_population(p, es.n_storage, target_nbar, target_time);

  RunSummary sum;
  es.times = merge_times(uniform_times(t_end, step), snaps);
  const FockSpace space = FockSpace::single("storage", es.n_storage);
  const QuantumState init = fock_state(space, "storage", fock_n);
  const EvolutionRun run = evolve_storage(p, init, es);
  sum.warnings = run.warnings;

  std::vector<Observables> obs(run.times.size());
  parallel_for(static_cast<long>(obs.size()), [&](long i) { obs[i] = storage_observables(run.storage[i], grid); });

  Writer w(req, run_header(req, p, st), sum);
  write_summary(w, run.times, obs);
  w.file("photon_distribution.csv", {{"kind", "photon_distribution"}}, [&](std::ostream& os) {
    csv::write_row(os, {"t_us", "n", "p"});
    for (double t : snaps) {
      const auto pn = photon_distribution(run.storage[index_of(run.times, t)]);
      for (std::size_t n = 0; n < pn.size(); ++n) csv::write_row(os, {us(t), std::to_string(n), csv::num(pn[n])});
    }
  });
  for (double t : snaps) {
    const std::size_t i = index_of(run.times, t);
    w.grid("wigner_t" + us(t) + "us.csv", wigner(run.storage[i], grid), {{"t_us", us(t)}});
    sum.metrics.emplace_back("nbar@" + us(t) + "us", csv::num(obs[i].nbar));
    sum.metrics.emplace_back("parity@" + us(t) + "us", csv::num(obs[i].parity));
    sum.metrics.emplace_back("min_wigner@" + us(t) + "us", csv::num(obs[i].min_wigner));
  }
  double drift = 0.0;
  for (const auto& o : obs) drift = std::max(drift, std::abs(o.parity - obs.front().parity));
  sum.metrics.emplace_back("max_parity_drift", csv::num(drift));
  return sum;
}

RunSummary run_bistability(const RunRequest& req) {
  Settings st(req.params);
  const double amp = st.quantity("alpha0", 2.6, Quantity::dimensionless);
  const double t_end = st.quantity("t_end", 10e-6, Quantity::time);
  const int n_storage = st.integer("n_storage", 40, 2);
  const auto grid = settings_grid(st);
  const auto fgrid = flow_grid(st);
  semiclassical::TrajectoryOptions topt;
  topt.seeds_per_side = st.integer("seeds_per_side", 6, 1);
  const bool align = st.flag("align_separatrix", true);
  st.reject_unknown(req.scenario);

  DeviceParams p = resolve_device_params(req.params);
  const double rotation = align ? separatrix_rotation(p, amp) : 0.0;
  p.eps_d *= std::polar(1.0, 2.0 * rotation);
  const DerivedParams d = derive_params(p);
  RunSummary sum;
  sum.metrics.emplace_back("drive_rotation_deg", csv::num(rotation * 180.0 / pi));
  const std::vector<int> degrees{0, 45, -45, 90, -90, 135, -135, 180};
  std::vector<QuantumState> finals(degrees.size(), fock_state(FockSpace::single("storage", 1), "storage", 0));
  std::vector<std::string> warn(degrees.size());
  const FockSpace space = FockSpace::single("storage", n_storage);
  const LindbladModel model = reduced_storage_model(p, d, n_storage);
  const Liouvillian L = build_liouvillian(model);
  parallel_for(static_cast<long>(degrees.size()), [&](long k) {
    const cplx a0 = std::polar(amp, degrees[k] * pi / 180.0);
    finals[k] = evolve(L, coherent_state(space, "storage", a0), {t_end}).states.back();
  });

  Writer w(req, run_header(req, p, st), sum);
  std::vector<TomographyGrid> maps(degrees.size());
  std::vector<Observables> obs(degrees.size());
  parallel_for(static_cast<long>(degrees.size()), [&](long k) {
    maps[k] = wigner(finals[k], grid);
    obs[k] = storage_observables(finals[k], grid);
  });
  const DenseMatrix a = annihilation(space, "storage").dense();
  w.file("bistability_summary.csv", {{"kind", "bistability"}, {"t_end_us", us(t_end)}}, [&](std::ostream& os) {
    csv::write_row(os, {"arg_deg", "re_alpha0", "im_alpha0", "nbar", "parity", "re_mean_a", "im_mean_a",
                        "plus_lobe_fraction", "min_wigner"});
    for (std::size_t k = 0; k < degrees.size(); ++k) {
      const cplx a0 = std::polar(amp, degrees[k] * pi / 180.0);
      const cplx mean = (finals[k].density() * a).trace();
      csv::write_row(os, {std::to_string(degrees[k]), csv::num(a0.real()), csv::num(a0.imag()),
                          csv::num(obs[k].nbar), csv::num(obs[k].parity), csv::num(mean.real()),
                          csv::num(mean.imag()), csv::num(lobe_fraction(maps[k], d.alpha_inf)),
                          csv::num(obs[k].min_wigner)});
      sum.metrics.emplace_back("plus_lobe_fraction@" + std::to_string(degrees[k]) + "deg",
                               csv::num(lobe_fraction(maps[k], d.alpha_inf)));
    }
  });
  for (std::size_t k = 0; k < degrees.size(); ++k)
    w.grid("wigner_arg" + std::to_string(degrees[k]) + "deg.csv", maps[k],
           {{"arg_deg", std::to_string(degrees[k])}, {"alpha0", csv::num(amp)}, {"t_us", us(t_end)}});

  const auto field = semiclassical::flow_field_grid(semiclassical::StorageCoefficients::from(d, p), fgrid, topt);
  w.file("flow.csv", {}, [&](std::ostream& os) { semiclassical::write_flow_csv(os, field); });
  w.file("trajectories.csv", {}, [&](std::ostream& os) { semiclassical::write_trajectories_csv(os, field); });
  w.file("fixed_points.csv", {}, [&](std::ostream& os) { semiclassical::write_fixed_points_csv(os, field.fixed); });
  for (const auto& t : field.trajectories)
    if (!t.converged) sum.warnings.push_back("trajectory from " + cnum(t.seed) + " did not reach a fixed point");
  return sum;
}

RunSummary run_flowfield(const RunRequest& req) {
  Settings st(req.params);
  const auto fgrid = flow_grid(st);
  semiclassical::TrajectoryOptions topt;
  topt.seeds_per_side = st.integer("seeds_per_side", 6, 1);
  const bool quantum = st.flag("steady_state", true);
  const int n_storage = st.integer("n_storage", 40, 2);
  const auto grid = settings_grid(st);
  st.reject_unknown(req.scenario);

  const DeviceParams p = resolve_device_params(req.params);
  const DerivedParams d = derive_params(p);
  RunSummary sum;
  Writer w(req, run_header(req, p, st), sum);
  const auto field = semiclassical::flow_field_grid(semiclassical::StorageCoefficients::from(d, p), fgrid, topt);
  w.file("flow.csv", {}, [&](std::ostream& os) { semiclassical::write_flow_csv(os, field); });
  w.file("trajectories.csv", {}, [&](std::ostream& os) { semiclassical::write_trajectories_csv(os, field); });
  w.file("fixed_points.csv", {}, [&](std::ostream& os) { semiclassical::write_fixed_points_csv(os, field.fixed); });
  int unconverged = 0;
  for (const auto& t : field.trajectories)
    if (!t.converged) {
      ++unconverged;
      sum.warnings.push_back("trajectory from " + cnum(t.seed) + " did not reach a fixed point");
    }
  sum.metrics.emplace_back("r_inf", csv::num(field.fixed.r_inf));
  sum.metrics.emplace_back("above_threshold", field.fixed.above_threshold ? "1" : "0");
  sum.metrics.emplace_back("unconverged_trajectories", std::to_string(unconverged));

  if (quantum) {
    const QuantumState ss = steady_state(reduced_storage_model(p, d, n_storage));
    const TomographyGrid map = wigner(ss, grid);
    w.grid("steady_state_wigner.csv", map, {{"state", "reduced-model steady state"}});
    // Centroid of the positive Wigner mass around each nonzero fixed point.
    const auto& pts = field.fixed.points;
    w.file("steady_state_lobes.csv", {{"kind", "steady_state_lobes"}}, [&](std::ostream& os) {
      csv::write_row(os, {"index", "re_fixed", "im_fixed", "re_centroid", "im_centroid", "distance", "mass"});
      for (std::size_t k = 1; k < pts.size(); ++k) {
        cplx c = 0.0;
        double m = 0.0, total = 0.0;
        for (std::size_t i = 0; i < map.size(); ++i) {
          const double v = std::max(map.values[i], 0.0);
          total += v;
          bool nearest = true;
          for (std::size_t j = 1; j < pts.size(); ++j)
            if (std::abs(map.alphas[i] - pts[j].alpha) < std::abs(map.alphas[i] - pts[k].alpha)) nearest = false;
          if (!nearest) continue;
          c += v * map.alphas[i];
          m += v;
        }
        c /= m;
        const double dist = std::abs(c - pts[k].alpha);
        csv::write_row(os, {std::to_string(k), csv::num(pts[k].alpha.real()), csv::num(pts[k].alpha.imag()),
                            csv::num(c.real()), csv::num(c.imag()), csv::num(dist), csv::num(m / total)});
        sum.metrics.emplace_back("lobe_distance@" + std::to_string(k), csv::num(dist));
      }
    });
  }
  return sum;
}

RunSummary run_spectroscopy(const RunRequest& req) {
  Settings st(req.params);
  SpectroscopySettings s;
  s.pump_span = st.quantity("pump_span", s.pump_span, Quantity::frequency);
  s.pump_rows = st.integer("pump_rows", s.pump_rows, 2);
  s.probe_cols = st.integer("probe_cols", s.probe_cols, 2);
  s.probe_nbar = st.quantity("probe_nbar", s.probe_nbar, Quantity::dimensionless);
  s.n_readout = st.integer("n_readout", s.n_readout, 2);
  s.n_storage = st.integer("n_storage", s.n_storage, 2);
  s.quantum = st.flag("quantum", s.quantum);
  s.dip_window_steps = st.quantity("dip_window_steps", s.dip_window_steps, Quantity::dimensionless);
  s.dip_points = st.integer("dip_points", s.dip_points, 3);
  s.refine_points = st.integer("refine_points", s.refine_points, 3);
  s.dip_threshold = st.quantity("dip_threshold", s.dip_threshold, Quantity::dimensionless);
  s.cut_points = st.integer("cut_points", s.cut_points, 2);
  st.reject_unknown(req.scenario);

  const DeviceParams p = resolve_device_params(req.params);
  const SpectroscopyResult r = spectroscopy_sweep(p, s);
  RunSummary sum;
  sum.warnings = r.failures;
  Writer w(req, run_header(req, p, st), sum);
  const csv::Meta frame{{"pump_offset", "omega_p - (2 omega_s - omega_r), Stark-shifted frequencies"},
                        {"probe_offset", "omega_d - omega_r"},
                        {"probe_eps_d", cnum(r.eps_d / kTwoPi) + " Hz"}};
  auto hzs = [](double w) { return csv::num(to_hz(w)); };

  csv::Meta sc_meta = frame;
  sc_meta.emplace_back("kind", "semiclassical_response");
  w.file("spectroscopy_semiclassical.csv", sc_meta, [&](std::ostream& os) {
    csv::write_row(os, {"row", "col", "pump_offset_hz", "probe_offset_hz", "response", "lorentzian", "dark",
                        "dark_state_exists"});
    for (std::size_t j = 0; j < r.pump_offset.size(); ++j)
      for (std::size_t i = 0; i < r.probe_offset.size(); ++i) {
        const auto& pt = r.semiclassical.points[j][i];
        csv::write_row(os, {std::to_string(j), std::to_string(i), hzs(r.pump_offset[j]), hzs(r.probe_offset[i]),
                            csv::num(pt.response), csv::num(pt.lorentzian), csv::num(pt.dark),
                            pt.dark_state_exists ? "1" : "0"});
      }
  });
  const double step = r.probe_offset[1] - r.probe_offset[0];
  double worst_q = 0.0, worst_sc = 0.0;
  if (s.quantum) {
    auto point_row = [&](std::ostream& os, const std::string& row, const QuantumPoint& pt) {
      csv::write_row(os, {row, hzs(pt.pump_offset), hzs(pt.probe_offset), csv::num(pt.nr), csv::num(pt.lorentzian)});
    };
    csv::Meta q_meta = frame;
    q_meta.emplace_back("kind", "steady_state_readout_population");
    q_meta.emplace_back("sampling", "per pump row, around the matching line");
    q_meta.emplace_back("failed_points", std::to_string(r.failures.size()));
    w.file("spectroscopy_quantum.csv", q_meta, [&](std::ostream& os) {
      csv::write_row(os, {"row", "pump_offset_hz", "probe_offset_hz", "nr", "lorentzian"});
      for (std::size_t j = 0; j < r.quantum_rows.size(); ++j)
        for (const auto& pt : r.quantum_rows[j]) point_row(os, std::to_string(j), pt);
    });
    csv::Meta cut_meta = frame;
    cut_meta.emplace_back("kind", "steady_state_cut");
    cut_meta.emplace_back("cut_pump_offset_hz", "0");
    cut_meta.emplace_back("dip_probe_offset_hz", csv::num(to_hz(r.cut_dip)));
    cut_meta.emplace_back("dip_depth", csv::num(r.cut_depth));
    cut_meta.emplace_back("floor", csv::num(r.floor));
    w.file("spectroscopy_cut.csv", cut_meta, [&](std::ostream& os) {
      csv::write_row(os, {"row", "pump_offset_hz", "probe_offset_hz", "nr", "lorentzian"});
      for (const auto& pt : r.cut) point_row(os, "-1", pt);
    });
  }
  csv::Meta dip_meta = frame;
  dip_meta.emplace_back("kind", "dip_trace");
  dip_meta.emplace_back("floor", csv::num(r.floor));
  dip_meta.emplace_back("grid_step_hz", csv::num(to_hz(step)));
  w.file("dip_trace.csv", dip_meta, [&](std::ostream& os) {
    csv::write_row(os, {"row", "pump_offset_hz", "expected_dip_hz", "semiclassical_dip_hz", "quantum_dip_hz",
                        "semiclassical_delta_f_hz", "quantum_delta_f_hz", "quantum_depth", "floor"});
    for (std::size_t j = 0; j < r.pump_offset.size(); ++j) {
      const double q = s.quantum ? r.quantum_dip[j] : nan;
      const double depth = s.quantum ? r.quantum_depth[j] : nan;
      csv::write_row(os, {std::to_string(j), hzs(r.pump_offset[j]), hzs(-r.pump_offset[j]),
                          hzs(r.semiclassical_dip[j]), hzs(q), hzs(r.semiclassical_dip[j] + r.pump_offset[j]),
                          hzs(q + r.pump_offset[j]), csv::num(depth), csv::num(r.floor)});
      const double sc = r.semiclassical_dip[j];
      worst_sc = std::isfinite(sc) ? std::max(worst_sc, std::abs(sc + r.pump_offset[j]) / step) : inf;
      // A row without a dip counts as infinitely far off.
      if (s.quantum) worst_q = std::isfinite(q) ? std::max(worst_q, std::abs(q + r.pump_offset[j]) / step) : inf;
    }
  });
  sum.metrics.emplace_back("dip_floor", csv::num(r.floor));
  sum.metrics.emplace_back("semiclassical_max_offset_steps", csv::num(worst_sc));
  if (s.quantum) {
    sum.metrics.emplace_back("quantum_max_offset_steps", csv::num(worst_q));
    sum.metrics.emplace_back("cut_dip_depth", csv::num(r.cut_depth));
    sum.metrics.emplace_back("cut_depth_over_floor", csv::num(r.cut_depth / r.floor));
  }
  return sum;
}

RunSummary run_tomography(const RunRequest& req) {
  Settings st(req.params);
  EvolutionSettings es;
  es.n_storage = st.integer("n_storage", 40, 2);
  const auto snaps = st.list("snapshots", {0.0, 2e-6, 7e-6, 19e-6}, Quantity::time);
  const double target_nbar = st.quantity("target_nbar", 0.0, Quantity::dimensionless);
  const double target_time = st.quantity("target_time", 7e-6, Quantity::time);
  const int dim = st.integer("recon_dim", 16, 1);
  MeasurementModel mm;
  mm.shots = st.integer("shots", 10000, 0);
  mm.n_max = st.integer("n_max", -1, -1);
  mm.confusion.e_given_g = st.quantity("p_e_given_g", 0.0, Quantity::dimensionless);
  mm.confusion.g_given_e = st.quantity("p_g_given_e", 0.0, Quantity::dimensionless);
  const auto grid = settings_grid(st);
  st.reject_unknown(req.scenario);
  mm.validate();

  DeviceParams p = resolve_device_params(req.params);
  if (target_nbar > 0.0) p = calibrate_drive_to_population(p, es.n_storage, target_nbar, target_time);
  es.times = merge_times({}, snaps);
  const FockSpace space = FockSpace::single("storage", es.n_storage);
  const EvolutionRun run = evolve_storage(p, fock_state(space, "storage", 0), es);

  RunSummary sum;
  sum.warnings = run.warnings;
  const std::size_t n = run.times.size();
  std::vector<TomographyGrid> measured(n);
  std::vector<std::optional<ReconstructionReport>> reports(n);
  std::vector<std::string> errors(n);
  ReconstructionOptions ropt;
  ropt.throw_on_nonconvergence = false;
  for (std::size_t i = 0; i < n; ++i) measured[i] = measure_parity_grid(run.storage[i], grid, mm, req.seed + i);
  parallel_for(static_cast<long>(n), [&](long i) {
    try {
      reports[i] = reconstruct_density_matrix(measured[i], dim, run.storage[i].density(), ropt);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  Writer w(req, run_header(req, p, st), sum);
  csv::Meta mdesc = mm.describe();
  mdesc.emplace_back("kind", "reconstruction_fidelity");
  w.file("fidelity.csv", mdesc, [&](std::ostream& os) {
    csv::write_row(os, {"t_us", "fidelity", "residual", "iterations", "converged"});
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = reports[i];
      csv::write_row(os, {us(run.times[i]), csv::num(r ? *r->fidelity : nan), csv::num(r ? r->residual : nan),
                          std::to_string(r ? r->iterations : 0), r && r->converged ? "1" : "0"});
    }
  });
  w.file("photon_comparison.csv", {{"kind", "photon_comparison"}}, [&](std::ostream& os) {
    csv::write_row(os, {"t_us", "n", "p_true", "p_reconstructed"});
    for (std::size_t i = 0; i < n; ++i) {
      const auto pt = photon_distribution(run.storage[i]);
      const auto pr = reports[i] ? photon_distribution(reports[i]->state) : std::vector<double>(dim, nan);
      for (int k = 0; k < static_cast<int>(pt.size()); ++k)
        csv::write_row(os, {us(run.times[i]), std::to_string(k), csv::num(pt[k]),
                            csv::num(k < static_cast<int>(pr.size()) ? pr[k] : 0.0)});
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    const std::string t = us(run.times[i]);
    w.grid("measured_t" + t + "us.csv", measured[i], {{"t_us", t}});
    if (!reports[i]) {
      sum.warnings.push_back("reconstruction at t = " + t + " us failed: " + errors[i]);
      continue;
    }
    for (const auto& wmsg : reports[i]->warnings) sum.warnings.push_back("t = " + t + " us: " + wmsg);
    const DenseMatrix rho = reports[i]->state.density();
    w.file("reconstructed_t" + t + "us.csv", {{"kind", "density_matrix"}, {"t_us", t}}, [&](std::ostream& os) {
      csv::write_row(os, {"row", "col", "re", "im"});
      for (int r = 0; r < rho.rows(); ++r)
        for (int c = 0; c < rho.cols(); ++c)
          csv::write_row(os, {std::to_string(r), std::to_string(c), csv::num(rho(r, c).real()),
                              csv::num(rho(r, c).imag())});
    });
    sum.metrics.emplace_back("fidelity@" + t + "us", csv::num(*reports[i]->fidelity));
  }
  return sum;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"spectroscopy",   "bistability", "cat-evolution",
                                              "fock-evolution", "flowfield",   "tomography-roundtrip"};
  return names;
}

RunSummary run_scenario(const RunRequest& req) {
  if (req.scenario == "spectroscopy") return run_spectroscopy(req);
  if (req.scenario == "bistability") return run_bistability(req);
  if (req.scenario == "cat-evolution") return run_evolution(req, false);
  if (req.scenario == "fock-evolution") return run_evolution(req, true);
  if (req.scenario == "flowfield") return run_flowfield(req);
  if (req.scenario == "tomography-roundtrip") return run_tomography(req);
  std::string all;
  for (const auto& n : scenario_names()) all += (all.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + req.scenario + "' (expected one of: " + all + ")");
}

// ------------------------------------------------------------ building blocks

Observables storage_observables(const QuantumState& storage, const std::vector<cplx>& grid) {
  if (storage.space().num_modes() != 1) throw SpaceMismatchError("observables need the single-mode storage state");
  const int n = storage.dim();
  const DenseMatrix rho = storage.density();
  const DenseMatrix a = annihilation(storage.space(), storage.space().modes()[0].label).dense();
  const DenseMatrix x = 0.5 * (a + a.adjoint());
  const DenseMatrix q = (a - a.adjoint()) / (2.0 * kI);

  auto cumulants = [&rho](const DenseMatrix& op, double& mean, double& var, double& cum4) {
    const DenseMatrix op2 = op * op;
    const double m1 = (rho * op).trace().real();
    const double m2 = (rho * op2).trace().real();
    const double m3 = (rho * op2 * op).trace().real();
    const double m4 = (rho * op2 * op2).trace().real();
    mean = m1;
    var = m2 - m1 * m1;
    cum4 = m4 - 4 * m3 * m1 - 3 * m2 * m2 + 12 * m2 * m1 * m1 - 6 * m1 * m1 * m1 * m1;
  };
  Observables o;
  for (int k = 0; k < n; ++k) {
    const double pk = rho(k, k).real();
    o.nbar += k * pk;
    o.parity += (k % 2 ? -pk : pk);
  }
  cumulants(x, o.mean_x, o.var_x, o.cum4_x);
  cumulants(q, o.mean_q, o.var_q, o.cum4_q);
  if (grid.empty()) {
    o.min_wigner = nan;
  } else {
    o.min_wigner = std::numeric_limits<double>::infinity();
    for (const cplx& al : grid) o.min_wigner = std::min(o.min_wigner, wigner_at(rho, al));
  }
  return o;
}

EvolutionRun evolve_storage(const DeviceParams& p, const QuantumState& initial, const EvolutionSettings& s) {
  if (initial.space().num_modes() != 1 || initial.dim() != s.n_storage)
    throw SpaceMismatchError("initial storage state must be single-mode with dimension n_storage");
  const DerivedParams d = derive_params(p);
  EvolutionRun run;
  run.times = s.times;
  if (s.model == "reduced") {
    const LindbladModel model = reduced_storage_model(p, d, s.n_storage);
    const QuantumState init =
        initial.is_pure() ? QuantumState::pure(model.space(), initial.vector())
                          : QuantumState::mixed(model.space(), initial.density());
    run.storage = evolve(model, init, s.times).states;
    return run;
  }
  if (s.model != "two-mode") throw ConfigError("unknown model '" + s.model + "'");
  const FockSpace space({{"readout", s.n_readout}, {"storage", s.n_storage}});
  const LindbladModel model = build_two_mode_model(p, d, space);
  const ReducedModel red = adiabatic_reduce(model, p, d);
  run.warnings = red.warnings;
  // Readout vacuum: the first n_storage amplitudes of the product state.
  const DenseMatrix rho_s = initial.density();
  DenseMatrix rho = DenseMatrix::Zero(space.dim(), space.dim());
  rho.topLeftCorner(s.n_storage, s.n_storage) = rho_s;
  const auto states = evolve(model, QuantumState::mixed(space, rho), s.times).states;
  for (const auto& st : states) run.storage.push_back(ptrace(st, {"storage"}));
  return run;
}

DeviceParams calibrate_drive_to_population(const DeviceParams& p, int n_storage, double nbar, double t) {
  if (!(nbar > 0.0) || !(t > 0.0)) throw ConfigError("population target needs nbar > 0 and t > 0");
  const FockSpace space = FockSpace::single("storage", n_storage);
  const QuantumState vac = fock_state(space, "storage", 0);
  const DenseMatrix num = number(space, "storage").dense();
  auto with = [&p](double a2) {
    DeviceParams q = p;
    q.eps_d = calibrate_drive(p, a2);
    return q;
  };
  auto population = [&](double a2) {
    const DeviceParams q = with(a2);
    const QuantumState s = evolve(reduced_storage_model(q, derive_params(q), n_storage), vac, {t}).states.back();
    return (s.density() * num).trace().real();
  };
  const double cap = kTruncationGuard * n_storage;
  double lo = 0.0, hi = std::min(4.0, cap);
  while (population(hi) < nbar) {
    lo = hi;
    if (hi >= cap) throw ConfigError("population target not reachable within the storage truncation");
    hi = std::min(1.5 * hi, cap);
  }
  for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = population(mid);
    if (std::abs(v - nbar) < 1e-9 * nbar) return with(mid);
    (v < nbar ? lo : hi) = mid;
  }
  return with(0.5 * (lo + hi));
}

SpectroscopyResult spectroscopy_sweep(const DeviceParams& p, const SpectroscopySettings& s) {
  if (s.pump_rows < 2 || s.probe_cols < 2) throw ConfigError("spectroscopy grid needs at least 2 x 2 points");
  if (!(s.pump_span > 0.0)) throw ConfigError("pump_span must be positive");
  if (!(s.probe_nbar > 0.0)) throw ConfigError("probe_nbar must be positive");
  SpectroscopyResult r;
  const double step = 2.0 * s.pump_span / (s.pump_rows - 1);
  const double row0 = 0.5 * (s.pump_rows - 1);
  double col0 = 0.5 * (s.probe_cols - 1);
  // Keep -pump_offset on the probe grid.
  if (std::abs(std::fmod(col0 + row0, 1.0)) > 1e-9) col0 += 0.5;
  for (int j = 0; j < s.pump_rows; ++j) r.pump_offset.push_back((j - row0) * step);
  for (int i = 0; i < s.probe_cols; ++i) r.probe_offset.push_back((i - col0) * step);

  DeviceParams q = p;
  q.use_tone_frequencies = false;
  q.eps_d = std::sqrt(s.probe_nbar) * 0.5 * p.kappa_r();
  r.eps_d = q.eps_d;
  const DerivedParams d = derive_params(q);
  r.floor = std::norm(d.g2) > 0.0 ? semiclassical::dip_floor(q, d) : std::numeric_limits<double>::infinity();

  std::vector<double> dd, dp;
  for (double x : r.probe_offset) dd.push_back(-x);
  for (double x : r.pump_offset) dp.push_back(-x);
  r.semiclassical = semiclassical::readout_response(q, d, dd, dp);
  // The dip is located against the bare readout Lorentzian: far wings of the
  // resonance can be darker than the dip floor itself.
  for (const auto& row : r.semiclassical.points) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i)
      if (row[i].response / row[i].lorentzian < row[best].response / row[best].lorentzian) best = i;
    const bool dip = row[best].response < s.dip_threshold * row[best].lorentzian;
    r.semiclassical_dip.push_back(dip ? r.probe_offset[best] : nan);
  }
  if (!s.quantum) return r;
  if (s.dip_points < 3 || s.refine_points < 3 || s.cut_points < 2 || !(s.dip_window_steps > 0.0))
    throw ConfigError("dip_points and refine_points need at least 3 points, cut_points 2, dip_window_steps > 0");

  const FockSpace space({{"readout", s.n_readout}, {"storage", s.n_storage}});
  const DenseMatrix nr = number(space, "readout").dense();
  const double kr = q.kappa_r();
  std::vector<double> rows = r.pump_offset;
  rows.push_back(0.0);  // the cut
  std::vector<std::vector<QuantumPoint>> found(rows.size());
  std::mutex fail_mutex;
  auto evaluate = [&](const std::vector<std::pair<std::size_t, double>>& todo) {
    std::vector<QuantumPoint> out(todo.size());
    parallel_for(static_cast<long>(todo.size()), [&](long k) {
      QuantumPoint& pt = out[k];
      pt.pump_offset = rows[todo[k].first];
      pt.probe_offset = todo[k].second;
      pt.lorentzian = std::norm(q.eps_d) / (0.25 * kr * kr + pt.probe_offset * pt.probe_offset);
      DeviceParams pq = q;
      pq.delta_d = -pt.probe_offset;
      pq.delta_p = -pt.pump_offset;
      try {
        const QuantumState ss = steady_state(build_two_mode_model(pq, derive_params(pq), space));
        pt.nr = (ss.density() * nr).trace().real();
      } catch (const Error& e) {
        pt.nr = nan;
        std::ostringstream os;
        os << "steady state at pump offset " << to_hz(pt.pump_offset) << " Hz, probe offset "
           << to_hz(pt.probe_offset) << " Hz failed (" << e.kind() << "): " << e.what();
        const std::lock_guard lock(fail_mutex);
        r.failures.push_back(os.str());
      }
    });
    for (std::size_t k = 0; k < todo.size(); ++k) found[todo[k].first].push_back(out[k]);
  };
  auto best_of = [](const std::vector<QuantumPoint>& pts) {
    const QuantumPoint* best = nullptr;
    for (const auto& pt : pts)
      if (std::isfinite(pt.nr) && (!best || pt.nr / pt.lorentzian < best->nr / best->lorentzian)) best = &pt;
    return best;
  };

  const double half = s.dip_window_steps * step;
  const double coarse = 2.0 * half / (s.dip_points - 1);
  std::vector<std::pair<std::size_t, double>> todo;
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (int k = 0; k < s.dip_points; ++k) todo.emplace_back(j, -rows[j] - half + k * coarse);
  evaluate(todo);
  todo.clear();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const QuantumPoint* b = best_of(found[j]);
    if (!b) continue;
    const double c = b->probe_offset;
    for (int k = 0; k < s.refine_points; ++k) todo.emplace_back(j, c - 2.0 * coarse + k * 4.0 * coarse / (s.refine_points - 1));
  }
  const double lo = r.probe_offset.front(), hi = r.probe_offset.back();
  for (int k = 0; k < s.cut_points; ++k) todo.emplace_back(rows.size() - 1, lo + k * (hi - lo) / (s.cut_points - 1));
  evaluate(todo);

  for (std::size_t j = 0; j < rows.size(); ++j) {
    auto& pts = found[j];
    std::sort(pts.begin(), pts.end(),
              [](const QuantumPoint& x, const QuantumPoint& y) { return x.probe_offset < y.probe_offset; });
    const QuantumPoint* b = best_of(pts);
    const bool dip = b && b->nr < s.dip_threshold * b->lorentzian;
    const double at = dip ? b->probe_offset : nan, depth = dip ? b->nr : nan;
    if (j + 1 < rows.size()) {
      r.quantum_dip.push_back(at);
      r.quantum_depth.push_back(depth);
    } else {
      r.cut_dip = at;
      r.cut_depth = depth;
    }
  }
  std::sort(r.failures.begin(), r.failures.end());
  r.cut = std::move(found.back());
  found.pop_back();
  r.quantum_rows = std::move(found);
  return r;
}

double separatrix_rotation(const DeviceParams& p, double radius) {
  const DerivedParams d = derive_params(p);
  if (std::abs(d.alpha_inf) == 0.0) throw ConfigError("separatrix alignment needs a drive above threshold");
  const auto c = semiclassical::StorageCoefficients::from(d, p);
  const auto fps = semiclassical::fixed_points(c);
  const double base = std::arg(d.alpha_inf);
  auto lands_plus = [&](double psi) {
    const auto t = semiclassical::integrate_trajectory(std::polar(radius, base + psi), c, fps);
    if (!t.converged) throw ConvergenceError("trajectory did not settle while locating the basin boundary");
    return std::real(std::conj(t.points.back()) * d.alpha_inf) > 0.0;
  };
  double lo = 0.0, hi = pi;
  if (!lands_plus(lo) || lands_plus(hi))
    throw ConvergenceError("basin boundary not bracketed at radius " + csv::num(radius));
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lands_plus(mid) ? lo : hi) = mid;
  }
  return 0.5 * pi - (base + 0.5 * (lo + hi));
}

double lobe_fraction(const TomographyGrid& w, cplx target) {
  double plus = 0.0, total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double v = std::max(w.values[i], 0.0);
    total += v;
    if (std::abs(w.alphas[i] - target) < std::abs(w.alphas[i] + target)) plus += v;
  }
  return total > 0.0 ? plus / total : nan;
}

}  // namespace catpump
