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

#include "catpump/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "catpump/error.hpp"
#include "catpump/parallel.hpp"

namespace catpump {

namespace {

constexpr double two_over_pi = 2.0 / std::numbers::pi;

const QuantumState& require_single_mode(const QuantumState& s, const char* what) {
  if (s.space().num_modes() != 1)
    throw SpaceMismatchError(std::string(what) + " needs a single-mode state; name the mode to keep");
  return s;
}

// (2/pi) D(2 alpha) P restricted to the leading dim x dim block, so that
// W(alpha) = Tr[M rho] for rho supported there.
DenseMatrix wigner_kernel(int dim, cplx alpha) {
  DenseMatrix m(dim, dim);
  const cplx beta = 2.0 * alpha;
  for (int c = 0; c < dim; ++c) {
    const double s = (c % 2 == 0) ? two_over_pi : -two_over_pi;
    for (int r = c; r < dim; ++r) {
      m(r, c) = s * displacement_element(r, c, beta);
      // D(beta) P is Hermitian.
      m(c, r) = std::conj(m(r, c));
    }
  }
  return m;
}

void check_guard(int dim, const std::vector<cplx>& alphas, double guard) {
  for (const cplx& a : alphas) {
    if (std::norm(a) > guard * dim) {
      std::ostringstream os;
      os << "Wigner point |alpha|^2 = " << std::norm(a) << " exceeds " << guard << " * N = " << guard * dim;
      throw TruncationError(os.str());
    }
  }
}

// Euclidean projection of v onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  return (v.array() - tau).cwiseMax(0.0);
}

DenseMatrix pad(const DenseMatrix& m, int dim) {
  DenseMatrix out = DenseMatrix::Zero(dim, dim);
  out.topLeftCorner(m.rows(), m.cols()) = m;
  return out;
}

}  // namespace

std::string to_string(GridKind k) { return k == GridKind::wigner ? "wigner" : "parity"; }

std::vector<double> TomographyGrid::wigner_values() const {
  if (kind == GridKind::wigner) return values;
  std::vector<double> w(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) w[i] = two_over_pi * values[i];
  return w;
}

std::vector<cplx> square_grid(double re_min, double re_max, int n_re, double im_min, double im_max, int n_im) {
  if (n_re < 1 || n_im < 1) throw ConfigError("grid needs at least one point per axis");
  auto at = [](double lo, double hi, int n, int i) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); };
  std::vector<cplx> out;
  out.reserve(static_cast<std::size_t>(n_re) * n_im);
  for (int j = 0; j < n_im; ++j)
    for (int i = 0; i < n_re; ++i) out.emplace_back(at(re_min, re_max, n_re, i), at(im_min, im_max, n_im, j));
  return out;
}

double wigner_at(const DenseMatrix& rho, cplx alpha) {
  const int dim = static_cast<int>(rho.rows());
  const cplx beta = 2.0 * alpha;
  // Tr[rho D P] = sum_{r,c} rho(c, r) D(r, c) (-1)^c; the lower triangle of
  // D P is enough because D P is Hermitian.
  double acc = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double s = (c % 2 == 0) ? 1.0 : -1.0;
    acc += s * (rho(c, c) * displacement_element(c, c, beta)).real();
    for (int r = c + 1; r < dim; ++r) {
      const cplx k = s * displacement_element(r, c, beta);
      acc += 2.0 * (rho(c, r) * k).real();
    }
  }
  return two_over_pi * acc;
}

TomographyGrid wigner(const QuantumState& state, const std::vector<cplx>& alphas, double guard) {
  require_single_mode(state, "wigner");
  check_guard(state.dim(), alphas, guard);
  const DenseMatrix rho = state.density();
  TomographyGrid g;
  g.kind = GridKind::wigner;
  g.alphas = alphas;
  g.values.assign(alphas.size(), 0.0);
  g.shots.assign(alphas.size(), 0);
  g.meta = {{"source", "exact"}, {"dim", std::to_string(state.dim())}};
  parallel_for(static_cast<long>(alphas.size()), [&](long i) { g.values[i] = wigner_at(rho, alphas[i]); });
  return g;
}

TomographyGrid wigner(const QuantumState& state, const std::string& mode, const std::vector<cplx>& alphas,
                      double guard) {
  if (state.space().num_modes() == 1 && state.space().modes()[0].label == mode) return wigner(state, alphas, guard);
  return wigner(ptrace(state, {mode}), alphas, guard);
}

std::vector<double> photon_distribution(const QuantumState& state) {
  require_single_mode(state, "photon_distribution");
  std::vector<double> p(state.dim());
  if (state.is_pure()) {
    const auto& v = state.vector();
    for (int n = 0; n < state.dim(); ++n) p[n] = std::norm(v(n));
  } else {
    const DenseMatrix rho = state.density();
    for (int n = 0; n < state.dim(); ++n) p[n] = rho(n, n).real();
  }
  return p;
}

std::vector<double> photon_distribution(const QuantumState& state, const std::string& mode) {
  if (state.space().num_modes() == 1 && state.space().modes()[0].label == mode) return photon_distribution(state);
  return photon_distribution(ptrace(state, {mode}));
}

// ------------------------------------------------------- parity measurement

Confusion MeasurementModel::confusion_for(cplx alpha) const {
  return confusion_at ? confusion_at(std::abs(alpha)) : confusion;
}

double MeasurementModel::contrast(cplx alpha) const {
  const Confusion c = confusion_for(alpha);
  return 0.5 * ((1.0 - c.e_given_g) + (1.0 - c.g_given_e) - c.e_given_g - c.g_given_e);
}

void MeasurementModel::validate() const {
  auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!ok(confusion.e_given_g) || !ok(confusion.g_given_e))
    throw ConfigError("readout confusion probabilities must lie in [0, 1]");
  if (shots < 0) throw ConfigError("shot count must be non-negative");
}

csv::Meta MeasurementModel::describe() const {
  return {{"n_max", std::to_string(n_max)},
          {"p_e_given_g", csv::num(confusion.e_given_g)},
          {"p_g_given_e", csv::num(confusion.g_given_e)},
          {"alpha_dependent_confusion", confusion_at ? "1" : "0"},
          {"shots", std::to_string(shots)}};
}

ParityMeasurement simulate_parity_measurement(const DenseMatrix& rho, cplx alpha, const MeasurementModel& model,
                                              std::mt19937_64* rng) {
  const int dim = static_cast<int>(rho.rows());
  double even = 0.0, odd = 0.0;
  if (model.n_max < 0) {
    const double parity = wigner_at(rho, alpha) / two_over_pi;
    even = 0.5 * (1.0 + parity);
    odd = 0.5 * (1.0 - parity);
  } else {
    // Populations of D(-alpha) rho D(alpha) up to n_max; the rest is P_{>n_max}.
    Eigen::RowVectorXcd row(dim);
    for (int n = 0; n <= model.n_max; ++n) {
      for (int c = 0; c < dim; ++c) row(c) = displacement_element(n, c, -alpha);
      const double p = (row * rho * row.adjoint())(0, 0).real();
      (n % 2 == 0 ? even : odd) += p;
    }
  }
  const double above = std::max(0.0, 1.0 - even - odd);
  const Confusion c = model.confusion_for(alpha);
  const double e_given_e = 1.0 - c.g_given_e;
  // Qubit left in e by the even part (+ phase) or the odd part (- phase).
  const double pe_plus = even * e_given_e + (odd + above) * c.e_given_g;
  const double pe_minus = odd * e_given_e + (even + above) * c.e_given_g;

  auto sample = [&](double pe) {
    pe = std::clamp(pe, 0.0, 1.0);
    if (model.shots == 0) return 2.0 * pe - 1.0;
    if (!rng) throw ConfigError("finite shot count needs a random generator");
    std::binomial_distribution<long> b(model.shots, pe);
    return 2.0 * static_cast<double>(b(*rng)) / static_cast<double>(model.shots) - 1.0;
  };
  ParityMeasurement m;
  m.sigma_plus = sample(pe_plus);
  m.sigma_minus = sample(pe_minus);
  m.delta = 0.5 * (m.sigma_plus - m.sigma_minus);
  m.contrast = model.contrast(alpha);
  return m;
}

TomographyGrid measure_parity_grid(const QuantumState& state, const std::vector<cplx>& alphas,
                                   const MeasurementModel& model, std::uint64_t seed) {
  require_single_mode(state, "measure_parity_grid");
  model.validate();
  const DenseMatrix rho = state.density();
  TomographyGrid g;
  g.kind = GridKind::parity;
  g.alphas = alphas;
  g.values.assign(alphas.size(), 0.0);
  g.shots.assign(alphas.size(), model.shots);
  g.meta = model.describe();
  g.meta.emplace_back("seed", std::to_string(seed));
  parallel_for(static_cast<long>(alphas.size()), [&](long i) {
    const double c = model.contrast(alphas[i]);
    if (std::abs(c) < 1e-12) throw ConfigError("readout contrast vanishes; parity cannot be recovered");
    // One stream per point keeps results independent of thread scheduling.
    std::seed_seq seq{seed, static_cast<std::uint64_t>(i)};
    std::mt19937_64 rng(seq);
    g.values[i] = simulate_parity_measurement(rho, alphas[i], model, &rng).delta / c;
  });
  return g;
}

// ----------------------------------------------------------- reconstruction

DenseMatrix project_density(const DenseMatrix& h) {
  const DenseMatrix herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(herm);
  const Eigen::VectorXd lam = project_simplex(es.eigenvalues());
  return es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

ReconstructionReport reconstruct_density_matrix(const TomographyGrid& grid, int dim,
                                                const std::optional<DenseMatrix>& reference,
                                                const ReconstructionOptions& opt) {
  if (dim < 1) throw ConfigError("reconstruction dimension must be positive");
  if (grid.alphas.size() != grid.values.size()) throw ConfigError("grid has mismatched point and value counts");
  const long k = static_cast<long>(grid.size());
  if (k == 0) throw ConfigError("empty tomography grid");
  const long d2 = static_cast<long>(dim) * dim;

  // Row k holds vec(conj M_k)^T so that A vec(rho) = (Tr[M_k rho])_k.
  Eigen::MatrixXcd a(k, d2);
  parallel_for(k, [&](long i) {
    const DenseMatrix m = wigner_kernel(dim, grid.alphas[i]);
    a.row(i) = Eigen::Map<const Eigen::VectorXcd>(m.data(), d2).conjugate().transpose();
  });
  const std::vector<double> wv = grid.wigner_values();
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(wv.data(), k);

  // Lipschitz constant 2 sigma_max(A)^2 by power iteration.
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(d2).normalized();
  double smax2 = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXcd u = a.adjoint() * (a * v);
    const double n = u.norm();
    if (n == 0.0) break;
    const double prev = smax2;
    smax2 = n;
    v = u / n;
    if (std::abs(smax2 - prev) <= 1e-10 * smax2) break;
  }
  const double step = 1.0 / (2.0 * 1.01 * smax2);

  auto vec = [d2](const DenseMatrix& m) { return Eigen::Map<const Eigen::VectorXcd>(m.data(), d2); };
  auto residual = [&](const DenseMatrix& rho) -> Eigen::VectorXd { return (a * vec(rho)).real() - w; };

  std::vector<std::string> warnings;
  if (k < d2) {
    std::ostringstream os;
    os << "grid has " << k << " points for " << d2 << " unknowns; the fit is underdetermined";
    warnings.push_back(os.str());
  }
  bool converged = false;

  DenseMatrix x = DenseMatrix::Identity(dim, dim) / static_cast<double>(dim);
  DenseMatrix y = x;
  double t = 1.0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd r = residual(y);
    const Eigen::VectorXcd g = 2.0 * (a.adjoint() * r.cast<cplx>());
    const DenseMatrix grad = Eigen::Map<const DenseMatrix>(g.data(), dim, dim);
    const DenseMatrix xn = project_density(y - step * grad);
    const double change = (xn - x).norm();
    // Gradient-based adaptive restart.
    const bool restart = ((y - xn).cwiseProduct((xn - x).conjugate())).sum().real() > 0.0;
    const double tn = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = restart ? xn : DenseMatrix(xn + ((t - 1.0) / tn) * (xn - x));
    x = xn;
    t = tn;
    if (change < opt.tolerance) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged && opt.throw_on_nonconvergence) {
    std::ostringstream os;
    os << "density-matrix reconstruction did not converge in " << opt.max_iterations << " iterations";
    throw ConvergenceError(os.str());
  }
  if (!converged) warnings.push_back("reconstruction stopped at the iteration limit");

  x = 0.5 * (x + x.adjoint());
  ReconstructionReport rep{QuantumState::mixed(FockSpace::single("storage", dim), x, 1e-8),
                           std::sqrt(residual(x).squaredNorm() / static_cast<double>(k)),
                           it,
                           converged,
                           std::nullopt,
                           std::move(warnings)};
  if (reference) {
    const int n = static_cast<int>(std::max<long>(dim, reference->rows()));
    rep.fidelity = fidelity(pad(*reference, n), pad(x, n));
  }
  return rep;
}

// ------------------------------------------------------------ gaussian fit

GaussianFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw ConfigError("Gaussian fit needs at least three samples");
  const double ymax = *std::max_element(y.begin(), y.end());
  if (!(ymax > 0.0)) throw ConfigError("Gaussian fit needs positive samples");

  // Start from a parabola through log y, then refine by Gauss-Newton.
  std::vector<int> use;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] > 1e-3 * ymax) use.push_back(static_cast<int>(i));
  if (use.size() < 3) throw ConfigError("Gaussian fit needs three samples above the noise floor");
  Eigen::MatrixXd m(use.size(), 3);
  Eigen::VectorXd b(use.size());
  for (std::size_t r = 0; r < use.size(); ++r) {
    const double xi = x[use[r]];
    m.row(r) << 1.0, xi, xi * xi;
    b(r) = std::log(y[use[r]]);
  }
  const Eigen::Vector3d q = m.colPivHouseholderQr().solve(b);
  if (!(q(2) < 0.0)) throw ConfigError("samples are not peaked; no Gaussian fits");
  Eigen::Vector3d p(std::exp(q(0) - q(1) * q(1) / (4 * q(2))), -q(1) / (2 * q(2)), std::sqrt(-1.0 / (2 * q(2))));

  for (int it = 0; it < 50; ++it) {
    Eigen::MatrixXd j(x.size(), 3);
    Eigen::VectorXd r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = (x[i] - p(1)) / p(2);
      const double e = std::exp(-0.5 * u * u);
      r(i) = y[i] - p(0) * e;
      j.row(i) << e, p(0) * e * u / p(2), p(0) * e * u * u / p(2);
    }
    const Eigen::Vector3d dp = j.colPivHouseholderQr().solve(r);
    p += dp;
    if (dp.norm() < 1e-14 * p.norm()) break;
  }
  return {p(0), p(1), std::abs(p(2))};
}

// --------------------------------------------------------------------- CSV

void write_grid_csv(std::ostream& os, const TomographyGrid& grid) {
  csv::Meta meta{{"kind", to_string(grid.kind)}, {"points", std::to_string(grid.size())}};
  meta.insert(meta.end(), grid.meta.begin(), grid.meta.end());
  csv::write_meta(os, meta);
  csv::write_row(os, {"re_alpha", "im_alpha", "value", "shots"});
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv::write_row(os, {csv::num(grid.alphas[i].real()), csv::num(grid.alphas[i].imag()), csv::num(grid.values[i]),
                        std::to_string(i < grid.shots.size() ? grid.shots[i] : 0)});
}

TomographyGrid read_grid_csv(std::istream& is, const std::string& origin) {
  const csv::Table t = csv::read(is, origin);
  const int re = t.column("re_alpha"), im = t.column("im_alpha"), val = t.column("value");
  const bool has_shots = std::find(t.columns.begin(), t.columns.end(), "shots") != t.columns.end();
  const int sh = has_shots ? t.column("shots") : -1;
  TomographyGrid g;
  const std::string* kind = t.meta_value("kind");
  if (!kind || *kind == "wigner") {
    g.kind = GridKind::wigner;
  } else if (*kind == "parity") {
    g.kind = GridKind::parity;
  } else {
    throw ConfigError(origin + ": unknown grid kind '" + *kind + "'");
  }
  for (const auto& [key, value] : t.meta)
    if (key != "kind" && key != "points") g.meta.emplace_back(key, value);
  for (const auto& row : t.rows) {
    g.alphas.emplace_back(row[re], row[im]);
    g.values.push_back(row[val]);
    g.shots.push_back(sh >= 0 ? static_cast<long>(row[sh]) : 0);
  }
  return g;
}

}  // namespace catpump
