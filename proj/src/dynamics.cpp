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

#include "catpump/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

namespace catpump {

namespace {

SparseMatrix sparse_identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

}  // namespace

// ------------------------------------------------------------ LindbladModel

LindbladModel::LindbladModel(Operator hamiltonian, std::vector<Operator> collapse_ops)
    : hamiltonian_(std::move(hamiltonian)), collapse_(std::move(collapse_ops)) {
  if (!hamiltonian_.hermitian()) {
    const double defect = hamiltonian_.hermiticity_defect();
    const double scale = std::max(1.0, max_abs(hamiltonian_.matrix()));
    if (defect >= 1e-12 * scale) {
      std::ostringstream os;
      os << "Hamiltonian is not Hermitian: max|H - H^dagger| = " << defect;
      throw InvalidModelError(os.str());
    }
    hamiltonian_ = hamiltonian_.as_hermitian();
  }
  for (std::size_t k = 0; k < collapse_.size(); ++k) {
    if (!(collapse_[k].space() == hamiltonian_.space())) {
      std::ostringstream os;
      os << "collapse operator " << k << " lives on " << collapse_[k].space().describe()
         << " but the Hamiltonian on " << hamiltonian_.space().describe();
      throw SpaceMismatchError(os.str());
    }
  }
}

// -------------------------------------------------------------- Liouvillian

Liouvillian::Liouvillian(FockSpace space, SparseMatrix superop, long dense_below)
    : space_(std::move(space)), superop_(std::move(superop)) {
  const long n = static_cast<long>(space_.dim()) * space_.dim();
  if (superop_.rows() != n || superop_.cols() != n)
    throw SpaceMismatchError("superoperator shape does not match space " + space_.describe());
  superop_.makeCompressed();
  if (n < dense_below) dense_ = DenseMatrix(superop_);
}

void Liouvillian::apply(const StateVector& v, StateVector& out) const {
  if (dense_) out.noalias() = *dense_ * v;
  else out.noalias() = superop_ * v;
}

StateVector Liouvillian::apply(const DenseMatrix& rho) const {
  StateVector out(size());
  apply(vectorize(rho), out);
  return out;
}

double Liouvillian::norm1() const {
  double best = 0.0;
  for (int k = 0; k < superop_.outerSize(); ++k) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(superop_, k); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

StateVector vectorize(const DenseMatrix& rho) {
  return Eigen::Map<const StateVector>(rho.data(), rho.size());
}

DenseMatrix unvectorize(const StateVector& v, int dim) {
  return Eigen::Map<const DenseMatrix>(v.data(), dim, dim);
}

Liouvillian build_liouvillian(const LindbladModel& model, const LiouvillianOptions& opt) {
  const int d = model.dim();
  const long n = static_cast<long>(d) * d;
  if (n > opt.max_superoperator_dim) {
    std::ostringstream os;
    os << "Liouvillian of " << model.space().describe() << " would be " << n << " x " << n
       << ", above the cap of " << opt.max_superoperator_dim;
    throw DimensionOverflowError(os.str());
  }
  const SparseMatrix id = sparse_identity(d);
  const SparseMatrix& h = model.hamiltonian().matrix();
  const SparseMatrix ht = h.transpose();

  SparseMatrix L = SparseMatrix(Eigen::kroneckerProduct(id, h)) - SparseMatrix(Eigen::kroneckerProduct(ht, id));
  L = L * cplx(0.0, -1.0);
  for (const auto& c_op : model.collapse_ops()) {
    const SparseMatrix& c = c_op.matrix();
    const SparseMatrix cdc = SparseMatrix(c.adjoint()) * c;
    const SparseMatrix cdct = cdc.transpose();
    L += SparseMatrix(Eigen::kroneckerProduct(SparseMatrix(c.conjugate()), c));
    L -= 0.5 * SparseMatrix(Eigen::kroneckerProduct(id, cdc));
    L -= 0.5 * SparseMatrix(Eigen::kroneckerProduct(cdct, id));
  }
  L.prune(cplx(0.0), 0.0);
  return Liouvillian(model.space(), std::move(L), opt.dense_below);
}

DenseMatrix lindblad_rhs(const LindbladModel& model, const DenseMatrix& rho) {
  const DenseMatrix h = model.hamiltonian().dense();
  DenseMatrix out = -kI * (h * rho - rho * h);
  for (const auto& c_op : model.collapse_ops()) {
    const DenseMatrix c = c_op.dense();
    const DenseMatrix cdc = c.adjoint() * c;
    out += c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
  }
  return out;
}

// --------------------------------------------------------------- evolution

EvolutionResult evolve(const Liouvillian& L, const QuantumState& initial, const std::vector<double>& times,
                       const EvolveOptions& opt) {
  if (!(initial.space() == L.space()))
    throw SpaceMismatchError("evolve: initial state on " + initial.space().describe() + ", model on " +
                             L.space().describe());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1]))
      throw ConfigError("evolve: output times must be non-negative and non-decreasing");
  }
  const int d = L.space().dim();
  EvolutionResult res;
  res.times = times;
  res.states.reserve(times.size());

  StateVector y = vectorize(initial.density());
  auto rhs = [&L](double, const StateVector& v, StateVector& dv) { L.apply(v, dv); };
  auto keep_going = [](double, const StateVector&) { return true; };
  double t = 0.0;
  double hint = 0.0;
  for (double target : times) {
    if (target > t) {
      ode::integrate(rhs, y, t, target, opt.ode, res.stats, keep_going, hint);
      t = target;
    }
    DenseMatrix rho = unvectorize(y, d);
    res.max_trace_drift = std::max(res.max_trace_drift, std::abs(rho.trace() - 1.0));
    res.max_hermiticity_defect = std::max(res.max_hermiticity_defect, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
    res.states.push_back(QuantumState::mixed(L.space(), std::move(rho), opt.state_tol));
  }
  return res;
}

EvolutionResult evolve(const LindbladModel& model, const QuantumState& initial, const std::vector<double>& times,
                       const EvolveOptions& opt) {
  return evolve(build_liouvillian(model, opt.liouvillian), initial, times, opt);
}

// ------------------------------------------------------------ steady state

namespace {

// L with row 0 replaced by vec(I)^T, so that A x = e_0 imposes Tr rho = 1.
SparseMatrix bordered(const SparseMatrix& L, int d) {
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(L.nonZeros() + d);
  for (int k = 0; k < L.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(L, k); it; ++it)
      if (it.row() != 0) t.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < d; ++i) t.emplace_back(0, i * (d + 1), 1.0);
  SparseMatrix A(L.rows(), L.cols());
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

DenseMatrix to_density(const StateVector& x, int d) {
  DenseMatrix rho = unvectorize(x, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return rho / rho.trace().real();
}

// Smallest singular value of A from inverse iteration on A^H A.
double smallest_singular_value(Eigen::SparseLU<SparseMatrix>& lu, long n, int iterations) {
  StateVector v = StateVector::Ones(n) / std::sqrt(static_cast<double>(n));
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    StateVector z = lu.solve(v);
    StateVector w = lu.adjoint().solve(z);
    const double growth = w.norm();
    if (!std::isfinite(growth) || growth == 0.0) return 0.0;
    const double next = 1.0 / std::sqrt(growth);
    v = w / growth;
    if (k > 2 && std::abs(next - estimate) <= 1e-6 * next) return next;
    estimate = next;
  }
  return estimate;
}

// Null-space dimension of L counted from a dense SVD, for small systems.
int null_dimension(const SparseMatrix& L, double tol) {
  if (L.rows() > 1600) return -1;
  Eigen::BDCSVD<DenseMatrix> svd{DenseMatrix(L)};
  const auto& s = svd.singularValues();
  int count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] <= tol) ++count;
  return std::max(count, 2);
}

}  // namespace

SteadyStateReport steady_state_report(const Liouvillian& Lv, const SteadyStateOptions& opt) {
  const SparseMatrix& L = Lv.matrix();
  const int d = Lv.space().dim();
  const long n = Lv.size();
  const double norm = Lv.norm1();
  const double tol = opt.residual_tol * std::max(norm, 1e-300);

  auto residual_of = [&](const DenseMatrix& rho) {
    StateVector out(n);
    Lv.apply(vectorize(rho), out);
    return out.norm();
  };
  auto degenerate = [&](double gap) {
    const int dim = null_dimension(L, std::max(1e-9 * norm, 1e3 * gap));
    std::ostringstream os;
    os << "steady state is not unique: smallest singular value of the trace-bordered Liouvillian is " << gap
       << " (||L||_1 = " << norm << "), null space dimension estimate "
       << (dim < 0 ? std::string(">= 2") : std::to_string(dim));
    throw DegenerateSteadyStateError(os.str(), dim);
  };

  const SparseMatrix A = bordered(L, d);
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(A);
  lu.factorize(A);

  if (lu.info() == Eigen::Success) {
    StateVector b = StateVector::Zero(n);
    b[0] = 1.0;
    StateVector x = lu.solve(b);
    if (x.allFinite()) {
      DenseMatrix rho = to_density(x, d);
      const double res = residual_of(rho);
      double gap = 0.0;
      if (opt.check_uniqueness) {
        gap = smallest_singular_value(lu, n, opt.max_iterations);
        if (gap <= opt.uniqueness_factor * std::max(res, 1e-16 * norm)) degenerate(gap);
      }
      if (res <= tol) {
        return {QuantumState::mixed(Lv.space(), std::move(rho), 1e-8), res, norm, gap, "trace-row LU"};
      }
    }
  } else if (opt.check_uniqueness) {
    degenerate(0.0);
  }

  // Fallback: inverse iteration on L - sigma I with a small negative shift.
  const double sigma = -1e-8 * norm;
  SparseMatrix shifted = L - sigma * sparse_identity(static_cast<int>(n));
  Eigen::SparseLU<SparseMatrix> slu;
  slu.compute(shifted);
  if (slu.info() != Eigen::Success) throw ConvergenceError("steady state: shifted factorization failed");
  StateVector v = vectorize(DenseMatrix::Identity(d, d) / static_cast<double>(d));
  double res = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.max_iterations; ++k) {
    v = slu.solve(v);
    v /= v.norm();
    DenseMatrix rho = to_density(v, d);
    res = residual_of(rho);
    if (res <= tol) return {QuantumState::mixed(Lv.space(), std::move(rho), 1e-8), res, norm, 0.0,
                            "shifted inverse iteration"};
  }
  std::ostringstream os;
  os << "steady state did not converge: residual " << res << " above " << tol;
  throw ConvergenceError(os.str());
}

QuantumState steady_state(const LindbladModel& model, const SteadyStateOptions& opt) {
  return steady_state_report(build_liouvillian(model, opt.liouvillian), opt).state;
}

}  // namespace catpump
