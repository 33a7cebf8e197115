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

#include "catpump/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace catpump {

namespace {

using Triplet = Eigen::Triplet<cplx>;

SparseMatrix sparse_identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrix from_diagonal(const std::vector<cplx>& diag) {
  const int n = static_cast<int>(diag.size());
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (diag[i] != cplx{}) t.emplace_back(i, i, diag[i]);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix local_annihilation(int n) {
  std::vector<Triplet> t;
  for (int k = 1; k < n; ++k) t.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

// Full-space vector with the mode in local state `local` and every other
// mode in vacuum.
StateVector embed_local_vector(const FockSpace& space, std::string_view mode,
                               const StateVector& local) {
  const int idx = space.index(mode);
  const int after = space.dim_after(idx);
  StateVector psi = StateVector::Zero(space.dim());
  for (int n = 0; n < local.size(); ++n) psi(n * after) = local(n);
  return psi;
}

// e^{-|a|^2/2} a^n / sqrt(n!) for n < dim, built iteratively.
StateVector coherent_amplitudes(int dim, cplx alpha) {
  StateVector c(dim);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

void check_guard(std::string_view mode, int dim, cplx alpha, double guard) {
  if (std::norm(alpha) > guard * dim) {
    std::ostringstream os;
    os << "truncation guard violated on mode '" << mode << "': |alpha|^2 = " << std::norm(alpha)
       << " exceeds " << guard << " * N = " << guard * dim;
    throw TruncationError(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------- FockSpace

FockSpace::FockSpace(std::vector<Mode> modes) : modes_(std::move(modes)) {
  std::set<std::string> seen;
  dim_ = 1;
  for (const auto& m : modes_) {
    if (m.dim < 1) throw InvalidModelError("mode '" + m.label + "' has dimension < 1");
    if (!seen.insert(m.label).second) throw InvalidModelError("duplicate mode label '" + m.label + "'");
    dim_ *= m.dim;
  }
}

int FockSpace::index(std::string_view label) const {
  for (int i = 0; i < num_modes(); ++i)
    if (modes_[i].label == label) return i;
  throw UnknownModeError("unknown mode '" + std::string(label) + "' in space " + describe());
}

bool FockSpace::has_mode(std::string_view label) const {
  return std::any_of(modes_.begin(), modes_.end(), [&](const Mode& m) { return m.label == label; });
}

int FockSpace::dim_before(int mode_index) const {
  int d = 1;
  for (int i = 0; i < mode_index; ++i) d *= modes_[i].dim;
  return d;
}

int FockSpace::dim_after(int mode_index) const {
  int d = 1;
  for (int i = mode_index + 1; i < num_modes(); ++i) d *= modes_[i].dim;
  return d;
}

FockSpace FockSpace::subspace(const std::vector<std::string>& labels) const {
  for (const auto& l : labels) index(l);
  std::vector<Mode> kept;
  for (const auto& m : modes_)
    if (std::find(labels.begin(), labels.end(), m.label) != labels.end()) kept.push_back(m);
  return FockSpace(std::move(kept));
}

FockSpace FockSpace::tensor(const FockSpace& other) const {
  std::vector<Mode> all = modes_;
  all.insert(all.end(), other.modes_.begin(), other.modes_.end());
  return FockSpace(std::move(all));
}

std::string FockSpace::describe() const {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < num_modes(); ++i) os << (i ? ", " : "") << modes_[i].label << ":" << modes_[i].dim;
  os << "]";
  return os.str();
}

// ----------------------------------------------------------------- Operator

Operator::Operator(FockSpace space, SparseMatrix matrix, bool hermitian_hint)
    : space_(std::move(space)), matrix_(std::move(matrix)), hermitian_(hermitian_hint) {
  if (matrix_.rows() != space_.dim() || matrix_.cols() != space_.dim()) {
    std::ostringstream os;
    os << "operator is " << matrix_.rows() << "x" << matrix_.cols() << " but space " << space_.describe()
       << " has dimension " << space_.dim();
    throw SpaceMismatchError(os.str());
  }
  matrix_.makeCompressed();
  if (hermitian_) {
    const double defect = hermiticity_defect();
    if (defect >= 1e-12 * std::max(1.0, max_abs(matrix_))) {
      std::ostringstream os;
      os << "operator flagged Hermitian but max|A - A^dagger| = " << defect;
      throw InvalidModelError(os.str());
    }
  }
}

Operator Operator::identity(const FockSpace& space) {
  return Operator(space, sparse_identity(space.dim()), true);
}

Operator Operator::zero(const FockSpace& space) {
  return Operator(space, SparseMatrix(space.dim(), space.dim()), true);
}

Operator Operator::adjoint() const {
  return Operator(space_, SparseMatrix(matrix_.adjoint()), hermitian_);
}

Operator Operator::plus_adjoint() const {
  return Operator(space_, SparseMatrix(matrix_ + SparseMatrix(matrix_.adjoint())), true);
}

Operator Operator::as_hermitian() const { return Operator(space_, matrix_, true); }

double Operator::hermiticity_defect() const {
  return max_abs(SparseMatrix(matrix_ - SparseMatrix(matrix_.adjoint())));
}

void Operator::check_same_space(const Operator& o, const char* what) const {
  if (!(space_ == o.space_))
    throw SpaceMismatchError(std::string(what) + ": operands live on " + space_.describe() + " and " +
                             o.space_.describe());
}

Operator Operator::operator+(const Operator& o) const {
  check_same_space(o, "operator +");
  return Operator(space_, SparseMatrix(matrix_ + o.matrix_), hermitian_ && o.hermitian_);
}

Operator Operator::operator-(const Operator& o) const {
  check_same_space(o, "operator -");
  return Operator(space_, SparseMatrix(matrix_ - o.matrix_), hermitian_ && o.hermitian_);
}

Operator Operator::operator*(const Operator& o) const {
  check_same_space(o, "operator *");
  return Operator(space_, SparseMatrix(matrix_ * o.matrix_), false);
}

Operator Operator::operator*(cplx s) const {
  return Operator(space_, SparseMatrix(matrix_ * s), hermitian_ && s.imag() == 0.0);
}

Operator Operator::operator*(double s) const { return Operator(space_, SparseMatrix(matrix_ * cplx(s)), hermitian_); }

// ------------------------------------------------------------- QuantumState

QuantumState QuantumState::pure(FockSpace space, StateVector psi, double tol) {
  if (psi.size() != space.dim()) throw SpaceMismatchError("state vector size does not match space " + space.describe());
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > tol) {
    std::ostringstream os;
    os << "state vector norm " << norm << " differs from 1 by more than " << tol;
    throw InvalidStateError(os.str());
  }
  return QuantumState(std::move(space), std::move(psi));
}

QuantumState QuantumState::mixed(FockSpace space, DenseMatrix rho, double tol) {
  if (rho.rows() != space.dim() || rho.cols() != space.dim())
    throw SpaceMismatchError("density matrix shape does not match space " + space.describe());
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) {
    std::ostringstream os;
    os << "density matrix not Hermitian: max|rho - rho^dagger| = " << herm;
    throw InvalidStateError(os.str());
  }
  const cplx tr = rho.trace();
  if (std::abs(tr - 1.0) > tol) {
    std::ostringstream os;
    os << "density matrix trace " << tr.real() << "+" << tr.imag() << "i differs from 1";
    throw InvalidStateError(os.str());
  }
  const DenseMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -std::max(tol, 1e-8)) {
    std::ostringstream os;
    os << "density matrix has negative eigenvalue " << min_eig;
    throw InvalidStateError(os.str());
  }
  return QuantumState(std::move(space), std::move(rho));
}

const StateVector& QuantumState::vector() const {
  if (!is_pure()) throw InvalidStateError("state is mixed; no state vector available");
  return std::get<StateVector>(payload_);
}

DenseMatrix QuantumState::density() const {
  if (is_pure()) {
    const auto& psi = std::get<StateVector>(payload_);
    return psi * psi.adjoint();
  }
  return std::get<DenseMatrix>(payload_);
}

// ---------------------------------------------------------------- operators

Operator embed(const FockSpace& space, std::string_view mode, const SparseMatrix& local, bool hermitian_hint) {
  const int idx = space.index(mode);
  if (local.rows() != space.modes()[idx].dim)
    throw SpaceMismatchError("local operator does not match dimension of mode '" + std::string(mode) + "'");
  const SparseMatrix left = sparse_identity(space.dim_before(idx));
  const SparseMatrix right = sparse_identity(space.dim_after(idx));
  SparseMatrix full = Eigen::kroneckerProduct(left, SparseMatrix(Eigen::kroneckerProduct(local, right)));
  return Operator(space, std::move(full), hermitian_hint);
}

Operator annihilation(const FockSpace& space, std::string_view mode) {
  return embed(space, mode, local_annihilation(space.mode_dim(mode)));
}

Operator creation(const FockSpace& space, std::string_view mode) { return annihilation(space, mode).adjoint(); }

Operator number(const FockSpace& space, std::string_view mode) {
  const int n = space.mode_dim(mode);
  std::vector<cplx> d(n);
  for (int k = 0; k < n; ++k) d[k] = static_cast<double>(k);
  return embed(space, mode, from_diagonal(d), true);
}

Operator parity_op(const FockSpace& space, std::string_view mode) {
  const int n = space.mode_dim(mode);
  std::vector<cplx> d(n);
  for (int k = 0; k < n; ++k) d[k] = (k % 2 == 0) ? 1.0 : -1.0;
  return embed(space, mode, from_diagonal(d), true);
}

cplx displacement_element(int m, int n, cplx alpha) {
  if (m < n) return std::conj(displacement_element(n, m, -alpha));
  const double x = std::norm(alpha);
  if (x == 0.0) return m == n ? 1.0 : 0.0;
  const int k = m - n;
  // Generalized Laguerre L_n^{(k)}(x) by upward recurrence.
  double lag_prev = 1.0;
  double lag = 1.0;
  if (n >= 1) {
    lag = 1.0 + k - x;
    for (int j = 1; j < n; ++j) {
      const double next = ((2.0 * j + 1.0 + k - x) * lag - (j + k) * lag_prev) / (j + 1.0);
      lag_prev = lag;
      lag = next;
    }
  }
  if (lag == 0.0) return 0.0;
  const double log_mag = 0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)) + k * std::log(std::sqrt(x)) -
                         0.5 * x + std::log(std::abs(lag));
  const double sign = lag < 0.0 ? -1.0 : 1.0;
  return sign * std::exp(log_mag) * std::polar(1.0, k * std::arg(alpha));
}

DenseMatrix displacement_block(int dim, cplx alpha) {
  DenseMatrix d(dim, dim);
  for (int m = 0; m < dim; ++m)
    for (int n = 0; n < dim; ++n) d(m, n) = displacement_element(m, n, alpha);
  return d;
}

Operator displacement(const FockSpace& space, std::string_view mode, cplx alpha, double guard) {
  const int n = space.mode_dim(mode);
  check_guard(mode, n, alpha, guard);
  const DenseMatrix block = displacement_block(n, alpha);
  return embed(space, mode, block.sparseView(0.0, 0.0));
}

// ------------------------------------------------------------------- states

QuantumState fock_state(const FockSpace& space, std::string_view mode, int n) {
  const int dim = space.mode_dim(mode);
  if (n < 0 || n >= dim) {
    std::ostringstream os;
    os << "Fock level " << n << " outside truncation N = " << dim << " of mode '" << mode << "'";
    throw TruncationError(os.str());
  }
  StateVector local = StateVector::Zero(dim);
  local(n) = 1.0;
  return QuantumState::pure(space, embed_local_vector(space, mode, local));
}

QuantumState coherent_state(const FockSpace& space, std::string_view mode, cplx alpha, double guard) {
  const int dim = space.mode_dim(mode);
  check_guard(mode, dim, alpha, guard);
  StateVector local = coherent_amplitudes(dim, alpha);
  local.normalize();
  return QuantumState::pure(space, embed_local_vector(space, mode, local));
}

QuantumState thermal_state(const FockSpace& space, std::string_view mode, double nbar) {
  if (nbar < 0.0) throw InvalidStateError("thermal population must be non-negative");
  const int dim = space.mode_dim(mode);
  const double ratio = nbar / (1.0 + nbar);
  const double tail = std::pow(ratio, dim);
  if (tail > 1e-6) {
    std::ostringstream os;
    os << "thermal state with nbar = " << nbar << " loses " << tail << " of its weight above N = " << dim;
    throw TruncationError(os.str());
  }
  std::vector<double> p(dim);
  double total = 0.0;
  for (int n = 0; n < dim; ++n) {
    p[n] = std::pow(ratio, n) / (1.0 + nbar);
    total += p[n];
  }
  const int idx = space.index(mode);
  const int after = space.dim_after(idx);
  DenseMatrix rho = DenseMatrix::Zero(space.dim(), space.dim());
  for (int n = 0; n < dim; ++n) rho(n * after, n * after) = p[n] / total;
  return QuantumState::mixed(space, std::move(rho));
}

double cat_normalization(cplx alpha, int sign) {
  return 1.0 / std::sqrt(2.0 * (1.0 + sign * std::exp(-2.0 * std::norm(alpha))));
}

QuantumState cat_state(const FockSpace& space, std::string_view mode, cplx alpha, int sign, double guard) {
  if (sign != 1 && sign != -1) throw InvalidStateError("cat sign must be +1 or -1");
  const int dim = space.mode_dim(mode);
  check_guard(mode, dim, alpha, guard);
  // Work with a^n/sqrt(n!) directly; the e^{-|a|^2/2} factor cancels on
  // normalization and dropping it keeps the alpha -> 0 odd cat finite.
  StateVector local = StateVector::Zero(dim);
  cplx c = 1.0;
  for (int n = 0; n < dim; ++n) {
    if (n > 0) c *= alpha / std::sqrt(static_cast<double>(n));
    const bool even = n % 2 == 0;
    if ((sign == 1) == even) local(n) = 2.0 * c;
  }
  if (local.norm() == 0.0) throw InvalidStateError("odd cat state with alpha = 0 is undefined");
  local.normalize();
  return QuantumState::pure(space, embed_local_vector(space, mode, local));
}

cplx expect(const QuantumState& state, const Operator& op) {
  if (!(state.space() == op.space()))
    throw SpaceMismatchError("expect: state on " + state.space().describe() + ", operator on " +
                             op.space().describe());
  if (state.is_pure()) {
    const auto& psi = state.vector();
    return psi.dot(op.matrix() * psi);
  }
  const DenseMatrix rho = state.density();
  // Tr(A rho) = sum_ij A_ij rho_ji
  cplx acc = 0.0;
  const auto& a = op.matrix();
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) acc += it.value() * rho(it.col(), it.row());
  return acc;
}

Operator tensor(const Operator& a, const Operator& b) {
  FockSpace space = a.space().tensor(b.space());
  SparseMatrix m = Eigen::kroneckerProduct(a.matrix(), b.matrix());
  return Operator(std::move(space), std::move(m), a.hermitian() && b.hermitian());
}

QuantumState ptrace(const QuantumState& state, const std::vector<std::string>& keep) {
  const FockSpace& full = state.space();
  const FockSpace kept = full.subspace(keep);
  const int n_modes = full.num_modes();
  std::vector<bool> is_kept(n_modes);
  for (int i = 0; i < n_modes; ++i) is_kept[i] = kept.has_mode(full.modes()[i].label);

  // Split every full index into (kept index, traced index).
  const int dim = full.dim();
  std::vector<int> kept_idx(dim), traced_idx(dim);
  std::vector<int> digits(n_modes);
  for (int i = 0; i < dim; ++i) {
    int rem = i;
    for (int m = n_modes - 1; m >= 0; --m) {
      digits[m] = rem % full.modes()[m].dim;
      rem /= full.modes()[m].dim;
    }
    int k = 0, t = 0;
    for (int m = 0; m < n_modes; ++m) {
      if (is_kept[m]) k = k * full.modes()[m].dim + digits[m];
      else t = t * full.modes()[m].dim + digits[m];
    }
    kept_idx[i] = k;
    traced_idx[i] = t;
  }

  const DenseMatrix rho = state.density();
  DenseMatrix out = DenseMatrix::Zero(kept.dim(), kept.dim());
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i)
      if (traced_idx[i] == traced_idx[j]) out(kept_idx[i], kept_idx[j]) += rho(i, j);
  out = 0.5 * (out + out.adjoint()).eval();
  return QuantumState::mixed(kept, std::move(out), 1e-8);
}

namespace {

DenseMatrix psd_sqrt(const DenseMatrix& h) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double fidelity(const DenseMatrix& rho, const DenseMatrix& sigma) {
  const DenseMatrix s = psd_sqrt(rho);
  const DenseMatrix inner = s * sigma * s;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return tr * tr;
}

double trace_distance(const DenseMatrix& rho, const DenseMatrix& sigma) {
  const DenseMatrix d = rho - sigma;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace catpump
