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

// Truncated Fock spaces, operators and states.
//
// Multi-mode spaces are ordered: the first mode is the leftmost Kronecker
// factor, so for a (readout, storage) space the storage annihilation
// operator is I_r (x) a.

#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "catpump/error.hpp"

namespace catpump {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using DenseMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

struct Mode {
  std::string label;
  int dim = 1;
  bool operator==(const Mode&) const = default;
};

class FockSpace {
 public:
  FockSpace() = default;
  explicit FockSpace(std::vector<Mode> modes);
  static FockSpace single(std::string label, int dim) { return FockSpace({{std::move(label), dim}}); }

  int dim() const { return dim_; }
  std::span<const Mode> modes() const { return modes_; }
  int num_modes() const { return static_cast<int>(modes_.size()); }

  /// Position of `label` in the mode list; throws UnknownModeError.
  int index(std::string_view label) const;
  int mode_dim(std::string_view label) const { return modes_[index(label)].dim; }
  bool has_mode(std::string_view label) const;

  /// Product of the dimensions of the modes to the left / right of `mode_index`.
  int dim_before(int mode_index) const;
  int dim_after(int mode_index) const;

  /// Sub-space made of `labels`, kept in this space's order.
  FockSpace subspace(const std::vector<std::string>& labels) const;
  /// Tensor product space (this modes first, then `other`'s).
  FockSpace tensor(const FockSpace& other) const;

  std::string describe() const;
  bool operator==(const FockSpace& o) const { return modes_ == o.modes_; }

 private:
  std::vector<Mode> modes_;
  int dim_ = 1;
};

/// Sparse complex operator on a FockSpace.
class Operator {
 public:
  Operator(FockSpace space, SparseMatrix matrix, bool hermitian_hint = false);

  static Operator identity(const FockSpace& space);
  static Operator zero(const FockSpace& space);

  const FockSpace& space() const { return space_; }
  const SparseMatrix& matrix() const { return matrix_; }
  bool hermitian() const { return hermitian_; }
  int dim() const { return space_.dim(); }
  DenseMatrix dense() const { return DenseMatrix(matrix_); }
  cplx element(int row, int col) const { return matrix_.coeff(row, col); }

  Operator adjoint() const;
  /// Returns X + X^dagger, which is Hermitian to the last bit.
  Operator plus_adjoint() const;
  /// Re-checks Hermiticity and marks the operator as such.
  Operator as_hermitian() const;

  Operator operator+(const Operator& o) const;
  Operator operator-(const Operator& o) const;
  Operator operator*(const Operator& o) const;
  Operator operator*(cplx s) const;
  Operator operator*(double s) const;
  friend Operator operator*(cplx s, const Operator& a) { return a * s; }
  friend Operator operator*(double s, const Operator& a) { return a * s; }

  /// max |A - A^dagger|
  double hermiticity_defect() const;

 private:
  void check_same_space(const Operator& o, const char* what) const;

  FockSpace space_;
  SparseMatrix matrix_;
  bool hermitian_ = false;
};

/// Pure state vector or density matrix. Construction validates the state
/// invariants with tolerance `tol` (norm/trace/Hermiticity) and
/// max(tol, 1e-8) for the most negative eigenvalue.
class QuantumState {
 public:
  static QuantumState pure(FockSpace space, StateVector psi, double tol = 1e-10);
  static QuantumState mixed(FockSpace space, DenseMatrix rho, double tol = 1e-10);

  const FockSpace& space() const { return space_; }
  bool is_pure() const { return std::holds_alternative<StateVector>(payload_); }
  const StateVector& vector() const;
  DenseMatrix density() const;
  int dim() const { return space_.dim(); }

 private:
  QuantumState(FockSpace space, std::variant<StateVector, DenseMatrix> payload)
      : space_(std::move(space)), payload_(std::move(payload)) {}

  FockSpace space_;
  std::variant<StateVector, DenseMatrix> payload_;
};

/// Default truncation guard: operations on coherent-like states need
/// N_m >= 4 |alpha|^2.
inline constexpr double kTruncationGuard = 0.25;

/// Lifts a single-mode matrix onto `mode` of `space` (identity elsewhere).
Operator embed(const FockSpace& space, std::string_view mode, const SparseMatrix& local,
               bool hermitian_hint = false);

Operator annihilation(const FockSpace& space, std::string_view mode);
Operator creation(const FockSpace& space, std::string_view mode);
Operator number(const FockSpace& space, std::string_view mode);
Operator parity_op(const FockSpace& space, std::string_view mode);

/// <m|D(alpha)|n> from the associated-Laguerre closed form; exact for any
/// m, n independently of any truncation.
cplx displacement_element(int m, int n, cplx alpha);
/// The leading dim x dim block of D(alpha).
DenseMatrix displacement_block(int dim, cplx alpha);
/// D(alpha) on `mode`; throws TruncationError if |alpha|^2 > guard * N_m.
Operator displacement(const FockSpace& space, std::string_view mode, cplx alpha,
                      double guard = kTruncationGuard);

/// States on `mode`; every other mode of `space` is left in vacuum.
QuantumState fock_state(const FockSpace& space, std::string_view mode, int n);
QuantumState coherent_state(const FockSpace& space, std::string_view mode, cplx alpha,
                            double guard = kTruncationGuard);
QuantumState thermal_state(const FockSpace& space, std::string_view mode, double nbar);
/// N(|alpha> + sign |-alpha>) with sign = +1 (even) or -1 (odd).
QuantumState cat_state(const FockSpace& space, std::string_view mode, cplx alpha, int sign,
                       double guard = kTruncationGuard);

/// Analytic cat normalization 1/sqrt(2 (1 +- exp(-2|alpha|^2))).
double cat_normalization(cplx alpha, int sign);

cplx expect(const QuantumState& state, const Operator& op);
Operator tensor(const Operator& a, const Operator& b);
QuantumState ptrace(const QuantumState& state, const std::vector<std::string>& keep);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DenseMatrix& rho, const DenseMatrix& sigma);
/// (1/2) || rho - sigma ||_1
double trace_distance(const DenseMatrix& rho, const DenseMatrix& sigma);

}  // namespace catpump
