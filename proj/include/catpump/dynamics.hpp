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

// Lindblad generators, time evolution and steady states.
//
// Density matrices are vectorized by stacking columns, vec(A X B) =
// (B^T (x) A) vec(X), so the generator of
//   d rho/dt = -i [H, rho] + sum_k c_k rho c_k^dag - 1/2 {c_k^dag c_k, rho}
// is  -i (I (x) H - H^T (x) I) + sum_k conj(c_k) (x) c_k
//     - 1/2 I (x) c_k^dag c_k - 1/2 (c_k^dag c_k)^T (x) I.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "catpump/fock.hpp"
#include "catpump/ode.hpp"

namespace catpump {

class LindbladModel {
 public:
  /// `collapse_ops` carry their rates (sqrt(kappa) c). Throws
  /// InvalidModelError if the Hamiltonian is not Hermitian and
  /// SpaceMismatchError if an operator lives on another space.
  LindbladModel(Operator hamiltonian, std::vector<Operator> collapse_ops);

  const FockSpace& space() const { return hamiltonian_.space(); }
  const Operator& hamiltonian() const { return hamiltonian_; }
  const std::vector<Operator>& collapse_ops() const { return collapse_; }
  int dim() const { return hamiltonian_.dim(); }

 private:
  Operator hamiltonian_;
  std::vector<Operator> collapse_;
};

struct LiouvillianOptions {
  /// Largest superoperator side dim^2 accepted before DimensionOverflowError.
  long max_superoperator_dim = 250'000;
  /// Below this superoperator side the product runs on a dense copy.
  long dense_below = 64;
};

class Liouvillian {
 public:
  Liouvillian(FockSpace space, SparseMatrix superop, long dense_below = 64);

  const FockSpace& space() const { return space_; }
  const SparseMatrix& matrix() const { return superop_; }
  long size() const { return superop_.rows(); }
  bool dense() const { return dense_.has_value(); }

  /// out = L v
  void apply(const StateVector& v, StateVector& out) const;
  StateVector apply(const DenseMatrix& rho) const;

  /// Largest absolute column sum of L.
  double norm1() const;

 private:
  FockSpace space_;
  SparseMatrix superop_;
  std::optional<DenseMatrix> dense_;
};

Liouvillian build_liouvillian(const LindbladModel& model, const LiouvillianOptions& opt = {});

/// Direct evaluation of -i[H, rho] + sum_k D[c_k] rho.
DenseMatrix lindblad_rhs(const LindbladModel& model, const DenseMatrix& rho);

StateVector vectorize(const DenseMatrix& rho);
DenseMatrix unvectorize(const StateVector& v, int dim);

struct EvolveOptions {
  ode::Options ode;
  /// Tolerance handed to QuantumState validation of the output states.
  double state_tol = 1e-6;
  LiouvillianOptions liouvillian;
};

struct EvolutionResult {
  std::vector<double> times;  // s
  std::vector<QuantumState> states;
  ode::Stats stats;
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
};

/// Integrates from `initial` at t = 0 and records the state at every entry
/// of `times` (seconds, non-decreasing, >= 0).
EvolutionResult evolve(const Liouvillian& L, const QuantumState& initial, const std::vector<double>& times,
                       const EvolveOptions& opt = {});
EvolutionResult evolve(const LindbladModel& model, const QuantumState& initial, const std::vector<double>& times,
                       const EvolveOptions& opt = {});

struct SteadyStateOptions {
  /// Accept when ||L vec(rho)||_2 <= residual_tol * ||L||_1.
  double residual_tol = 1e-9;
  /// The smallest singular value of the bordered system must exceed this
  /// multiple of the absolute residual.
  double uniqueness_factor = 1e3;
  bool check_uniqueness = true;
  int max_iterations = 60;
  LiouvillianOptions liouvillian;
};

struct SteadyStateReport {
  QuantumState state;
  double residual = 0.0;  // ||L vec(rho)||_2
  double norm = 0.0;      // ||L||_1
  /// Smallest singular value of L with one row replaced by the trace
  /// functional; zero when the null space of L is degenerate.
  double gap_estimate = 0.0;
  std::string method;  // "trace-row LU" or "shifted inverse iteration"
};

/// Throws DegenerateSteadyStateError when the null space is not one
/// dimensional and ConvergenceError when no method reaches the tolerance.
SteadyStateReport steady_state_report(const Liouvillian& L, const SteadyStateOptions& opt = {});
QuantumState steady_state(const LindbladModel& model, const SteadyStateOptions& opt = {});

}  // namespace catpump
