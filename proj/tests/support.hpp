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

// Shared helpers for the unit tests: seeded generators and dense oracles.

#pragma once

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "catpump/fock.hpp"

namespace testsupport {

using catpump::cplx;
using catpump::DenseMatrix;

inline DenseMatrix random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

inline DenseMatrix random_hermitian(std::mt19937_64& rng, int n) {
  DenseMatrix m = random_matrix(rng, n);
  return 0.5 * (m + m.adjoint());
}

/// Random density matrix of the given rank (Ginibre construction).
inline DenseMatrix random_density(std::mt19937_64& rng, int n, int rank) {
  std::normal_distribution<double> g;
  DenseMatrix x(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) x(i, j) = cplx(g(rng), g(rng));
  DenseMatrix rho = x * x.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

inline catpump::StateVector random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  catpump::StateVector v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
  return v / v.norm();
}

inline double max_abs(const DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

/// Dense annihilation operator on n levels, written out by hand.
inline DenseMatrix dense_a(int n) {
  DenseMatrix a = DenseMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
  return a;
}

/// Brute-force Kronecker product.
inline DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace testsupport
