// Copyright 2026 The Catstab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Truncated Fock-space states and operators.  Multi-mode layouts follow the
// fixed order (storage, readout 1, readout 2); the flat basis index of
// |n0 n1 n2> is n0*d1*d2 + n1*d2 + n2, matching kron(mode0, mode1, mode2).

#ifndef CATSTAB_FOCK_HPP
#define CATSTAB_FOCK_HPP

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "catstab/errors.hpp"

namespace catstab {

using Complex = std::complex<double>;

// Immutable list of per-mode truncation dimensions.
class ModeLayout {
 public:
  ModeLayout() = default;
  explicit ModeLayout(std::vector<int> dims);
  static ModeLayout single(int dim) { return ModeLayout({dim}); }

  const std::vector<int>& dims() const { return dims_; }
  int dim(int mode) const;
  int num_modes() const { return static_cast<int>(dims_.size()); }
  long total() const { return total_; }

  bool operator==(const ModeLayout& other) const { return dims_ == other.dims_; }
  bool operator!=(const ModeLayout& other) const { return !(*this == other); }

  // "[25]" or "[20,3,3]", for error messages.
  std::string to_string() const;

 private:
  std::vector<int> dims_;
  long total_ = 0;
};

struct Operator {
  ModeLayout layout;
  Eigen::MatrixXcd mat;

  Operator() = default;
  Operator(ModeLayout l, Eigen::MatrixXcd m);

  static Operator identity(const ModeLayout& l);
  Operator adjoint() const { return Operator(layout, mat.adjoint()); }
};

Operator operator*(const Operator& a, const Operator& b);
Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(Complex c, const Operator& a);
Operator operator*(double c, const Operator& a);

struct StateVector {
  ModeLayout layout;
  Eigen::VectorXcd amps;

  StateVector() = default;
  StateVector(ModeLayout l, Eigen::VectorXcd a);

  double norm() const { return amps.norm(); }
};

StateVector operator*(const Operator& op, const StateVector& psi);
Complex inner(const StateVector& a, const StateVector& b);  // <a|b>
StateVector tensor(const StateVector& a, const StateVector& b);

struct DensityMatrix {
  ModeLayout layout;
  Eigen::MatrixXcd mat;

  DensityMatrix() = default;
  DensityMatrix(ModeLayout l, Eigen::MatrixXcd m);
  static DensityMatrix from_pure(const StateVector& psi);

  struct Validity {
    double herm_err;   // max |rho - rho^dagger| entrywise
    double trace_err;  // |Tr rho - 1|
    double min_eig;    // smallest eigenvalue of (rho + rho^dagger)/2
    bool ok() const {
      return herm_err <= 1e-10 && trace_err <= 1e-8 && min_eig >= -1e-8;
    }
  };
  Validity validate() const;
};

// --- single-mode building blocks -------------------------------------------

// Lowering operator: entry (n-1, n) = sqrt(n).
Operator destroy(int dim);
// diag(0, 1, ..., dim-1).
Operator number(int dim);
// diag(+1, -1, +1, ...).
Operator parity(int dim);
// |m><n|.
Operator jump(int m, int n, int dim);
// |n><n|.
Operator fock_projector(int n, int dim);
// exp(alpha a^dagger - conj(alpha) a), dense matrix exponential.
Operator displacement(Complex alpha, int dim);

StateVector fock_state(int n, int dim);

// Truncated and renormalized; emits a warning if the Poisson weight beyond
// dim-1 is not below 1e-8.
StateVector coherent_state(Complex alpha, int dim);

enum class CatParity { even, odd };

// (|alpha> +/- |-alpha>)/normalization; support on even (odd) photon numbers
// only.  The odd cat is undefined at alpha = 0.
StateVector cat_state(Complex alpha, CatParity parity_sign, int dim);

// --- multi-mode plumbing ----------------------------------------------------

Operator tensor(const Operator& a, const Operator& b);
// Identity on every mode except mode_index, where `op` acts.
Operator embed(const Operator& op, int mode_index, const ModeLayout& layout);
// Trace out every mode not listed in `keep`; kept modes stay in order.
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// --- sizing helpers ---------------------------------------------------------

// Poisson(lambda) weight at n >= from_n.
double poisson_tail(double lambda, int from_n);

// Smallest dimension whose Poisson tail (lambda = |alpha|^2) is below
// tail_tol, plus a 4-level safety margin.  alpha = 2 -> 25.
int default_storage_dim(double alpha_abs, double tail_tol = 1e-8);

}  // namespace catstab

#endif  // CATSTAB_FOCK_HPP
