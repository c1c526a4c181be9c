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

#include "catstab/fock.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "catstab/warnings.hpp"

namespace catstab {

ModeLayout::ModeLayout(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty())
    throw InvalidDimensionError("mode layout needs at least one mode");
  total_ = 1;
  for (int d : dims_) {
    if (d < 2)
      throw InvalidDimensionError("mode dimension must be >= 2, got " +
                                  std::to_string(d));
    total_ *= d;
  }
}

int ModeLayout::dim(int mode) const {
  if (mode < 0 || mode >= num_modes())
    throw InvalidDimensionError("mode index " + std::to_string(mode) +
                                " out of range for " + to_string());
  return dims_[mode];
}

std::string ModeLayout::to_string() const {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < dims_.size(); ++i)
    out << (i ? "," : "") << dims_[i];
  out << "]";
  return out.str();
}

Operator::Operator(ModeLayout l, Eigen::MatrixXcd m)
    : layout(std::move(l)), mat(std::move(m)) {
  if (mat.rows() != layout.total() || mat.cols() != layout.total())
    throw LayoutError("operator matrix is " + std::to_string(mat.rows()) + "x" +
                      std::to_string(mat.cols()) + " but layout " +
                      layout.to_string() + " has total dimension " +
                      std::to_string(layout.total()));
}

Operator Operator::identity(const ModeLayout& l) {
  return Operator(l, Eigen::MatrixXcd::Identity(l.total(), l.total()));
}

namespace {

void require_same_layout(const ModeLayout& a, const ModeLayout& b,
                         const char* what) {
  if (a != b)
    throw LayoutError(std::string(what) + ": layouts " + a.to_string() +
                      " and " + b.to_string() + " differ");
}

}  // namespace

Operator operator*(const Operator& a, const Operator& b) {
  require_same_layout(a.layout, b.layout, "operator product");
  return Operator(a.layout, a.mat * b.mat);
}

Operator operator+(const Operator& a, const Operator& b) {
  require_same_layout(a.layout, b.layout, "operator sum");
  return Operator(a.layout, a.mat + b.mat);
}

Operator operator-(const Operator& a, const Operator& b) {
  require_same_layout(a.layout, b.layout, "operator difference");
  return Operator(a.layout, a.mat - b.mat);
}

Operator operator*(Complex c, const Operator& a) {
  return Operator(a.layout, c * a.mat);
}

Operator operator*(double c, const Operator& a) {
  return Operator(a.layout, c * a.mat);
}

StateVector::StateVector(ModeLayout l, Eigen::VectorXcd a)
    : layout(std::move(l)), amps(std::move(a)) {
  if (amps.size() != layout.total())
    throw LayoutError("state vector length " + std::to_string(amps.size()) +
                      " does not match layout " + layout.to_string());
}

StateVector operator*(const Operator& op, const StateVector& psi) {
  require_same_layout(op.layout, psi.layout, "operator application");
  return StateVector(psi.layout, op.mat * psi.amps);
}

Complex inner(const StateVector& a, const StateVector& b) {
  require_same_layout(a.layout, b.layout, "inner product");
  return a.amps.dot(b.amps);  // Eigen dot conjugates the left argument
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  std::vector<int> dims = a.layout.dims();
  dims.insert(dims.end(), b.layout.dims().begin(), b.layout.dims().end());
  Eigen::VectorXcd amps = Eigen::kroneckerProduct(a.amps, b.amps);
  return StateVector(ModeLayout(std::move(dims)), std::move(amps));
}

DensityMatrix::DensityMatrix(ModeLayout l, Eigen::MatrixXcd m)
    : layout(std::move(l)), mat(std::move(m)) {
  if (mat.rows() != layout.total() || mat.cols() != layout.total())
    throw LayoutError("density matrix size does not match layout " +
                      layout.to_string());
}

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
  return DensityMatrix(psi.layout, psi.amps * psi.amps.adjoint());
}

DensityMatrix::Validity DensityMatrix::validate() const {
  Validity v;
  v.herm_err = (mat - mat.adjoint()).cwiseAbs().maxCoeff();
  v.trace_err = std::abs(mat.trace() - Complex(1.0));
  Eigen::MatrixXcd sym = 0.5 * (mat + mat.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym,
                                                     Eigen::EigenvaluesOnly);
  v.min_eig = es.eigenvalues().minCoeff();
  return v;
}

// --- single-mode building blocks -------------------------------------------

namespace {

void require_dim(int dim) {
  if (dim < 2)
    throw InvalidDimensionError("Fock dimension must be >= 2, got " +
                                std::to_string(dim));
}

}  // namespace

Operator destroy(int dim) {
  require_dim(dim);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(double(n));
  return Operator(ModeLayout::single(dim), std::move(m));
}

Operator number(int dim) {
  require_dim(dim);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = double(n);
  return Operator(ModeLayout::single(dim), std::move(m));
}

Operator parity(int dim) {
  require_dim(dim);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return Operator(ModeLayout::single(dim), std::move(m));
}

Operator jump(int m, int n, int dim) {
  require_dim(dim);
  if (m < 0 || m >= dim || n < 0 || n >= dim)
    throw InvalidDimensionError("jump indices (" + std::to_string(m) + "," +
                                std::to_string(n) + ") outside dimension " +
                                std::to_string(dim));
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(dim, dim);
  mat(m, n) = 1.0;
  return Operator(ModeLayout::single(dim), std::move(mat));
}

Operator fock_projector(int n, int dim) { return jump(n, n, dim); }

Operator displacement(Complex alpha, int dim) {
  require_dim(dim);
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) {
    double r = std::sqrt(double(n));
    gen(n, n - 1) = alpha * r;               // alpha a^dagger
    gen(n - 1, n) = -std::conj(alpha) * r;   // -conj(alpha) a
  }
  return Operator(ModeLayout::single(dim), gen.exp());
}

StateVector fock_state(int n, int dim) {
  require_dim(dim);
  if (n < 0 || n >= dim)
    throw InvalidDimensionError("Fock index " + std::to_string(n) +
                                " outside dimension " + std::to_string(dim));
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(dim);
  amps(n) = 1.0;
  return StateVector(ModeLayout::single(dim), std::move(amps));
}

namespace {

// Unnormalized coherent amplitudes alpha^n / sqrt(n!), computed recursively.
Eigen::VectorXcd coherent_amps(Complex alpha, int dim) {
  Eigen::VectorXcd amps(dim);
  amps(0) = 1.0;
  for (int n = 1; n < dim; ++n)
    amps(n) = amps(n - 1) * alpha / std::sqrt(double(n));
  return amps;
}

void check_tail(double abs2, int dim, const char* what) {
  double tail = poisson_tail(abs2, dim);
  if (tail >= 1e-8) {
    std::ostringstream msg;
    msg << what << ": truncation at dimension " << dim
        << " leaves Poisson tail weight " << tail << " (threshold 1e-8)";
    warn(msg.str());
  }
}

}  // namespace

StateVector coherent_state(Complex alpha, int dim) {
  require_dim(dim);
  check_tail(std::norm(alpha), dim, "coherent_state");
  Eigen::VectorXcd amps = coherent_amps(alpha, dim);
  amps /= amps.norm();
  return StateVector(ModeLayout::single(dim), std::move(amps));
}

StateVector cat_state(Complex alpha, CatParity parity_sign, int dim) {
  require_dim(dim);
  if (alpha == Complex(0.0) && parity_sign == CatParity::odd)
    throw InvalidArgumentError(
        "odd cat state is the zero vector at alpha = 0");
  check_tail(std::norm(alpha), dim, "cat_state");
  Eigen::VectorXcd amps = coherent_amps(alpha, dim);
  // |alpha> +/- |-alpha>: even (odd) terms survive for +, (-).
  int keep = (parity_sign == CatParity::even) ? 0 : 1;
  for (int n = 0; n < dim; ++n)
    if (n % 2 != keep) amps(n) = 0.0;
  amps /= amps.norm();
  return StateVector(ModeLayout::single(dim), std::move(amps));
}

// --- multi-mode plumbing ----------------------------------------------------

Operator tensor(const Operator& a, const Operator& b) {
  std::vector<int> dims = a.layout.dims();
  dims.insert(dims.end(), b.layout.dims().begin(), b.layout.dims().end());
  Eigen::MatrixXcd mat = Eigen::kroneckerProduct(a.mat, b.mat);
  return Operator(ModeLayout(std::move(dims)), std::move(mat));
}

Operator embed(const Operator& op, int mode_index, const ModeLayout& layout) {
  if (mode_index < 0 || mode_index >= layout.num_modes())
    throw LayoutError("embed: mode index " + std::to_string(mode_index) +
                      " out of range for " + layout.to_string());
  if (op.layout.num_modes() != 1 ||
      op.layout.total() != layout.dim(mode_index))
    throw LayoutError("embed: operator dimension " +
                      std::to_string(op.layout.total()) +
                      " does not match mode " + std::to_string(mode_index) +
                      " of " + layout.to_string());
  long pre = 1, post = 1;
  for (int m = 0; m < mode_index; ++m) pre *= layout.dim(m);
  for (int m = mode_index + 1; m < layout.num_modes(); ++m)
    post *= layout.dim(m);
  Eigen::MatrixXcd mat = Eigen::kroneckerProduct(
      Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(pre, pre)),
      Eigen::MatrixXcd(Eigen::kroneckerProduct(
          op.mat, Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(post, post)))));
  return Operator(layout, std::move(mat));
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& keep) {
  const ModeLayout& layout = rho.layout;
  if (keep.empty())
    throw InvalidArgumentError("partial_trace: keep list is empty");
  std::vector<bool> kept(layout.num_modes(), false);
  for (int m : keep) {
    if (m < 0 || m >= layout.num_modes())
      throw InvalidArgumentError("partial_trace: mode index " +
                                 std::to_string(m) + " out of range for " +
                                 layout.to_string());
    if (kept[m])
      throw InvalidArgumentError("partial_trace: duplicate mode index " +
                                 std::to_string(m));
    kept[m] = true;
  }

  const int nm = layout.num_modes();
  std::vector<long> stride(nm);
  long s = 1;
  for (int m = nm - 1; m >= 0; --m) {
    stride[m] = s;
    s *= layout.dim(m);
  }

  std::vector<int> kept_modes;  // in original order
  for (int m = 0; m < nm; ++m)
    if (kept[m]) kept_modes.push_back(m);
  std::vector<int> out_dims;
  for (int m : kept_modes) out_dims.push_back(layout.dim(m));
  ModeLayout out_layout(out_dims);

  std::vector<long> out_stride(kept_modes.size());
  long os = 1;
  for (int k = static_cast<int>(kept_modes.size()) - 1; k >= 0; --k) {
    out_stride[k] = os;
    os *= layout.dim(kept_modes[k]);
  }

  const long D = layout.total();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(out_layout.total(),
                                                out_layout.total());
  std::vector<int> mi(nm), mj(nm);
  for (long i = 0; i < D; ++i) {
    long r = i;
    for (int m = 0; m < nm; ++m) {
      mi[m] = static_cast<int>(r / stride[m]);
      r %= stride[m];
    }
    for (long j = 0; j < D; ++j) {
      long c = j;
      bool diag = true;
      for (int m = 0; m < nm; ++m) {
        mj[m] = static_cast<int>(c / stride[m]);
        c %= stride[m];
        if (!kept[m] && mj[m] != mi[m]) {
          diag = false;
          break;
        }
      }
      if (!diag) continue;
      long oi = 0, oj = 0;
      for (std::size_t k = 0; k < kept_modes.size(); ++k) {
        oi += mi[kept_modes[k]] * out_stride[k];
        oj += mj[kept_modes[k]] * out_stride[k];
      }
      out(oi, oj) += rho.mat(i, j);
    }
  }
  return DensityMatrix(out_layout, std::move(out));
}

// --- sizing helpers ---------------------------------------------------------

double poisson_tail(double lambda, int from_n) {
  if (from_n <= 0) return 1.0;
  if (lambda == 0.0) return 0.0;
  // 1 - CDF, summed from the small end for accuracy.
  double term = std::exp(-lambda), cdf = term;
  for (int n = 1; n < from_n; ++n) {
    term *= lambda / n;
    cdf += term;
  }
  double tail = 1.0 - cdf;
  // Guard against cancellation for very small tails: sum the tail directly.
  if (tail < 1e-12) {
    double t = term, sum = 0.0;
    for (int n = from_n; n < from_n + 200; ++n) {
      t *= lambda / n;
      sum += t;
      if (t < sum * 1e-18) break;
    }
    tail = sum;
  }
  return std::max(tail, 0.0);
}

int default_storage_dim(double alpha_abs, double tail_tol) {
  double lambda = alpha_abs * alpha_abs;
  int n = 2;
  while (poisson_tail(lambda, n) >= tail_tol && n < 10000) ++n;
  return n + 4;  // safety margin over the bare tail criterion
}

}  // namespace catstab
