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

#include "catstab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>
#include <vector>

#include "catstab/parallel.hpp"
#include "catstab/warnings.hpp"

namespace catstab {

double fidelity(const DensityMatrix& rho, const StateVector& target) {
  if (rho.layout != target.layout)
    throw LayoutError("fidelity: state layout " + rho.layout.to_string() +
                      " does not match target layout " +
                      target.layout.to_string());
  Complex val = (target.amps.adjoint() * rho.mat * target.amps)(0);
  double f = val.real();
  if (f < -1e-8 || f > 1.0 + 1e-8) {
    std::ostringstream msg;
    msg << "fidelity " << f << " outside [0,1] beyond tolerance; "
        << "input is not a physical density matrix";
    warn(msg.str());
  }
  return std::clamp(f, 0.0, 1.0);
}

namespace {

void require_single_mode(const DensityMatrix& rho, const char* what) {
  if (rho.layout.num_modes() != 1)
    throw LayoutError(std::string(what) + ": expected a single-mode state, "
                      "got layout " + rho.layout.to_string() +
                      " (partial-trace first)");
}

}  // namespace

Eigen::VectorXd photon_pmf(const DensityMatrix& rho) {
  require_single_mode(rho, "photon_pmf");
  return rho.mat.diagonal().real();
}

double mean_parity(const DensityMatrix& rho) {
  Eigen::VectorXd pmf = photon_pmf(rho);
  double p = 0;
  for (long n = 0; n < pmf.size(); ++n) p += (n % 2 == 0 ? 1.0 : -1.0) * pmf(n);
  return p;
}

double mean_photon(const DensityMatrix& rho) {
  Eigen::VectorXd pmf = photon_pmf(rho);
  double n_mean = 0;
  for (long n = 0; n < pmf.size(); ++n) n_mean += double(n) * pmf(n);
  return n_mean;
}

// --- Wigner -----------------------------------------------------------------

double WignerGrid::at_origin() const {
  int i0 = 0, j0 = 0;
  for (int i = 1; i < x_axis.size(); ++i)
    if (std::abs(x_axis(i)) < std::abs(x_axis(i0))) i0 = i;
  for (int j = 1; j < p_axis.size(); ++j)
    if (std::abs(p_axis(j)) < std::abs(p_axis(j0))) j0 = j;
  return values(i0, j0);
}

double WignerGrid::integral() const {
  double dx = x_axis.size() > 1 ? x_axis(1) - x_axis(0) : 1.0;
  double dp = p_axis.size() > 1 ? p_axis(1) - p_axis(0) : 1.0;
  return values.sum() * dx * dp;
}

void WignerGrid::to_csv(std::ostream& out) const {
  char buf[96];
  out << "x,p,w\r\n";
  for (int i = 0; i < x_axis.size(); ++i)
    for (int j = 0; j < p_axis.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\r\n", x_axis(i),
                    p_axis(j), values(i, j));
      out << buf;
    }
}

WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& spec) {
  require_single_mode(rho, "wigner");
  if (spec.nx < 1 || spec.np < 1 || spec.pad < 0 || spec.max_dim < 0 ||
      spec.x_max < spec.x_min || spec.p_max < spec.p_min)
    throw InvalidArgumentError("wigner: malformed grid spec");

  const int dim = static_cast<int>(rho.layout.total());
  const double xc = std::max(std::abs(spec.x_min), std::abs(spec.x_max));
  const double pc = std::max(std::abs(spec.p_min), std::abs(spec.p_max));

  // Working dimension.  Displacing a state supported on the lowest n_supp
  // levels by x then by p moves it up to roughly (sqrt(n_supp) + x + p)^2;
  // the margin of 3 in amplitude keeps the clipped tail far below 1e-6.
  Eigen::VectorXd pmf = rho.mat.diagonal().real();
  int n_supp = 1;
  double tail = 0;
  for (int n = dim - 1; n >= 0; --n) {
    tail += std::max(pmf(n), 0.0);
    if (tail > 1e-12) {
      n_supp = n + 1;
      break;
    }
  }
  double amp = std::sqrt(double(n_supp)) + xc + pc + 3.0;
  int needed = static_cast<int>(std::ceil(amp * amp));
  int ceiling = spec.max_dim > 0 ? spec.max_dim : 1024;
  const int dimw =
      std::max(dim, std::min(std::max(dim + spec.pad, needed), ceiling));

  Eigen::MatrixXcd rho_pad = Eigen::MatrixXcd::Zero(dimw, dimw);
  rho_pad.topLeftCorner(dim, dim) = rho.mat;

  WignerGrid grid;
  grid.x_axis.resize(spec.nx);
  grid.p_axis.resize(spec.np);
  for (int i = 0; i < spec.nx; ++i)
    grid.x_axis(i) =
        spec.nx == 1 ? spec.x_min
                     : spec.x_min + (spec.x_max - spec.x_min) * i / (spec.nx - 1);
  for (int j = 0; j < spec.np; ++j)
    grid.p_axis(j) =
        spec.np == 1 ? spec.p_min
                     : spec.p_min + (spec.p_max - spec.p_min) * j / (spec.np - 1);
  grid.values.resize(spec.nx, spec.np);

  // D(x + i p) = D(x) D(i p) e^{i x p}; the phase cancels in D rho D^dag, so
  // each grid point is a contraction of two one-axis pieces:
  //   W = (2/pi) Tr[Dx (Dp rho Dp^dag) Dx^dag P] = (2/pi) Tr[M_p K_x],
  //   M_p = Dp rho Dp^dag,  K_x = Dx^dag P Dx.
  // Both one-axis families come from fixed Hermitian generators,
  //   D(x) = exp(-i x A_x), A_x = i(a^dag - a),   eigenpairs (V, lam)
  //   D(ip) = exp(+i p A_p), A_p = a^dag + a,     eigenpairs (Q, mu)
  // so one eigendecomposition per axis replaces a matrix exponential per
  // grid point.  Working in the V basis, K_x is a pure phase mask on
  // Pt = V^dag P V, and the x sweep becomes one small matrix product per p:
  //   W(x_i, p_j) = (2/pi) sum_{mn} M~_pj(m,n) Pt(n,m) e^{i x_i (lam_n - lam_m)}.
  Eigen::MatrixXcd gen_x = Eigen::MatrixXcd::Zero(dimw, dimw);
  Eigen::MatrixXcd gen_p = Eigen::MatrixXcd::Zero(dimw, dimw);
  for (int n = 0; n + 1 < dimw; ++n) {
    double r = std::sqrt(double(n + 1));
    gen_x(n + 1, n) = Complex(0, r);
    gen_x(n, n + 1) = Complex(0, -r);
    gen_p(n + 1, n) = r;
    gen_p(n, n + 1) = r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_x(gen_x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_p(gen_p);
  const Eigen::MatrixXcd& v = es_x.eigenvectors();
  const Eigen::VectorXd lam = es_x.eigenvalues();
  const Eigen::MatrixXcd& q = es_p.eigenvectors();
  const Eigen::VectorXd mu = es_p.eigenvalues();

  Eigen::VectorXd parity_sign(dimw);
  for (int n = 0; n < dimw; ++n) parity_sign(n) = (n % 2 == 0) ? 1.0 : -1.0;
  const Eigen::MatrixXcd pt_t =
      (v.adjoint() * (parity_sign.asDiagonal() * v)).transpose();
  const Eigen::MatrixXcd basis_vq = v.adjoint() * q;
  const Eigen::MatrixXcd rho_q = q.adjoint() * rho_pad * q;

  // U(m, i) = exp(i x_i lam_m); the conjugate pair implements the phase mask.
  Eigen::MatrixXcd u(dimw, spec.nx);
  for (int i = 0; i < spec.nx; ++i)
    for (int m = 0; m < dimw; ++m)
      u(m, i) = std::exp(Complex(0, grid.x_axis(i) * lam(m)));
  const Eigen::MatrixXcd u_conj = u.conjugate();

  std::vector<double> imag_residue(spec.np, 0.0);
  parallel_for(spec.np, [&](std::int64_t j) {
    Eigen::VectorXcd ep(dimw);
    for (int m = 0; m < dimw; ++m)
      ep(m) = std::exp(Complex(0, grid.p_axis(j) * mu(m)));
    Eigen::MatrixXcd shifted = ep.asDiagonal() * rho_q;
    shifted = shifted * ep.conjugate().asDiagonal();
    Eigen::MatrixXcd m_p = basis_vq * shifted * basis_vq.adjoint();
    Eigen::MatrixXcd contracted = m_p.cwiseProduct(pt_t) * u;
    for (int i = 0; i < spec.nx; ++i) {
      Complex w = (2.0 / std::numbers::pi) *
                  (u_conj.col(i).transpose() * contracted.col(i))(0);
      imag_residue[j] = std::max(imag_residue[j], std::abs(w.imag()));
      grid.values(i, j) = w.real();
    }
  });

  double max_imag = 0;
  for (double r : imag_residue) max_imag = std::max(max_imag, r);
  if (max_imag >= 1e-10) {
    std::ostringstream msg;
    msg << "wigner: imaginary residue " << max_imag
        << " discarded (input likely not Hermitian)";
    warn(msg.str());
  }

  // Truncation check at the most displaced corner.  A clipped tail shows up
  // as weight stuck in the top levels or as missing displaced energy
  // (<n> after a displacement by beta is <n> + |beta|^2 + 2 Re[conj(beta)<a>]).
  Eigen::VectorXcd exc(dimw), exp_(dimw);
  for (int m = 0; m < dimw; ++m) {
    exc(m) = std::exp(Complex(0, -xc * lam(m)));
    exp_(m) = std::exp(Complex(0, pc * mu(m)));
  }
  Eigen::MatrixXcd d_corner =
      (v * exc.asDiagonal() * v.adjoint()) * (q * exp_.asDiagonal() * q.adjoint());
  Eigen::MatrixXcd displaced = d_corner * rho_pad * d_corner.adjoint();
  double top = 0, n_actual = 0, n_in = 0;
  Complex a_in = 0;
  for (int n = std::max(0, dimw - 2); n < dimw; ++n)
    top += displaced(n, n).real();
  for (int n = 0; n < dimw; ++n) n_actual += n * displaced(n, n).real();
  for (int n = 0; n < dim; ++n) n_in += n * pmf(n);
  for (int n = 0; n + 1 < dim; ++n)
    a_in += std::sqrt(double(n + 1)) * rho.mat(n + 1, n);
  double n_expect = n_in + xc * xc + pc * pc +
                    2.0 * (Complex(xc, -pc) * a_in).real();
  if (top > 1e-6 || n_expect - n_actual > 1e-6 * std::max(1.0, n_expect)) {
    std::ostringstream msg;
    msg << "wigner: displacement to the grid corner loses tail weight "
        << "(top levels hold " << top << ", displaced <n> " << n_actual
        << " vs expected " << n_expect
        << "); raise the truncation, padding, or max_dim";
    warn(msg.str());
  }

  return grid;
}

}  // namespace catstab
