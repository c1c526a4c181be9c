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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "catstab/observables.hpp"
#include "catstab/warnings.hpp"

using namespace catstab;
using std::abs;

namespace {

constexpr double two_over_pi = 0.6366197723675814;

DensityMatrix random_mixed(int dim, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXcd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(dist(gen), dist(gen));
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(ModeLayout::single(dim), rho);
}

// Independent oracle for the cat Wigner function, from coherent-state algebra
// only.  Using D(b)^dag P D(b) = P D(2b):
//   W(b) = (2/pi) <psi| P D(2b) |psi>,  |psi> = (|a> + |-a>)/sqrt(N),
//   N = 2 (1 + e^{-2|a|^2}),
// and expanding into four coherent overlaps:
//   <s a| P D(2b) |s' a> = e^{2 i s' Im(b conj(a))}
//       * exp(-|a|^2/2 - |s' a + 2b|^2/2 - s conj(a) (s' a + 2 b)).
double cat_wigner_oracle(Complex alpha, Complex beta) {
  double n = 2.0 * (1.0 + std::exp(-2.0 * std::norm(alpha)));
  Complex sum = 0;
  for (int s : {+1, -1})
    for (int sp : {+1, -1}) {
      Complex shifted = double(sp) * alpha + 2.0 * beta;
      Complex phase(0.0, 2.0 * sp * (beta * std::conj(alpha)).imag());
      Complex overlap = std::exp(-0.5 * std::norm(alpha) -
                                 0.5 * std::norm(shifted) -
                                 double(s) * std::conj(alpha) * shifted);
      sum += std::exp(phase) * overlap;
    }
  return (2.0 / std::numbers::pi) * (sum / n).real();
}

}  // namespace

TEST_CASE("fidelity of a pure state with itself is one") {
  StateVector cat = cat_state(2.0, CatParity::even, 25);
  DensityMatrix rho = DensityMatrix::from_pure(cat);
  CHECK(abs(fidelity(rho, cat) - 1.0) < 1e-12);
}

TEST_CASE("fidelity of vacuum against the cat equals the c0 weight squared") {
  // |<0|C+_2>|^2 = 1/cosh(4); see the fock-module constants.
  DensityMatrix vac = DensityMatrix::from_pure(fock_state(0, 25));
  StateVector cat = cat_state(2.0, CatParity::even, 25);
  CHECK(abs(fidelity(vac, cat) - 0.03661899347368655) < 1e-10);
}

TEST_CASE("fidelity of the incoherent +/- mixture is (1+e^{-2a^2})/2") {
  StateVector plus = coherent_state(2.0, 25);
  StateVector minus = coherent_state(-2.0, 25);
  Eigen::MatrixXcd mix = 0.5 * (plus.amps * plus.amps.adjoint()) +
                         0.5 * (minus.amps * minus.amps.adjoint());
  DensityMatrix rho(ModeLayout::single(25), mix);
  StateVector cat = cat_state(2.0, CatParity::even, 25);
  CHECK(abs(fidelity(rho, cat) - 0.5001677313139512) < 1e-9);
}

TEST_CASE("fidelity ignores a global phase on the target") {
  DensityMatrix rho = random_mixed(16, 21);
  StateVector psi = coherent_state(1.1, 16);
  StateVector rotated = psi;
  rotated.amps *= std::exp(Complex(0, std::numbers::pi / 3));
  CHECK(abs(fidelity(rho, psi) - fidelity(rho, rotated)) < 1e-14);
}

TEST_CASE("fidelity warns and clips when the state is unphysical") {
  StateVector cat = cat_state(2.0, CatParity::even, 25);
  Eigen::MatrixXcd inflated = (1.0 + 5e-8) * (cat.amps * cat.amps.adjoint());
  DensityMatrix rho(ModeLayout::single(25), inflated);
  WarningCapture capture;
  double f = fidelity(rho, cat);
  CHECK(f == 1.0);
  REQUIRE(capture.messages().size() == 1);
  CHECK(capture.messages()[0].find("outside [0,1]") != std::string::npos);
}

TEST_CASE("fidelity rejects mismatched layouts") {
  DensityMatrix rho = random_mixed(10, 3);
  CHECK_THROWS_AS(fidelity(rho, fock_state(0, 12)), LayoutError);
}

TEST_CASE("vacuum observables are exact") {
  DensityMatrix vac = DensityMatrix::from_pure(fock_state(0, 8));
  CHECK(mean_parity(vac) == 1.0);
  CHECK(mean_photon(vac) == 0.0);
  Eigen::VectorXd pmf = photon_pmf(vac);
  CHECK(pmf(0) == 1.0);
  CHECK(abs(pmf.sum() - 1.0) < 1e-12);
}

TEST_CASE("cat states have definite parity and the closed-form mean photon") {
  DensityMatrix even =
      DensityMatrix::from_pure(cat_state(2.0, CatParity::even, 25));
  DensityMatrix odd =
      DensityMatrix::from_pure(cat_state(2.0, CatParity::odd, 25));
  CHECK(abs(mean_parity(even) - 1.0) < 1e-10);
  CHECK(abs(mean_parity(odd) + 1.0) < 1e-10);
  // 4 (1+e^{-8})/(1-e^{-8}) and 4 (1-e^{-8})/(1+e^{-8}).
  CHECK(abs(mean_photon(odd) - 4.00268460160673) < 1e-6);
  CHECK(abs(mean_photon(even) - 3.997317198956268) < 1e-6);
}

TEST_CASE("single-mode observables reject multi-mode layouts") {
  ModeLayout l({4, 3});
  DensityMatrix joint(l, Eigen::MatrixXcd::Identity(12, 12) / 12.0);
  CHECK_THROWS_AS(mean_parity(joint), LayoutError);
  CHECK_THROWS_AS(photon_pmf(joint), LayoutError);
  CHECK_THROWS_AS(mean_photon(joint), LayoutError);
}

TEST_CASE("photon pmf commutes with tracing out the other mode") {
  std::mt19937 gen(99);
  std::normal_distribution<double> dist;
  ModeLayout l({6, 3});
  Eigen::MatrixXcd g(18, 18);
  for (int i = 0; i < 18; ++i)
    for (int j = 0; j < 18; ++j) g(i, j) = Complex(dist(gen), dist(gen));
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace();
  DensityMatrix joint(l, rho);

  Eigen::VectorXd via_trace = photon_pmf(partial_trace(joint, {0}));
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(6);
  for (int n = 0; n < 6; ++n)
    for (int j = 0; j < 3; ++j) direct(n) += rho(n * 3 + j, n * 3 + j).real();
  CHECK((via_trace - direct).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(abs(via_trace.sum() - 1.0) < 1e-8);
}

TEST_CASE("vacuum Wigner function is the symmetric Gaussian") {
  DensityMatrix vac = DensityMatrix::from_pure(fock_state(0, 12));
  WignerGridSpec spec;
  spec.x_min = -2;
  spec.x_max = 2;
  spec.nx = 9;
  spec.p_min = -2;
  spec.p_max = 2;
  spec.np = 9;
  WignerGrid grid = wigner(vac, spec);
  CHECK(abs(grid.at_origin() - two_over_pi) < 1e-10);
  for (int i = 0; i < spec.nx; ++i)
    for (int j = 0; j < spec.np; ++j) {
      double r2 = grid.x_axis(i) * grid.x_axis(i) +
                  grid.p_axis(j) * grid.p_axis(j);
      CHECK(abs(grid.values(i, j) - two_over_pi * std::exp(-2.0 * r2)) < 1e-8);
    }
}

TEST_CASE("Wigner at the origin reads out the parity") {
  DensityMatrix even =
      DensityMatrix::from_pure(cat_state(2.0, CatParity::even, 25));
  DensityMatrix odd =
      DensityMatrix::from_pure(cat_state(2.0, CatParity::odd, 25));
  WignerGridSpec spec;
  spec.x_min = spec.x_max = 0.0;
  spec.nx = 1;
  spec.p_min = spec.p_max = 0.0;
  spec.np = 1;
  CHECK(abs(wigner(even, spec).values(0, 0) - two_over_pi) < 1e-10);
  CHECK(abs(wigner(odd, spec).values(0, 0) + two_over_pi) < 1e-10);
}

TEST_CASE("cat Wigner matches the coherent-overlap oracle across the plane") {
  // dim 35 keeps the constructed cat within ~1e-11 of the ideal state the
  // oracle describes; at dim 25 the clipped Poisson tail alone costs ~1e-7.
  StateVector cat = cat_state(2.0, CatParity::even, 35);
  DensityMatrix rho = DensityMatrix::from_pure(cat);
  WignerGrid grid = wigner(rho);  // default 81x81 on [-4,4]^2
  // Spot-check a spread of grid points, fringes included.
  for (int i : {0, 10, 20, 40, 55, 62, 80})
    for (int j : {0, 13, 27, 40, 52, 71, 80}) {
      Complex beta(grid.x_axis(i), grid.p_axis(j));
      CHECK(abs(grid.values(i, j) - cat_wigner_oracle(2.0, beta)) < 1e-7);
    }
  // The fringes near the origin dip well below zero for this cat.
  CHECK(grid.min_value() < -0.1);
  CHECK(abs(grid.at_origin() - two_over_pi) < 1e-9);
}

TEST_CASE("Wigner grid integrates to unit trace on the default grid") {
  DensityMatrix cat =
      DensityMatrix::from_pure(cat_state(2.0, CatParity::even, 25));
  WignerGrid grid = wigner(cat);
  CHECK(abs(grid.integral() - 1.0) < 2e-2);

  // Small enough that the [-4,4]^2 box captures essentially all its mass.
  DensityMatrix mixed = random_mixed(5, 4);
  CHECK(abs(wigner(mixed).integral() - 1.0) < 2e-2);
}

TEST_CASE("Wigner is real for Hermitian input and consistent with parity") {
  DensityMatrix mixed = random_mixed(15, 31);
  WignerGridSpec spec;
  spec.x_min = -1;
  spec.x_max = 1;
  spec.nx = 5;
  spec.p_min = -1;
  spec.p_max = 1;
  spec.np = 5;
  WarningCapture capture;
  WignerGrid grid = wigner(mixed, spec);
  CHECK(capture.messages().empty());  // no imaginary-residue diagnostic
  CHECK(abs(grid.at_origin() * std::numbers::pi / 2 - mean_parity(mixed))
        < 1e-8);
}

TEST_CASE("Wigner warns when the capped dimension cannot absorb displacement") {
  // A corner displacement by 8 + 8i needs roughly (2 + 16)^2 levels; capping
  // the working dimension at 40 clips the displaced state, which the
  // displaced-energy audit detects.
  DensityMatrix cat =
      DensityMatrix::from_pure(cat_state(2.0, CatParity::even, 25));
  WignerGridSpec spec;
  spec.x_min = -8;
  spec.x_max = 8;
  spec.nx = 3;
  spec.p_min = -8;
  spec.p_max = 8;
  spec.np = 3;
  spec.max_dim = 40;
  WarningCapture capture;
  wigner(cat, spec);
  bool found = false;
  for (const auto& m : capture.messages())
    if (m.find("loses tail weight") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("Wigner grid serializes x,p,w rows") {
  DensityMatrix vac = DensityMatrix::from_pure(fock_state(0, 5));
  WignerGridSpec spec;
  spec.x_min = 0;
  spec.x_max = 1;
  spec.nx = 2;
  spec.p_min = 0;
  spec.p_max = 0;
  spec.np = 1;
  WignerGrid grid = wigner(vac, spec);
  std::ostringstream out;
  grid.to_csv(out);
  std::string s = out.str();
  CHECK(s.rfind("x,p,w\r\n", 0) == 0);
  CHECK(s.find("\r\n0,0,0.6366") != std::string::npos);
  CHECK(s.find("\r\n1,0,") != std::string::npos);
}

TEST_CASE("Wigner requires a single-mode state") {
  ModeLayout l({3, 3});
  DensityMatrix joint(l, Eigen::MatrixXcd::Identity(9, 9) / 9.0);
  CHECK_THROWS_AS(wigner(joint), LayoutError);
}
