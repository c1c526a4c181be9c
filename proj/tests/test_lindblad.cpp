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
#include <random>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "catstab/krylov.hpp"
#include "catstab/lindblad.hpp"
#include "catstab/rk45.hpp"
#include "catstab/warnings.hpp"
#include "json.hpp"

using namespace catstab;
using std::abs;

namespace {

Eigen::MatrixXcd random_hermitian(int dim, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXcd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(dist(gen), dist(gen));
  return 0.5 * (m + m.adjoint()).eval();
}

Eigen::MatrixXcd random_matrix(int dim, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXcd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(dist(gen), dist(gen));
  return m;
}

DensityMatrix random_density(const ModeLayout& l, unsigned seed) {
  Eigen::MatrixXcd g = random_matrix(static_cast<int>(l.total()), seed);
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(l, rho);
}

// Two-photon exchange with drive: H = i eps (a+^2 - a^2), collapse a^2.
LindbladModel two_photon_model(double eps, double kappa_2ph, double kappa_1ph,
                               int dim) {
  Operator a = destroy(dim);
  Operator ad = a.adjoint();
  Operator h = Complex(0, 1) * (eps * (ad * ad) - eps * (a * a));
  LindbladModel model{h, {{kappa_2ph, a * a}}};
  if (kappa_1ph > 0) model.collapse_terms.push_back({kappa_1ph, a});
  return model;
}

double fidelity_to(const StateVector& target, const DensityMatrix& rho) {
  return (target.amps.adjoint() * rho.mat * target.amps)(0).real();
}

}  // namespace

TEST_CASE("model validation rejects negative rates and layout mismatches") {
  Operator h = number(4);
  LindbladModel bad_rate{h, {{-0.5, destroy(4)}}};
  CHECK_THROWS_AS(bad_rate.validate(), InvalidArgumentError);
  LindbladModel bad_layout{h, {{0.5, destroy(5)}}};
  CHECK_THROWS_AS(bad_layout.validate(), LayoutError);
  LindbladModel ok{h, {{0.5, destroy(4)}, {2.0, destroy(4) * destroy(4)}}};
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.max_rate() == 2.0);
  LindbladModel h_only{h, {}};
  CHECK(h_only.max_rate() == 1.0);
}

TEST_CASE("dissipator moves |1><1| to |0><0| at unit rate") {
  Operator a = destroy(2);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
  rho(1, 1) = 1.0;
  Eigen::MatrixXcd out = dissipator_apply(a, rho);
  CHECK(abs(out(0, 0) - Complex(1)) < 1e-15);
  CHECK(abs(out(1, 1) - Complex(-1)) < 1e-15);
  CHECK(abs(out(0, 1)) + abs(out(1, 0)) < 1e-15);
}

TEST_CASE("dissipator output is traceless for arbitrary inputs") {
  for (unsigned seed : {1u, 2u, 3u}) {
    Eigen::MatrixXcd rho = random_hermitian(4, seed);
    Operator o(ModeLayout::single(4), random_matrix(4, seed + 100));
    CHECK(abs(dissipator_apply(o, rho).trace()) < 1e-12);
  }
}

TEST_CASE("dissipator equals its definition written out term by term") {
  StateVector cat = cat_state(2.0, CatParity::even, 25);
  Eigen::MatrixXcd rho = cat.amps * cat.amps.adjoint();
  Operator a = destroy(25);
  Operator a2 = a * a;
  Eigen::MatrixXcd via_api = dissipator_apply(a2, rho);
  // Brute-force: O rho O+ - 1/2 O+O rho - 1/2 rho O+O with plain products.
  Eigen::MatrixXcd o = a2.mat;
  Eigen::MatrixXcd brute =
      o * rho * o.adjoint() -
      0.5 * (o.adjoint() * o * rho + rho * o.adjoint() * o);
  CHECK((via_api - brute).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("liouvillian reduces to the commutator and preserves trace") {
  Operator h = number(3);
  LindbladModel free_model{Operator(ModeLayout::single(3),
                                    Eigen::MatrixXcd::Zero(3, 3)),
                           {}};
  Eigen::MatrixXcd rho = random_hermitian(3, 42);
  CHECK(liouvillian_apply(free_model, rho).cwiseAbs().maxCoeff() == 0.0);

  // -i [N, |0><1|] = +i |0><1|
  LindbladModel number_model{h, {}};
  Eigen::MatrixXcd coh = Eigen::MatrixXcd::Zero(3, 3);
  coh(0, 1) = 1.0;
  Eigen::MatrixXcd out = liouvillian_apply(number_model, coh);
  CHECK(abs(out(0, 1) - Complex(0, 1)) < 1e-15);

  LindbladModel mixed{h, {{0.7, destroy(3)}, {0.3, jump(0, 2, 3)}}};
  for (unsigned seed : {5u, 6u}) {
    Eigen::MatrixXcd r = random_hermitian(3, seed);
    Eigen::MatrixXcd l = liouvillian_apply(mixed, r);
    CHECK(abs(l.trace()) < 1e-12);
    CHECK((l - l.adjoint()).cwiseAbs().maxCoeff() < 1e-12);  // Hermiticity
  }
}

TEST_CASE("assembled superoperator of pure decay has the textbook spectrum") {
  for (double kappa : {1.0, 2.3}) {
    LindbladModel model{
        Operator(ModeLayout::single(2), Eigen::MatrixXcd::Zero(2, 2)),
        {{kappa, destroy(2)}}};
    Eigen::MatrixXcd dense = Eigen::MatrixXcd(assemble_liouvillian_matrix(model));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(dense);
    std::vector<double> re;
    for (int i = 0; i < 4; ++i) {
      CHECK(abs(es.eigenvalues()(i).imag()) < 1e-12);
      re.push_back(es.eigenvalues()(i).real());
    }
    std::sort(re.begin(), re.end());
    CHECK(abs(re[0] + kappa) < 1e-12);
    CHECK(abs(re[1] + kappa / 2) < 1e-12);
    CHECK(abs(re[2] + kappa / 2) < 1e-12);
    CHECK(abs(re[3]) < 1e-12);
  }
}

TEST_CASE("assembled superoperator matches the matrix-free apply") {
  for (const ModeLayout& l : {ModeLayout::single(6), ModeLayout({3, 2})}) {
    int d = static_cast<int>(l.total());
    Operator h(l, random_hermitian(d, 7));
    Operator o1(l, random_matrix(d, 8));
    Operator o2(l, random_matrix(d, 9));
    LindbladModel model{h, {{0.8, o1}, {1.7, o2}}};
    SparseSuperOp superop = assemble_liouvillian_matrix(model);
    for (unsigned seed = 0; seed < 20; ++seed) {
      Eigen::MatrixXcd rho = random_hermitian(d, 200 + seed);
      Eigen::VectorXcd lhs = superop * vec_density(rho);
      Eigen::VectorXcd rhs = vec_density(liouvillian_apply(model, rho));
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("Hamiltonian-only superoperator is -i(H kron I - I kron H^T)") {
  Operator h(ModeLayout::single(5), random_hermitian(5, 11));
  LindbladModel model{h, {}};
  Eigen::MatrixXcd assembled =
      Eigen::MatrixXcd(assemble_liouvillian_matrix(model));
  Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(5, 5);
  Eigen::MatrixXcd expected =
      Complex(0, -1) * (Eigen::kroneckerProduct(h.mat, eye) -
                        Eigen::kroneckerProduct(eye, h.mat.transpose()))
                           .eval();
  CHECK((assembled - expected).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("superoperator assembly refuses layouts beyond the cap") {
  ModeLayout big({25, 20});  // total 500 > default cap 400
  LindbladModel model{Operator::identity(big), {{1.0, embed(destroy(25), 0, big)}}};
  try {
    assemble_liouvillian_matrix(model);
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    CHECK(e.required_bytes > 0);
    CHECK(std::string(e.what()).find("MiB") != std::string::npos);
  }
  // A custom cap admits it.
  CHECK_NOTHROW(assemble_liouvillian_matrix(model, 500));
}

TEST_CASE("row-major flattening convention round-trips") {
  Eigen::MatrixXcd rho = random_hermitian(3, 55);
  Eigen::VectorXcd v = vec_density(rho);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(v(i * 3 + j) == rho(i, j));
  CHECK((unvec_density(v, 3) - rho).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(unvec_density(v, 4), LayoutError);
}

TEST_CASE("photon decay follows e^{-t} under all three propagators") {
  LindbladModel model{
      Operator(ModeLayout::single(2), Eigen::MatrixXcd::Zero(2, 2)),
      {{1.0, destroy(2)}}};
  DensityMatrix rho0 = DensityMatrix::from_pure(fock_state(1, 2));
  std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
  Observer n_obs{"mean_n", [](const DensityMatrix& r) {
                   return r.mat(1, 1).real();
                 }};
  for (auto method :
       {PropagatorMethod::explicit_adaptive, PropagatorMethod::dense_exponential,
        PropagatorMethod::krylov_exponential}) {
    PropagatorPlan plan;
    plan.method = method;
    TimeSeries ts = evolve(model, rho0, grid, plan, {n_obs});
    REQUIRE(ts.times.size() == 4);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(abs(ts.column("mean_n")[i] - std::exp(-grid[i])) < 1e-6);
  }
}

TEST_CASE("free evolution conserves the photon number") {
  Operator h = 3.7 * number(12);
  LindbladModel model{h, {}};
  DensityMatrix rho0 = [] {
    WarningCapture mute;  // borderline truncation tail is fine here
    return DensityMatrix::from_pure(coherent_state(1.2, 12));
  }();
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.3 * i);
  Observer n_obs{"mean_n", [](const DensityMatrix& r) {
                   return (number(12).mat * r.mat).trace().real();
                 }};
  PropagatorPlan plan;  // automatic -> dense exponential at this size
  TimeSeries ts = evolve(model, rho0, grid, plan, {n_obs});
  for (double v : ts.column("mean_n"))
    CHECK(abs(v - ts.column("mean_n")[0]) < 1e-8);
}

TEST_CASE("lossless two-photon exchange drives vacuum into the even cat") {
  // alpha = sqrt(2 eps / kappa_2ph) = 2 with eps = 2, kappa_2ph = 1.
  LindbladModel model = two_photon_model(2.0, 1.0, 0.0, 25);
  DensityMatrix rho0 = DensityMatrix::from_pure(fock_state(0, 25));
  StateVector target = cat_state(2.0, CatParity::even, 25);
  Operator p = parity(25);
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(0.5 * i);
  PropagatorPlan plan;
  plan.store_snapshots = true;
  Observer fid{"fidelity", [&target](const DensityMatrix& r) {
                 return fidelity_to(target, r);
               }};
  Observer even_pop{"even_population", [&p](const DensityMatrix& r) {
                      return 0.5 * ((r.mat.trace() +
                                     (p.mat * r.mat).trace())).real();
                    }};
  TimeSeries ts = evolve(model, rho0, grid, plan, {fid, even_pop});

  CHECK(ts.column("fidelity").back() >= 0.999);

  // Parity superselection: even population stays exactly at 1.
  for (double v : ts.column("even_population")) CHECK(abs(v - 1.0) < 1e-8);

  // State-quality invariants at every sample.
  for (const auto& snap : ts.snapshots) {
    auto val = snap.validate();
    CHECK(val.herm_err <= 1e-10);
    CHECK(val.trace_err <= 1e-6);
    CHECK(val.min_eig >= -1e-6);
  }
}

TEST_CASE("explicit and exponential propagators agree on small oracles") {
  ModeLayout l({3});
  Operator h(l, random_hermitian(3, 77));
  Operator o1(l, random_matrix(3, 78));
  LindbladModel model{h, {{0.7, destroy(3)}, {0.3, o1}}};
  DensityMatrix rho0 = random_density(l, 79);
  std::vector<double> grid{0.0, 0.35, 1.0};

  PropagatorPlan explicit_plan, dense_plan, krylov_plan;
  explicit_plan.method = PropagatorMethod::explicit_adaptive;
  explicit_plan.rel_tol = 1e-10;
  dense_plan.method = PropagatorMethod::dense_exponential;
  krylov_plan.method = PropagatorMethod::krylov_exponential;
  krylov_plan.rel_tol = 1e-10;
  explicit_plan.store_snapshots = dense_plan.store_snapshots =
      krylov_plan.store_snapshots = true;

  TimeSeries te = evolve(model, rho0, grid, explicit_plan, {});
  TimeSeries td = evolve(model, rho0, grid, dense_plan, {});
  TimeSeries tk = evolve(model, rho0, grid, krylov_plan, {});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK((te.snapshots[i].mat - td.snapshots[i].mat).cwiseAbs().maxCoeff()
          < 1e-7);
    CHECK((tk.snapshots[i].mat - td.snapshots[i].mat).cwiseAbs().maxCoeff()
          < 1e-7);
  }
}

TEST_CASE("evolve validates its inputs") {
  LindbladModel model{
      Operator(ModeLayout::single(2), Eigen::MatrixXcd::Zero(2, 2)),
      {{1.0, destroy(2)}}};
  DensityMatrix good = DensityMatrix::from_pure(fock_state(0, 2));
  PropagatorPlan plan;

  CHECK_THROWS_AS(evolve(model, good, {0.0, 0.0, 1.0}, plan, {}),
                  InvalidArgumentError);
  CHECK_THROWS_AS(evolve(model, good, {}, plan, {}), InvalidArgumentError);

  DensityMatrix wrong_layout = DensityMatrix::from_pure(fock_state(0, 3));
  CHECK_THROWS_AS(evolve(model, wrong_layout, {0.0, 1.0}, plan, {}),
                  LayoutError);

  DensityMatrix not_normalized(ModeLayout::single(2),
                               2.0 * Eigen::MatrixXcd::Identity(2, 2));
  CHECK_THROWS_AS(evolve(model, not_normalized, {0.0, 1.0}, plan, {}),
                  InvalidArgumentError);
}

TEST_CASE("steady state of pure decay is the vacuum") {
  LindbladModel model{
      Operator(ModeLayout::single(4), Eigen::MatrixXcd::Zero(4, 4)),
      {{1.3, destroy(4)}}};
  for (auto method :
       {SteadyStateMethod::null_space, SteadyStateMethod::long_time}) {
    DensityMatrix ss = steady_state(model, method);
    CHECK(abs(ss.mat(0, 0).real() - 1.0) < 1e-7);
    CHECK(ss.validate().ok());
    CHECK(liouvillian_apply(model, ss.mat).cwiseAbs().maxCoeff()
          <= 1e-7 * model.max_rate());
  }
}

TEST_CASE("driven cavity settles into the known coherent state") {
  // H = eps (a + a+), collapse a at kappa: steady state |(-2 i eps)/kappa>.
  int dim = 14;
  double eps = 0.4, kappa = 1.0;
  Operator a = destroy(dim);
  Operator h = eps * (a + a.adjoint());
  LindbladModel model{h, {{kappa, a}}};
  DensityMatrix ss = steady_state(model);
  StateVector expect = coherent_state(Complex(0, -2 * eps / kappa), dim);
  CHECK(fidelity_to(expect, ss) > 1.0 - 1e-8);
  CHECK(ss.validate().ok());
}

TEST_CASE("two-photon model without loss reports a degenerate steady manifold") {
  LindbladModel model = two_photon_model(2.0, 1.0, 0.0, 25);
  try {
    steady_state(model);
    FAIL("expected DegenerateSteadyStateError");
  } catch (const DegenerateSteadyStateError& e) {
    CHECK(e.null_space_dim > 1);
  }
}

TEST_CASE("adding single-photon loss makes the steady state unique") {
  LindbladModel model = two_photon_model(2.0, 1.0, 0.05, 25);
  DensityMatrix ss = steady_state(model);
  CHECK(ss.validate().ok());
  CHECK(liouvillian_apply(model, ss.mat).cwiseAbs().maxCoeff()
        <= 1e-7 * model.max_rate());
}

TEST_CASE("steady state requires dissipation") {
  LindbladModel model{number(3), {}};
  CHECK_THROWS_AS(steady_state(model), InvalidArgumentError);
  LindbladModel zero_rate{number(3), {{0.0, destroy(3)}}};
  CHECK_THROWS_AS(steady_state(zero_rate), InvalidArgumentError);
}

TEST_CASE("time series serializes to CSV with CRLF and a header") {
  TimeSeries ts;
  ts.times = {0.0, 0.5};
  ts.names = {"fidelity", "mean_n"};
  ts.columns = {{0.25, 0.5}, {4.0, 3.5}};
  std::ostringstream out;
  ts.to_csv(out);
  CHECK(out.str() ==
        "time,fidelity,mean_n\r\n0,0.25,4\r\n0.5,0.5,3.5\r\n");
  CHECK(ts.column("mean_n")[1] == 3.5);
  CHECK_THROWS_AS(ts.column("absent"), InvalidArgumentError);
}

TEST_CASE("time series serializes to the documented JSON schema") {
  TimeSeries ts;
  ts.times = {0.0, 1.0};
  ts.names = {"p_even"};
  ts.columns = {{1.0, 0.75}};
  nlohmann::json j = nlohmann::json::parse(ts.to_json());
  CHECK(j["times"].size() == 2);
  CHECK(j["observables"]["p_even"][1] == 0.75);
}

TEST_CASE("krylov propagator matches the dense exponential on a stiff blend") {
  // Rates spanning four orders of magnitude within one model.
  ModeLayout l({8});
  Operator a = destroy(8);
  Operator h = 500.0 * number(8) + Complex(3.0) * (a + a.adjoint());
  LindbladModel model{h, {{1e3, a * a}, {0.1, a}}};
  DensityMatrix rho0 = [] {
    WarningCapture mute;  // borderline truncation tail is fine here
    return DensityMatrix::from_pure(coherent_state(1.0, 8));
  }();
  std::vector<double> grid{0.0, 0.01, 0.05};
  PropagatorPlan dense_plan, krylov_plan;
  dense_plan.method = PropagatorMethod::dense_exponential;
  krylov_plan.method = PropagatorMethod::krylov_exponential;
  krylov_plan.rel_tol = 1e-9;
  dense_plan.store_snapshots = krylov_plan.store_snapshots = true;
  TimeSeries td = evolve(model, rho0, grid, dense_plan, {});
  TimeSeries tk = evolve(model, rho0, grid, krylov_plan, {});
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK((td.snapshots[i].mat - tk.snapshots[i].mat).cwiseAbs().maxCoeff()
          < 1e-7);
}

TEST_CASE("krylov helper reproduces a diagonal exponential") {
  // A = diag(-1, -10, -100 + 5i): exact action known in closed form.
  Eigen::VectorXcd diag(3);
  diag << Complex(-1), Complex(-10), Complex(-100, 5);
  ApplyFn apply = [&diag](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    y = diag.array() * x.array();
  };
  Eigen::VectorXcd v(3);
  v << 1.0, 0.5, 0.25;
  Eigen::VectorXcd expect = (0.03 * diag.array()).exp() * v.array();
  ExpvOptions opts;
  opts.tol = 1e-12;
  opts.anorm = 101;
  expv(apply, 0.03, v, opts);
  CHECK((v - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("adaptive stepper integrates a linear system to tight tolerance") {
  // y'' = -y as a first-order complex system; exact solution cos(t).
  Eigen::MatrixXcd a(2, 2);
  a << Complex(0), Complex(1), Complex(-1), Complex(0);
  RhsFn rhs = [&a](const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
    dy = a * y;
  };
  Eigen::VectorXcd y(2);
  y << 1.0, 0.0;
  Rk45Options opts;
  opts.rel_tol = 1e-10;
  opts.abs_tol = 1e-12;
  rk45_integrate(rhs, y, 0.0, 10.0, opts);
  CHECK(abs(y(0).real() - std::cos(10.0)) < 1e-8);
  CHECK(abs(y(1).real() + std::sin(10.0)) < 1e-8);
}

TEST_CASE("adaptive stepper reports where it failed") {
  // An RHS that blows up in finite time: y' = y^2 (componentwise), y(0) = 1,
  // diverges at t = 1.
  RhsFn rhs = [](const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
    dy = y.array().square();
  };
  Eigen::VectorXcd y(1);
  y << 1.0;
  Rk45Options opts;
  opts.max_steps = 100000;
  try {
    rk45_integrate(rhs, y, 0.0, 2.0, opts);
    FAIL("expected IntegratorError");
  } catch (const IntegratorError& e) {
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
}
