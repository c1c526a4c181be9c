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

#include "catstab/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include "catstab/krylov.hpp"
#include "catstab/rk45.hpp"
#include "json.hpp"

namespace catstab {

using RowMat =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void LindbladModel::validate() const {
  for (const auto& term : collapse_terms) {
    if (term.rate < 0)
      throw InvalidArgumentError("collapse rate must be nonnegative, got " +
                                 std::to_string(term.rate));
    if (term.op.layout != hamiltonian.layout)
      throw LayoutError("collapse operator layout " +
                        term.op.layout.to_string() +
                        " does not match Hamiltonian layout " +
                        hamiltonian.layout.to_string());
  }
}

double LindbladModel::max_rate() const {
  double r = 0;
  for (const auto& term : collapse_terms) r = std::max(r, term.rate);
  return r > 0 ? r : 1.0;
}

// --- applies ----------------------------------------------------------------

Eigen::MatrixXcd dissipator_apply(const Operator& op,
                                  const Eigen::MatrixXcd& rho) {
  if (op.mat.rows() != rho.rows() || rho.rows() != rho.cols())
    throw LayoutError("dissipator_apply: operator is " +
                      std::to_string(op.mat.rows()) + "x" +
                      std::to_string(op.mat.cols()) + ", state is " +
                      std::to_string(rho.rows()) + "x" +
                      std::to_string(rho.cols()));
  Eigen::MatrixXcd o_rho = op.mat * rho;
  Eigen::MatrixXcd result = o_rho * op.mat.adjoint();
  Eigen::MatrixXcd odo = op.mat.adjoint() * op.mat;
  result.noalias() -= 0.5 * (odo * rho);
  result.noalias() -= 0.5 * (rho * odo);
  return result;
}

Eigen::MatrixXcd liouvillian_apply(const LindbladModel& model,
                                   const Eigen::MatrixXcd& rho) {
  const Eigen::MatrixXcd& h = model.hamiltonian.mat;
  if (h.rows() != rho.rows() || rho.rows() != rho.cols())
    throw LayoutError("liouvillian_apply: state shape does not match model");
  Eigen::MatrixXcd result = Complex(0, -1) * (h * rho - rho * h);
  for (const auto& term : model.collapse_terms) {
    if (term.rate == 0) continue;
    result.noalias() += term.rate * dissipator_apply(term.op, rho);
  }
  return result;
}

// --- superoperator assembly -------------------------------------------------

namespace {

long count_nonzeros(const Eigen::MatrixXcd& m) {
  long nnz = 0;
  for (long j = 0; j < m.cols(); ++j)
    for (long i = 0; i < m.rows(); ++i)
      if (m(i, j) != Complex(0)) ++nnz;
  return nnz;
}

// Adds coeff * (A kron B) entries to `out` (row-major vec convention handled
// by the caller passing B already transposed as needed).
void add_kron(std::vector<Eigen::Triplet<Complex>>& out, Complex coeff,
              const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const long db = b.rows();
  for (long ai = 0; ai < a.rows(); ++ai)
    for (long ak = 0; ak < a.cols(); ++ak) {
      Complex av = a(ai, ak);
      if (av == Complex(0)) continue;
      Complex cav = coeff * av;
      for (long bj = 0; bj < b.rows(); ++bj)
        for (long bl = 0; bl < b.cols(); ++bl) {
          Complex bv = b(bj, bl);
          if (bv == Complex(0)) continue;
          out.emplace_back(ai * db + bj, ak * db + bl, cav * bv);
        }
    }
}

}  // namespace

SparseSuperOp assemble_liouvillian_matrix(const LindbladModel& model,
                                          long dim_cap) {
  model.validate();
  const long d = model.layout().total();
  const Eigen::MatrixXcd& h = model.hamiltonian.mat;

  // Estimate the triplet memory before touching anything big.
  long nnz_est = 2 * count_nonzeros(h) * d;
  for (const auto& term : model.collapse_terms) {
    if (term.rate == 0) continue;
    long nnz_op = count_nonzeros(term.op.mat);
    nnz_est += nnz_op * nnz_op + 2 * nnz_op * d;  // jump part + both anticommutator halves
  }
  if (d > dim_cap) {
    std::size_t bytes = static_cast<std::size_t>(nnz_est) * 48;
    std::ostringstream msg;
    msg << "assembling the Liouvillian for layout "
        << model.layout().to_string() << " (total dimension " << d
        << ") exceeds the dimension cap " << dim_cap << "; the sparse "
        << "superoperator would need about " << (bytes / (1024.0 * 1024.0))
        << " MiB (" << nnz_est << " entries)";
    throw CapacityError(msg.str(), bytes);
  }

  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(static_cast<std::size_t>(nnz_est));

  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(d, d);
  // -i [H, rho]  ->  -i (H kron I) + i (I kron H^T)
  add_kron(trip, Complex(0, -1), h, eye);
  add_kron(trip, Complex(0, 1), eye, h.transpose());

  for (const auto& term : model.collapse_terms) {
    if (term.rate == 0) continue;
    const Eigen::MatrixXcd& o = term.op.mat;
    Eigen::MatrixXcd odo = o.adjoint() * o;
    // O rho O^dag -> O kron conj(O)
    add_kron(trip, term.rate, o, o.conjugate());
    add_kron(trip, -0.5 * term.rate, odo, eye);
    add_kron(trip, -0.5 * term.rate, eye, odo.transpose());
  }

  SparseSuperOp superop(d * d, d * d);
  superop.setFromTriplets(trip.begin(), trip.end());
  superop.makeCompressed();
  return superop;
}

Eigen::VectorXcd vec_density(const Eigen::MatrixXcd& rho) {
  Eigen::VectorXcd v(rho.size());
  Eigen::Map<RowMat>(v.data(), rho.rows(), rho.cols()) = rho;
  return v;
}

Eigen::MatrixXcd unvec_density(const Eigen::VectorXcd& v, long dim) {
  if (v.size() != dim * dim)
    throw LayoutError("unvec_density: vector length " +
                      std::to_string(v.size()) + " is not " +
                      std::to_string(dim) + "^2");
  return Eigen::Map<const RowMat>(v.data(), dim, dim);
}

// --- time series ------------------------------------------------------------

const std::vector<double>& TimeSeries::column(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return columns[k];
  throw InvalidArgumentError("time series has no column named '" + name + "'");
}

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

void TimeSeries::to_csv(std::ostream& out) const {
  out << "time";
  for (const auto& n : names) out << "," << n;
  out << "\r\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << format_double(times[i]);
    for (const auto& col : columns) out << "," << format_double(col[i]);
    out << "\r\n";
  }
}

std::string TimeSeries::to_json() const {
  nlohmann::json j;
  j["times"] = times;
  nlohmann::json obs = nlohmann::json::object();
  for (std::size_t k = 0; k < names.size(); ++k) obs[names[k]] = columns[k];
  j["observables"] = obs;
  return j.dump(2);
}

// --- evolve -----------------------------------------------------------------

namespace {

void symmetrize_flat(Eigen::VectorXcd& v, long d) {
  Eigen::Map<RowMat> m(v.data(), d, d);
  m = 0.5 * (m + m.adjoint()).eval();
}

double sparse_inf_norm(const SparseSuperOp& a) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseSuperOp::InnerIterator it(a, k); it; ++it)
      row_sums(it.row()) += std::abs(it.value());
  return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

struct Recorder {
  const std::vector<Observer>& observers;
  const ModeLayout& layout;
  bool store_snapshots;
  TimeSeries& ts;

  void operator()(double t, const Eigen::MatrixXcd& rho_mat) {
    DensityMatrix rho(layout, rho_mat);
    ts.times.push_back(t);
    for (std::size_t k = 0; k < observers.size(); ++k)
      ts.columns[k].push_back(observers[k].fn(rho));
    if (store_snapshots) ts.snapshots.push_back(rho);
  }
};

}  // namespace

TimeSeries evolve(const LindbladModel& model, const DensityMatrix& rho0,
                  const std::vector<double>& t_grid, const PropagatorPlan& plan,
                  const std::vector<Observer>& observers) {
  model.validate();
  if (rho0.layout != model.layout())
    throw LayoutError("evolve: initial state layout " +
                      rho0.layout.to_string() + " does not match model " +
                      model.layout().to_string());
  if (!(plan.rel_tol > 0))
    throw InvalidArgumentError("propagator tolerance must be positive");
  {
    auto v = rho0.validate();
    if (!v.ok()) {
      std::ostringstream msg;
      msg << "evolve: initial state is not a density matrix "
          << "(hermiticity error " << v.herm_err << ", trace error "
          << v.trace_err << ", min eigenvalue " << v.min_eig << ")";
      throw InvalidArgumentError(msg.str());
    }
  }
  if (t_grid.empty())
    throw InvalidArgumentError("evolve: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw InvalidArgumentError("evolve: time grid must increase strictly");

  const long d = model.layout().total();
  PropagatorMethod method = plan.method;
  if (method == PropagatorMethod::automatic)
    method = d <= 40 ? PropagatorMethod::dense_exponential
                     : PropagatorMethod::krylov_exponential;

  TimeSeries ts;
  for (const auto& o : observers) ts.names.push_back(o.name);
  ts.columns.resize(observers.size());
  Recorder record{observers, model.layout(), plan.store_snapshots, ts};

  Eigen::MatrixXcd rho = rho0.mat;
  record(t_grid[0], rho);
  if (t_grid.size() == 1) return ts;

  switch (method) {
    case PropagatorMethod::dense_exponential: {
      if (d > 64) {
        std::size_t bytes =
            static_cast<std::size_t>(d) * d * d * d * sizeof(Complex);
        std::ostringstream msg;
        msg << "dense-exponential propagation for total dimension " << d
            << " would need a " << d * d << "x" << d * d
            << " dense superoperator (about " << (bytes / (1024.0 * 1024.0))
            << " MiB); use the Krylov method";
        throw CapacityError(msg.str(), bytes);
      }
      SparseSuperOp sparse_l = assemble_liouvillian_matrix(model);
      Eigen::MatrixXcd dense_l = Eigen::MatrixXcd(sparse_l);
      std::map<double, Eigen::MatrixXcd> step_cache;
      // Uniform grids produced by floating-point arithmetic jitter in the
      // last few ulps; treat steps closer than that as identical rather
      // than paying for a fresh 625^2-scale matrix exponential each time.
      const double dt_slack = 64 * std::numeric_limits<double>::epsilon() *
                              std::max(1.0, std::abs(t_grid.back()));
      auto step_matrix = [&](double dt) -> const Eigen::MatrixXcd& {
        auto it = step_cache.lower_bound(dt - dt_slack);
        if (it != step_cache.end() && std::abs(it->first - dt) <= dt_slack)
          return it->second;
        return step_cache.emplace(dt, (dt * dense_l).exp()).first->second;
      };
      Eigen::VectorXcd v = vec_density(rho);
      for (std::size_t i = 1; i < t_grid.size(); ++i) {
        v = step_matrix(t_grid[i] - t_grid[i - 1]) * v;
        symmetrize_flat(v, d);
        rho = unvec_density(v, d);
        record(t_grid[i], rho);
      }
      break;
    }
    case PropagatorMethod::krylov_exponential: {
      SparseSuperOp sparse_l = assemble_liouvillian_matrix(model);
      Eigen::SparseMatrix<Complex, Eigen::RowMajor> lr(sparse_l);
      ExpvOptions opts;
      opts.krylov_dim = plan.krylov_dim;
      opts.tol = plan.rel_tol;
      opts.anorm = std::max(sparse_inf_norm(sparse_l), 1e-300);
      opts.post_substep = [d](Eigen::VectorXcd& v) { symmetrize_flat(v, d); };
      ApplyFn apply = [&lr](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        y.noalias() = lr * x;
      };
      Eigen::VectorXcd v = vec_density(rho);
      for (std::size_t i = 1; i < t_grid.size(); ++i) {
        expv(apply, t_grid[i] - t_grid[i - 1], v, opts);
        rho = unvec_density(v, d);
        record(t_grid[i], rho);
      }
      break;
    }
    case PropagatorMethod::explicit_adaptive: {
      RhsFn rhs = [&model, d](const Eigen::VectorXcd& y,
                              Eigen::VectorXcd& dydt) {
        Eigen::MatrixXcd m = unvec_density(y, d);
        Eigen::MatrixXcd lm = liouvillian_apply(model, m);
        dydt.resize(y.size());
        Eigen::Map<RowMat>(dydt.data(), d, d) = lm;
      };
      Rk45Options opts;
      opts.rel_tol = plan.rel_tol;
      opts.abs_tol = plan.rel_tol * 1e-4;
      if (plan.max_step > 0) opts.max_step = plan.max_step / model.max_rate();
      PostStepFn post = [d](Eigen::VectorXcd& y) { symmetrize_flat(y, d); };
      Eigen::VectorXcd v = vec_density(rho);
      for (std::size_t i = 1; i < t_grid.size(); ++i) {
        rk45_integrate(rhs, v, t_grid[i - 1], t_grid[i], opts, post);
        rho = unvec_density(v, d);
        record(t_grid[i], rho);
      }
      break;
    }
    case PropagatorMethod::automatic:
      break;  // resolved above
  }
  return ts;
}

// --- steady state -----------------------------------------------------------

namespace {

DensityMatrix finish_steady(const LindbladModel& model, Eigen::VectorXcd v) {
  const long d = model.layout().total();
  Eigen::MatrixXcd rho = unvec_density(v, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  Complex tr = rho.trace();
  if (std::abs(tr) < 1e-10 * rho.norm())
    throw NumericalError(
        "steady-state candidate has vanishing trace; cannot normalize");
  rho /= tr;
  double residual = liouvillian_apply(model, rho).cwiseAbs().maxCoeff();
  double tol = 1e-7 * model.max_rate();
  if (residual > tol) {
    std::ostringstream msg;
    msg << "steady-state residual " << residual << " exceeds tolerance " << tol;
    throw NumericalError(msg.str());
  }
  return DensityMatrix(model.layout(), std::move(rho));
}

DensityMatrix steady_state_null_space(const LindbladModel& model) {
  const long d = model.layout().total();
  const long n = d * d;
  const double max_rate = model.max_rate();
  SparseSuperOp superop = assemble_liouvillian_matrix(model);

  // Shifted inverse iteration: with all eigenvalues in Re <= 0, a small
  // positive shift makes the stationary directions strictly dominant in
  // (L - sigma)^(-1).
  double sigma = 1e-2 * max_rate;
  Eigen::SparseLU<SparseSuperOp> lu;
  SparseSuperOp eye(n, n);
  eye.setIdentity();
  for (int attempt = 0;; ++attempt) {
    SparseSuperOp shifted = superop - sigma * eye;
    shifted.makeCompressed();
    lu.compute(shifted);
    if (lu.info() == Eigen::Success) break;
    if (attempt >= 3)
      throw NumericalError("shifted Liouvillian factorization failed");
    sigma *= 10;
  }

  // A small block so that a degenerate stationary manifold is visible.
  const int block = 4;
  std::mt19937 gen(734823);
  std::normal_distribution<double> dist;
  Eigen::MatrixXcd x(n, block);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < block; ++j) x(i, j) = Complex(dist(gen), dist(gen));

  Eigen::MatrixXcd q;
  for (int iter = 0; iter < 60; ++iter) {
    x = lu.solve(x);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(x);
    q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, block);
    x = q;
  }

  Eigen::MatrixXcd t = q.adjoint() * (superop * q);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(t);
  double thresh = 1e-8 * max_rate;
  int null_count = 0;
  int best = -1;
  double best_abs = 0;
  for (int k = 0; k < block; ++k) {
    double a = std::abs(es.eigenvalues()(k));
    if (a <= thresh) ++null_count;
    if (best < 0 || a < best_abs) {
      best = k;
      best_abs = a;
    }
  }
  if (null_count > 1) {
    std::ostringstream msg;
    msg << "stationary manifold is " << null_count
        << "-dimensional (within |eigenvalue| <= " << thresh
        << "); no unique steady state";
    throw DegenerateSteadyStateError(msg.str(), null_count);
  }
  if (null_count == 0)
    throw NumericalError(
        "no stationary direction found by shifted inverse iteration");

  Eigen::VectorXcd v = q * es.eigenvectors().col(best);
  for (int extra = 0; extra < 3; ++extra) {
    v = lu.solve(v);
    v /= v.norm();
  }
  return finish_steady(model, v);
}

DensityMatrix steady_state_long_time(const LindbladModel& model) {
  const long d = model.layout().total();
  const double max_rate = model.max_rate();
  const double tol = 1e-7 * max_rate;

  Eigen::MatrixXcd rho =
      Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);

  ExpvOptions opts;
  opts.krylov_dim = 30;
  opts.tol = 1e-9;
  opts.post_substep = [d](Eigen::VectorXcd& v) { symmetrize_flat(v, d); };

  ApplyFn apply;
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> lr;
  if (d <= 400) {
    lr = assemble_liouvillian_matrix(model);
    opts.anorm = sparse_inf_norm(lr);
    apply = [&lr](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
      y.noalias() = lr * x;
    };
  } else {
    // Matrix-free fallback above the assembly cap.
    double est = 2 * model.hamiltonian.mat.cwiseAbs().rowwise().sum().maxCoeff();
    for (const auto& term : model.collapse_terms) {
      double on = term.op.mat.cwiseAbs().rowwise().sum().maxCoeff();
      est += 2 * term.rate * on * on;
    }
    opts.anorm = std::max(est, 1.0);
    apply = [&model, d](const Eigen::VectorXcd& xv, Eigen::VectorXcd& yv) {
      Eigen::MatrixXcd m = unvec_density(xv, d);
      Eigen::MatrixXcd lm = liouvillian_apply(model, m);
      yv.resize(xv.size());
      Eigen::Map<RowMat>(yv.data(), d, d) = lm;
    };
  }

  Eigen::VectorXcd v = vec_density(rho);
  double span = 1.0 / max_rate;
  for (int blockstep = 0; blockstep < 60; ++blockstep) {
    expv(apply, span, v, opts);
    rho = unvec_density(v, d);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace();
    double residual = liouvillian_apply(model, rho).cwiseAbs().maxCoeff();
    if (residual <= tol) return finish_steady(model, vec_density(rho));
    v = vec_density(rho);
    span *= 2;
  }
  throw NumericalError(
      "long-time steady-state search did not converge within budget");
}

}  // namespace

DensityMatrix steady_state(const LindbladModel& model,
                           SteadyStateMethod method) {
  model.validate();
  bool dissipative = false;
  for (const auto& term : model.collapse_terms)
    if (term.rate > 0) dissipative = true;
  if (!dissipative)
    throw InvalidArgumentError(
        "steady_state needs at least one collapse term with positive rate");

  if (method == SteadyStateMethod::automatic)
    method = model.layout().total() <= 120 ? SteadyStateMethod::null_space
                                           : SteadyStateMethod::long_time;
  return method == SteadyStateMethod::null_space
             ? steady_state_null_space(model)
             : steady_state_long_time(model);
}

}  // namespace catstab
