#include <algorithm>
#include <cmath>

#include "attack_internal.hpp"
#include "qadv/attack.hpp"
#include "qadv/errors.hpp"

namespace qadv::attack {

using qmat::DensityMatrix;
using qmat::HermitianMatrix;
using qmat::Matrix;
using qmat::RealVector;
using qmat::SchattenOrder;

namespace {

using Solver3 = Eigen::SelfAdjointEigenSolver<Matrix>;

Matrix rebuild(const Solver3& es, const RealVector& values) {
  const Matrix& u = es.eigenvectors();
  Matrix m = u * values.cast<qmat::Complex>().asDiagonal() * u.adjoint();
  return (m + m.adjoint()) / 2.0;
}

Matrix density_projection(const Matrix& m) {
  const Solver3 es(m);
  return rebuild(es, qmat::project_to_simplex(es.eigenvalues(), 1.0));
}

Matrix ball_projection(const Matrix& m, const Matrix& center, SchattenOrder p, double radius) {
  const Matrix diff = m - center;
  const Solver3 es(diff);
  const RealVector s = es.eigenvalues();
  RealVector t = s;
  if (p.is_infinite()) {
    t = s.cwiseMax(-radius).cwiseMin(radius);
  } else {
    if (s.cwiseAbs().sum() <= radius) return m;
    const RealVector mag = qmat::project_to_simplex(s.cwiseAbs(), radius);
    for (Eigen::Index i = 0; i < s.size(); ++i) t(i) = s(i) < 0.0 ? -mag(i) : mag(i);
  }
  return center + rebuild(es, t);
}

// Dykstra's alternating projections onto {density} and the ball around rho.
Matrix dykstra(const Matrix& y, const Matrix& rho, SchattenOrder p, double eps, int cycles) {
  Matrix x = y;
  Matrix pa = Matrix::Zero(y.rows(), y.cols());
  Matrix qb = pa;
  for (int k = 0; k < cycles; ++k) {
    const Matrix a = density_projection(x + pa);
    pa = x + pa - a;
    const Matrix b = ball_projection(a + qb, rho, p, eps);
    qb = a + qb - b;
    const double change = (b - x).cwiseAbs().maxCoeff();
    x = b;
    if (change < 1e-14) break;
  }
  return x;
}

// Exactly feasible state near m: nearest density matrix, then contracted
// toward rho until it is inside the ball.
DensityMatrix repair(const Matrix& m, const DensityMatrix& rho, SchattenOrder p, double eps) {
  DensityMatrix lambda = qmat::project_to_density(HermitianMatrix(m, 1e-8));
  const double dist = qmat::schatten_distance(rho, lambda, p);
  if (dist <= eps) return lambda;
  const double t = eps / dist;
  return qmat::validate_density(rho * (1.0 - t) + lambda * t);
}

}  // namespace

HermitianMatrix project_to_schatten_ball(const HermitianMatrix& point, const HermitianMatrix& center,
                                         SchattenOrder p, double radius) {
  if (point.dim() != center.dim()) throw ValidationError("dimension mismatch in ball projection");
  if (!(p == SchattenOrder::one() || p.is_infinite())) {
    throw UnsupportedError("ball projection supports p = 1 and p = inf only");
  }
  if (!(radius >= 0.0)) throw ValidationError("ball radius must be >= 0");
  return HermitianMatrix(ball_projection(point.matrix(), center.matrix(), p, radius), 1e-8);
}

AttackResult numerical_inner_max(const HermitianMatrix& element, const DensityMatrix& rho, SchattenOrder p,
                                 double epsilon, const NumericalOptions& opts) {
  if (element.dim() != rho.dim()) throw ValidationError("POVM element and state differ in dimension");
  if (!(p == SchattenOrder::one() || p.is_infinite())) {
    throw UnsupportedError("numerical solver supports p = 1 and p = inf only, got p = " + p.to_string());
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("attack budget must be finite and >= 0");
  if (opts.max_iters < 1 || opts.dykstra_cycles < 1 || !(opts.step_scale > 0.0) || opts.admm_iters < 0) {
    throw ValidationError("numerical solver options must be positive");
  }
  if (epsilon == 0.0) return make_result(element, rho, rho, p, epsilon, Solver::numerical);

  // Tr lambda = 1 on the feasible set, so only the traceless part of the
  // element moves the objective; scaling the step by its norm keeps nearly
  // degenerate elements from crawling.
  const int d = element.dim();
  const Matrix pi = element.matrix() - (element.matrix().trace().real() / d) * Matrix::Identity(d, d);
  const double op_norm = qmat::schatten_norm(HermitianMatrix(pi), SchattenOrder::infinity());
  if (op_norm < 1e-15) return make_result(element, rho, rho, p, epsilon, Solver::numerical);
  const double step = opts.step_scale / op_norm;
  const Matrix& r = rho.matrix();

  AttackResult best = make_result(element, rho, rho, p, epsilon, Solver::numerical);
  Matrix best_point = r;
  auto offer = [&](const Matrix& m) {
    auto candidate = make_result(element, rho, repair(m, rho, p, epsilon), p, epsilon, Solver::numerical);
    if (candidate.gain > best.gain) {
      best_point = candidate.lambda_star.matrix();
      best = std::move(candidate);
    }
  };

  Matrix lambda = r;
  for (int k = 0; k < opts.max_iters; ++k) {
    const Matrix next = dykstra(lambda - step * pi, r, p, epsilon, opts.dykstra_cycles);
    const double change = (next - lambda).cwiseAbs().maxCoeff();
    lambda = next;
    offer(lambda);
    if (change < opts.tolerance) break;
  }

  // A small step does not mean optimal: when the ball barely fits inside the
  // state space the inexact projections stall short of the optimum. So the
  // answer is only reported converged once a Lagrangian lower bound closes
  // the gap, with ADMM (split as x in {density}, z in ball, x = z) refining
  // the primal point and supplying the multiplier Y.
  //   min <pi, x> >= lambda_min(pi + Y) - <Y, rho> - eps ||Y||_dual
  const SchattenOrder dual = p.is_infinite() ? SchattenOrder::one() : SchattenOrder::infinity();
  auto lower_bound = [&](const Matrix& y) {
    const Matrix s = pi + y;
    const double lmin = Solver3((s + s.adjoint()) / 2.0, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const double ynorm = qmat::schatten_norm(HermitianMatrix((y + y.adjoint()) / 2.0, 1e-6), dual);
    return lmin - (y.cwiseProduct(r.conjugate())).sum().real() - epsilon * ynorm;
  };
  auto objective = [&](const Matrix& m) { return (pi.cwiseProduct(m.conjugate())).sum().real(); };
  const double gap_tol = opts.tolerance * std::max(1.0, op_norm);

  double beta = op_norm / epsilon;
  Matrix z = best_point;
  Matrix u = Matrix::Zero(d, d);
  bool converged = objective(best_point) - lower_bound(Matrix::Zero(d, d)) <= gap_tol;
  for (int k = 0; k < opts.admm_iters && !converged; ++k) {
    const Matrix x = density_projection(z - u - pi / beta);
    const Matrix z_old = z;
    z = ball_projection(x + u, r, p, epsilon);
    u += x - z;
    offer(x);
    offer(z);
    if (k % 10 == 9) {
      converged = objective(best_point) - lower_bound(beta * u) <= gap_tol;
      // residual balancing; u is the scaled multiplier so it rescales with beta
      const double primal = (x - z).norm();
      const double dual_res = beta * (z - z_old).norm();
      if (primal > 10.0 * dual_res) {
        beta *= 2.0;
        u /= 2.0;
      } else if (dual_res > 10.0 * primal) {
        beta /= 2.0;
        u *= 2.0;
      }
    }
  }
  best.converged = converged;
  return best;
}

}  // namespace qadv::attack
