#include "qadv/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attack_internal.hpp"
#include "qadv/errors.hpp"

namespace qadv::attack {

using qmat::DensityMatrix;
using qmat::HermitianMatrix;
using qmat::RealVector;
using qmat::SchattenOrder;

std::string to_string(Solver s) {
  switch (s) {
    case Solver::closed_form: return "closed_form";
    case Solver::numerical: return "numerical";
    case Solver::brute_force: return "brute_force";
    case Solver::qubit_exact: return "qubit_exact";
    case Solver::automatic: return "auto";
  }
  return "unknown";
}

Solver parse_solver(std::string_view text) {
  if (text == "closed_form") return Solver::closed_form;
  if (text == "numerical") return Solver::numerical;
  if (text == "brute_force") return Solver::brute_force;
  if (text == "qubit_exact") return Solver::qubit_exact;
  if (text == "auto") return Solver::automatic;
  throw ValidationError("unknown solver '" + std::string(text) + "'");
}

void AttackSpec::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("attack budget must be finite and >= 0");
  if (!(p == SchattenOrder::one() || p.is_infinite())) {
    throw UnsupportedError("attacks support p = 1 and p = inf only, got p = " + p.to_string());
  }
}

double clean_loss(const HermitianMatrix& element, const DensityMatrix& rho) {
  return 1.0 - qmat::trace_inner(element, rho);
}

namespace {

void check_dims(const HermitianMatrix& element, const DensityMatrix& rho) {
  if (element.dim() != rho.dim()) throw ValidationError("POVM element and state differ in dimension");
}

void check_order(SchattenOrder p) {
  if (!(p == SchattenOrder::one() || p.is_infinite())) {
    throw UnsupportedError("attacks support p = 1 and p = inf only, got p = " + p.to_string());
  }
}

void check_budget(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("attack budget must be finite and >= 0");
}

}  // namespace

AttackResult make_result(const HermitianMatrix& element, const DensityMatrix& rho, DensityMatrix lambda,
                         SchattenOrder p, double epsilon, Solver used) {
  AttackResult r{std::move(lambda)};
  r.loss = 1.0 - qmat::trace_inner(element, r.lambda_star);
  r.gain = r.loss - clean_loss(element, rho);
  r.solver_used = used;
  r.feasibility_slack = epsilon - qmat::schatten_distance(rho, r.lambda_star, p);
  return r;
}

bool closed_form_feasible(const DensityMatrix& rho, SchattenOrder p, double epsilon) {
  const double floor = qmat::min_eigenvalue(rho);
  if (p == SchattenOrder::one()) return epsilon <= 2.0 * floor;
  if (p.is_infinite()) return epsilon <= floor;
  return false;
}

AttackResult closed_form_p1(const HermitianMatrix& element, const DensityMatrix& rho, double epsilon) {
  check_dims(element, rho);
  check_budget(epsilon);
  if (!closed_form_feasible(rho, SchattenOrder::one(), epsilon)) {
    throw InfeasibleError("closed form for p = 1 needs eps <= 2 alpha_min(rho); use the numerical solver");
  }
  const auto eig = qmat::hermitian_eig(element);
  const int d = element.dim();
  RealVector tau = RealVector::Zero(d);
  if (d > 1 && eig.eigenvalues(d - 1) - eig.eigenvalues(0) > 0.0) {
    tau(0) = -epsilon / 2.0;
    tau(d - 1) = epsilon / 2.0;
  }
  const HermitianMatrix shift = qmat::from_spectrum(tau, eig.basis);
  return make_result(element, rho, qmat::validate_density(rho - shift), SchattenOrder::one(), epsilon,
                     Solver::closed_form);
}

double median_eigenvalue(const RealVector& a) {
  const Eigen::Index d = a.size();
  if (d == 0) throw ValidationError("median of an empty spectrum");
  if (d % 2 == 1) return a(d / 2);
  return 0.5 * (a(d / 2 - 1) + a(d / 2));
}

RealVector pinf_sign_pattern(const RealVector& a) {
  constexpr double tie = 1e-12;
  const double med = median_eigenvalue(a);
  RealVector s = RealVector::Zero(a.size());
  std::vector<Eigen::Index> ties;
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) - med > tie) {
      s(i) = 1.0;
    } else if (med - a(i) > tie) {
      s(i) = -1.0;
    } else {
      ties.push_back(i);
    }
    total += s(i);
  }
  // total is an integer; each tie can move it by one toward zero.
  auto need = static_cast<long>(std::lround(-total));
  for (Eigen::Index i : ties) {
    if (need == 0) break;
    const double sign = need > 0 ? 1.0 : -1.0;
    s(i) = sign;
    need -= static_cast<long>(sign);
  }
  return s;
}

AttackResult closed_form_pinf(const HermitianMatrix& element, const DensityMatrix& rho, double epsilon) {
  check_dims(element, rho);
  check_budget(epsilon);
  if (!closed_form_feasible(rho, SchattenOrder::infinity(), epsilon)) {
    throw InfeasibleError("closed form for p = inf needs eps <= alpha_min(rho); use the numerical solver");
  }
  const auto eig = qmat::hermitian_eig(element);
  const RealVector tau = epsilon * pinf_sign_pattern(eig.eigenvalues);
  const HermitianMatrix shift = qmat::from_spectrum(tau, eig.basis);
  return make_result(element, rho, qmat::validate_density(rho - shift), SchattenOrder::infinity(), epsilon,
                     Solver::closed_form);
}

double bloch_radius(SchattenOrder p, double epsilon) { return 2.0 * epsilon / std::pow(2.0, p.inverse()); }

QubitFeasibleSet::QubitFeasibleSet(const Eigen::Vector3d& center, double radius)
    : center_(center), radius_(radius), center_norm_(center.norm()), axis_(Eigen::Vector3d::UnitZ()) {
  if (center_norm_ > 0.0) axis_ = center_ / center_norm_;
  circle_height_ = 0.0;
  circle_radius_ = 0.0;
  if (center_norm_ > 0.0) {
    const double h = (1.0 + center_norm_ * center_norm_ - radius_ * radius_) / (2.0 * center_norm_);
    circle_height_ = std::clamp(h, -1.0, 1.0);
    circle_radius_ = std::sqrt(std::max(0.0, 1.0 - circle_height_ * circle_height_));
  }
}

Eigen::Vector3d QubitFeasibleSet::extreme_point(const Eigen::Vector3d& direction) const {
  const double len = direction.norm();
  if (len == 0.0 || radius_ == 0.0) return center_;
  const Eigen::Vector3d n = direction / len;
  // Ball around the state, if it stays inside the Bloch ball.
  const Eigen::Vector3d a = center_ + radius_ * n;
  if (a.squaredNorm() <= 1.0) return a;
  // Bloch sphere point, if close enough to the state.
  if ((n - center_).norm() <= radius_) return n;
  // Otherwise both constraints bind: best point of the intersection circle.
  Eigen::Vector3d perp = n - n.dot(axis_) * axis_;
  const double perp_len = perp.norm();
  if (perp_len < 1e-15) {
    perp = axis_.unitOrthogonal();
  } else {
    perp /= perp_len;
  }
  return circle_height_ * axis_ + circle_radius_ * perp;
}

namespace {

void require_qubit(const HermitianMatrix& element, const DensityMatrix& rho, const char* who) {
  check_dims(element, rho);
  if (rho.dim() != 2) throw UnsupportedError(std::string(who) + " is defined for d = 2 only");
}

// Bloch vector of a state on or inside the sphere; tiny overshoots from
// rounding are pulled back to the sphere.
DensityMatrix state_from_bloch(Eigen::Vector3d r) {
  const double n = r.norm();
  if (n > 1.0) r /= n;
  return qmat::qubit::from_bloch(r);
}

}  // namespace

AttackResult qubit_exact(const HermitianMatrix& element, const DensityMatrix& rho, SchattenOrder p,
                         double epsilon) {
  require_qubit(element, rho, "qubit_exact");
  check_order(p);
  check_budget(epsilon);
  if (epsilon == 0.0) return make_result(element, rho, rho, p, epsilon, Solver::qubit_exact);
  // Tr(Pi lambda) = (t + pi . r)/2, so the adversary minimizes pi . r.
  const Eigen::Vector3d pi = qmat::qubit::bloch_vector(element);
  const QubitFeasibleSet set(qmat::qubit::bloch_vector(rho), bloch_radius(p, epsilon));
  auto r = make_result(element, rho, state_from_bloch(set.extreme_point(-pi)), p, epsilon, Solver::qubit_exact);
  if (r.gain < 0.0) r = make_result(element, rho, rho, p, epsilon, Solver::qubit_exact);
  return r;
}

AttackResult bloch_brute_force(const HermitianMatrix& element, const DensityMatrix& rho, SchattenOrder p,
                               double epsilon, double resolution) {
  require_qubit(element, rho, "bloch_brute_force");
  check_order(p);
  check_budget(epsilon);
  if (!(resolution > 0.0)) throw ValidationError("brute-force resolution must be positive");

  const Eigen::Vector3d r0 = qmat::qubit::bloch_vector(rho);
  const Eigen::Vector3d pi = qmat::qubit::bloch_vector(element);
  const double big_r = std::min(bloch_radius(p, epsilon), 2.0);
  const double h = resolution;
  const auto span = static_cast<long>(std::floor(big_r / h));
  // Lattice anchored at the state itself, so the state is always a candidate.
  Eigen::Vector3d best = r0;
  double best_value = pi.dot(r0);

  auto feasible = [&](const Eigen::Vector3d& r) {
    return r.squaredNorm() <= 1.0 + 1e-15 && (r - r0).squaredNorm() <= big_r * big_r * (1.0 + 1e-15);
  };

  for (long i = -span; i <= span; ++i) {
    const double dx = static_cast<double>(i) * h;
    for (long j = -span; j <= span; ++j) {
      const double dy = static_cast<double>(j) * h;
      const double plane = big_r * big_r - dx * dx - dy * dy;
      if (plane < 0.0) continue;
      const double x = r0.x() + dx;
      const double y = r0.y() + dy;
      const double w = 1.0 - x * x - y * y;
      if (w < 0.0) continue;
      // z-offsets k h with |k h| <= sqrt(plane) and |z0 + k h| <= sqrt(w).
      const double lo = std::max(-std::sqrt(plane), -std::sqrt(w) - r0.z());
      const double hi = std::min(std::sqrt(plane), std::sqrt(w) - r0.z());
      if (lo > hi) continue;
      auto k_lo = static_cast<long>(std::ceil(lo / h));
      auto k_hi = static_cast<long>(std::floor(hi / h));
      if (k_lo > k_hi) continue;
      // Linear objective: one of the column's end points is optimal.
      long k = pi.z() > 0.0 ? k_lo : k_hi;
      const long step = pi.z() > 0.0 ? 1 : -1;
      for (int tries = 0; tries < 3 && k >= k_lo && k <= k_hi; ++tries, k += step) {
        const Eigen::Vector3d r(x, y, r0.z() + static_cast<double>(k) * h);
        if (!feasible(r)) continue;
        const double value = pi.dot(r);
        if (value < best_value) {
          best_value = value;
          best = r;
        }
        break;
      }
    }
  }
  return make_result(element, rho, state_from_bloch(best), p, epsilon, Solver::brute_force);
}

AttackResult adversarial_loss(const qmat::Povm& povm, const DensityMatrix& rho, int c, const AttackSpec& attack) {
  attack.validate();
  if (c < 0 || c >= povm.num_classes()) throw ValidationError("class index out of range");
  const HermitianMatrix& element = povm.element(c);
  check_dims(element, rho);
  const double eps = attack.epsilon;
  switch (attack.solver) {
    case Solver::closed_form:
      return attack.p.is_infinite() ? closed_form_pinf(element, rho, eps) : closed_form_p1(element, rho, eps);
    case Solver::numerical: return numerical_inner_max(element, rho, attack.p, eps);
    case Solver::brute_force: return bloch_brute_force(element, rho, attack.p, eps);
    case Solver::qubit_exact: return qubit_exact(element, rho, attack.p, eps);
    case Solver::automatic:
      if (eps == 0.0) return make_result(element, rho, rho, attack.p, eps, Solver::closed_form);
      if (closed_form_feasible(rho, attack.p, eps)) {
        return attack.p.is_infinite() ? closed_form_pinf(element, rho, eps) : closed_form_p1(element, rho, eps);
      }
      if (rho.dim() == 2) return qubit_exact(element, rho, attack.p, eps);
      return numerical_inner_max(element, rho, attack.p, eps);
  }
  throw ValidationError("unknown solver");
}

}  // namespace qadv::attack
