#pragma once

// Worst-case state perturbations inside a Schatten-p ball.
//
// For a POVM element Pi_c and input state rho the adversary solves
//
//   max  1 - Tr(Pi_c lambda)   s.t.  lambda >= 0, Tr lambda = 1, ||rho - lambda||_p <= eps.
//
// Closed forms exist for p = 1 (eps <= 2 alpha_min(rho)) and p = inf
// (eps <= alpha_min(rho)). Outside those regions the numerical solver (any d)
// or the analytic qubit solver (d = 2) applies. The Bloch-grid brute force is
// an independent oracle for tests.

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qadv/qmat.hpp"

namespace qadv::attack {

inline constexpr double feas_tol = 1e-9;
inline constexpr double opt_tol = 1e-6;

enum class Solver { closed_form, numerical, brute_force, qubit_exact, automatic };

std::string to_string(Solver s);
Solver parse_solver(std::string_view text);

struct AttackSpec {
  qmat::SchattenOrder p = qmat::SchattenOrder::one();
  double epsilon = 0.0;
  Solver solver = Solver::automatic;

  // eps >= 0 and p in {1, inf}.
  void validate() const;
};

struct AttackResult {
  qmat::DensityMatrix lambda_star;
  double loss = 0.0;
  double gain = 0.0;  // loss - clean loss
  Solver solver_used = Solver::closed_form;
  double feasibility_slack = 0.0;  // eps - D_p(rho, lambda_star)
  bool converged = true;
};

// 1 - Tr(element rho)
double clean_loss(const qmat::HermitianMatrix& element, const qmat::DensityMatrix& rho);

// Whether the closed form for order p is valid at this budget.
bool closed_form_feasible(const qmat::DensityMatrix& rho, qmat::SchattenOrder p, double epsilon);

AttackResult closed_form_p1(const qmat::HermitianMatrix& element, const qmat::DensityMatrix& rho, double epsilon);
AttackResult closed_form_pinf(const qmat::HermitianMatrix& element, const qmat::DensityMatrix& rho,
                              double epsilon);

// Median of the ascending spectrum: mean of the two middle values for even
// d, the middle value for odd d.
double median_eigenvalue(const qmat::RealVector& ascending);

// Diagonal of the p = inf perturbation in the eigenbasis of the POVM
// element: eps * sign(alpha_i - alpha_med). Entries tied with the median
// (within 1e-12) receive the signs needed to make the diagonal sum to zero,
// in index order; any left over are 0.
qmat::RealVector pinf_sign_pattern(const qmat::RealVector& ascending);

struct NumericalOptions {
  int max_iters = 500;
  int dykstra_cycles = 200;
  double step_scale = 0.5;  // step = step_scale / ||Pi_c - Tr(Pi_c) I/d||_inf
  double tolerance = 1e-10;  // iterate change, and duality gap relative to ||Pi||
  int admm_iters = 20000;    // certification stage
};

// Projected gradient ascent; each projection onto {density matrices} and
// the Schatten ball is computed with cyclic Dykstra. The returned iterate
// is made exactly feasible by projecting onto the density matrices and, if
// needed, contracting toward rho. If a duality-gap check fails afterwards,
// ADMM continues from the best point; converged means the gap closed.
AttackResult numerical_inner_max(const qmat::HermitianMatrix& element, const qmat::DensityMatrix& rho,
                                 qmat::SchattenOrder p, double epsilon, const NumericalOptions& opts = {});

// Euclidean projections used by the numerical solver.
qmat::HermitianMatrix project_to_schatten_ball(const qmat::HermitianMatrix& point,
                                               const qmat::HermitianMatrix& center, qmat::SchattenOrder p,
                                               double radius);

// Radius in Bloch coordinates of a Schatten-p ball of radius eps around a
// qubit state: D_p = 2^{1/p} |r - r'| / 2.
double bloch_radius(qmat::SchattenOrder p, double epsilon);

// Qubit feasible set {r : |r| <= 1, |r - center| <= radius} in Bloch
// coordinates.
class QubitFeasibleSet {
 public:
  QubitFeasibleSet(const Eigen::Vector3d& center, double radius);

  // argmax_{r in set} direction . r
  Eigen::Vector3d extreme_point(const Eigen::Vector3d& direction) const;
  double support(const Eigen::Vector3d& direction) const { return direction.dot(extreme_point(direction)); }
  const Eigen::Vector3d& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

 private:
  Eigen::Vector3d center_;
  double radius_;
  double center_norm_;
  Eigen::Vector3d axis_;  // center / |center|
  double circle_height_;  // intersection circle of the two spheres: r . axis
  double circle_radius_;
};

// Exact optimum for d = 2 from the two-ball geometry.
AttackResult qubit_exact(const qmat::HermitianMatrix& element, const qmat::DensityMatrix& rho,
                         qmat::SchattenOrder p, double epsilon);

// Best point of the Bloch lattice rho + resolution * Z^3 inside the feasible
// set (d = 2 only). The objective is linear, so each lattice column along z
// is resolved at its two feasible end points.
AttackResult bloch_brute_force(const qmat::HermitianMatrix& element, const qmat::DensityMatrix& rho,
                               qmat::SchattenOrder p, double epsilon, double resolution = 2e-3);

// Adversarial loss of class c. Solver::automatic uses the closed form when
// feasible, otherwise qubit_exact for d = 2 and the numerical solver for
// d > 2.
AttackResult adversarial_loss(const qmat::Povm& povm, const qmat::DensityMatrix& rho, int c,
                              const AttackSpec& attack);

}  // namespace qadv::attack
