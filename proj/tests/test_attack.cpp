#include <doctest.h>

#include <cmath>

#include "qadv/attack.hpp"
#include "qadv/errors.hpp"
#include "qadv/random.hpp"

using namespace qadv;
using namespace qadv::attack;
using qmat::DensityMatrix;
using qmat::HermitianMatrix;
using qmat::SchattenOrder;

namespace {

HermitianMatrix diag(std::vector<double> v) { return HermitianMatrix::diagonal(v); }
DensityMatrix state(std::vector<double> v) { return qmat::validate_density(diag(v)); }

const SchattenOrder P1 = SchattenOrder::one();
const SchattenOrder PINF = SchattenOrder::infinity();

void check_result(const AttackResult& r, const HermitianMatrix& element, const DensityMatrix& rho, SchattenOrder p,
                  double eps) {
  CHECK(qmat::schatten_distance(rho, r.lambda_star, p) <= eps + feas_tol);
  CHECK(qmat::min_eigenvalue(r.lambda_star) >= -qmat::tol::psd);
  CHECK(std::abs(r.loss - (1.0 - qmat::trace_inner(element, r.lambda_star))) < qmat::tol::trace);
  CHECK(r.gain >= -feas_tol);
}

// Random POVM element 0 <= E <= I.
HermitianMatrix random_element(int d, rng::Engine& eng) {
  const auto u = rng::random_unitary(d, eng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  qmat::RealVector v(d);
  for (int i = 0; i < d; ++i) v(i) = unif(eng);
  return qmat::from_spectrum(v, u);
}

}  // namespace

TEST_CASE("closed_form_p1 examples") {
  const auto r = closed_form_p1(diag({1, 0}), state({0.7, 0.3}), 0.2);
  CHECK((r.lambda_star.matrix() - diag({0.6, 0.4}).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.gain == doctest::Approx(0.1).epsilon(1e-12));
  // Brute-force oracle agrees.
  const auto b = bloch_brute_force(diag({1, 0}), state({0.7, 0.3}), P1, 0.2, 1e-3);
  CHECK(std::abs(b.gain - 0.1) < 2e-3);

  const auto z = closed_form_p1(diag({1, 0}), state({0.7, 0.3}), 0.0);
  CHECK(z.gain == 0.0);
  CHECK((z.lambda_star.matrix() - diag({0.7, 0.3}).matrix()).cwiseAbs().maxCoeff() < 1e-15);

  const auto deg = closed_form_p1(diag({0.5, 0.5}), state({0.7, 0.3}), 0.4);
  CHECK(std::abs(deg.gain) < 1e-15);

  CHECK_THROWS_AS(closed_form_p1(diag({1, 0}), state({0.7, 0.3}), 0.61), InfeasibleError);
}

TEST_CASE("closed_form_pinf examples") {
  const auto r = closed_form_pinf(diag({0.9, 0.2}), state({0.5, 0.5}), 0.3);
  CHECK((r.lambda_star.matrix() - diag({0.2, 0.8}).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.gain == doctest::Approx(0.21).epsilon(1e-12));
  check_result(r, diag({0.9, 0.2}), state({0.5, 0.5}), PINF, 0.3);

  // Diagonal trace-zero perturbations: t in [-eps, eps].
  double best = 0.0;
  for (int k = -3000; k <= 3000; ++k) {
    const double t = 0.3 * k / 3000.0;
    best = std::max(best, 0.9 * t - 0.2 * t);
  }
  CHECK(r.gain == doctest::Approx(best).epsilon(1e-9));

  CHECK(closed_form_pinf(diag({0.9, 0.2}), state({0.5, 0.5}), 0.0).gain == 0.0);
  CHECK(std::abs(closed_form_pinf(diag({0.4, 0.4, 0.4}), state({0.3, 0.3, 0.4}), 0.2).gain) < 1e-15);
  CHECK_THROWS_AS(closed_form_pinf(diag({1, 0}), state({0.7, 0.3}), 0.31), InfeasibleError);
}

TEST_CASE("median and balanced tie rule") {
  qmat::RealVector even(4), odd(3), ties(3), all(4);
  even << 0.1, 0.2, 0.6, 0.9;
  odd << 0.1, 0.5, 0.9;
  ties << 0.2, 0.5, 0.5;
  all << 0.3, 0.3, 0.3, 0.3;
  CHECK(median_eigenvalue(even) == doctest::Approx(0.4));
  CHECK(median_eigenvalue(odd) == doctest::Approx(0.5));
  const auto se = pinf_sign_pattern(even);
  CHECK(se.sum() == 0.0);
  CHECK(se(0) == -1.0);
  CHECK(se(3) == 1.0);
  const auto so = pinf_sign_pattern(odd);
  CHECK(so(1) == 0.0);
  CHECK(so.sum() == 0.0);
  const auto st = pinf_sign_pattern(ties);
  CHECK(st.sum() == 0.0);
  CHECK(st(0) == -1.0);
  CHECK(pinf_sign_pattern(all).cwiseAbs().sum() == 0.0);
}

TEST_CASE("p outside {1, inf} is rejected") {
  AttackSpec spec;
  spec.p = SchattenOrder(2.0);
  spec.epsilon = 0.1;
  CHECK_THROWS_AS(spec.validate(), UnsupportedError);
  spec.p = P1;
  spec.epsilon = -0.1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("numerical solver examples") {
  auto eng = rng::make_engine(21);
  const auto rho = rng::random_density(3, eng);
  const auto el = random_element(3, eng);
  const auto z = numerical_inner_max(el, rho, P1, 0.0);
  CHECK(std::abs(z.gain) < 1e-12);

  // Large budget: the whole state space is reachable.
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 3;
    const auto r = rng::random_density(d, eng);
    const auto e = random_element(d, eng);
    const auto res = numerical_inner_max(e, r, P1, 2.0);
    const double target = qmat::trace_inner(e, r) - qmat::min_eigenvalue(e);
    CHECK(res.gain == doctest::Approx(target).epsilon(1e-6));
    check_result(res, e, r, P1, 2.0);
  }
}

TEST_CASE("closed form vs numerical on 100 qubit instances") {
  auto eng = rng::make_engine(22);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rho = rng::random_density(2, eng);
    const auto el = random_element(2, eng);
    const double eps = 2.0 * qmat::min_eigenvalue(rho) * unif(eng);
    const auto cf = closed_form_p1(el, rho, eps);
    const auto nm = numerical_inner_max(el, rho, P1, eps);
    CHECK(std::abs(cf.gain - nm.gain) < 1e-4);
    CHECK(nm.gain >= cf.gain - opt_tol);
    check_result(cf, el, rho, P1, eps);
    check_result(nm, el, rho, P1, eps);
  }
}

TEST_CASE("solver agreement in d = 2 on both sides of the closed-form region") {
  auto eng = rng::make_engine(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const auto rho = rng::random_density(2, eng);
    const auto el = random_element(2, eng);
    const SchattenOrder p = trial % 2 ? PINF : P1;
    const double eps = 0.6 * unif(eng);
    const auto ex = qubit_exact(el, rho, p, eps);
    const auto nm = numerical_inner_max(el, rho, p, eps);
    const auto bf = bloch_brute_force(el, rho, p, eps);
    check_result(ex, el, rho, p, eps);
    check_result(nm, el, rho, p, eps);
    check_result(bf, el, rho, p, eps);
    CHECK(std::abs(ex.gain - nm.gain) < 1e-4);
    CHECK(bf.gain <= ex.gain + 1e-9);
    CHECK(ex.gain - bf.gain < 4e-3);
    if (closed_form_feasible(rho, p, eps)) {
      const auto cf = p.is_infinite() ? closed_form_pinf(el, rho, eps) : closed_form_p1(el, rho, eps);
      CHECK(std::abs(cf.gain - ex.gain) < 1e-9);
    }
  }
}

TEST_CASE("brute force examples") {
  auto eng = rng::make_engine(24);
  const auto rho = rng::random_density(2, eng);
  const auto el = random_element(2, eng);
  const auto z = bloch_brute_force(el, rho, P1, 0.0);
  CHECK(std::abs(z.gain) < 2e-3);
  const auto big = bloch_brute_force(el, rho, P1, 2.0);
  CHECK(std::abs(big.gain - (qmat::trace_inner(el, rho) - qmat::min_eigenvalue(el))) < 4e-3);
  CHECK_THROWS_AS(bloch_brute_force(diag({1, 0, 0}), state({0.4, 0.3, 0.3}), P1, 0.1), UnsupportedError);
}

TEST_CASE("adversarial_loss properties") {
  auto eng = rng::make_engine(25);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 2;
    const auto rho = rng::random_density(d, eng);
    const auto u = rng::random_unitary(d, eng);
    std::vector<HermitianMatrix> elems;
    for (int j = 0; j < d; ++j) {
      const qmat::Vector v = u.col(j);
      elems.emplace_back(qmat::Matrix(v * v.adjoint()), 1e-9);
    }
    const auto povm = qmat::validate_povm(elems);
    const int c = trial % d;
    const double clean = clean_loss(povm.element(c), rho);
    for (auto p : {P1, PINF}) {
      AttackSpec spec{p, 0.0, Solver::automatic};
      CHECK(adversarial_loss(povm, rho, c, spec).loss == clean);
      double prev = clean;
      for (double eps : {0.01, 0.02, 0.04, 0.1}) {
        spec.epsilon = eps;
        const auto r = adversarial_loss(povm, rho, c, spec);
        check_result(r, povm.element(c), rho, p, eps);
        CHECK(r.loss >= prev - opt_tol);
        CHECK(r.loss <= 1.0 + 1e-12);
        prev = r.loss;
      }
    }
    // The inf-ball contains the 1-ball of equal radius.
    for (double eps : {0.02, 0.1, 0.3}) {
      const auto l1 = adversarial_loss(povm, rho, c, {P1, eps, Solver::automatic}).loss;
      const auto li = adversarial_loss(povm, rho, c, {PINF, eps, Solver::automatic}).loss;
      CHECK(li >= l1 - opt_tol);
    }
  }
}

TEST_CASE("experiment instance gains eps/2 where the closed form applies") {
  // Pi = {|0><0|, |1><1|}, rho with floor 0.05 >= eps/2.
  const auto povm = qmat::Povm::computational(2);
  const auto rho = state({0.9, 0.1});
  const auto r = adversarial_loss(povm, rho, 0, {P1, 0.08, Solver::automatic});
  CHECK(r.solver_used == Solver::closed_form);
  CHECK(r.gain == doctest::Approx(0.04).epsilon(1e-12));
}
