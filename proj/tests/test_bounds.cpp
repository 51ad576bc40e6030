#include <doctest.h>

#include <cmath>

#include "qadv/bounds.hpp"
#include "qadv/errors.hpp"
#include "qadv/random.hpp"

using namespace qadv;
using namespace qadv::bounds;
using qmat::DensityMatrix;
using qmat::SchattenOrder;

namespace {

BoundInputs inputs(double I2, long T) {
  BoundInputs in;
  in.K = 2;
  in.T = T;
  in.delta = 0.8;
  in.d = 2;
  in.I2 = I2;
  return in;
}

DensityMatrix basis_state(int d, int k) {
  qmat::Vector v = qmat::Vector::Zero(d);
  v(k) = 1;
  return DensityMatrix::pure(v);
}

const SchattenOrder P1 = SchattenOrder::one();
const SchattenOrder PINF = SchattenOrder::infinity();

}  // namespace

TEST_CASE("renyi2_mi examples") {
  CHECK(std::abs(renyi2_mi({1.0}, {basis_state(2, 0)})) < 1e-12);
  CHECK(renyi2_mi({0.5, 0.5}, {basis_state(2, 0), basis_state(2, 1)}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(renyi2_mi({0.3, 0.7}, {DensityMatrix::maximally_mixed(3), DensityMatrix::maximally_mixed(3)})) <
        1e-12);
  CHECK_THROWS_AS(renyi2_mi({0.5, 0.4}, {basis_state(2, 0), basis_state(2, 1)}), ValidationError);
}

TEST_CASE("renyi2_mi range on random ensembles") {
  auto eng = rng::make_engine(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 2 + trial % 3;
    const int n = 1 + trial % 6;
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) s += (v = unif(eng) + 1e-3);
    for (auto& v : p) v /= s;
    std::vector<DensityMatrix> states;
    for (int i = 0; i < n; ++i) states.push_back(rng::random_density(d, eng));
    const double I2 = renyi2_mi(p, states);
    CHECK(I2 >= -1e-9);
    CHECK(I2 <= 2 * std::log2(d) + 1e-9);
  }
}

TEST_CASE("banchi_bound examples") {
  CHECK(banchi_bound(inputs(1.0, 100)) == doctest::Approx(0.53537).epsilon(1e-5 / 0.53537));
  const double lead100 = 2 * std::sqrt(2.0 * 2 / 100);
  const double lead400 = banchi_bound(inputs(1.0, 400)) - confidence_term(400, 0.8);
  CHECK(lead400 == doctest::Approx(lead100 / 2).epsilon(1e-14));
  auto bad = inputs(1.0, 100);
  bad.delta = 2.0;
  CHECK_THROWS_AS(banchi_bound(bad), ValidationError);
  double prev = 1e9;
  for (long T : {1L, 10L, 100L, 1000L}) {
    const double b = banchi_bound(inputs(0.7, T));
    CHECK(b < prev);
    prev = b;
  }
  // Base-2 reading of log(2/delta).
  auto two = inputs(1.0, 100);
  two.log_base = LogBase::two;
  CHECK(banchi_bound(two) == doctest::Approx(0.4 + std::sqrt(2 * std::log2(2 / 0.8) / 100)));
}

TEST_CASE("adv_bound_p1") {
  auto in = inputs(1.0, 100);
  in.Delta = 0.05;
  const auto zero = adv_bound_p1(in, 0.0);
  CHECK(zero.total == banchi_bound(in));
  CHECK(zero.valid);
  CHECK(adv_bound_p1(in, 0.08).adversarial_increment == doctest::Approx(0.022627).epsilon(1e-6 / 0.022627));
  CHECK(adv_bound_p1(in, 0.08).valid);
  const auto r = adv_bound_p1(in, 0.12);
  CHECK_FALSE(r.valid);
  CHECK(r.validity_reason.find("2") != std::string::npos);
  CHECK(r.total == doctest::Approx(r.base + r.adversarial_increment));
}

TEST_CASE("adv_bound_pinf") {
  auto in = inputs(1.0, 100);
  in.Delta = 0.05;
  CHECK(adv_bound_pinf(in, 0.02).adversarial_increment == doctest::Approx(0.011314).epsilon(1e-6 / 0.011314));
  CHECK(adv_bound_pinf(in, 0.0).total == banchi_bound(in));
  CHECK_FALSE(adv_bound_pinf(in, 0.06).valid);
  for (int d : {2, 3, 5}) {
    in.d = d;
    CHECK(adv_bound_pinf(in, 0.03).adversarial_increment / adv_bound_p1(in, 0.03).adversarial_increment ==
          doctest::Approx(d).epsilon(1e-15));
  }
}

TEST_CASE("adv_bound_general") {
  auto in = inputs(1.0, 100);
  const auto r = adv_bound_general(in, 0.12, P1);
  CHECK(r.adversarial_increment == doctest::Approx(0.12 * std::sqrt(4 * 1.01)).epsilon(1e-15));
  CHECK(r.valid);
  CHECK(adv_bound_general(in, 0.0, P1).adversarial_increment == 0.0);
  CHECK(adv_bound_general(in, 0.1, PINF).adversarial_increment ==
        doctest::Approx(2 * 0.1 * 2 * std::sqrt(1.01)).epsilon(1e-15));
  in.T = 100000000;
  CHECK(adv_bound_general(in, 0.1, PINF).adversarial_increment == doctest::Approx(0.4).epsilon(1e-7));
}

TEST_CASE("bound totals are non-increasing in T") {
  for (auto p : {P1, PINF}) {
    double prev_total = 1e9, prev_gen = 1e9;
    for (long T = 1; T <= 4096; T *= 2) {
      auto in = inputs(0.75, T);
      in.Delta = 0.025;
      const double t = adv_bound(in, 0.05, p).total;
      const double g = adv_bound_general(in, 0.05, p).adversarial_increment;
      CHECK(t <= prev_total);
      CHECK(g <= prev_gen);
      CHECK(g > 0.0);
      prev_total = t;
      prev_gen = g;
    }
  }
}

TEST_CASE("strength_compare examples and antisymmetry") {
  CHECK(strength_compare({PINF, 0.1}, {P1, 0.15}, 2) == Strength::train_stronger);
  CHECK(strength_compare({P1, 0.1}, {PINF, 0.04}, 2) == Strength::train_stronger);
  CHECK(strength_compare({P1, 0.1}, {P1, 0.1}, 2) == Strength::undetermined);
  CHECK(strength_compare({P1, 0.15}, {PINF, 0.1}, 2) == Strength::test_stronger);

  auto eng = rng::make_engine(32);
  std::uniform_real_distribution<double> unif(0.0, 0.3);
  for (int trial = 0; trial < 500; ++trial) {
    const Adversary a{trial % 2 ? P1 : PINF, unif(eng)};
    const Adversary b{trial % 3 ? PINF : P1, unif(eng)};
    const int d = 2 + trial % 3;
    const auto ab = strength_compare(a, b, d);
    const auto ba = strength_compare(b, a, d);
    if (ab == Strength::train_stronger) CHECK(ba == Strength::test_stronger);
    if (ab == Strength::test_stronger) CHECK(ba == Strength::train_stronger);
    if (ab == Strength::undetermined) CHECK(ba == Strength::undetermined);
  }
}

TEST_CASE("xi and mismatch_bounds") {
  MismatchSpec s{{P1, 0.08}, {PINF, 0.05}, 2};
  CHECK(xi(s) == doctest::Approx(0.18).epsilon(1e-15));
  MismatchSpec swapped{s.test, s.train, 2};
  CHECK(xi(swapped) == doctest::Approx(xi(s)).epsilon(1e-15));
  CHECK(xi({{P1, 0.0}, {PINF, 0.0}, 2}) == 0.0);
  CHECK(xi({{PINF, 0.1}, {P1, 0.2}, 1}) == doctest::Approx(0.3));

  const auto iv = mismatch_bounds(0.3, s, Strength::train_stronger);
  CHECK(iv.lo == doctest::Approx(0.12));
  CHECK(iv.hi == doctest::Approx(0.3));
  const auto up = mismatch_bounds(0.3, s, Strength::test_stronger);
  CHECK(up.lo == 0.3);
  CHECK(up.hi == doctest::Approx(0.48));
  const auto flat = mismatch_bounds(0.3, {{P1, 0.0}, {P1, 0.0}, 2}, Strength::train_stronger);
  CHECK(flat.lo == 0.3);
  CHECK(flat.hi == 0.3);
  CHECK_THROWS_AS(mismatch_bounds(0.3, s, Strength::undetermined), ValidationError);
}
