#include <doctest.h>

#include <cmath>
#include <numbers>
#include <map>

#include "qadv/errors.hpp"
#include "qadv/random.hpp"
#include "qadv/train.hpp"

using namespace qadv;
using namespace qadv::train;
using qmat::HermitianMatrix;
using qmat::SchattenOrder;

namespace {

double sum_violation(const qmat::Povm& p) {
  qmat::Matrix s = qmat::Matrix::Zero(p.dim(), p.dim());
  for (const auto& e : p.elements()) s += e.matrix();
  return (s - qmat::Matrix::Identity(p.dim(), p.dim())).cwiseAbs().maxCoeff();
}

void check_feasible(const qmat::Povm& p) {
  CHECK(sum_violation(p) <= qmat::tol::povm);
  for (const auto& e : p.elements()) CHECK(qmat::min_eigenvalue(e) >= -qmat::tol::povm);
}

}  // namespace

TEST_CASE("project_povm examples") {
  const auto id = HermitianMatrix::identity(2);
  const auto feasible = qmat::Povm::computational(2);
  const auto same = project_povm(feasible.elements());
  for (int c = 0; c < 2; ++c) {
    CHECK((same.element(c).matrix() - feasible.element(c).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }

  const auto a = project_povm({id * 1.5, id * -0.5});
  check_feasible(a);

  const auto half = project_povm({id, id});
  for (int c = 0; c < 2; ++c) CHECK((half.element(c).matrix() - id.matrix() * 0.5).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(project_povm({id * 1.5, id * -0.5}, 0), ConvergenceError);
}

TEST_CASE("project_povm on random inputs") {
  auto eng = rng::make_engine(51);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 3, k = 2 + trial % 3;
    std::vector<HermitianMatrix> raw;
    for (int c = 0; c < k; ++c) raw.push_back(rng::random_hermitian(d, eng));
    const auto p = project_povm(raw);
    check_feasible(p);
    // Idempotent.
    const auto again = project_povm(p.elements());
    for (int c = 0; c < k; ++c) {
      CHECK((again.element(c).matrix() - p.element(c).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("TrainConfig validation") {
  TrainConfig c;
  c.step_size = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.max_outer_iters = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("clean training separates orthogonal states") {
  qmat::Vector a(2), b(2);
  a << 1, 1;
  b << 1, -1;
  embed::LabelledStates data;
  for (int i = 0; i < 10; ++i) {
    data.states.push_back(qmat::DensityMatrix::pure(i % 2 ? b : a));
    data.labels.push_back(i % 2);
  }
  TrainConfig cfg;
  cfg.seed = 3;
  const auto r = adversarial_train(data, 2, cfg);
  CHECK(r.risk <= 0.01);
  check_feasible(r.povm);
  // Exhaustive projective search over the Bloch sphere.
  double best = 1.0;
  for (int i = 0; i <= 90; ++i) {
    for (int j = 0; j < 180; ++j) {
      const double th = std::numbers::pi * i / 90, ph = 2 * std::numbers::pi * j / 180;
      const Eigen::Vector3d n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
      const auto p0 = qmat::qubit::from_bloch(n), p1 = qmat::qubit::from_bloch(-n);
      const auto povm = qmat::validate_povm({p0, p1});
      best = std::min(best, adversarial_training_risk(povm, data, {SchattenOrder::one(), 0.0, attack::Solver::automatic}));
    }
  }
  CHECK(r.risk <= best + cfg.convergence_tol);
}

TEST_CASE("training curves are monotone and restarts never end above their start") {
  const embed::EmbeddedGrid grid({}, {});
  const auto ds = embed::sample_dataset(grid.data(), 60, 17);
  TrainConfig cfg;
  cfg.attack = {SchattenOrder::one(), 0.08, attack::Solver::automatic};
  cfg.max_outer_iters = 40;
  cfg.seed = 4;
  const auto r = adversarial_train(ds, grid, cfg);
  check_feasible(r.povm);
  std::map<int, double> last, first;
  for (const auto& p : r.curve) {
    if (!p.accepted) continue;
    if (!first.count(p.restart)) first[p.restart] = p.risk;
    if (last.count(p.restart)) CHECK(p.risk <= last[p.restart] + 1e-15);
    last[p.restart] = p.risk;
  }
  for (const auto& [restart, risk] : last) CHECK(risk <= first[restart]);
  CHECK(r.risk == doctest::Approx(adversarial_training_risk(r.povm, embed::embed_dataset(ds, grid), cfg.attack)));
}

TEST_CASE("adversarially trained model is no worse under its own attack") {
  const embed::EmbeddedGrid grid({}, {});
  const auto ds = embed::sample_dataset(grid.data(), 80, 23);
  const auto data = embed::embed_dataset(ds, grid);
  const attack::AttackSpec strong{SchattenOrder::one(), 0.08, attack::Solver::automatic};
  TrainConfig clean_cfg;
  clean_cfg.seed = 1;
  clean_cfg.max_outer_iters = 60;
  clean_cfg.attack = {SchattenOrder::one(), 0.0, attack::Solver::automatic};
  TrainConfig adv_cfg = clean_cfg;
  adv_cfg.attack = strong;
  const auto clean_model = adversarial_train(data, 2, clean_cfg);
  const auto adv_model = adversarial_train(data, 2, adv_cfg);
  CHECK(adversarial_training_risk(adv_model.povm, data, strong) <=
        adversarial_training_risk(clean_model.povm, data, strong) + adv_cfg.convergence_tol);
}

TEST_CASE("single sample: risk equals the attack-limited floor") {
  auto eng = rng::make_engine(61);
  const auto rho = rng::random_density(2, eng);
  const embed::LabelledStates data{{rho}, {0}};
  const attack::AttackSpec a{SchattenOrder::one(), 0.05, attack::Solver::automatic};
  TrainConfig cfg;
  cfg.attack = a;
  cfg.seed = 2;
  const auto r = adversarial_train(data, 2, cfg);
  // Best response: Pi_0 = I, loss 0 for every lambda.
  CHECK(r.risk <= 1e-6);
}
