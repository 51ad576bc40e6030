#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qadv/errors.hpp"
#include "qadv/rademacher.hpp"
#include "qadv/random.hpp"

using namespace qadv;
using namespace qadv::estimate;
using qmat::SchattenOrder;

namespace {

std::vector<double> random_signs(std::size_t n, rng::Engine& eng) {
  std::vector<double> s(n);
  for (auto& x : s) x = (eng() & 1U) ? 1.0 : -1.0;
  return s;
}

embed::LabelledStates random_binary(std::size_t n, rng::Engine& eng) {
  embed::LabelledStates out;
  for (std::size_t i = 0; i < n; ++i) {
    out.states.push_back(rng::random_density(2, eng));
    out.labels.push_back(static_cast<int>(eng() & 1U));
  }
  return out;
}

}  // namespace

TEST_CASE("single sample gives 1/2") {
  qmat::Vector z(2);
  z << 1, 0;
  embed::LabelledStates one{{qmat::DensityMatrix::pure(z)}, {1}};
  CHECK(binary_clean_sup(one, {1.0}) == doctest::Approx(1.0));
  CHECK(std::abs(binary_clean_sup(one, {-1.0})) < 1e-15);
  RademacherOptions o;
  const auto avg = sigma_average(one, 2, std::nullopt, o, 1, 2);
  CHECK(avg.exhaustive);
  CHECK(avg.num_sigma == 2);
  CHECK(avg.clean == doctest::Approx(0.5));
}

TEST_CASE("T = 0 gives 0") {
  const embed::EmbeddedGrid grid({}, {});
  RademacherOptions o;
  o.num_datasets = 3;
  CHECK(rademacher_exact_binary(grid, 0, o).value == 0.0);
}

TEST_CASE("exact clean sup agrees with multistart ascent") {
  auto eng = rng::make_engine(41);
  double worst = 0.0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    const auto data = random_binary(8, eng);
    for (int k = 0; k < 4; ++k) {
      const auto s = random_signs(8, eng);
      const double exact = binary_clean_sup(data, s);
      const double ms = multistart_sup(data, 2, s, std::nullopt, 16, rng::derive_seed(1, rng::Stream::multistart, k));
      CHECK(ms <= exact + 1e-9);
      worst = std::max(worst, exact - ms);
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("sphere solver matches a dense direction grid and the POVM ascent") {
  const embed::EmbeddingSpec es;
  const embed::DataSpec dd;
  const embed::EmbeddedGrid grid(es, dd);
  RademacherOptions o;
  for (int cfg = 0; cfg < 6; ++cfg) {
    const auto ds = embed::sample_dataset(dd, 8, 100 + cfg);
    const auto ls = embed::embed_dataset(ds, grid);
    const attack::AttackSpec a{cfg % 2 ? SchattenOrder::infinity() : SchattenOrder::one(), cfg % 3 ? 0.08 : 0.12,
                               attack::Solver::automatic};
    const QubitSupSolver s(ls, a, o, 7 + cfg);
    auto eng = rng::make_engine(cfg);
    const auto sig = random_signs(8, eng);
    CHECK(s.clean(sig) == doctest::Approx(binary_clean_sup(ls, sig)).epsilon(1e-12));
    const double G = s.sphere_max(sig);
    double dense = -1e9;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 2 * n; ++j) {
        const double th = std::numbers::pi * (i + 0.5) / n, ph = std::numbers::pi * j / n;
        dense = std::max(dense, s.g(sig, Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                                                        std::cos(th))));
      }
    }
    CHECK(G >= dense - 1e-9);
    const double ms = multistart_sup(ls, 2, sig, a, 16, 5);
    CHECK(std::abs(ms - s.adversarial(sig)) < 1e-3);
  }
}

TEST_CASE("zero budget reproduces the clean estimate") {
  const embed::EmbeddedGrid grid({}, {});
  RademacherOptions o;
  o.num_datasets = 10;
  o.seed = 5;
  const attack::AttackSpec zero{SchattenOrder::one(), 0.0, attack::Solver::automatic};
  const auto adv = rademacher_adversarial(grid, 8, zero, o);
  const auto clean = rademacher_exact_binary(grid, 8, o);
  CHECK(std::abs(adv.adversarial.value - clean.value) < 1e-3);
  CHECK(adv.clean.value == doctest::Approx(clean.value).epsilon(1e-12));
  CHECK(adv.adversarial.sigma_exhaustive);
  CHECK(adv.adversarial.num_sigma == 256);
}

TEST_CASE("gap ceilings at T = 8 and monotonicity in eps") {
  const embed::EmbeddedGrid grid({}, {});
  RademacherOptions o;
  o.num_datasets = 30;
  o.seed = 6;
  const double T = 8, K = 2, d = 2;
  for (auto p : {SchattenOrder::one(), SchattenOrder::infinity()}) {
    double prev = -1.0, prev_err = 0.0;
    for (double eps : {0.0, 0.02, 0.05}) {
      const auto r = rademacher_adversarial(grid, 8, {p, eps, attack::Solver::automatic}, o);
      const double ceiling = (p.is_infinite() ? d : 1.0) * eps * std::sqrt(K / T);
      CHECK(r.gap <= ceiling + 3 * r.gap_stderr + 1e-12);
      CHECK(r.adversarial.value >= prev - 2 * std::max(prev_err, r.adversarial.stderr_) - 1e-12);
      prev = r.adversarial.value;
      prev_err = r.adversarial.stderr_;
    }
  }
}

TEST_CASE("sampled signs are reproducible") {
  const embed::EmbeddedGrid grid({}, {});
  RademacherOptions o;
  o.num_datasets = 4;
  o.num_sigma = 16;
  o.seed = 9;
  const attack::AttackSpec a{SchattenOrder::one(), 0.08, attack::Solver::automatic};
  const auto x = rademacher_adversarial(grid, 40, a, o);
  const auto y = rademacher_adversarial(grid, 40, a, o);
  CHECK(x.adversarial.value == y.adversarial.value);
  CHECK(x.clean.value == y.clean.value);
  CHECK_FALSE(x.adversarial.sigma_exhaustive);
  CHECK(x.adversarial.num_sigma == 16);
}
