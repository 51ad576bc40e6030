#include <doctest.h>

#include <cmath>

#include "qadv/bounds.hpp"
#include "qadv/errors.hpp"
#include "qadv/estimate.hpp"
#include "qadv/random.hpp"

using namespace qadv;
using namespace qadv::estimate;
using qmat::HermitianMatrix;
using qmat::SchattenOrder;

namespace {

qmat::Povm povm_of(std::vector<HermitianMatrix> e) { return qmat::validate_povm(std::move(e)); }

embed::Dataset all_label(const embed::Dataset& ds, int c) {
  embed::Dataset out = ds;
  for (auto& s : out.samples) s.label = c;
  return out;
}

const attack::AttackSpec P1_008{SchattenOrder::one(), 0.08, attack::Solver::automatic};

}  // namespace

TEST_CASE("empirical_risk examples") {
  const embed::EmbeddingSpec spec;
  const embed::DataSpec data;
  const auto ds = all_label(embed::sample_dataset(data, 30, 1), 0);
  const auto id = HermitianMatrix::identity(2), zero = HermitianMatrix::zero(2);
  CHECK(empirical_risk(povm_of({id, zero}), ds, spec) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(empirical_risk(povm_of({zero, id}), ds, spec) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(empirical_risk(povm_of({id, zero}), embed::Dataset{}, spec), ValidationError);

  const auto mixed = embed::sample_dataset(data, 40, 2);
  const auto povm = qmat::Povm::computational(2);
  for (double eps : {0.01, 0.05, 0.12}) {
    attack::AttackSpec a = P1_008;
    a.epsilon = eps;
    CHECK(empirical_risk(povm, mixed, spec, a) >= empirical_risk(povm, mixed, spec));
  }
}

TEST_CASE("population_risk examples") {
  const embed::EmbeddingSpec spec;
  const embed::DataSpec data;
  for (int K : {2, 3}) {
    embed::DataSpec dk = data;
    dk.num_classes = K;
    dk.class_means = std::vector<double>(static_cast<std::size_t>(K), 0.0);
    for (int c = 0; c < K; ++c) dk.class_means[static_cast<std::size_t>(c)] = c % 2 ? -1.0 : 1.0;
    std::vector<HermitianMatrix> uni(static_cast<std::size_t>(K), HermitianMatrix::identity(2) * (1.0 / K));
    CHECK(population_risk(povm_of(uni), spec, dk) == doctest::Approx(1.0 - 1.0 / K).epsilon(1e-12));
  }
  const auto povm = qmat::Povm::computational(2);
  const double clean = population_risk(povm, spec, data);
  attack::AttackSpec zero = P1_008;
  zero.epsilon = 0.0;
  CHECK(population_risk(povm, spec, data, zero) == clean);
  CHECK(clean > 0.0);
  CHECK(clean < 1.0);
  embed::DataSpec fine = data;
  fine.quant_step = 0.005;
  CHECK(std::abs(population_risk(povm, spec, fine) - clean) < 1e-4);
  CHECK(population_risk(povm, spec, data, P1_008) >= clean);
}

TEST_CASE("LossTable agrees with direct evaluation") {
  const embed::EmbeddingSpec spec;
  const embed::DataSpec data;
  const embed::EmbeddedGrid grid(spec, data);
  auto eng = rng::make_engine(3);
  const auto u = rng::random_unitary(2, eng);
  const qmat::Vector v0 = u.col(0), v1 = u.col(1);
  const auto povm = povm_of({HermitianMatrix(qmat::Matrix(v0 * v0.adjoint()), 1e-9),
                             HermitianMatrix(qmat::Matrix(v1 * v1.adjoint()), 1e-9)});
  const LossTable tab(povm, grid, P1_008);
  const auto ds = embed::sample_dataset(data, 25, 9);
  CHECK(tab.empirical(ds) == doctest::Approx(empirical_risk(povm, ds, grid, P1_008)).epsilon(1e-13));
  const auto prior = embed::quantized_prior(data);
  CHECK(tab.population(prior) == doctest::Approx(population_risk(povm, grid, prior, P1_008)).epsilon(1e-13));
}

TEST_CASE("gen_error") {
  const embed::EmbeddingSpec spec;
  embed::DataSpec coarse;
  coarse.quant_step = 0.25;
  const auto povm = qmat::Povm::computational(2);

  // Replay the whole grid in proportion to P(x, c).
  const auto prior = embed::quantized_prior(coarse);
  embed::Dataset replay;
  const double n = 200000;
  for (std::size_t i = 0; i < prior.grid.size(); ++i) {
    for (int c = 0; c < 2; ++c) {
      const auto count = static_cast<long>(std::llround(prior.joint(i, c) * n));
      for (long k = 0; k < count; ++k) replay.samples.push_back({prior.grid[i], c});
    }
  }
  const auto r = gen_error(povm, replay, spec, coarse);
  CHECK(std::abs(r.gen_error) < 1e-4);
  CHECK(r.gen_error == doctest::Approx(r.population - r.empirical).epsilon(1e-12));

  const auto ds = embed::sample_dataset(coarse, 50, 4);
  const auto matched = gen_error(povm, ds, spec, coarse, P1_008);
  const auto mm = gen_error_mismatched(povm, ds, spec, coarse, P1_008, P1_008);
  CHECK(mm.gen_error == matched.gen_error);
  CHECK(matched.adversarial);
}

TEST_CASE("train-stronger mismatch lowers the generalization error") {
  // Strength per Lemma 2: train (inf, 0.1) contains test (1, 0.15) at d = 2.
  const embed::EmbeddingSpec spec;
  const embed::DataSpec data;
  const embed::EmbeddedGrid grid(spec, data);
  const auto prior = embed::quantized_prior(data);
  const auto povm = qmat::Povm::computational(2);
  const attack::AttackSpec train{SchattenOrder::infinity(), 0.1, attack::Solver::automatic};
  const attack::AttackSpec test{SchattenOrder::one(), 0.15, attack::Solver::automatic};
  const LossTable tr(povm, grid, train), te(povm, grid, test);
  double matched = 0.0, mismatched = 0.0;
  const int draws = 200;
  std::vector<double> diffs;
  for (int i = 0; i < draws; ++i) {
    const auto ds = embed::sample_dataset(data, 50, rng::derive_seed(8, rng::Stream::dataset, i));
    const double emp = tr.empirical(ds);
    matched += tr.population(prior) - emp;
    mismatched += te.population(prior) - emp;
  }
  CHECK(mismatched / draws <= matched / draws + 1e-12);
}

TEST_CASE("uniform_deviation_bound") {
  CHECK(uniform_deviation_bound(0.1, 100, 0.8) == doctest::Approx(0.33537).epsilon(1e-5 / 0.33537));
  CHECK(uniform_deviation_bound(0.0, 100, 0.8) == doctest::Approx(bounds::confidence_term(100, 0.8)));
  CHECK(uniform_deviation_bound(0.0, 100, 0.999999) > 0.0);
  CHECK_THROWS_AS(uniform_deviation_bound(0.1, 100, 1.5), ValidationError);
}
