#pragma once

// Clean and adversarial risks, generalization errors and uniform deviation
// bounds. Population risks are exact sums over the quantization grid.

#include <optional>
#include <vector>

#include "qadv/attack.hpp"
#include "qadv/bounds.hpp"
#include "qadv/embed.hpp"
#include "qadv/qmat.hpp"

namespace qadv::estimate {

using OptAttack = std::optional<attack::AttackSpec>;

struct RiskReport {
  double empirical = 0.0;
  double population = 0.0;
  double gen_error = 0.0;  // population - empirical
  bool adversarial = false;
  OptAttack attack;       // used for the empirical risk
  OptAttack test_attack;  // used for the population risk
  double mc_stderr = 0.0;
};

// 1 - Tr(Pi_c rho), or the adversarial loss when an attack is given.
double sample_loss(const qmat::Povm& povm, const qmat::DensityMatrix& rho, int c, const OptAttack& attack);

double empirical_risk(const qmat::Povm& povm, const embed::Dataset& dataset, const embed::EmbeddedGrid& grid,
                      const OptAttack& attack = std::nullopt);
double empirical_risk(const qmat::Povm& povm, const embed::Dataset& dataset, const embed::EmbeddingSpec& embedding,
                      const OptAttack& attack = std::nullopt);

double population_risk(const qmat::Povm& povm, const embed::EmbeddedGrid& grid, const embed::QuantizedPrior& prior,
                       const OptAttack& attack = std::nullopt);
double population_risk(const qmat::Povm& povm, const embed::EmbeddingSpec& embedding, const embed::DataSpec& data,
                       const OptAttack& attack = std::nullopt);

RiskReport gen_error(const qmat::Povm& povm, const embed::Dataset& dataset, const embed::EmbeddingSpec& embedding,
                     const embed::DataSpec& data, const OptAttack& attack = std::nullopt);
// L_{test}(Pi) - L^_{train}(Pi, T)
RiskReport gen_error_mismatched(const qmat::Povm& povm, const embed::Dataset& dataset,
                                const embed::EmbeddingSpec& embedding, const embed::DataSpec& data,
                                const OptAttack& train_attack, const OptAttack& test_attack);

// Loss of every (grid point, class) pair for a fixed POVM and attack, so
// repeated risk evaluations become lookups.
class LossTable {
 public:
  LossTable(const qmat::Povm& povm, const embed::EmbeddedGrid& grid, const OptAttack& attack);
  double loss(std::size_t grid_index, int c) const;
  double population(const embed::QuantizedPrior& prior) const;
  double empirical(const embed::Dataset& dataset) const;
  int num_classes() const noexcept { return classes_; }

 private:
  embed::DataSpec data_;
  int classes_;
  std::vector<double> table_;  // [grid index * K + c]
};

// 2 R + sqrt(2 log(2/delta) / T)
double uniform_deviation_bound(double rademacher, long T, double delta,
                               bounds::LogBase base = bounds::LogBase::natural);

}  // namespace qadv::estimate
