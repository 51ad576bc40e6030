#include "qadv/estimate.hpp"

#include "qadv/errors.hpp"
#include "qadv/parallel.hpp"

namespace qadv::estimate {

double sample_loss(const qmat::Povm& povm, const qmat::DensityMatrix& rho, int c, const OptAttack& attack) {
  if (c < 0 || c >= povm.num_classes()) throw ValidationError("label out of range for the POVM");
  if (!attack) return attack::clean_loss(povm.element(c), rho);
  return attack::adversarial_loss(povm, rho, c, *attack).loss;
}

double empirical_risk(const qmat::Povm& povm, const embed::Dataset& dataset, const embed::EmbeddedGrid& grid,
                      const OptAttack& attack) {
  if (dataset.empty()) throw ValidationError("empirical risk of an empty dataset");
  double total = 0.0;
  for (const auto& s : dataset.samples) total += sample_loss(povm, grid.state_at(s.x), s.label, attack);
  return total / static_cast<double>(dataset.size());
}

double empirical_risk(const qmat::Povm& povm, const embed::Dataset& dataset, const embed::EmbeddingSpec& embedding,
                      const OptAttack& attack) {
  if (dataset.empty()) throw ValidationError("empirical risk of an empty dataset");
  double total = 0.0;
  for (const auto& s : dataset.samples) total += sample_loss(povm, embed::embed(embedding, s.x), s.label, attack);
  return total / static_cast<double>(dataset.size());
}

double population_risk(const qmat::Povm& povm, const embed::EmbeddedGrid& grid, const embed::QuantizedPrior& prior,
                       const OptAttack& attack) {
  return LossTable(povm, grid, attack).population(prior);
}

double population_risk(const qmat::Povm& povm, const embed::EmbeddingSpec& embedding, const embed::DataSpec& data,
                       const OptAttack& attack) {
  const embed::EmbeddedGrid grid(embedding, data);
  return population_risk(povm, grid, embed::quantized_prior(data), attack);
}

RiskReport gen_error_mismatched(const qmat::Povm& povm, const embed::Dataset& dataset,
                                const embed::EmbeddingSpec& embedding, const embed::DataSpec& data,
                                const OptAttack& train_attack, const OptAttack& test_attack) {
  const embed::EmbeddedGrid grid(embedding, data);
  RiskReport r;
  r.empirical = empirical_risk(povm, dataset, grid, train_attack);
  r.population = population_risk(povm, grid, embed::quantized_prior(data), test_attack);
  r.gen_error = r.population - r.empirical;
  r.adversarial = train_attack.has_value() || test_attack.has_value();
  r.attack = train_attack;
  r.test_attack = test_attack;
  return r;
}

RiskReport gen_error(const qmat::Povm& povm, const embed::Dataset& dataset, const embed::EmbeddingSpec& embedding,
                     const embed::DataSpec& data, const OptAttack& attack) {
  return gen_error_mismatched(povm, dataset, embedding, data, attack, attack);
}

LossTable::LossTable(const qmat::Povm& povm, const embed::EmbeddedGrid& grid, const OptAttack& attack)
    : data_(grid.data()), classes_(povm.num_classes()) {
  if (povm.num_classes() != grid.data().num_classes) {
    throw ValidationError("POVM and data disagree on the number of classes");
  }
  if (attack) attack->validate();
  const std::size_t n = grid.size();
  table_.assign(n * static_cast<std::size_t>(classes_), 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (int c = 0; c < classes_; ++c) {
      table_[i * static_cast<std::size_t>(classes_) + static_cast<std::size_t>(c)] =
          sample_loss(povm, grid.state(i), c, attack);
    }
  });
}

double LossTable::loss(std::size_t grid_index, int c) const {
  if (c < 0 || c >= classes_) throw ValidationError("label out of range for the loss table");
  return table_.at(grid_index * static_cast<std::size_t>(classes_) + static_cast<std::size_t>(c));
}

double LossTable::population(const embed::QuantizedPrior& prior) const {
  if (prior.grid.size() * static_cast<std::size_t>(classes_) != table_.size()) {
    throw ValidationError("prior grid does not match the loss table");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < prior.grid.size(); ++i) {
    for (int c = 0; c < classes_; ++c) total += prior.joint(i, c) * loss(i, c);
  }
  return total;
}

double LossTable::empirical(const embed::Dataset& dataset) const {
  if (dataset.empty()) throw ValidationError("empirical risk of an empty dataset");
  double total = 0.0;
  for (const auto& s : dataset.samples) total += loss(data_.nearest_index(s.x), s.label);
  return total / static_cast<double>(dataset.size());
}

double uniform_deviation_bound(double rademacher, long T, double delta, bounds::LogBase base) {
  return 2.0 * rademacher + bounds::confidence_term(T, delta, base);
}

}  // namespace qadv::estimate
