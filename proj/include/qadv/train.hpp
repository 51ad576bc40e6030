#pragma once

// Adversarial (min-max) training of POVMs by projected subgradient descent.

#include <cstdint>
#include <vector>

#include "qadv/attack.hpp"
#include "qadv/embed.hpp"
#include "qadv/qmat.hpp"

namespace qadv::train {

inline constexpr int projection_cycles = 200;

// Nearest POVM by cyclic Dykstra between {Pi_c >= 0 for all c} and the
// affine set {sum_c Pi_c = I}. Throws ConvergenceError if the result is
// still infeasible after `max_cycles`.
qmat::Povm project_povm(const std::vector<qmat::HermitianMatrix>& raw, int max_cycles = projection_cycles);

struct TrainConfig {
  attack::AttackSpec attack;
  int max_outer_iters = 200;
  double step_size = 0.1;
  int num_restarts = 3;
  std::uint64_t seed = 0;
  double convergence_tol = 1e-6;

  void validate() const;
};

struct CurvePoint {
  int restart = 0;
  int iteration = 0;
  double risk = 0.0;  // adversarial training risk after the step
  double step = 0.0;
  bool accepted = true;
};

struct TrainResult {
  qmat::Povm povm;
  double risk = 0.0;
  int best_restart = 0;
  std::vector<double> restart_risks;
  std::vector<CurvePoint> curve;
};

// Adversarial empirical risk and its inner maximizers.
double adversarial_training_risk(const qmat::Povm& povm, const embed::LabelledStates& data,
                                 const attack::AttackSpec& attack);

// Initial POVM of restart r: 0 diagonalizes the class-mean states, 1 is the
// uniform split I/K, later restarts are Haar-rotated projective measurements.
qmat::Povm initial_povm(const embed::LabelledStates& data, int num_classes, int restart, std::uint64_t seed);

TrainResult adversarial_train(const embed::LabelledStates& data, int num_classes, const TrainConfig& config);
TrainResult adversarial_train(const embed::Dataset& dataset, const embed::EmbeddedGrid& grid,
                              const TrainConfig& config);

}  // namespace qadv::train
