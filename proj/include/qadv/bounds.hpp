#pragma once

// Generalization-bound calculators: Renyi-2 mutual information, the
// non-adversarial bound B, adversarial increments and adversary-strength
// comparisons for mismatched attacks.

#include <string>
#include <vector>

#include "qadv/qmat.hpp"

namespace qadv::bounds {

// Base of the logarithm in the confidence term sqrt(2 log(2/delta) / T).
enum class LogBase { natural, two };

std::string to_string(LogBase b);
LogBase parse_log_base(const std::string& text);

struct BoundInputs {
  int K = 2;
  long T = 1;
  double delta = 0.8;
  int d = 2;
  double Delta = 0.0;  // Assumption-1 floor
  double I2 = 0.0;     // bits
  LogBase log_base = LogBase::natural;

  void validate() const;
};

struct BoundReport {
  double base = 0.0;
  double adversarial_increment = 0.0;
  double total = 0.0;
  bool valid = true;
  std::string validity_reason;
};

// 2 log2 Tr sqrt(sum_x P(x) rho(x)^2).
double renyi2_mi(const std::vector<double>& probs, const std::vector<qmat::DensityMatrix>& states);

// sqrt(2 log(2/delta) / T)
double confidence_term(long T, double delta, LogBase base = LogBase::natural);

// 2 sqrt(2^I2 K / T) + confidence term.
double banchi_bound(const BoundInputs& in);

// B + 2 sqrt(K/T) eps, valid for eps <= 2 Delta.
BoundReport adv_bound_p1(const BoundInputs& in, double epsilon);
// B + 2 d sqrt(K/T) eps, valid for eps <= Delta.
BoundReport adv_bound_pinf(const BoundInputs& in, double epsilon);
// Any budget: eps sqrt(2d(1 + (K-1)/T)) for p = 1, 2 eps d sqrt(1 + (K-1)/T)
// for p = inf. Always valid.
BoundReport adv_bound_general(const BoundInputs& in, double epsilon, qmat::SchattenOrder p);
// Picks adv_bound_p1 or adv_bound_pinf by p.
BoundReport adv_bound(const BoundInputs& in, double epsilon, qmat::SchattenOrder p);

struct Adversary {
  qmat::SchattenOrder p = qmat::SchattenOrder::one();
  double epsilon = 0.0;
};

struct MismatchSpec {
  Adversary train;
  Adversary test;
  int d = 2;

  void validate() const;
};

enum class Strength { train_stronger, test_stronger, undetermined };

std::string to_string(Strength s);

// Sufficient conditions for one Schatten ball to contain the other. The
// first adversary is stronger when eps' < d^{1/p' - 1/p} eps (p <= p') or
// eps' < 2 d^{1/p' - 1/p - 1} eps (p > p'), with 1/inf = 0.
Strength strength_compare(const Adversary& train, const Adversary& test, int d);

// d^{1 - 1/p'} eps' + d^{1 - 1/p} eps
double xi(const MismatchSpec& spec);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// train stronger: [g - xi, g]; test stronger: [g, g + xi]. Throws for an
// undetermined relation.
Interval mismatch_bounds(double g_matched, const MismatchSpec& spec, Strength relation);

}  // namespace qadv::bounds
