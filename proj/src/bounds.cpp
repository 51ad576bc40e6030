#include "qadv/bounds.hpp"

#include <cmath>
#include <sstream>

#include "qadv/errors.hpp"

namespace qadv::bounds {

using qmat::SchattenOrder;

std::string to_string(LogBase b) { return b == LogBase::natural ? "e" : "2"; }

LogBase parse_log_base(const std::string& text) {
  if (text == "e" || text == "natural" || text == "ln") return LogBase::natural;
  if (text == "2" || text == "log2") return LogBase::two;
  throw ValidationError("log base must be 'e' or '2', got '" + text + "'");
}

void BoundInputs::validate() const {
  if (K < 2) throw ValidationError("bounds need K >= 2");
  if (T < 1) throw ValidationError("bounds need T >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)", delta);
  if (d < 1) throw ValidationError("dimension must be positive");
  if (!(Delta >= 0.0 && Delta <= 1.0 / d + 1e-12)) throw ValidationError("Delta must lie in [0, 1/d]", Delta);
  if (!(I2 >= 0.0) || !std::isfinite(I2)) throw ValidationError("I2 must be finite and >= 0", I2);
}

double renyi2_mi(const std::vector<double>& probs, const std::vector<qmat::DensityMatrix>& states) {
  if (probs.size() != states.size()) throw ValidationError("one probability per state is required");
  if (states.empty()) throw ValidationError("empty ensemble");
  const int d = states.front().dim();
  double total = 0.0;
  qmat::Matrix m = qmat::Matrix::Zero(d, d);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0)) throw ValidationError("probabilities must be >= 0", -probs[i]);
    if (states[i].dim() != d) throw ValidationError("states differ in dimension");
    total += probs[i];
    m += probs[i] * states[i].matrix() * states[i].matrix();
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("probabilities must sum to 1", std::abs(total - 1.0));
  const auto eig = qmat::hermitian_eig(qmat::HermitianMatrix(qmat::Matrix((m + m.adjoint()) / 2.0)));
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) tr_sqrt += std::sqrt(std::max(0.0, eig.eigenvalues(i)));
  return std::max(0.0, 2.0 * std::log2(tr_sqrt));
}

double confidence_term(long T, double delta, LogBase base) {
  if (T < 1) throw ValidationError("T must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)", delta);
  const double lg = base == LogBase::natural ? std::log(2.0 / delta) : std::log2(2.0 / delta);
  return std::sqrt(2.0 * lg / static_cast<double>(T));
}

double banchi_bound(const BoundInputs& in) {
  in.validate();
  const double t = static_cast<double>(in.T);
  return 2.0 * std::sqrt(std::exp2(in.I2) * in.K / t) + confidence_term(in.T, in.delta, in.log_base);
}

namespace {

void check_budget(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("budget must be finite and >= 0");
}

BoundReport assemble(const BoundInputs& in, double increment, bool valid, std::string reason) {
  BoundReport r;
  r.base = banchi_bound(in);
  r.adversarial_increment = increment;
  r.total = r.base + increment;
  r.valid = valid;
  r.validity_reason = std::move(reason);
  return r;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

BoundReport adv_bound_p1(const BoundInputs& in, double epsilon) {
  check_budget(epsilon);
  const double inc = 2.0 * std::sqrt(static_cast<double>(in.K) / static_cast<double>(in.T)) * epsilon;
  const bool ok = epsilon <= 2.0 * in.Delta;
  return assemble(in, inc, ok,
                  ok ? "eps <= 2 Delta" : "eps = " + fmt(epsilon) + " > 2 Delta = " + fmt(2.0 * in.Delta));
}

BoundReport adv_bound_pinf(const BoundInputs& in, double epsilon) {
  check_budget(epsilon);
  // d times the p = 1 increment
  const double inc = in.d * (2.0 * std::sqrt(static_cast<double>(in.K) / static_cast<double>(in.T)) * epsilon);
  const bool ok = epsilon <= in.Delta;
  return assemble(in, inc, ok, ok ? "eps <= Delta" : "eps = " + fmt(epsilon) + " > Delta = " + fmt(in.Delta));
}

BoundReport adv_bound_general(const BoundInputs& in, double epsilon, SchattenOrder p) {
  check_budget(epsilon);
  const double growth = 1.0 + static_cast<double>(in.K - 1) / static_cast<double>(in.T);
  double inc = 0.0;
  if (p == SchattenOrder::one()) {
    inc = epsilon * std::sqrt(2.0 * in.d * growth);
  } else if (p.is_infinite()) {
    inc = 2.0 * epsilon * in.d * std::sqrt(growth);
  } else {
    throw UnsupportedError("bounds are available for p = 1 and p = inf only");
  }
  return assemble(in, inc, true, "any budget");
}

BoundReport adv_bound(const BoundInputs& in, double epsilon, SchattenOrder p) {
  if (p == SchattenOrder::one()) return adv_bound_p1(in, epsilon);
  if (p.is_infinite()) return adv_bound_pinf(in, epsilon);
  throw UnsupportedError("bounds are available for p = 1 and p = inf only");
}

void MismatchSpec::validate() const {
  check_budget(train.epsilon);
  check_budget(test.epsilon);
  if (d < 1) throw ValidationError("dimension must be positive");
}

std::string to_string(Strength s) {
  switch (s) {
    case Strength::train_stronger: return "TrainStronger";
    case Strength::test_stronger: return "TestStronger";
    case Strength::undetermined: return "Undetermined";
  }
  return "Undetermined";
}

namespace {

// Whether the ball of `a` contains the ball of `b` by the Lemma 2 criterion.
bool contains(const Adversary& a, const Adversary& b, int d) {
  const double ia = a.p.inverse();
  const double ib = b.p.inverse();
  const double dd = static_cast<double>(d);
  if (a.p.value() <= b.p.value()) return b.epsilon < std::pow(dd, ib - ia) * a.epsilon;
  return b.epsilon < 2.0 * std::pow(dd, ib - ia - 1.0) * a.epsilon;
}

}  // namespace

Strength strength_compare(const Adversary& train, const Adversary& test, int d) {
  check_budget(train.epsilon);
  check_budget(test.epsilon);
  if (d < 1) throw ValidationError("dimension must be positive");
  if (contains(train, test, d)) return Strength::train_stronger;
  if (contains(test, train, d)) return Strength::test_stronger;
  return Strength::undetermined;
}

double xi(const MismatchSpec& spec) {
  spec.validate();
  const double dd = static_cast<double>(spec.d);
  return std::pow(dd, 1.0 - spec.test.p.inverse()) * spec.test.epsilon +
         std::pow(dd, 1.0 - spec.train.p.inverse()) * spec.train.epsilon;
}

Interval mismatch_bounds(double g_matched, const MismatchSpec& spec, Strength relation) {
  const double x = xi(spec);
  switch (relation) {
    case Strength::train_stronger: return {g_matched - x, g_matched};
    case Strength::test_stronger: return {g_matched, g_matched + x};
    case Strength::undetermined: break;
  }
  throw ValidationError("cannot bound the mismatched error: adversary strengths are undetermined");
}

}  // namespace qadv::bounds
