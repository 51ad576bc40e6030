#pragma once

// Rademacher complexity of the POVM class, clean and adversarial.
//
// For one training set and sign vector sigma the inner quantity is
//   sup_Pi (1/T) sum_n sigma_n loss(Pi, rho_n, c_n).
// Clean binary problems are solved exactly (sum of positive eigenvalues).
// Adversarial binary qubit problems reduce to a search over the unit sphere:
// with Pi_0 = (m0 I + m . sigma)/2 the sup is
//   C0 + max(0, a, (a + G)/2),   G = max_|u|=1 g(u),
// where C0 = sum_{c=0} sigma_n, a = sum_{c=1} sigma_n - C0 and
// g(u) = sum_{c=0} sigma_n h_n(-u) + sum_{c=1} sigma_n h_n(u), h_n being the
// support function of the feasible Bloch set of sample n. G is found by
// multistart Riemannian ascent. Other (d, K) use projected ascent over
// POVMs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "qadv/attack.hpp"
#include "qadv/bounds.hpp"
#include "qadv/embed.hpp"

namespace qadv::estimate {

struct RademacherOptions {
  std::size_t num_datasets = 200;
  std::size_t num_sigma = 512;
  std::size_t exhaustive_max_T = 16;  // enumerate all 2^T sign vectors up to here
  int random_starts = 16;
  int screen_directions = 64;  // fixed Fibonacci-sphere directions screened with the random starts
  int polish = 3;              // best screened starts refined by ascent
  std::uint64_t seed = 0;
};

enum class InnerMode { exact_binary, multistart };

const char* to_string(InnerMode m);

struct RademacherEstimate {
  double value = 0.0;
  double stderr_ = 0.0;  // over dataset draws
  InnerMode mode = InnerMode::exact_binary;
  std::size_t num_sigma = 0;  // per dataset
  std::size_t num_datasets = 0;
  bool sigma_exhaustive = false;
  long T = 0;
};

// Adversarial estimate with the clean one on the same datasets and signs;
// gap estimates the perturbation Rademacher complexity.
struct AdversarialRademacher {
  RademacherEstimate adversarial;
  RademacherEstimate clean;
  double gap = 0.0;
  double gap_stderr = 0.0;
};

// Exact clean inner sup for K = 2, any d.
double binary_clean_sup(const embed::LabelledStates& data, const std::vector<double>& sigma);

// Clean and adversarial inner sups for K = 2, d = 2 sharing one sphere
// search set-up. Directions are screened once per training set.
class QubitSupSolver {
 public:
  QubitSupSolver(const embed::LabelledStates& data, const attack::AttackSpec& attack,
                 const RademacherOptions& opts, std::uint64_t start_seed);
  double clean(const std::vector<double>& sigma) const;
  double adversarial(const std::vector<double>& sigma) const;
  // max over the unit sphere of g; exposed for tests.
  double sphere_max(const std::vector<double>& sigma) const;
  double g(const std::vector<double>& sigma, const Eigen::Vector3d& u) const;

 private:
  double g_and_grad(const std::vector<double>& sigma, const Eigen::Vector3d& u, Eigen::Vector3d* grad) const;
  double polish(const std::vector<double>& sigma, Eigen::Vector3d u, double value) const;
  void bloch_sums(const std::vector<double>& sigma, double* c0, double* a, Eigen::Vector3d* b) const;

  std::vector<attack::QubitFeasibleSet> sets_;
  std::vector<Eigen::Vector3d> centers_;
  std::vector<int> labels_;
  std::vector<Eigen::Vector3d> starts_;
  std::vector<double> screen_;  // [start * T + n] = s_n(u_start)
  int polish_;
};

// Projected ascent over POVMs from several starts (any d, K). The attack is
// optional; without it the clean loss is used.
double multistart_sup(const embed::LabelledStates& data, int num_classes, const std::vector<double>& sigma,
                      const std::optional<attack::AttackSpec>& attack, int random_starts, std::uint64_t seed);

struct SigmaAverage {
  double clean = 0.0;
  double adversarial = 0.0;
  std::size_t num_sigma = 0;
  bool exhaustive = false;
};

// Averages over sign vectors for one training set: all 2^T when
// T <= exhaustive_max_T, else num_sigma draws from `sigma_seed`.
SigmaAverage sigma_average(const embed::LabelledStates& data, int num_classes,
                           const std::optional<attack::AttackSpec>& attack, const RademacherOptions& opts,
                           std::uint64_t sigma_seed, std::uint64_t start_seed);

// Datasets of size T drawn from the grid's data model.
RademacherEstimate rademacher_exact_binary(const embed::EmbeddedGrid& grid, long T, const RademacherOptions& opts);
AdversarialRademacher rademacher_adversarial(const embed::EmbeddedGrid& grid, long T,
                                             const attack::AttackSpec& attack, const RademacherOptions& opts);

}  // namespace qadv::estimate
