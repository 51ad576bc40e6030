#include "qadv/train.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "qadv/errors.hpp"
#include "qadv/parallel.hpp"
#include "qadv/random.hpp"

namespace qadv::train {

using qmat::HermitianMatrix;
using qmat::Matrix;

namespace {

Matrix psd_part(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Matrix& u = es.eigenvectors();
  const qmat::RealVector v = es.eigenvalues().cwiseMax(0.0);
  Matrix out = u * v.cast<qmat::Complex>().asDiagonal() * u.adjoint();
  return (out + out.adjoint()) / 2.0;
}

double min_eig(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues()(0); }

std::vector<HermitianMatrix> as_hermitian(const std::vector<Matrix>& ms) {
  std::vector<HermitianMatrix> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.emplace_back(m, 1e-8);
  return out;
}

}  // namespace

qmat::Povm project_povm(const std::vector<HermitianMatrix>& raw, int max_cycles) {
  if (raw.empty()) throw ValidationError("a POVM needs at least one element");
  const int d = raw.front().dim();
  for (const auto& e : raw) {
    if (e.dim() != d) throw ValidationError("POVM elements differ in dimension");
  }
  const std::size_t k = raw.size();
  const Matrix id = Matrix::Identity(d, d);

  std::vector<Matrix> x;
  x.reserve(k);
  for (const auto& e : raw) x.push_back(e.matrix());

  auto infeasibility = [&](const std::vector<Matrix>& ms) {
    Matrix sum = Matrix::Zero(d, d);
    double worst = 0.0;
    for (const auto& m : ms) {
      sum += m;
      worst = std::max(worst, -min_eig(m));
    }
    return std::max(worst, (sum - id).cwiseAbs().maxCoeff());
  };
  if (infeasibility(x) <= 1e-13) return qmat::validate_povm(raw);

  std::vector<Matrix> inc(k, Matrix::Zero(d, d));
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    // PSD cone, with Dykstra increments.
    std::vector<Matrix> y(k);
    for (std::size_t c = 0; c < k; ++c) {
      y[c] = psd_part(x[c] + inc[c]);
      inc[c] = x[c] + inc[c] - y[c];
    }
    // Affine set: spread the excess of the sum evenly. No increment needed.
    Matrix excess = -id;
    for (const auto& m : y) excess += m;
    excess /= static_cast<double>(k);
    double change = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const Matrix next = y[c] - excess;
      change = std::max(change, (next - x[c]).cwiseAbs().maxCoeff());
      x[c] = next;
    }
    if (change < 1e-14 || infeasibility(x) < 1e-13) break;
  }
  const double bad = infeasibility(x);
  if (bad > qmat::tol::povm) {
    throw ConvergenceError("POVM projection did not converge in " + std::to_string(max_cycles) +
                           " cycles (violation " + std::to_string(bad) + ")");
  }
  return qmat::validate_povm(as_hermitian(x));
}

void TrainConfig::validate() const {
  attack.validate();
  if (max_outer_iters < 1) throw ValidationError("max_outer_iters must be >= 1");
  if (!(step_size > 0.0)) throw ValidationError("step_size must be positive");
  if (num_restarts < 1) throw ValidationError("num_restarts must be >= 1");
  if (!(convergence_tol >= 0.0)) throw ValidationError("convergence_tol must be >= 0");
}

namespace {

struct Evaluation {
  double risk = 0.0;
  std::vector<Matrix> worst;  // inner maximizers, one per sample
};

Evaluation evaluate(const qmat::Povm& povm, const embed::LabelledStates& data, const attack::AttackSpec& attack) {
  Evaluation ev;
  ev.worst.resize(data.size());
  std::vector<double> losses(data.size());
  parallel_for(data.size(), [&](std::size_t n) {
    const auto r = attack::adversarial_loss(povm, data.states[n], data.labels[n], attack);
    losses[n] = r.loss;
    ev.worst[n] = r.lambda_star.matrix();
  });
  for (double l : losses) ev.risk += l;
  ev.risk /= static_cast<double>(data.size());
  return ev;
}

void check_data(const embed::LabelledStates& data, int num_classes) {
  if (data.size() == 0) throw ValidationError("training needs a nonempty dataset");
  if (data.labels.size() != data.states.size()) throw ValidationError("one label per state is required");
  if (num_classes < 2) throw ValidationError("training needs at least two classes");
  for (int c : data.labels) {
    if (c < 0 || c >= num_classes) throw ValidationError("label out of range");
  }
}

}  // namespace

double adversarial_training_risk(const qmat::Povm& povm, const embed::LabelledStates& data,
                                 const attack::AttackSpec& attack) {
  check_data(data, povm.num_classes());
  return evaluate(povm, data, attack).risk;
}

qmat::Povm initial_povm(const embed::LabelledStates& data, int num_classes, int restart, std::uint64_t seed) {
  check_data(data, num_classes);
  const int d = data.states.front().dim();
  const auto kk = static_cast<std::size_t>(num_classes);
  if (restart == 1) {
    return qmat::validate_povm(
        std::vector<HermitianMatrix>(kk, HermitianMatrix::identity(d) * (1.0 / num_classes)));
  }
  Matrix basis;
  if (restart == 0) {
    // Class-weighted sums of states; for K = 2 the eigenbasis of their
    // difference is the Helstrom basis.
    std::vector<Matrix> sums(kk, Matrix::Zero(d, d));
    for (std::size_t n = 0; n < data.size(); ++n) {
      sums[static_cast<std::size_t>(data.labels[n])] += data.states[n].matrix();
    }
    Matrix mix = Matrix::Zero(d, d);
    if (num_classes == 2) {
      mix = sums[0] - sums[1];
    } else {
      for (std::size_t c = 0; c < kk; ++c) mix += static_cast<double>(c + 1) * sums[c];
    }
    basis = qmat::hermitian_eig(HermitianMatrix(Matrix((mix + mix.adjoint()) / 2.0))).basis;
    std::vector<Matrix> elems(kk, Matrix::Zero(d, d));
    for (int j = 0; j < d; ++j) {
      const qmat::Vector v = basis.col(j);
      std::size_t best = 0;
      double best_score = -1.0;
      for (std::size_t c = 0; c < kk; ++c) {
        const double score = (v.adjoint() * sums[c] * v)(0, 0).real();
        if (score > best_score) {
          best_score = score;
          best = c;
        }
      }
      elems[best] += v * v.adjoint();
    }
    return project_povm(as_hermitian(elems));
  }
  auto engine = rng::make_engine(rng::derive_seed(seed, rng::Stream::restart, static_cast<std::uint64_t>(restart)));
  basis = rng::random_unitary(d, engine);
  std::vector<Matrix> elems(kk, Matrix::Zero(d, d));
  for (int j = 0; j < d; ++j) {
    const qmat::Vector v = basis.col(j);
    elems[static_cast<std::size_t>(j % num_classes)] += v * v.adjoint();
  }
  return project_povm(as_hermitian(elems));
}

TrainResult adversarial_train(const embed::LabelledStates& data, int num_classes, const TrainConfig& config) {
  config.validate();
  check_data(data, num_classes);
  const auto restarts = static_cast<std::size_t>(config.num_restarts);
  const double t = static_cast<double>(data.size());

  struct Run {
    std::optional<qmat::Povm> povm;
    double risk = 0.0;
    std::vector<CurvePoint> curve;
  };
  std::vector<Run> runs(restarts);

  parallel_for(restarts, [&](std::size_t r) {
    Run& run = runs[r];
    qmat::Povm current = initial_povm(data, num_classes, static_cast<int>(r), config.seed);
    Evaluation ev = evaluate(current, data, config.attack);
    run.curve.push_back({static_cast<int>(r), 0, ev.risk, config.step_size, true});
    double step = config.step_size;
    for (int it = 1; it <= config.max_outer_iters; ++it) {
      // Danskin: with lambda* fixed the risk is linear in Pi, and the
      // gradient for Pi_c is -(1/T) sum_{n in class c} lambda*_n.
      std::vector<Matrix> raw;
      raw.reserve(static_cast<std::size_t>(num_classes));
      for (int c = 0; c < num_classes; ++c) raw.push_back(current.element(c).matrix());
      for (std::size_t n = 0; n < data.size(); ++n) {
        raw[static_cast<std::size_t>(data.labels[n])] += (step / t) * ev.worst[n];
      }
      qmat::Povm candidate = project_povm(as_hermitian(raw));
      Evaluation next = evaluate(candidate, data, config.attack);
      const double improvement = ev.risk - next.risk;
      if (improvement >= 0.0) {
        current = std::move(candidate);
        ev = std::move(next);
        run.curve.push_back({static_cast<int>(r), it, ev.risk, step, true});
        if (improvement < config.convergence_tol) break;
      } else {
        run.curve.push_back({static_cast<int>(r), it, next.risk, step, false});
        step /= 2.0;
        if (step < 1e-10) break;
      }
    }
    run.risk = ev.risk;
    run.povm = std::move(current);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].risk < runs[best].risk) best = r;
  }
  TrainResult out{*runs[best].povm, runs[best].risk, static_cast<int>(best), {}, {}};
  for (auto& run : runs) {
    out.restart_risks.push_back(run.risk);
    out.curve.insert(out.curve.end(), run.curve.begin(), run.curve.end());
  }
  return out;
}

TrainResult adversarial_train(const embed::Dataset& dataset, const embed::EmbeddedGrid& grid,
                              const TrainConfig& config) {
  return adversarial_train(embed::embed_dataset(dataset, grid), grid.data().num_classes, config);
}

}  // namespace qadv::train
