#include "qadv/rademacher.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qadv/errors.hpp"
#include "qadv/parallel.hpp"
#include "qadv/random.hpp"
#include "qadv/train.hpp"

namespace qadv::estimate {

using Eigen::Vector3d;
using qmat::Matrix;

const char* to_string(InnerMode m) { return m == InnerMode::exact_binary ? "exact_binary" : "multistart"; }

namespace {

void check_binary(const embed::LabelledStates& data, const std::vector<double>& sigma) {
  if (sigma.size() != data.size()) throw ValidationError("one sign per sample is required");
  for (int c : data.labels) {
    if (c != 0 && c != 1) throw ValidationError("binary estimators need labels in {0, 1}");
  }
}

std::vector<Vector3d> fibonacci_sphere(int n) {
  std::vector<Vector3d> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  return out;
}

Vector3d random_direction(rng::Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Vector3d v(normal(engine), normal(engine), normal(engine));
    if (v.norm() > 1e-12) return v.normalized();
  }
}

struct MeanErr {
  double mean = 0.0;
  double err = 0.0;
};

MeanErr mean_stderr(const std::vector<double>& xs) {
  MeanErr r;
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.err = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

}  // namespace

double binary_clean_sup(const embed::LabelledStates& data, const std::vector<double>& sigma) {
  check_binary(data, sigma);
  if (data.size() == 0) return 0.0;
  const int d = data.states.front().dim();
  // sum_n sigma_n loss = C0 + Tr(Pi_0 A), maximized by the projector onto
  // the positive eigenspace of A.
  double c0 = 0.0;
  Matrix a = Matrix::Zero(d, d);
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (data.labels[n] == 0) {
      c0 += sigma[n];
      a -= sigma[n] * data.states[n].matrix();
    } else {
      a += sigma[n] * data.states[n].matrix();
    }
  }
  const auto eig = qmat::hermitian_eig(qmat::HermitianMatrix(Matrix((a + a.adjoint()) / 2.0)));
  double pos = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) pos += std::max(0.0, eig.eigenvalues(i));
  return (c0 + pos) / static_cast<double>(data.size());
}

QubitSupSolver::QubitSupSolver(const embed::LabelledStates& data, const attack::AttackSpec& attack,
                               const RademacherOptions& opts, std::uint64_t start_seed)
    : labels_(data.labels), polish_(opts.polish) {
  attack.validate();
  for (const auto& rho : data.states) {
    if (rho.dim() != 2) throw UnsupportedError("the sphere solver needs d = 2");
  }
  check_binary(data, std::vector<double>(data.size(), 1.0));
  const double radius = attack::bloch_radius(attack.p, attack.epsilon);
  for (const auto& rho : data.states) {
    centers_.push_back(qmat::qubit::bloch_vector(rho));
    sets_.emplace_back(centers_.back(), radius);
  }
  starts_ = fibonacci_sphere(opts.screen_directions);
  auto engine = rng::make_engine(start_seed);
  for (int i = 0; i < opts.random_starts; ++i) starts_.push_back(random_direction(engine));
  const std::size_t t = data.size();
  screen_.resize(starts_.size() * t);
  for (std::size_t j = 0; j < starts_.size(); ++j) {
    for (std::size_t n = 0; n < t; ++n) {
      const Vector3d u = labels_[n] == 1 ? starts_[j] : Vector3d(-starts_[j]);
      screen_[j * t + n] = sets_[n].support(u);
    }
  }
}

double QubitSupSolver::g_and_grad(const std::vector<double>& sigma, const Vector3d& u, Vector3d* grad) const {
  double value = 0.0;
  Vector3d gsum = Vector3d::Zero();
  for (std::size_t n = 0; n < sets_.size(); ++n) {
    if (labels_[n] == 1) {
      const Vector3d x = sets_[n].extreme_point(u);
      value += sigma[n] * u.dot(x);
      gsum += sigma[n] * x;
    } else {
      const Vector3d x = sets_[n].extreme_point(-u);
      value -= sigma[n] * u.dot(x);
      gsum -= sigma[n] * x;
    }
  }
  if (grad) *grad = gsum;
  return value;
}

double QubitSupSolver::g(const std::vector<double>& sigma, const Vector3d& u) const {
  return g_and_grad(sigma, u.normalized(), nullptr);
}

double QubitSupSolver::polish(const std::vector<double>& sigma, Vector3d u, double value) const {
  Vector3d grad;
  value = g_and_grad(sigma, u, &grad);
  Vector3d tangent = grad - grad.dot(u) * u;
  double tn = tangent.norm();
  if (tn < 1e-14) return value;
  double step = 0.5 / tn;
  for (int it = 0; it < 200; ++it) {
    const Vector3d trial = (u + step * tangent).normalized();
    Vector3d trial_grad;
    const double v = g_and_grad(sigma, trial, &trial_grad);
    if (v > value + 1e-15) {
      u = trial;
      value = v;
      tangent = trial_grad - trial_grad.dot(u) * u;
      tn = tangent.norm();
      if (tn < 1e-14) break;
      step = std::min(2.0 * step, 0.5 / tn);
    } else {
      step *= 0.5;
    }
    if (step * tn < 1e-10) break;
  }
  return value;
}

void QubitSupSolver::bloch_sums(const std::vector<double>& sigma, double* c0, double* a, Vector3d* b) const {
  *c0 = 0.0;
  double s1 = 0.0;
  b->setZero();
  for (std::size_t n = 0; n < centers_.size(); ++n) {
    if (labels_[n] == 0) {
      *c0 += sigma[n];
      *b -= sigma[n] * centers_[n];
    } else {
      s1 += sigma[n];
      *b += sigma[n] * centers_[n];
    }
  }
  *a = s1 - *c0;
}

double QubitSupSolver::sphere_max(const std::vector<double>& sigma) const {
  if (sigma.size() != labels_.size()) throw ValidationError("one sign per sample is required");
  const std::size_t t = labels_.size();
  double c0 = 0.0;
  double a = 0.0;
  Vector3d b;
  bloch_sums(sigma, &c0, &a, &b);
  // Candidates: screened directions plus +-b, the clean optimum direction.
  std::vector<Vector3d> dirs = starts_;
  const Vector3d bhat = b.norm() > 1e-12 ? Vector3d(b.normalized()) : Vector3d::UnitZ();
  dirs.push_back(bhat);
  dirs.push_back(-bhat);
  std::vector<double> values(dirs.size());
  for (std::size_t j = 0; j < starts_.size(); ++j) {
    double v = 0.0;
    for (std::size_t n = 0; n < t; ++n) v += sigma[n] * screen_[j * t + n];
    values[j] = v;
  }
  values[starts_.size()] = g_and_grad(sigma, bhat, nullptr);
  values[starts_.size() + 1] = g_and_grad(sigma, -bhat, nullptr);

  std::vector<std::size_t> order(dirs.size());
  std::iota(order.begin(), order.end(), 0);
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(polish_, 0)), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
  double best = *std::max_element(values.begin(), values.end());
  for (std::size_t k = 0; k < keep; ++k) {
    best = std::max(best, polish(sigma, dirs[order[k]], values[order[k]]));
  }
  return best;
}

double QubitSupSolver::clean(const std::vector<double>& sigma) const {
  if (sigma.size() != labels_.size()) throw ValidationError("one sign per sample is required");
  if (labels_.empty()) return 0.0;
  double c0 = 0.0;
  double a = 0.0;
  Vector3d b;
  bloch_sums(sigma, &c0, &a, &b);
  return (c0 + std::max({0.0, a, 0.5 * (a + b.norm())})) / static_cast<double>(labels_.size());
}

double QubitSupSolver::adversarial(const std::vector<double>& sigma) const {
  if (sigma.size() != labels_.size()) throw ValidationError("one sign per sample is required");
  if (labels_.empty()) return 0.0;
  double c0 = 0.0;
  double a = 0.0;
  Vector3d b;
  bloch_sums(sigma, &c0, &a, &b);
  const double big_g = sphere_max(sigma);
  return (c0 + std::max({0.0, a, 0.5 * (a + big_g)})) / static_cast<double>(labels_.size());
}

namespace {

std::vector<qmat::HermitianMatrix> to_hermitian(const std::vector<Matrix>& ms) {
  std::vector<qmat::HermitianMatrix> out;
  for (const auto& m : ms) out.emplace_back(Matrix((m + m.adjoint()) / 2.0));
  return out;
}

}  // namespace

double multistart_sup(const embed::LabelledStates& data, int num_classes, const std::vector<double>& sigma,
                      const std::optional<attack::AttackSpec>& attack, int random_starts, std::uint64_t seed) {
  if (sigma.size() != data.size()) throw ValidationError("one sign per sample is required");
  if (num_classes < 2) throw ValidationError("need at least two classes");
  for (int c : data.labels) {
    if (c < 0 || c >= num_classes) throw ValidationError("label out of range");
  }
  if (data.size() == 0) return 0.0;
  const int d = data.states.front().dim();
  const auto kk = static_cast<std::size_t>(num_classes);
  const double t = static_cast<double>(data.size());

  // Objective and, per class, the sum of sigma_n lambda*_n.
  auto evaluate = [&](const qmat::Povm& povm, std::vector<Matrix>* pull) {
    double total = 0.0;
    if (pull) pull->assign(kk, Matrix::Zero(d, d));
    for (std::size_t n = 0; n < data.size(); ++n) {
      const int c = data.labels[n];
      double loss = 0.0;
      Matrix worst;
      if (attack) {
        const auto r = attack::adversarial_loss(povm, data.states[n], c, *attack);
        loss = r.loss;
        worst = r.lambda_star.matrix();
      } else {
        loss = attack::clean_loss(povm.element(c), data.states[n]);
        worst = data.states[n].matrix();
      }
      total += sigma[n] * loss;
      if (pull) (*pull)[static_cast<std::size_t>(c)] += sigma[n] * worst;
    }
    return total / t;
  };

  // Coefficients of the clean objective sum_c Tr(Pi_c B_c).
  std::vector<Matrix> coef(kk, Matrix::Zero(d, d));
  for (std::size_t n = 0; n < data.size(); ++n) {
    coef[static_cast<std::size_t>(data.labels[n])] -= sigma[n] * data.states[n].matrix();
  }

  std::vector<qmat::Povm> starts;
  {
    Matrix mix = Matrix::Zero(d, d);
    if (num_classes == 2) {
      mix = coef[0] - coef[1];
    } else {
      for (std::size_t c = 0; c < kk; ++c) mix += static_cast<double>(c + 1) * coef[c];
    }
    const auto eig = qmat::hermitian_eig(qmat::HermitianMatrix(Matrix((mix + mix.adjoint()) / 2.0)));
    std::vector<Matrix> best(kk, Matrix::Zero(d, d));
    std::vector<Matrix> worst(kk, Matrix::Zero(d, d));
    for (int j = 0; j < d; ++j) {
      const qmat::Vector v = eig.basis.col(j);
      std::size_t hi = 0;
      std::size_t lo = 0;
      std::vector<double> score(kk);
      for (std::size_t c = 0; c < kk; ++c) {
        score[c] = (v.adjoint() * coef[c] * v)(0, 0).real();
        if (score[c] > score[hi]) hi = c;
        if (score[c] < score[lo]) lo = c;
      }
      best[hi] += v * v.adjoint();
      worst[lo] += v * v.adjoint();
    }
    starts.push_back(train::project_povm(to_hermitian(best)));
    starts.push_back(train::project_povm(to_hermitian(worst)));
  }
  auto engine = rng::make_engine(seed);
  for (int s = 0; s < random_starts; ++s) {
    const Matrix u = rng::random_unitary(d, engine);
    std::vector<Matrix> elems(kk, Matrix::Zero(d, d));
    for (int j = 0; j < d; ++j) {
      const qmat::Vector v = u.col(j);
      elems[static_cast<std::size_t>(j % num_classes)] += v * v.adjoint();
    }
    starts.push_back(train::project_povm(to_hermitian(elems)));
  }

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    qmat::Povm current = start;
    std::vector<Matrix> pull;
    double value = evaluate(current, &pull);
    double step = 1.0;
    for (int it = 0; it < 100 && step > 1e-7; ++it) {
      // d/dPi_c of (1/T) sum sigma_n (1 - Tr(Pi_c lambda*_n)) = -pull_c / T.
      std::vector<Matrix> raw;
      for (std::size_t c = 0; c < kk; ++c) raw.push_back(current.element(static_cast<int>(c)).matrix() - (step / t) * pull[c]);
      std::optional<qmat::Povm> next;
      try {
        next = train::project_povm(to_hermitian(raw));
      } catch (const ConvergenceError&) {
        step *= 0.5;
        continue;
      }
      std::vector<Matrix> next_pull;
      const double v = evaluate(*next, &next_pull);
      if (v > value + 1e-15) {
        current = std::move(*next);
        value = v;
        pull = std::move(next_pull);
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, value);
  }
  return best;
}

SigmaAverage sigma_average(const embed::LabelledStates& data, int num_classes,
                           const std::optional<attack::AttackSpec>& attack, const RademacherOptions& opts,
                           std::uint64_t sigma_seed, std::uint64_t start_seed) {
  SigmaAverage out;
  const std::size_t t = data.size();
  if (t == 0) {
    out.exhaustive = true;
    return out;
  }
  out.exhaustive = t <= opts.exhaustive_max_T && t < 63;
  out.num_sigma = out.exhaustive ? (std::size_t{1} << t) : opts.num_sigma;
  if (out.num_sigma == 0) throw ValidationError("num_sigma must be positive");
  const bool qubit = num_classes == 2 && data.states.front().dim() == 2;

  std::optional<QubitSupSolver> solver;
  if (qubit && attack) solver.emplace(data, *attack, opts, start_seed);

  auto engine = rng::make_engine(sigma_seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> sigma(t);
  double clean_total = 0.0;
  double adv_total = 0.0;
  for (std::size_t k = 0; k < out.num_sigma; ++k) {
    for (std::size_t n = 0; n < t; ++n) {
      if (out.exhaustive) {
        sigma[n] = ((k >> n) & 1U) ? 1.0 : -1.0;
      } else {
        sigma[n] = coin(engine) ? 1.0 : -1.0;
      }
    }
    double clean = 0.0;
    if (solver) {
      clean = solver->clean(sigma);
    } else if (num_classes == 2) {
      clean = binary_clean_sup(data, sigma);
    } else {
      clean = multistart_sup(data, num_classes, sigma, std::nullopt, opts.random_starts,
                             rng::derive_seed(start_seed, rng::Stream::multistart, k));
    }
    double adv = clean;
    if (attack) {
      adv = solver ? solver->adversarial(sigma)
                   : multistart_sup(data, num_classes, sigma, attack, opts.random_starts,
                                    rng::derive_seed(start_seed, rng::Stream::multistart, k));
    }
    clean_total += clean;
    adv_total += adv;
  }
  out.clean = clean_total / static_cast<double>(out.num_sigma);
  out.adversarial = adv_total / static_cast<double>(out.num_sigma);
  return out;
}

namespace {

struct PerDataset {
  std::vector<double> clean;
  std::vector<double> adversarial;
  std::size_t num_sigma = 0;
  bool exhaustive = false;
};

PerDataset run_datasets(const embed::EmbeddedGrid& grid, long T, const std::optional<attack::AttackSpec>& attack,
                        const RademacherOptions& opts) {
  if (T < 0) throw ValidationError("T must be >= 0");
  if (opts.num_datasets == 0) throw ValidationError("num_datasets must be positive");
  PerDataset out;
  out.clean.assign(opts.num_datasets, 0.0);
  out.adversarial.assign(opts.num_datasets, 0.0);
  std::vector<SigmaAverage> avgs(opts.num_datasets);
  const int k = grid.data().num_classes;
  parallel_for(opts.num_datasets, [&](std::size_t i) {
    const auto ds = embed::sample_dataset(grid.data(), static_cast<std::size_t>(T),
                                          rng::derive_seed(opts.seed, rng::Stream::rademacher_dataset, i));
    avgs[i] = sigma_average(embed::embed_dataset(ds, grid), k, attack, opts,
                            rng::derive_seed(opts.seed, rng::Stream::sigma, i),
                            rng::derive_seed(opts.seed, rng::Stream::multistart, i));
  });
  for (std::size_t i = 0; i < opts.num_datasets; ++i) {
    out.clean[i] = avgs[i].clean;
    out.adversarial[i] = avgs[i].adversarial;
  }
  out.num_sigma = avgs.front().num_sigma;
  out.exhaustive = avgs.front().exhaustive;
  return out;
}

RademacherEstimate summarize(const std::vector<double>& xs, InnerMode mode, const PerDataset& p, long T) {
  const auto m = mean_stderr(xs);
  RademacherEstimate e;
  e.value = m.mean;
  e.stderr_ = m.err;
  e.mode = mode;
  e.num_sigma = p.num_sigma;
  e.num_datasets = xs.size();
  e.sigma_exhaustive = p.exhaustive;
  e.T = T;
  return e;
}

}  // namespace

RademacherEstimate rademacher_exact_binary(const embed::EmbeddedGrid& grid, long T, const RademacherOptions& opts) {
  if (grid.data().num_classes != 2) throw UnsupportedError("the exact estimator needs K = 2; use multistart");
  const auto p = run_datasets(grid, T, std::nullopt, opts);
  return summarize(p.clean, InnerMode::exact_binary, p, T);
}

AdversarialRademacher rademacher_adversarial(const embed::EmbeddedGrid& grid, long T,
                                             const attack::AttackSpec& attack, const RademacherOptions& opts) {
  attack.validate();
  const auto p = run_datasets(grid, T, attack, opts);
  AdversarialRademacher out;
  const InnerMode clean_mode = grid.data().num_classes == 2 ? InnerMode::exact_binary : InnerMode::multistart;
  out.adversarial = summarize(p.adversarial, InnerMode::multistart, p, T);
  out.clean = summarize(p.clean, clean_mode, p, T);
  std::vector<double> gaps(p.clean.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = p.adversarial[i] - p.clean[i];
  const auto g = mean_stderr(gaps);
  out.gap = g.mean;
  out.gap_stderr = g.err;
  return out;
}

}  // namespace qadv::estimate
