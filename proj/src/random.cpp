#include "qadv/random.hpp"

#include <cmath>

#include "qadv/errors.hpp"

namespace qadv::rng {

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index) noexcept {
  return mix(mix(base + static_cast<std::uint64_t>(stream)) + index);
}

qmat::Matrix complex_gaussian(int rows, int cols, Engine& engine) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  qmat::Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      const double re = normal(engine);
      const double im = normal(engine);
      g(i, j) = qmat::Complex(re, im);
    }
  }
  return g;
}

qmat::DensityMatrix random_density(int d, Engine& engine) {
  const qmat::Matrix g = complex_gaussian(d, d, engine);
  qmat::Matrix m = g * g.adjoint();
  m /= m.trace().real();
  return qmat::validate_density(qmat::HermitianMatrix(qmat::Matrix((m + m.adjoint()) / 2.0)));
}

namespace {

// Q factor of a QR decomposition with R's diagonal made real-positive.
qmat::Matrix orthonormal_columns(const qmat::Matrix& g) {
  Eigen::HouseholderQR<qmat::Matrix> qr(g);
  qmat::Matrix q = qr.householderQ() * qmat::Matrix::Identity(g.rows(), g.cols());
  const qmat::Matrix r = qr.matrixQR().topRows(g.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    const qmat::Complex rjj = r(j, j);
    if (std::abs(rjj) > 0.0) q.col(j) *= rjj / std::abs(rjj);
  }
  return q;
}

}  // namespace

qmat::Matrix random_unitary(int d, Engine& engine) { return orthonormal_columns(complex_gaussian(d, d, engine)); }

qmat::HermitianMatrix random_hermitian(int d, Engine& engine) {
  const qmat::Matrix g = complex_gaussian(d, d, engine);
  return qmat::HermitianMatrix(qmat::Matrix((g + g.adjoint()) / 2.0));
}

std::vector<qmat::Matrix> random_kraus(int d, int num_ops, Engine& engine) {
  if (d < 1 || num_ops < 1) throw ValidationError("random_kraus needs d >= 1 and at least one operator");
  const qmat::Matrix v = orthonormal_columns(complex_gaussian(d * num_ops, d, engine));
  std::vector<qmat::Matrix> ops;
  ops.reserve(static_cast<std::size_t>(num_ops));
  for (int i = 0; i < num_ops; ++i) ops.emplace_back(v.middleRows(i * d, d));
  return ops;
}

}  // namespace qadv::rng
