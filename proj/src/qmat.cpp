#include "qadv/qmat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qadv/errors.hpp"

namespace qadv::qmat {

namespace {

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace

SchattenOrder::SchattenOrder(double p) : p_(p) {
  if (std::isnan(p) || p < 1.0) {
    throw ValidationError("Schatten order must satisfy p >= 1", std::isnan(p) ? 0.0 : 1.0 - p);
  }
}

SchattenOrder SchattenOrder::infinity() {
  return SchattenOrder(std::numeric_limits<double>::infinity(), Raw{});
}

bool SchattenOrder::is_infinite() const noexcept { return std::isinf(p_); }

SchattenOrder SchattenOrder::parse(std::string_view text) {
  if (text == "inf" || text == "infinity" || text == "Inf" || text == "INF") {
    return infinity();
  }
  std::string s(text);
  std::size_t used = 0;
  double p = 0.0;
  try {
    p = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("cannot parse Schatten order '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("cannot parse Schatten order '" + s + "'");
  if (std::isinf(p)) return infinity();
  return SchattenOrder(p);
}

std::string SchattenOrder::to_string() const {
  if (is_infinite()) return "inf";
  std::ostringstream os;
  os << p_;
  return os.str();
}

HermitianMatrix::HermitianMatrix(const Matrix& m, double tolerance) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ValidationError("Hermitian matrix must be square and non-empty");
  }
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff() / 2.0;
  if (asym > tolerance) {
    std::ostringstream os;
    os << "matrix is not Hermitian (max |m - m^dagger|/2 = " << asym << ")";
    throw ValidationError(os.str(), asym);
  }
  m_ = (m + m.adjoint()) / 2.0;
}

HermitianMatrix HermitianMatrix::identity(int d) {
  return HermitianMatrix(Matrix::Identity(d, d), Trusted{});
}

HermitianMatrix HermitianMatrix::zero(int d) { return HermitianMatrix(Matrix::Zero(d, d), Trusted{}); }

HermitianMatrix HermitianMatrix::diagonal(const std::vector<double>& diag) {
  const int d = static_cast<int>(diag.size());
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = diag[static_cast<std::size_t>(i)];
  return HermitianMatrix(std::move(m), Trusted{});
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& other) const {
  require_same_dim(dim(), other.dim(), "matrix sum");
  return HermitianMatrix(Matrix(m_ + other.m_), Trusted{});
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& other) const {
  require_same_dim(dim(), other.dim(), "matrix difference");
  return HermitianMatrix(Matrix(m_ - other.m_), Trusted{});
}

HermitianMatrix HermitianMatrix::operator*(double s) const { return HermitianMatrix(Matrix(m_ * s), Trusted{}); }

DensityMatrix DensityMatrix::maximally_mixed(int d) {
  return DensityMatrix(Matrix(Matrix::Identity(d, d) / static_cast<double>(d)));
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  const double n = psi.squaredNorm();
  if (!(n > 0.0)) throw ValidationError("pure state vector must be non-zero");
  Matrix m = psi * psi.adjoint() / n;
  m = (m + m.adjoint()) / 2.0;
  return DensityMatrix(std::move(m));
}

Povm Povm::computational(int d) {
  std::vector<HermitianMatrix> elements;
  elements.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    std::vector<double> diag(static_cast<std::size_t>(d), 0.0);
    diag[static_cast<std::size_t>(i)] = 1.0;
    elements.push_back(HermitianMatrix::diagonal(diag));
  }
  return Povm(std::move(elements));
}

EigResult hermitian_eig(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) throw ConvergenceError("Hermitian eigensolver failed");
  EigResult out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index j = 0; j < out.basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.basis.rows(); ++i) {
      const Complex v = out.basis(i, j);
      if (std::abs(v) > 1e-12) {
        out.basis.col(j) *= std::conj(v) / std::abs(v);
        out.basis(i, j) = std::abs(out.basis(i, j));
        break;
      }
    }
  }
  return out;
}

double min_eigenvalue(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

double max_eigenvalue(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(solver.eigenvalues().size() - 1);
}

HermitianMatrix from_spectrum(const RealVector& values, const Matrix& basis) {
  Matrix m = basis * values.cast<Complex>().asDiagonal() * basis.adjoint();
  return HermitianMatrix(Matrix((m + m.adjoint()) / 2.0), tol::herm * 1e6);
}

double schatten_norm_of_spectrum(const RealVector& values, SchattenOrder p) {
  const RealVector a = values.cwiseAbs();
  if (a.size() == 0) return 0.0;
  if (p.is_infinite()) return a.maxCoeff();
  if (p.value() == 1.0) return a.sum();
  if (p.value() == 2.0) return a.norm();
  // Scale by the largest entry to keep pow() in range.
  const double top = a.maxCoeff();
  if (top == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += std::pow(a(i) / top, p.value());
  return top * std::pow(acc, 1.0 / p.value());
}

double schatten_norm(const HermitianMatrix& m, SchattenOrder p) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::EigenvaluesOnly);
  return schatten_norm_of_spectrum(solver.eigenvalues(), p);
}

double schatten_distance(const DensityMatrix& a, const DensityMatrix& b, SchattenOrder p) {
  require_same_dim(a.dim(), b.dim(), "schatten_distance");
  return schatten_norm(a - b, p);
}

double trace_inner(const HermitianMatrix& a, const HermitianMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "trace_inner");
  // Tr(AB) = sum_ij A_ij B_ji
  const Complex t = (a.matrix().array() * b.matrix().transpose().array()).sum();
  if (std::abs(t.imag()) > tol::trace) {
    throw ValidationError("trace inner product has non-negligible imaginary part", std::abs(t.imag()));
  }
  return t.real();
}

DensityMatrix validate_density(const HermitianMatrix& m) {
  const Complex tr = m.matrix().trace();
  const double trace_violation = std::max(std::abs(tr.real() - 1.0), std::abs(tr.imag()));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  const RealVector& ev = solver.eigenvalues();
  const double psd_violation = std::max(0.0, -ev(0));

  const bool trace_bad = trace_violation > tol::trace;
  const bool psd_bad = psd_violation > tol::psd;
  if (trace_bad || psd_bad) {
    std::ostringstream os;
    if (psd_bad && (!trace_bad || psd_violation >= trace_violation)) {
      os << "density matrix has negative eigenvalue (PSD violation " << psd_violation << ")";
      throw ValidationError(os.str(), psd_violation);
    }
    os << "density matrix trace differs from 1 by " << trace_violation;
    throw ValidationError(os.str(), trace_violation);
  }

  if (ev(0) < 0.0) {
    RealVector clamped = ev.cwiseMax(0.0);
    clamped /= clamped.sum();
    Matrix rebuilt = solver.eigenvectors() * clamped.cast<Complex>().asDiagonal() * solver.eigenvectors().adjoint();
    return DensityMatrix(Matrix((rebuilt + rebuilt.adjoint()) / 2.0));
  }
  return DensityMatrix(m.matrix());
}

Povm validate_povm(std::vector<HermitianMatrix> elements) {
  if (elements.empty()) throw ValidationError("POVM must have at least one element");
  const int d = elements.front().dim();
  Matrix sum = Matrix::Zero(d, d);
  double worst_psd = 0.0;
  for (const auto& e : elements) {
    require_same_dim(d, e.dim(), "validate_povm");
    worst_psd = std::max(worst_psd, -min_eigenvalue(e));
    sum += e.matrix();
  }
  const double sum_violation = (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  const bool psd_bad = worst_psd > tol::psd;
  const bool sum_bad = sum_violation > tol::povm;
  if (psd_bad || sum_bad) {
    std::ostringstream os;
    if (psd_bad && (!sum_bad || worst_psd >= sum_violation)) {
      os << "POVM element has negative eigenvalue (PSD violation " << worst_psd << ")";
      throw ValidationError(os.str(), worst_psd);
    }
    os << "POVM elements do not sum to identity (max deviation " << sum_violation << ")";
    throw ValidationError(os.str(), sum_violation);
  }
  return Povm(std::move(elements));
}

RealVector project_to_simplex(const RealVector& v, double total) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - total) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) shift = candidate;
  }
  return (v.array() - shift).cwiseMax(0.0).matrix();
}

DensityMatrix project_to_density(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  const RealVector w = project_to_simplex(solver.eigenvalues(), 1.0);
  Matrix rebuilt = solver.eigenvectors() * w.cast<Complex>().asDiagonal() * solver.eigenvectors().adjoint();
  return validate_density(HermitianMatrix(Matrix((rebuilt + rebuilt.adjoint()) / 2.0)));
}

namespace pauli {
Matrix x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
Matrix y() {
  Matrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
Matrix z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

namespace qubit {

Eigen::Vector3d bloch_vector(const HermitianMatrix& m) {
  if (m.dim() != 2) throw UnsupportedError("Bloch representation requires d = 2");
  const Matrix& a = m.matrix();
  // Tr(a sigma_x) = a01 + a10, Tr(a sigma_y) = i(a01 - a10), Tr(a sigma_z) = a00 - a11
  return {(a(0, 1) + a(1, 0)).real(), (Complex(0.0, 1.0) * (a(0, 1) - a(1, 0))).real(),
          (a(0, 0) - a(1, 1)).real()};
}

DensityMatrix from_bloch(const Eigen::Vector3d& r) {
  Matrix m(2, 2);
  m << (1.0 + r.z()) / 2.0, Complex(r.x(), -r.y()) / 2.0, Complex(r.x(), r.y()) / 2.0, (1.0 - r.z()) / 2.0;
  return validate_density(HermitianMatrix(m));
}

}  // namespace qubit

}  // namespace qadv::qmat
