#pragma once

// Dense complex Hermitian matrices, density matrices and POVMs.
//
// All types are immutable values; every constructor that can fail validates
// its invariant and throws qadv::ValidationError carrying the size of the
// worst violation.

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qadv::qmat {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

namespace tol {
inline constexpr double herm = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double psd = 1e-9;
inline constexpr double unitary = 1e-9;
inline constexpr double recon = 1e-9;
inline constexpr double povm = 1e-9;
}  // namespace tol

// Schatten norm order p >= 1, including p = infinity.
class SchattenOrder {
 public:
  explicit SchattenOrder(double p);
  static SchattenOrder one() { return SchattenOrder(1.0); }
  static SchattenOrder infinity();
  // Accepts "1", "2", "1.5", "inf", "infinity".
  static SchattenOrder parse(std::string_view text);

  double value() const noexcept { return p_; }
  bool is_infinite() const noexcept;
  // 1/p with 1/inf represented as exactly 0.
  double inverse() const noexcept { return is_infinite() ? 0.0 : 1.0 / p_; }
  std::string to_string() const;

  friend bool operator==(const SchattenOrder&, const SchattenOrder&) = default;

 private:
  struct Raw {};
  SchattenOrder(double p, Raw) : p_(p) {}
  double p_;
};

class HermitianMatrix {
 public:
  // Stores the exact Hermitian part (m + m^dagger)/2 after checking that the
  // anti-Hermitian part is below `tolerance` in max-entry norm.
  explicit HermitianMatrix(const Matrix& m, double tolerance = tol::herm);

  static HermitianMatrix identity(int d);
  static HermitianMatrix zero(int d);
  static HermitianMatrix diagonal(const std::vector<double>& diag);

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }

  HermitianMatrix operator+(const HermitianMatrix& other) const;
  HermitianMatrix operator-(const HermitianMatrix& other) const;
  HermitianMatrix operator*(double s) const;

 protected:
  struct Trusted {};
  HermitianMatrix(Matrix m, Trusted) : m_(std::move(m)) {}

 private:
  Matrix m_;
};

// Hermitian, PSD within tol::psd, unit trace within tol::trace.
class DensityMatrix : public HermitianMatrix {
 public:
  static DensityMatrix maximally_mixed(int d);
  // |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const Vector& psi);

 private:
  explicit DensityMatrix(Matrix m) : HermitianMatrix(std::move(m), Trusted{}) {}
  friend DensityMatrix validate_density(const HermitianMatrix& m);
};

// K PSD elements of common dimension summing to the identity.
class Povm {
 public:
  int num_classes() const noexcept { return static_cast<int>(elements_.size()); }
  int dim() const noexcept { return elements_.front().dim(); }
  const HermitianMatrix& element(int c) const { return elements_.at(static_cast<std::size_t>(c)); }
  const std::vector<HermitianMatrix>& elements() const noexcept { return elements_; }

  // Projective measurement in the computational basis, one element per basis
  // vector.
  static Povm computational(int d);

 private:
  explicit Povm(std::vector<HermitianMatrix> elements) : elements_(std::move(elements)) {}
  friend Povm validate_povm(std::vector<HermitianMatrix> elements);
  std::vector<HermitianMatrix> elements_;
};

struct EigResult {
  RealVector eigenvalues;  // ascending
  Matrix basis;            // columns are eigenvectors
};

// Eigendecomposition with ascending eigenvalues. Each eigenvector is
// rephased so that its first component with magnitude above 1e-12 is real
// and positive.
EigResult hermitian_eig(const HermitianMatrix& m);

double min_eigenvalue(const HermitianMatrix& m);
double max_eigenvalue(const HermitianMatrix& m);

// basis * diag(values) * basis^dagger, Hermitian by construction.
HermitianMatrix from_spectrum(const RealVector& values, const Matrix& basis);

double schatten_norm(const HermitianMatrix& m, SchattenOrder p);
// Schatten norm of a real spectrum; shared with the spectral projections.
double schatten_norm_of_spectrum(const RealVector& values, SchattenOrder p);
double schatten_distance(const DensityMatrix& a, const DensityMatrix& b, SchattenOrder p);

// Re Tr(a b). Throws if Im Tr(a b) exceeds tol::trace.
double trace_inner(const HermitianMatrix& a, const HermitianMatrix& b);

DensityMatrix validate_density(const HermitianMatrix& m);
Povm validate_povm(std::vector<HermitianMatrix> elements);

// Projects a real spectrum onto {v >= 0, sum v = total} (Euclidean).
RealVector project_to_simplex(const RealVector& v, double total = 1.0);

// Nearest density matrix in Frobenius norm.
DensityMatrix project_to_density(const HermitianMatrix& m);

namespace pauli {
Matrix x();
Matrix y();
Matrix z();
}  // namespace pauli

// Qubit states and operators in the Pauli basis: m = (t I + b . sigma) / 2
// with t = Tr m and b_k = Tr(m sigma_k).
namespace qubit {
Eigen::Vector3d bloch_vector(const HermitianMatrix& m);
// (I + r . sigma) / 2; |r| <= 1 is required for a valid state.
DensityMatrix from_bloch(const Eigen::Vector3d& r);
}  // namespace qubit

}  // namespace qadv::qmat
