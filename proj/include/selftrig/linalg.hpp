#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace selftrig {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square matrix held in exactly symmetric form. Construction averages the
/// input with its transpose, so the stored value is always symmetric.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& m);

  static SymmetricMatrix identity(Eigen::Index n);
  static SymmetricMatrix zero(Eigen::Index n);

  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return m_.rows(); }
  [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// xᵀ S x
  [[nodiscard]] double quad(const Vector& x) const { return x.dot(m_ * x); }

  friend SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b);
  friend SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b);
  friend SymmetricMatrix operator*(double s, const SymmetricMatrix& a);

 private:
  Matrix m_;
};

/// Matrix exponential by scaling and squaring around a [6/6] Padé core.
/// The argument is scaled until its 1-norm is at most 0.5.
Matrix expm(const Matrix& a);

/// All eigenvalues of a real square matrix (real Schur / shifted QR).
std::vector<std::complex<double>> eigenvalues(const Matrix& a);

/// max |λ(A)|. Throws NumericError if the QR iteration hits its cap.
double spectral_radius(const Matrix& a);

/// Largest singular value, sqrt(λ_max(AᵀA)).
double two_norm(const Matrix& a);

double min_eigenvalue(const SymmetricMatrix& s);
double max_eigenvalue(const SymmetricMatrix& s);

/// Eigenvalues of a symmetric matrix in ascending order.
Vector symmetric_eigenvalues(const SymmetricMatrix& s);

/// True iff λ_min(S) >= -tol.
bool is_psd(const SymmetricMatrix& s, double tol);

Matrix kron(const Matrix& a, const Matrix& b);

/// Solves Φᵀ P Φ − ρ P = −Q by Kronecker vectorization. Requires
/// spectral_radius(Φ)² < ρ and Q ≻ 0; throws InfeasibleError otherwise.
SymmetricMatrix solve_stein(const Matrix& phi, double rho, const SymmetricMatrix& q);

/// ‖M‖_∞ (maximum absolute row sum).
double inf_norm(const Matrix& m);

bool all_finite(const Matrix& m);

}  // namespace selftrig
