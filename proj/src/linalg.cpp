#include "selftrig/linalg.hpp"

#include "selftrig/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace selftrig {

namespace {

constexpr int kQrIterationCap = 500;
constexpr double kExpmScaleThreshold = 0.5;
constexpr int kPadeDegree = 6;

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
}

// Closed form for 2x2 symmetric [[a, b], [b, c]].
inline void sym2_eigs(double a, double b, double c, double& lo, double& hi) {
  const double mean = 0.5 * (a + c);
  const double half = 0.5 * (a - c);
  const double r = std::hypot(half, b);
  lo = mean - r;
  hi = mean + r;
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Matrix& m) {
  require_square(m, "SymmetricMatrix");
  m_ = 0.5 * (m + m.transpose());
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index n) {
  return SymmetricMatrix(Matrix::Identity(n, n));
}

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index n) { return SymmetricMatrix(Matrix::Zero(n, n)); }

SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  SymmetricMatrix out;
  out.m_ = a.m_ + b.m_;
  return out;
}

SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  SymmetricMatrix out;
  out.m_ = a.m_ - b.m_;
  return out;
}

SymmetricMatrix operator*(double s, const SymmetricMatrix& a) {
  SymmetricMatrix out;
  out.m_ = s * a.m_;
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

double inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

Matrix expm(const Matrix& a) {
  require_square(a, "expm");
  if (!a.allFinite()) throw DomainError("expm: non-finite entries");

  const Eigen::Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kExpmScaleThreshold) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kExpmScaleThreshold)));
  }
  const Matrix scaled = a / std::ldexp(1.0, squarings);

  // Padé coefficients c_k = c_{k-1} (q-k+1) / (k (2q-k+1)).
  Matrix num = Matrix::Identity(n, n);
  Matrix den = Matrix::Identity(n, n);
  Matrix power = Matrix::Identity(n, n);
  double c = 1.0;
  for (int k = 1; k <= kPadeDegree; ++k) {
    c *= static_cast<double>(kPadeDegree - k + 1) / (k * (2.0 * kPadeDegree - k + 1));
    power = power * scaled;
    num += c * power;
    den += ((k % 2 == 0) ? c : -c) * power;
  }
  Matrix result = den.partialPivLu().solve(num);
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
  require_square(a, "eigenvalues");
  if (a.rows() == 1) return {std::complex<double>(a(0, 0), 0.0)};

  Eigen::EigenSolver<Matrix> solver;
  solver.setMaxIterations(kQrIterationCap);
  solver.compute(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigenvalues: QR iteration did not converge within " << kQrIterationCap
       << " iterations for a " << a.rows() << "x" << a.cols() << " matrix with max |entry| "
       << a.cwiseAbs().maxCoeff();
    throw NumericError(os.str());
  }
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double spectral_radius(const Matrix& a) {
  double r = 0.0;
  for (const auto& l : eigenvalues(a)) r = std::max(r, std::abs(l));
  return r;
}

Vector symmetric_eigenvalues(const SymmetricMatrix& s) {
  const Matrix& m = s.matrix();
  if (m.rows() == 1) return Vector::Constant(1, m(0, 0));
  if (m.rows() == 2) {
    double lo = 0.0;
    double hi = 0.0;
    sym2_eigs(m(0, 0), m(0, 1), m(1, 1), lo, hi);
    Vector out(2);
    out << lo, hi;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric_eigenvalues: solver did not converge");
  }
  return solver.eigenvalues();
}

double min_eigenvalue(const SymmetricMatrix& s) { return symmetric_eigenvalues(s).minCoeff(); }

double max_eigenvalue(const SymmetricMatrix& s) { return symmetric_eigenvalues(s).maxCoeff(); }

bool is_psd(const SymmetricMatrix& s, double tol) { return min_eigenvalue(s) >= -tol; }

double two_norm(const Matrix& a) {
  if (a.size() == 0) throw DimensionError("two_norm: empty matrix");
  const double top = max_eigenvalue(SymmetricMatrix(a.transpose() * a));
  return std::sqrt(std::max(top, 0.0));
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

SymmetricMatrix solve_stein(const Matrix& phi, double rho, const SymmetricMatrix& q) {
  require_square(phi, "solve_stein");
  const Eigen::Index n = phi.rows();
  if (q.size() != n) throw DimensionError("solve_stein: Q and Phi differ in size");
  if (!(rho > 0.0)) throw DomainError("solve_stein: rho must be positive");
  if (!(min_eigenvalue(q) > 0.0)) throw DomainError("solve_stein: Q must be positive definite");

  const double r = spectral_radius(phi);
  if (!(r * r < rho)) {
    std::ostringstream os;
    os << "solve_stein: no positive definite solution, spectral_radius(Phi)^2 = " << r * r
       << " is not below rho = " << rho;
    throw InfeasibleError(os.str());
  }

  // vec(Φᵀ P Φ) = (Φᵀ ⊗ Φᵀ) vec(P) for column-major vec.
  const Matrix pt = phi.transpose();
  Matrix lhs = kron(pt, pt);
  lhs.diagonal().array() -= rho;
  const Vector rhs = -Eigen::Map<const Vector>(q.matrix().data(), n * n);
  const Vector sol = lhs.fullPivLu().solve(rhs);
  return SymmetricMatrix(Eigen::Map<const Matrix>(sol.data(), n, n));
}

}  // namespace selftrig
