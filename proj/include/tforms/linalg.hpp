#pragma once

#include <Eigen/Dense>

#include "tforms/common.hpp"

// Dense complex matrix kernels at small fiber dimension. Everything here is
// a pure function; results are bit-reproducible for identical input bits.
namespace tforms::linalg {

struct HermitianEig {
  Eigen::VectorXd eigenvalues;  // ascending
  Matrix eigenvectors;          // unitary, columns match eigenvalues
};

// Rectangle [eps, big_n] x [-delta, delta] in the open right half-plane.
struct ContourSpec {
  double eps = 0.0;
  double big_n = 0.0;
  double delta = 0.0;
  int nodes = 64;  // total trapezoid nodes, >= 16 and even

  void validate() const;
};

// alpha = sign * modulus_sqrt^2 with commuting Hermitian factors.
struct PolarData {
  Matrix sign;          // s, involution
  Matrix modulus_sqrt;  // gamma, positive
};

enum class SqrtMethod { Eig, Contour, Iteration };

double op_norm(const Matrix& m);
double smallest_singular_value(const Matrix& m);
double hermitian_defect(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = 1e-12);
void require_hermitian(const Matrix& m);

// Cyclic Jacobi with a fixed row-major sweep order; converges when the
// off-diagonal Frobenius mass drops below 1e-14 * ||m||.
HermitianEig herm_eig(const Matrix& m);

// Projector onto the eigenspaces with eigenvalue <= lambda.
Matrix spectral_projector(const Matrix& m, double lambda);

// (lambda I - m)^{-1}
Matrix resolvent(const Matrix& m, Complex lambda);

// Eigenvalues of a general (not necessarily Hermitian) fiber matrix; used
// for contour placement and cut checks, not for certified identities.
Eigen::VectorXcd spectrum_estimate(const Matrix& m);

ContourSpec default_contour(const Matrix& m);

// Principal branch (cut on the closed negative reals, spectrum of the result
// in the open right half-plane). Real input gives real output.
Matrix principal_sqrt(const Matrix& m, SqrtMethod method = SqrtMethod::Eig);
Matrix principal_sqrt_contour(const Matrix& m, const ContourSpec& spec);

PolarData sign_modulus(const Matrix& alpha);

}  // namespace tforms::linalg
