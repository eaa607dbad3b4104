#include "tforms/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace tforms::linalg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// distance from z to the closed negative real axis (the branch cut)
double cut_distance(Complex z) {
  if (z.real() > 0.0) return std::abs(z);
  return std::abs(z.imag());
}

}  // namespace

void ContourSpec::validate() const {
  if (!(eps > 0.0) || !(delta > 0.0) || !(big_n > eps))
    fail(Err::ValidationError, "contour rectangle must satisfy 0 < eps < N, delta > 0");
  if (nodes < 16 || nodes % 2 != 0)
    fail(Err::ValidationError, "contour node count must be even and >= 16");
}

double op_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double smallest_singular_value(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double hermitian_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return hermitian_defect(m) <= tol * rel_scale(m.norm());
}

void require_hermitian(const Matrix& m) {
  if (m.rows() != m.cols()) fail(Err::DimMismatch, "square matrix expected");
  if (!is_hermitian(m)) fail(Err::NotHermitian, "symmetry defect above tolerance");
}

HermitianEig herm_eig(const Matrix& m) {
  require_hermitian(m);
  const Eigen::Index n = m.rows();
  Matrix a = (m + m.adjoint()) / 2.0;  // exactly Hermitian working copy
  Matrix v = Matrix::Identity(n, n);
  const double scale = m.norm();
  const double off_target = 1e-14 * (scale > 0.0 ? scale : 1.0);

  auto off_mass = [&a, n]() {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  int sweeps = 0;
  while (off_mass() > off_target) {
    if (++sweeps > 100) fail(Err::NoConvergence, "cyclic Jacobi exceeded 100 sweeps");
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mod = std::abs(apq);
        if (mod == 0.0) continue;
        // phase factor turning the 2x2 block real, then a classical rotation
        const Complex phase = apq / mod;  // e^{i theta}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mod);
        double t;
        if (tau >= 0.0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // columns of the plane rotation: (c, -conj(phase) s), (s, conj(phase) c)
        const Complex jp_p = c, jq_p = -std::conj(phase) * s;
        const Complex jp_q = s, jq_q = std::conj(phase) * c;
        for (Eigen::Index k = 0; k < n; ++k) {  // A <- A J
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * jp_p + akq * jq_p;
          a(k, q) = akp * jp_q + akq * jq_q;
        }
        for (Eigen::Index k = 0; k < n; ++k) {  // A <- J* A
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(jp_p) * apk + std::conj(jq_p) * aqk;
          a(q, k) = std::conj(jp_q) * apk + std::conj(jq_q) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = Complex(a(p, p).real(), 0.0);
        a(q, q) = Complex(a(q, q).real(), 0.0);
        for (Eigen::Index k = 0; k < n; ++k) {  // V <- V J
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * jp_p + vkq * jq_p;
          v(k, q) = vkp * jp_q + vkq * jq_q;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&a](Eigen::Index i, Eigen::Index j) {
    return a(i, i).real() < a(j, j).real();
  });

  HermitianEig out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
    out.eigenvectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  // phase tie-break: first entry of largest modulus made real non-negative
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mod = std::abs(out.eigenvectors(i, k));
      if (mod > best + 1e-15) {
        best = mod;
        imax = i;
      }
    }
    const Complex pivot = out.eigenvectors(imax, k);
    if (std::abs(pivot) > 0.0) out.eigenvectors.col(k) *= std::conj(pivot) / std::abs(pivot);
  }
  return out;
}

Matrix spectral_projector(const Matrix& m, double lambda) {
  HermitianEig eig = herm_eig(m);
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
    if (std::abs(eig.eigenvalues(i) - lambda) < 1e-12)
      fail(Err::EigenvalueAtThreshold, "eigenvalue within 1e-12 of threshold; shift lambda");
  Matrix proj = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
    if (eig.eigenvalues(i) <= lambda)
      proj += eig.eigenvectors.col(i) * eig.eigenvectors.col(i).adjoint();
  return (proj + proj.adjoint()) / 2.0;
}

Matrix resolvent(const Matrix& m, Complex lambda) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXcd spec = spectrum_estimate(m);
  for (Eigen::Index i = 0; i < spec.size(); ++i)
    if (std::abs(spec(i) - lambda) < 1e-12)
      fail(Err::SingularShift, "shift within 1e-12 of the spectrum");
  const Matrix id = Matrix::Identity(n, n);
  Matrix shifted = lambda * id - m;
  Eigen::PartialPivLU<Matrix> lu(shifted);
  Matrix r = lu.solve(id);
  r += lu.solve(id - shifted * r);  // one refinement step
  const double residual = (shifted * r - id).norm();
  if (!(residual <= 1e-10 * rel_scale(op_norm(shifted) * op_norm(r))))
    fail(Err::SingularShift, "resolvent residual above tolerance");
  return r;
}

Eigen::VectorXcd spectrum_estimate(const Matrix& m) {
  if (m.rows() == 1) {
    Eigen::VectorXcd one(1);
    one(0) = m(0, 0);
    return one;
  }
  Eigen::ComplexEigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues();
}

ContourSpec default_contour(const Matrix& m) {
  Eigen::VectorXcd spec = spectrum_estimate(m);
  double min_re = std::numeric_limits<double>::max();
  double radius = 0.0;
  double imag_reach = 0.0;
  for (Eigen::Index i = 0; i < spec.size(); ++i) {
    if (cut_distance(spec(i)) < 1e-8)
      fail(Err::SpectrumOnCut, "eigenvalue estimate within 1e-8 of the branch cut");
    min_re = std::min(min_re, spec(i).real());
    radius = std::max(radius, std::abs(spec(i)));
    imag_reach = std::max(imag_reach, std::abs(spec(i).imag()));
  }
  if (min_re <= 0.0) fail(Err::SpectrumOnCut, "spectrum not in the open right half-plane");
  ContourSpec spec_out;
  spec_out.eps = 0.5 * min_re;
  spec_out.big_n = 2.0 * radius;
  spec_out.delta = std::max(1.5 * imag_reach, 0.1 * spec_out.big_n);
  spec_out.nodes = 64;
  return spec_out;
}

namespace {

// 16-point Gauss-Legendre rule on [-1, 1]
constexpr int kGaussOrder = 16;
constexpr double kGaussNode[kGaussOrder] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr double kGaussWeight[kGaussOrder] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// composite Gauss-Legendre panels of sqrt(z) (zI - M)^{-1} / (2 pi i) over
// the rectangle boundary; nodes are budgeted per edge by length over
// clearance so a close edge gets the resolution it needs
Matrix contour_pass(const Matrix& m, const ContourSpec& spec, int nodes,
                    const double clearance[4]) {
  const Eigen::Index n = m.rows();
  const Complex corners[4] = {
      Complex(spec.eps, -spec.delta), Complex(spec.big_n, -spec.delta),
      Complex(spec.big_n, spec.delta), Complex(spec.eps, spec.delta)};
  double edge_len[4];
  double weight[4];
  double total_weight = 0.0;
  for (int e = 0; e < 4; ++e) {
    edge_len[e] = std::abs(corners[(e + 1) % 4] - corners[e]);
    weight[e] = edge_len[e] / std::max(clearance[e], 1e-8);
    total_weight += weight[e];
  }
  Matrix acc = Matrix::Zero(n, n);
  const Matrix id = Matrix::Identity(n, n);
  for (int e = 0; e < 4; ++e) {
    const Complex a = corners[e];
    const Complex b = corners[(e + 1) % 4];
    const int edge_nodes = std::max(
        kGaussOrder, static_cast<int>(std::lround(nodes * weight[e] / total_weight)));
    const int panels = (edge_nodes + kGaussOrder - 1) / kGaussOrder;
    const Complex step = (b - a) / static_cast<double>(panels);
    for (int p = 0; p < panels; ++p) {
      const Complex mid = a + step * (static_cast<double>(p) + 0.5);
      for (int k = 0; k < kGaussOrder; ++k) {
        const Complex z = mid + 0.5 * step * kGaussNode[k];
        Eigen::PartialPivLU<Matrix> lu(z * id - m);
        acc += (0.5 * kGaussWeight[k] * std::sqrt(z) * step) * lu.solve(id);
      }
    }
  }
  return acc / Complex(0.0, 2.0 * kPi);
}

Matrix sqrt_eig(const Matrix& m) {
  HermitianEig eig = herm_eig(m);
  const double scale = rel_scale(op_norm(m));
  Matrix diag = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
    const double lambda = eig.eigenvalues(i);
    if (lambda < -1e-12 * scale) fail(Err::SpectrumOnCut, "negative eigenvalue in eig sqrt");
    diag(i, i) = std::sqrt(std::max(lambda, 0.0));
  }
  return eig.eigenvectors * diag * eig.eigenvectors.adjoint();
}

Matrix sqrt_denman_beavers(const Matrix& m) {
  const Eigen::Index n = m.rows();
  const Matrix id = Matrix::Identity(n, n);
  Matrix y = m;
  Matrix z = id;
  const double scale = rel_scale(op_norm(m));
  for (int iter = 0; iter < 50; ++iter) {
    if ((y * y - m).norm() <= 1e-12 * scale) break;
    // determinant scaling accelerates convergence away from unit spectrum
    const Complex dy = Eigen::PartialPivLU<Matrix>(y).determinant();
    const Complex dz = Eigen::PartialPivLU<Matrix>(z).determinant();
    double mu = std::pow(std::abs(dy * dz), -1.0 / (2.0 * static_cast<double>(n)));
    if (!std::isfinite(mu) || mu <= 0.0) mu = 1.0;
    Matrix y_inv = Eigen::PartialPivLU<Matrix>(mu * y).solve(id);
    Matrix z_inv = Eigen::PartialPivLU<Matrix>(mu * z).solve(id);
    Matrix y_next = 0.5 * (mu * y + z_inv);
    Matrix z_next = 0.5 * (mu * z + y_inv);
    y = y_next;
    z = z_next;
  }
  if (!((y * y - m).norm() <= 1e-9 * scale))
    fail(Err::NoConvergence, "Denman-Beavers did not converge in 50 iterations");
  return y;
}

bool entries_real(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, j).imag() != 0.0) return false;
  return true;
}

}  // namespace

Matrix principal_sqrt_contour(const Matrix& m, const ContourSpec& spec) {
  spec.validate();
  Eigen::VectorXcd eigs = spectrum_estimate(m);
  // per-edge clearance of the spectrum: bottom, right, top, left
  double clearance[4] = {spec.delta, spec.big_n - spec.eps, spec.delta, spec.big_n - spec.eps};
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const Complex z = eigs(i);
    if (cut_distance(z) < 1e-8) fail(Err::SpectrumOnCut, "spectrum touches the branch cut");
    if (!(z.real() > spec.eps && z.real() < spec.big_n && std::abs(z.imag()) < spec.delta))
      fail(Err::ContourFailure, "spectrum estimate not strictly inside the rectangle");
    clearance[0] = std::min(clearance[0], z.imag() + spec.delta);
    clearance[1] = std::min(clearance[1], spec.big_n - z.real());
    clearance[2] = std::min(clearance[2], spec.delta - z.imag());
    clearance[3] = std::min(clearance[3], z.real() - spec.eps);
  }
  const double scale = rel_scale(op_norm(m));
  int nodes = spec.nodes;
  Matrix prev = contour_pass(m, spec, nodes, clearance);
  for (int round = 0; round < 6; ++round) {
    nodes *= 2;
    Matrix next = contour_pass(m, spec, nodes, clearance);
    if ((next - prev).norm() < 1e-10 * scale) {
      if (entries_real(m)) return (next + next.conjugate()) / 2.0;
      return next;
    }
    prev = next;
  }
  fail(Err::ContourTooTight, "quadrature failed to settle after 6 node doublings");
}

Matrix principal_sqrt(const Matrix& m, SqrtMethod method) {
  if (m.rows() != m.cols()) fail(Err::DimMismatch, "square matrix expected");
  switch (method) {
    case SqrtMethod::Eig:
      return sqrt_eig(m);
    case SqrtMethod::Contour: {
      if (m.rows() == 1) {  // scalar functional calculus is exact
        const Complex z = m(0, 0);
        if (cut_distance(z) < 1e-8) fail(Err::SpectrumOnCut, "scalar on the branch cut");
        Matrix r(1, 1);
        r(0, 0) = std::sqrt(z);
        return r;
      }
      return principal_sqrt_contour(m, default_contour(m));
    }
    case SqrtMethod::Iteration: {
      Eigen::VectorXcd eigs = spectrum_estimate(m);
      for (Eigen::Index i = 0; i < eigs.size(); ++i)
        if (cut_distance(eigs(i)) < 1e-8)
          fail(Err::SpectrumOnCut, "spectrum touches the branch cut");
      return sqrt_denman_beavers(m);
    }
  }
  fail(Err::ValidationError, "unknown sqrt method");
}

PolarData sign_modulus(const Matrix& alpha) {
  HermitianEig eig = herm_eig(alpha);
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
    if (std::abs(eig.eigenvalues(i)) <= 1e-12)
      fail(Err::KernelPresent, "eigenvalue within 1e-12 of zero");
  Matrix s_diag = Matrix::Zero(alpha.rows(), alpha.cols());
  Matrix g_diag = Matrix::Zero(alpha.rows(), alpha.cols());
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
    s_diag(i, i) = eig.eigenvalues(i) >= 0.0 ? 1.0 : -1.0;
    g_diag(i, i) = std::sqrt(std::abs(eig.eigenvalues(i)));
  }
  PolarData out;
  out.sign = eig.eigenvectors * s_diag * eig.eigenvectors.adjoint();
  out.modulus_sqrt = eig.eigenvectors * g_diag * eig.eigenvectors.adjoint();
  out.sign = (out.sign + out.sign.adjoint()) / 2.0;
  out.modulus_sqrt = (out.modulus_sqrt + out.modulus_sqrt.adjoint()) / 2.0;
  return out;
}

}  // namespace tforms::linalg
