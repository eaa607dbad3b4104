#include "tforms/forms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tforms/linalg.hpp"

namespace tforms::forms {

namespace {

using fields::BaseSpace;
using fields::GermZero;
using fields::OperatorField;
using fields::ScalarGermField;
using fields::SideGerm;
using fields::SignRegion;

constexpr double kIsoFloor = 1e-6;
constexpr double kIsoBound = 1e6;

bool is_symbolic(const OperatorField& f) { return f.repr() == OperatorField::Repr::Symbolic; }

void add_zero_probes(const OperatorField& f, std::vector<double>& pts) {
  if (!is_symbolic(f)) return;
  for (const GermZero& z : f.symbolic_field().zeros) {
    for (int k = 4; k <= 9; ++k) {
      const double r = std::pow(10.0, -k);
      if (z.at - r > 0.0) pts.push_back(z.at - r);
      if (z.at + r < 1.0) pts.push_back(z.at + r);
    }
  }
}

std::vector<double> eval_points(std::initializer_list<const OperatorField*> fs, int grid = 1024) {
  std::vector<double> pts;
  const BaseSpace space = BaseSpace::circle_grid(grid);
  for (int j = 0; j < grid; ++j) pts.push_back(space.point(j));
  for (const OperatorField* f : fs) add_zero_probes(*f, pts);
  return pts;
}

// ess-sup of |a - b| over the grid and germ probes / fibers
double sup_defect(const OperatorField& a, const OperatorField& b) {
  if (is_symbolic(a) != is_symbolic(b)) fail(Err::SpaceMismatch, "mixed representations");
  double sup = 0.0;
  if (is_symbolic(a)) {
    for (double z : eval_points({&a, &b}))
      sup = std::max(sup, std::fabs(a.eval_scalar(z) - b.eval_scalar(z)));
  } else {
    for (std::size_t j = 0; j < a.fiber_count(); ++j)
      sup = std::max(sup, (a.fiber(j) - b.fiber(j)).cwiseAbs().maxCoeff());
  }
  return sup;
}

double sup_norm(const OperatorField& a) {
  double sup = 0.0;
  if (is_symbolic(a)) {
    for (double z : eval_points({&a})) sup = std::max(sup, std::fabs(a.eval_scalar(z)));
  } else {
    for (std::size_t j = 0; j < a.fiber_count(); ++j)
      sup = std::max(sup, linalg::op_norm(a.fiber(j)));
  }
  return sup;
}

// smallest fiber singular value, with one-sided germ probes in symbolic mode
double inf_singular(const OperatorField& a) {
  double inf = std::numeric_limits<double>::infinity();
  if (is_symbolic(a)) {
    for (double z : eval_points({&a})) inf = std::min(inf, std::fabs(a.eval_scalar(z)));
  } else {
    for (std::size_t j = 0; j < a.fiber_count(); ++j)
      inf = std::min(inf, linalg::smallest_singular_value(a.fiber(j)));
  }
  return inf;
}

bool uniformly_invertible(const OperatorField& a, double floor = kIsoFloor,
                          double bound = kIsoBound) {
  return inf_singular(a) >= floor && sup_norm(a) <= bound;
}

OperatorField hermitize(const OperatorField& a) {
  if (is_symbolic(a)) return a;
  return fields::map_fibers(a, [](const Matrix& m) { return Matrix((m + m.adjoint()) / 2.0); });
}

OperatorField field_one(const OperatorField& like) {
  if (is_symbolic(like)) return OperatorField::identity(BaseSpace::symbolic_circle(), 1);
  return OperatorField::identity(like.space(), like.dim());
}

expr::ScalarExpr region_fold(const std::vector<double>& bounds,
                             const std::vector<expr::ScalarExpr>& pieces) {
  expr::ScalarExpr cur = pieces.front();
  for (std::size_t i = 0; i < bounds.size(); ++i)
    cur = expr::piecewise(bounds[i], cur, pieces[i + 1]);
  return cur;
}

// expression equal to `inside` on the intervals and to the constant pad
// elsewhere; interval endpoints become pw breakpoints
expr::ScalarExpr patch_expr(const expr::ScalarExpr& inside, double pad,
                            const std::vector<Interval>& intervals) {
  std::vector<double> bounds;
  std::vector<expr::ScalarExpr> pieces;
  const expr::ScalarExpr pad_expr = expr::constant(pad);
  double cursor = 0.0;
  bool cursor_inside = false;
  if (!intervals.empty() && intervals.front().lo <= 0.0) {
    cursor_inside = true;
  }
  pieces.push_back(cursor_inside ? inside : pad_expr);
  for (const Interval& iv : intervals) {
    if (iv.lo > cursor + 1e-15) {
      bounds.push_back(iv.lo);
      pieces.push_back(inside);
    }
    if (iv.hi < 1.0 - 1e-15) {
      bounds.push_back(iv.hi);
      pieces.push_back(pad_expr);
    }
    cursor = iv.hi;
  }
  return region_fold(bounds, pieces);
}

std::vector<GermZero> zeros_within(const std::vector<GermZero>& zeros,
                                   const std::vector<Interval>& intervals) {
  std::vector<GermZero> kept;
  for (const GermZero& z : zeros)
    for (const Interval& iv : intervals)
      if (z.at > iv.lo + 1e-15 && z.at < iv.hi - 1e-15) kept.push_back(z);
  return kept;
}

void check_commutes(const OperatorField& lhs, const OperatorField& rhs, double tol,
                    const char* what) {
  const double defect = sup_defect(lhs, rhs);
  const double scale = rel_scale(sup_norm(lhs) + sup_norm(rhs));
  if (!(defect <= tol * scale)) {
    std::ostringstream os;
    os << what << ": defect " << defect << " above " << tol * scale;
    fail(Err::ValidationError, os.str());
  }
}

}  // namespace

void PresentationPair::validate() const {
  const OperatorField& alpha = x.alpha();
  // diagram 4-2 style commutation: f . alpha = D(alpha) . h with D(alpha) = alpha
  check_commutes(fields::compose(f, alpha), fields::compose(alpha, h), 1e-10,
                 "presentation diagram");
  // Hermitian defect housed by the anti-symmetric correction
  const OperatorField defect =
      fields::add(f, fields::scale(-1.0, fields::adjoint(h)));
  check_commutes(defect, fields::compose(alpha, correction), 1e-10, "defect housing");
  if (!is_symbolic(correction)) {
    const OperatorField anti =
        fields::add(correction, fields::adjoint(correction));
    if (sup_norm(anti) > 1e-10 * rel_scale(sup_norm(correction)))
      fail(Err::ValidationError, "correction must be anti-symmetric");
  } else {
    // a real scalar correction is anti-symmetric only when it vanishes;
    // complex scalar corrections are outside the real symbolic grammar
    if (sup_norm(correction) > 1e-12)
      fail(Err::ValidationError, "nonzero symbolic corrections are not anti-symmetric");
  }
}

bool TorsionForm::symbolic() const {
  for (const Part& p : parts)
    if (p.x.alpha().repr() != OperatorField::Repr::Symbolic) return false;
  return true;
}

TorsionForm symmetrize(const PresentationPair& p) {
  p.validate();
  const OperatorField& alpha = p.x.alpha();
  // f1 = f - 1/2 D(alpha) F,  h1 = h - 1/2 F alpha
  const OperatorField f1 = fields::add(
      p.f, fields::scale(-0.5, fields::compose(alpha, p.correction)));
  const OperatorField h1 = fields::add(
      p.h, fields::scale(-0.5, fields::compose(p.correction, alpha)));
  check_commutes(f1, fields::adjoint(h1), 1e-12, "symmetrized presentation");
  TorsionForm out;
  out.parts.push_back({p.x, f1});
  return out;
}

TorsionForm discriminant(const OperatorField& alpha) {
  fields::InjectivityVerdict v = fields::is_injective_dense(alpha);
  if (!v.ok) fail(Err::NotInjectiveDense, v.witness);
  TorsionForm out;
  TorsionForm::Part part;
  part.x = TorsionObject::from_field(alpha);
  part.f = field_one(alpha);
  out.parts.push_back(std::move(part));
  return out;
}

TorsionForm orthogonal_sum(const TorsionForm& a, const TorsionForm& b) {
  TorsionForm out = a;
  out.parts.insert(out.parts.end(), b.parts.begin(), b.parts.end());
  return out;
}

TorsionForm negate(const TorsionForm& phi) {
  TorsionForm out;
  for (const TorsionForm::Part& p : phi.parts) {
    TorsionForm::Part q;
    q.x = TorsionObject::from_field(fields::scale(-1.0, p.x.alpha()));
    q.f = p.f;
    out.parts.push_back(std::move(q));
  }
  return out;
}

torsion::GermSignature form_signature(const TorsionForm& phi) {
  torsion::GermSignature sig;
  for (const TorsionForm::Part& p : phi.parts) {
    torsion::GermSignature part = torsion::germ_signature(p.x);
    sig.insert(sig.end(), part.begin(), part.end());
  }
  std::sort(sig.begin(), sig.end(), [](const torsion::GermEntry& a, const torsion::GermEntry& b) {
    if (a.location != b.location) return a.location < b.location;
    if (a.side != b.side) return a.side < b.side;
    return a.order < b.order;
  });
  return sig;
}

Excision excise_spectral(const OperatorField& alpha, double eps) {
  if (!(eps > 0.0)) fail(Err::ValidationError, "excision threshold must be positive");
  Excision out;
  if (is_symbolic(alpha)) {
    const ScalarGermField& f = alpha.symbolic_field();
    // locate the |alpha| <= eps region on a fine scan, then sharpen the
    // endpoints by bisection
    const int scan = 65536;
    std::vector<char> small(scan);
    const BaseSpace scan_space = BaseSpace::circle_grid(scan);
    for (int j = 0; j < scan; ++j) {
      const double v = std::fabs(f.eval(scan_space.point(j)));
      if (std::fabs(v - eps) < 1e-12)
        fail(Err::EigenvalueAtThreshold, "|alpha| within 1e-12 of eps on the scan grid");
      small[static_cast<std::size_t>(j)] = v <= eps ? 1 : 0;
    }
    auto refine = [&](double lo, double hi) {
      // |alpha(lo)| and |alpha(hi)| straddle eps
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((std::fabs(f.eval(mid)) <= eps) == (std::fabs(f.eval(lo)) <= eps))
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    };
    std::vector<Interval> regions;
    int j = 0;
    while (j < scan) {
      if (!small[static_cast<std::size_t>(j)]) {
        ++j;
        continue;
      }
      int k = j;
      while (k + 1 < scan && small[static_cast<std::size_t>(k + 1)]) ++k;
      Interval iv;
      iv.lo = j == 0 ? 0.0 : refine(scan_space.point(j - 1), scan_space.point(j));
      iv.hi = k == scan - 1 ? 1.0 : refine(scan_space.point(k + 1), scan_space.point(k));
      if (iv.hi < iv.lo) std::swap(iv.lo, iv.hi);
      regions.push_back(iv);
      j = k + 1;
    }
    out.regions = regions;
    const expr::ScalarExpr one = expr::constant(1.0);
    const expr::ScalarExpr zero = expr::constant(0.0);
    out.q_field = OperatorField::symbolic(
        ScalarGermField::plain(patch_expr(one, 0.0, regions)));
    out.p_field = OperatorField::symbolic(
        ScalarGermField::plain(patch_expr(zero, 1.0, regions)));
    ScalarGermField restricted;
    restricted.expression = patch_expr(f.expression, 1.0, regions);
    restricted.zeros = zeros_within(f.zeros, regions);
    restricted.zeros_known = f.zeros_known;
    restricted.floor = f.floor;
    restricted.radius = f.radius;
    if (restricted.zeros_known) restricted.validate();
    out.restricted = OperatorField::symbolic(std::move(restricted));
    return out;
  }

  const std::size_t n = alpha.fiber_count();
  std::vector<Matrix> p_fibers(n), q_fibers(n), r_fibers(n);
  std::vector<char> has_torsion(n, 0);
  parallel_for(n, [&](std::size_t j) {
    const Matrix& m = alpha.fiber(j);
    linalg::HermitianEig eig = linalg::herm_eig(m);
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
      if (std::fabs(std::fabs(eig.eigenvalues(i)) - eps) < 1e-12)
        fail(Err::EigenvalueAtThreshold, "fiber eigenvalue within 1e-12 of eps");
    Matrix q = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
      if (std::fabs(eig.eigenvalues(i)) < eps)
        q += eig.eigenvectors.col(i) * eig.eigenvectors.col(i).adjoint();
    q = (q + q.adjoint()) / 2.0;
    const Matrix p = Matrix::Identity(m.rows(), m.cols()) - q;
    q_fibers[j] = q;
    p_fibers[j] = p;
    Matrix r = q * m * q + p;
    r_fibers[j] = (r + r.adjoint()) / 2.0;
    has_torsion[j] = q.real().trace() > 0.5 ? 1 : 0;
  });
  out.p_field = OperatorField::sampled(alpha.space(), std::move(p_fibers));
  out.q_field = OperatorField::sampled(alpha.space(), std::move(q_fibers));
  out.restricted = OperatorField::sampled(alpha.space(), std::move(r_fibers));
  // report the grid sub-intervals carrying torsion content
  const BaseSpace& space = alpha.space();
  std::size_t j = 0;
  while (j < n) {
    if (!has_torsion[j]) {
      ++j;
      continue;
    }
    std::size_t k = j;
    while (k + 1 < n && has_torsion[k + 1]) ++k;
    Interval iv;
    iv.lo = space.point(static_cast<int>(j)) - 0.5 * space.weight();
    iv.hi = space.point(static_cast<int>(k)) + 0.5 * space.weight();
    out.regions.push_back(iv);
    j = k + 1;
  }
  return out;
}

SplittingWitness splitting_witness(const OperatorField& alpha, const OperatorField& f) {
  SplittingWitness out;
  if (is_symbolic(alpha)) {
    const expr::ScalarExpr a = alpha.symbolic_field().expression;
    const expr::ScalarExpr ff = f.symbolic_field().expression;
    const expr::ScalarExpr gram = a * a + ff * ff;
    double floor2 = std::numeric_limits<double>::infinity();
    for (double z : eval_points({&alpha, &f}))
      floor2 = std::min(floor2, gram.eval(z));
    out.stack_floor = std::sqrt(std::max(floor2, 0.0));
    if (out.stack_floor < 1e-8)
      fail(Err::JointlySingular, "alpha and f* vanish at the same place");
    out.sigma = OperatorField::symbolic(ScalarGermField::plain(a / gram));
    out.delta = OperatorField::symbolic(ScalarGermField::plain(ff / gram));
    out.residual = 0.0;
    for (double z : eval_points({&alpha, &f})) {
      const double r = out.sigma.eval_scalar(z) * alpha.eval_scalar(z) +
                       out.delta.eval_scalar(z) * f.eval_scalar(z) - 1.0;
      out.residual = std::max(out.residual, std::fabs(r));
    }
    out.sigma_norm = sup_norm(out.sigma);
  } else {
    const std::size_t n = alpha.fiber_count();
    std::vector<Matrix> sig(n), del(n);
    std::vector<double> floors(n), residuals(n), norms(n);
    parallel_for(n, [&](std::size_t j) {
      const Matrix& a = alpha.fiber(j);
      const Matrix& ff = f.fiber(j);
      const Matrix gram = a.adjoint() * a + ff * ff.adjoint();
      floors[j] = std::sqrt(std::max(
          linalg::herm_eig((gram + gram.adjoint()) / 2.0).eigenvalues(0), 0.0));
      Eigen::PartialPivLU<Matrix> lu(gram);
      sig[j] = lu.solve(a.adjoint());
      del[j] = lu.solve(ff);
      const Matrix id = Matrix::Identity(a.rows(), a.cols());
      residuals[j] = (sig[j] * a + del[j] * ff.adjoint() - id).norm();
      norms[j] = linalg::op_norm(sig[j]);
    });
    out.stack_floor = *std::min_element(floors.begin(), floors.end());
    if (out.stack_floor < 1e-8)
      fail(Err::JointlySingular, "stacked map [alpha; f*] not bounded below");
    out.sigma = OperatorField::sampled(alpha.space(), std::move(sig));
    out.delta = OperatorField::sampled(alpha.space(), std::move(del));
    out.residual = *std::max_element(residuals.begin(), residuals.end());
    out.sigma_norm = *std::max_element(norms.begin(), norms.end());
  }
  if (!(out.residual <= 1e-10))
    fail(Err::NoSplitting, "splitting identity residual above 1e-10");
  return out;
}

bool certify_nondegenerate(const TorsionForm::Part& part) {
  // fast path: the representative itself is uniformly invertible
  if (uniformly_invertible(part.f) && uniformly_invertible(fields::adjoint(part.f))) return true;
  // otherwise non-degeneracy is exactly the split-exactness criterion
  try {
    splitting_witness(part.x.alpha(), part.f);
    return true;
  } catch (const Error&) {
    return false;
  }
}

namespace {

// epsilon nudged away from fiber eigenvalues / scan values
double nudge_epsilon(const OperatorField& alpha, double eps) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    try {
      excise_spectral(alpha, eps);
      return eps;
    } catch (const Error& e) {
      if (e.code() != Err::EigenvalueAtThreshold) throw;
      eps *= 1.0 - 1e-3;
    }
  }
  fail(Err::NoSplitting, "could not place the excision threshold off the spectrum");
}

}  // namespace

Reduction reduce_to_discriminant(const TorsionForm& phi) {
  if (phi.parts.size() != 1)
    fail(Err::ValidationError, "reduction works on a single presented component");
  const TorsionForm::Part& part = phi.parts.front();
  const OperatorField& alpha = part.x.alpha();
  const OperatorField& f = part.f;

  if (!certify_nondegenerate(part)) fail(Err::Degenerate, "form is not non-degenerate");

  Reduction out;
  if (uniformly_invertible(f)) {
    // diagram 4-14: the composite f alpha is Hermitian and presents the
    // same form; the isometry is [f] with witness 1 and zero defect
    OperatorField alpha_prime = hermitize(fields::compose(f, alpha));
    check_commutes(fields::compose(f, alpha), alpha_prime, 1e-10, "f alpha hermitian");
    out.alpha_prime = alpha_prime;
    out.certificate.kind = CongruenceCertificate::Kind::Direct;
    out.certificate.transform = f;
    out.certificate.residual = 0.0;
    out.certificate.checks.push_back({"pullback_defect", 0.0});
    out.certificate.checks.push_back({"rep_floor", inf_singular(f)});
    return out;
  }

  // general path: splitting witness, excision at eps ||sigma|| < 1/2, and
  // the compressed form Q f alpha Q extended by the identity
  SplittingWitness split = splitting_witness(alpha, f);
  double eps = 0.5 / rel_scale(split.sigma_norm);
  if (is_symbolic(alpha)) {
    const ScalarGermField& sf = f.symbolic_field();
    if (!sf.zeros_known)
      fail(Err::ValidationError, "general reduction needs declared zeros on f");
    eps = nudge_epsilon(alpha, eps);
    Excision exc = excise_spectral(alpha, eps);
    // f cannot vanish on the excised region (joint lower bound), so the
    // compressed field keeps alpha's germs scaled by f
    OperatorField f_alpha = fields::compose(f, alpha);
    const ScalarGermField& fa = f_alpha.symbolic_field();
    ScalarGermField reduced;
    reduced.expression = patch_expr(fa.expression, 1.0, exc.regions);
    reduced.zeros = zeros_within(fa.zeros, exc.regions);
    reduced.zeros_known = fa.zeros_known;
    if (reduced.zeros_known) reduced.validate();
    out.alpha_prime = OperatorField::symbolic(std::move(reduced));
    // isometry rep t = Q f + P and its witness alpha'^{-1} t alpha
    expr::ScalarExpr t_expr = patch_expr(sf.expression, 1.0, exc.regions);
    OperatorField t = OperatorField::symbolic(ScalarGermField::plain(t_expr));
    if (!uniformly_invertible(t))
      fail(Err::NoSplitting, "excision did not make the representative invertible");
    // the isometry square t alpha = alpha' w defines the witness; the
    // pullback differs from f by alpha . F with F bounded, which keeps the
    // morphism class (not the raw defect) small
    double sup_f_witness = 0.0;
    double witness_norm = 0.0;
    double residual = 0.0;
    for (double z : eval_points({&alpha, &f, &out.alpha_prime})) {
      const double av = alpha.eval_scalar(z);
      const double tv = t.eval_scalar(z);
      const double apv = out.alpha_prime.eval_scalar(z);
      const double wv = tv * av / apv;
      witness_norm = std::max(witness_norm, std::fabs(wv));
      residual = std::max(residual, std::fabs(apv * wv - tv * av));
      const double defect = wv * tv - f.eval_scalar(z);
      sup_f_witness = std::max(sup_f_witness, std::fabs(defect / av));
    }
    if (sup_f_witness > kIsoBound || witness_norm > kIsoBound)
      fail(Err::NoSplitting, "pullback defect not housed by a bounded correction");
    out.certificate.kind = CongruenceCertificate::Kind::ExcisionPair;
    out.certificate.transform = t;
    out.certificate.excised_source = exc.regions;
    out.certificate.excised_target = exc.regions;
    out.certificate.residual = residual;
    out.certificate.checks.push_back({"pullback_correction_sup", sup_f_witness});
    out.certificate.checks.push_back({"witness_norm", witness_norm});
    out.certificate.checks.push_back({"rep_floor", inf_singular(t)});
    return out;
  }

  eps = nudge_epsilon(alpha, eps);
  Excision exc = excise_spectral(alpha, eps);
  const std::size_t n = alpha.fiber_count();
  std::vector<Matrix> reduced(n), t_fib(n), w_fib(n);
  parallel_for(n, [&](std::size_t j) {
    const Matrix& a = alpha.fiber(j);
    const Matrix& ff = f.fiber(j);
    const Matrix& q = exc.q_field.fiber(j);
    const Matrix& p = exc.p_field.fiber(j);
    const Eigen::Index d = a.rows();
    // range projector of f Q via SVD at the known rank
    const Matrix fq = ff * q;
    const int rank = static_cast<int>(std::lround(q.real().trace()));
    Matrix pq_prime = Matrix::Zero(d, d);
    if (rank > 0) {
      Eigen::JacobiSVD<Matrix> svd(fq, Eigen::ComputeFullU);
      for (int r = 0; r < rank; ++r)
        pq_prime += svd.matrixU().col(r) * svd.matrixU().col(r).adjoint();
    }
    Matrix rfib = q * ff * a * q + p;
    reduced[j] = (rfib + rfib.adjoint()) / 2.0;
    t_fib[j] = q * pq_prime * ff + p;
    w_fib[j] = Eigen::PartialPivLU<Matrix>(reduced[j]).solve(t_fib[j] * a);
  });
  out.alpha_prime = OperatorField::sampled(alpha.space(), std::move(reduced));
  OperatorField t = OperatorField::sampled(alpha.space(), std::move(t_fib));
  OperatorField w = OperatorField::sampled(alpha.space(), std::move(w_fib));
  if (!uniformly_invertible(t, 1e-8))
    fail(Err::NoSplitting, "excision did not make the representative invertible");
  // pullback along [t]: w* 1 t - f must be alpha . (bounded F); the
  // residual proper is the commutation of the isometry square
  double sup_f_witness = 0.0;
  double witness_norm = 0.0;
  double residual = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double scale =
        rel_scale(linalg::op_norm(out.alpha_prime.fiber(j)) * linalg::op_norm(w.fiber(j)));
    residual = std::max(residual,
                        (out.alpha_prime.fiber(j) * w.fiber(j) - t.fiber(j) * alpha.fiber(j))
                                .norm() /
                            scale);
    witness_norm = std::max(witness_norm, linalg::op_norm(w.fiber(j)));
    const Matrix defect = w.fiber(j).adjoint() * t.fiber(j) - f.fiber(j);
    const Matrix f_witness = Eigen::PartialPivLU<Matrix>(alpha.fiber(j)).solve(defect);
    sup_f_witness = std::max(sup_f_witness, linalg::op_norm(f_witness));
  }
  if (sup_f_witness > kIsoBound || witness_norm > kIsoBound)
    fail(Err::NoSplitting, "pullback defect not housed by a bounded correction");
  out.certificate.kind = CongruenceCertificate::Kind::ExcisionPair;
  out.certificate.transform = t;
  out.certificate.excised_source = exc.regions;
  out.certificate.excised_target = exc.regions;
  out.certificate.residual = residual;
  out.certificate.checks.push_back({"pullback_correction_sup", sup_f_witness});
  out.certificate.checks.push_back({"witness_norm", witness_norm});
  out.certificate.checks.push_back({"rep_floor", inf_singular(t)});
  return out;
}

CongruenceCertificate excision_isometry(const OperatorField& alpha, const OperatorField& beta,
                                        const OperatorField& f, const OperatorField& g) {
  // isometry data (4-25): f alpha = beta g
  check_commutes(fields::compose(f, alpha), fields::compose(beta, g), 1e-10,
                 "isometry diagram");

  CongruenceCertificate cert;
  if (is_symbolic(alpha)) {
    const expr::ScalarExpr a = alpha.symbolic_field().expression;
    const expr::ScalarExpr b = beta.symbolic_field().expression;
    const expr::ScalarExpr fe = f.symbolic_field().expression;
    const expr::ScalarExpr ge = g.symbolic_field().expression;
    // F from (4-27): alpha F = g* f - 1
    const expr::ScalarExpr capital_f = (ge * fe - expr::constant(1.0)) / a;
    OperatorField f_field = OperatorField::symbolic(ScalarGermField::plain(capital_f));
    const double f_norm = sup_norm(f_field);
    if (!(f_norm <= kIsoBound))
      fail(Err::ValidationError, "(4-27) correction is unbounded; data is not an isometry");
    const double alpha_norm = sup_norm(alpha);

    OperatorField work_alpha = alpha;
    expr::ScalarExpr work_a = a;
    std::vector<Interval> regions;
    if (alpha_norm * f_norm >= 1.0 - 1e-3) {
      double eps = 0.5 * (1.0 - 1e-3) / rel_scale(f_norm);
      if (!(eps > 0.0)) fail(Err::SmallnessUnreachable, "no admissible excision threshold");
      eps = nudge_epsilon(alpha, eps);
      Excision exc = excise_spectral(alpha, eps);
      work_alpha = exc.restricted;
      work_a = exc.restricted.symbolic_field().expression;
      regions = exc.regions;
      cert.kind = CongruenceCertificate::Kind::ExcisionPair;
    } else {
      cert.kind = CongruenceCertificate::Kind::Direct;
    }
    // the correction restricted to the working region: on the padded part
    // of work_alpha the form is the identity and F contributes nothing
    expr::ScalarExpr work_f_expr =
        regions.empty() ? capital_f : patch_expr(capital_f, 0.0, regions);

    // scalar functional calculus: h = h1 = h2 = sqrt(1 + F alpha)
    expr::ScalarExpr h_expr =
        expr::sqrt(expr::constant(1.0) + work_f_expr * work_a);
    OperatorField h = OperatorField::symbolic(ScalarGermField::plain(h_expr));

    double sq_res = 0.0, intertwine_res = 0.0, main_res = 0.0, scale = 0.0;
    for (double z : eval_points({&alpha, &beta, &f, &g, &work_alpha})) {
      const double av = work_a.eval(z);
      const double fv = work_f_expr.eval(z);
      const double hv = h_expr.eval(z);
      sq_res = std::max(sq_res, std::fabs(hv * hv - (1.0 + fv * av)));
      // scalar sign/modulus intertwinings are exact; record the defect of
      // gamma h = h1 gamma as a representative
      const double gamma = std::sqrt(std::fabs(av));
      intertwine_res = std::max(intertwine_res, std::fabs(gamma * hv - hv * gamma));
      const double lhs = av + av * fv * av;
      const double rhs = hv * av * hv;
      main_res = std::max(main_res, std::fabs(lhs - rhs));
      scale = std::max(scale, std::fabs(lhs));
    }
    cert.transform = h;
    cert.excised_source = regions;
    cert.excised_target = regions;
    cert.residual = main_res / rel_scale(scale);
    cert.checks.push_back({"h_square_residual", sq_res});
    cert.checks.push_back({"intertwine_residual", intertwine_res});
    // full congruence field h g^{-1} when g is uniformly invertible
    if (uniformly_invertible(g)) {
      expr::ScalarExpr full = h_expr / ge;
      OperatorField h_full = OperatorField::symbolic(ScalarGermField::plain(full));
      double full_res = 0.0, full_scale = 0.0;
      if (regions.empty()) {
        for (double z : eval_points({&alpha, &beta, &g})) {
          const double lhs = beta.eval_scalar(z);
          const double rhs = full.eval(z) * alpha.eval_scalar(z) * full.eval(z);
          full_res = std::max(full_res, std::fabs(lhs - rhs));
          full_scale = std::max(full_scale, std::fabs(lhs));
        }
        cert.transform = h_full;
        cert.residual = full_res / rel_scale(full_scale);
        cert.checks.push_back({"full_congruence_residual", cert.residual});
      }
    }
    if (!(cert.residual <= 1e-8))
      fail(Err::ContourFailure, "certificate residual above 1e-8");
    return cert;
  }

  // sampled path
  const std::size_t n = alpha.fiber_count();
  std::vector<Matrix> f_corr(n);
  double f_norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Matrix gf = g.fiber(j).adjoint() * f.fiber(j);
    const Matrix id = Matrix::Identity(alpha.dim(), alpha.dim());
    f_corr[j] = Eigen::PartialPivLU<Matrix>(alpha.fiber(j)).solve(gf - id);
    f_norm = std::max(f_norm, linalg::op_norm(f_corr[j]));
  }
  if (!(f_norm <= kIsoBound))
    fail(Err::ValidationError, "(4-27) correction is unbounded; data is not an isometry");
  OperatorField capital_f = OperatorField::sampled(alpha.space(), std::move(f_corr));
  const double alpha_norm = sup_norm(alpha);

  OperatorField work_alpha = alpha;
  OperatorField work_f = capital_f;
  std::vector<Interval> regions;
  if (alpha_norm * f_norm >= 1.0 - 1e-3) {
    double eps = 0.5 * (1.0 - 1e-3) / rel_scale(f_norm);
    eps = nudge_epsilon(alpha, eps);
    Excision exc = excise_spectral(alpha, eps);
    work_alpha = exc.restricted;
    // F compressed to Q (the padded identity part needs no correction)
    work_f = fields::compose(fields::compose(exc.q_field, capital_f), exc.q_field);
    regions = exc.regions;
    cert.kind = CongruenceCertificate::Kind::ExcisionPair;
  } else {
    cert.kind = CongruenceCertificate::Kind::Direct;
  }

  // fiberwise sign/modulus and the three contour square roots (4-36..4-38)
  std::vector<Matrix> h_fib(n);
  double sq_res = 0.0, inter_res = 0.0;
  std::vector<double> sqv(n), intv(n);
  parallel_for(n, [&](std::size_t j) {
    const Matrix& a = work_alpha.fiber(j);
    const Matrix& cf = work_f.fiber(j);
    linalg::PolarData polar = linalg::sign_modulus(a);
    const Matrix& s = polar.sign;
    const Matrix& gam = polar.modulus_sqrt;
    const Matrix id = Matrix::Identity(a.rows(), a.cols());
    const Matrix m1 = id + gam * cf * s * gam;
    const Matrix m2 = id + gam * gam * cf * s;
    const Matrix m3 = id + cf * s * gam * gam;
    const Matrix h1 = linalg::principal_sqrt(m1, linalg::SqrtMethod::Contour);
    const Matrix h2 = linalg::principal_sqrt(m2, linalg::SqrtMethod::Contour);
    const Matrix h = linalg::principal_sqrt(m3, linalg::SqrtMethod::Contour);
    double sq = std::max({(h1 * h1 - m1).norm(), (h2 * h2 - m2).norm(), (h * h - m3).norm()});
    // intertwinings (4-33), (4-34), (4-35)
    double inter = std::max({(s * h2 - h.adjoint() * s).norm(), (gam * h1 - h2 * gam).norm(),
                             (gam * h - h1 * gam).norm()});
    sqv[j] = sq;
    intv[j] = inter;
    h_fib[j] = h;
  });
  for (std::size_t j = 0; j < n; ++j) {
    sq_res = std::max(sq_res, sqv[j]);
    inter_res = std::max(inter_res, intv[j]);
  }
  OperatorField h_field = OperatorField::sampled(alpha.space(), std::move(h_fib));
  if (!(inter_res <= 1e-9) || !(sq_res <= 1e-9))
    fail(Err::ContourFailure, "functional-calculus identities above 1e-9");

  // main identity (4-31)/(4-39): on the working region
  // Q (g* beta g) Q + P = h* alpha_Q h
  double main_res = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Matrix& a = work_alpha.fiber(j);
    const Matrix& cf = work_f.fiber(j);
    const Matrix lhs = a + a * cf * a;
    const Matrix rhs = h_field.fiber(j).adjoint() * a * h_field.fiber(j);
    main_res = std::max(main_res, (lhs - rhs).norm());
    scale = std::max(scale, lhs.norm());
  }
  cert.transform = h_field;
  cert.excised_source = regions;
  cert.excised_target = regions;
  cert.residual = main_res / rel_scale(scale);
  cert.checks.push_back({"h_square_residual", sq_res});
  cert.checks.push_back({"intertwine_residual", inter_res});

  if (regions.empty() && uniformly_invertible(g)) {
    // beta = (h g^{-1})* alpha (h g^{-1}) globally
    OperatorField g_inv = fields::map_fibers(g, [](const Matrix& m) -> Matrix {
      return Eigen::PartialPivLU<Matrix>(m).solve(Matrix::Identity(m.rows(), m.cols()));
    });
    OperatorField h_full = fields::compose(h_field, g_inv);
    double full_res = 0.0, full_scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Matrix lhs = beta.fiber(j);
      const Matrix rhs = h_full.fiber(j).adjoint() * alpha.fiber(j) * h_full.fiber(j);
      full_res = std::max(full_res, (lhs - rhs).norm());
      full_scale = std::max(full_scale, lhs.norm());
    }
    cert.transform = h_full;
    cert.residual = full_res / rel_scale(full_scale);
    cert.checks.push_back({"full_congruence_residual", cert.residual});
  }
  if (!(cert.residual <= 1e-8)) fail(Err::ContourFailure, "certificate residual above 1e-8");
  return cert;
}

PosNegSplit pos_neg_split(const TorsionForm& phi) {
  PosNegSplit out;
  for (const TorsionForm::Part& part : phi.parts) {
    const OperatorField& alpha = part.x.alpha();
    if (sup_defect(part.f, field_one(alpha)) > 1e-12)
      fail(Err::ValidationError, "split expects a reduced (discriminant) presentation");
    if (is_symbolic(alpha)) {
      const ScalarGermField& f = alpha.symbolic_field();
      std::vector<SignRegion> regions = fields::sign_regions(f);
      std::vector<Interval> pos, neg;
      for (const SignRegion& r : regions)
        (r.sign > 0 ? pos : neg).push_back({r.lo, r.hi});
      auto build = [&](const std::vector<Interval>& keep, double pad, int sign) {
        ScalarGermField g;
        g.expression = keep.empty() ? expr::constant(pad)
                                    : patch_expr(f.expression, pad, keep);
        g.zeros_known = f.zeros_known;
        g.floor = f.floor;
        g.radius = f.radius;
        for (const GermZero& z : f.zeros) {
          GermZero kept;
          kept.at = z.at;
          if (z.left && z.left->sign == sign) {
            // the zero is approached from inside a kept region on this side
            kept.left = z.left;
          }
          if (z.right && z.right->sign == sign) kept.right = z.right;
          if (kept.left || kept.right) g.zeros.push_back(kept);
        }
        if (g.zeros_known) g.validate();
        return OperatorField::symbolic(std::move(g));
      };
      OperatorField alpha_pos = build(pos, 1.0, +1);
      OperatorField alpha_neg = build(neg, -1.0, -1);
      out.positive.parts.push_back({TorsionObject::from_field(alpha_pos), field_one(alpha_pos)});
      out.negative.parts.push_back({TorsionObject::from_field(alpha_neg), field_one(alpha_neg)});
      const expr::ScalarExpr one = expr::constant(1.0);
      out.positive_projectors.push_back(OperatorField::symbolic(ScalarGermField::plain(
          pos.empty() ? expr::constant(0.0) : patch_expr(one, 0.0, pos))));
      out.negative_projectors.push_back(OperatorField::symbolic(ScalarGermField::plain(
          neg.empty() ? expr::constant(0.0) : patch_expr(one, 0.0, neg))));
      continue;
    }
    const std::size_t n = alpha.fiber_count();
    std::vector<Matrix> pos_f(n), neg_f(n), pos_p(n), neg_p(n);
    parallel_for(n, [&](std::size_t j) {
      const Matrix& m = alpha.fiber(j);
      linalg::HermitianEig eig = linalg::herm_eig(m);
      for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
        if (std::fabs(eig.eigenvalues(i)) < 1e-13)
          fail(Err::ZeroEigenvalueFiber, "fiber eigenvalue within 1e-13 of zero");
      Matrix ep = Matrix::Zero(m.rows(), m.cols());
      for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
        if (eig.eigenvalues(i) > 0.0)
          ep += eig.eigenvectors.col(i) * eig.eigenvectors.col(i).adjoint();
      ep = (ep + ep.adjoint()) / 2.0;
      const Matrix en = Matrix::Identity(m.rows(), m.cols()) - ep;
      Matrix ap = ep * m * ep + en;
      Matrix an = en * m * en - ep;
      pos_f[j] = (ap + ap.adjoint()) / 2.0;
      neg_f[j] = (an + an.adjoint()) / 2.0;
      pos_p[j] = ep;
      neg_p[j] = en;
    });
    OperatorField alpha_pos = OperatorField::sampled(alpha.space(), std::move(pos_f));
    OperatorField alpha_neg = OperatorField::sampled(alpha.space(), std::move(neg_f));
    out.positive.parts.push_back({TorsionObject::from_field(alpha_pos), field_one(alpha_pos)});
    out.negative.parts.push_back({TorsionObject::from_field(alpha_neg), field_one(alpha_neg)});
    out.positive_projectors.push_back(OperatorField::sampled(alpha.space(), std::move(pos_p)));
    out.negative_projectors.push_back(OperatorField::sampled(alpha.space(), std::move(neg_p)));
  }
  return out;
}

bool is_metabolizer(const OperatorField& alpha, const OperatorField& beta_candidate, double floor,
                    double bound) {
  // delta with alpha = beta* delta beta must be a C-isomorphism
  if (is_symbolic(alpha)) {
    const expr::ScalarExpr delta = alpha.symbolic_field().expression /
                                   (beta_candidate.symbolic_field().expression *
                                    beta_candidate.symbolic_field().expression);
    for (double z : eval_points({&alpha, &beta_candidate})) {
      const double v = std::fabs(delta.eval(z));
      if (v < floor || v > bound) return false;
    }
    return true;
  }
  for (std::size_t j = 0; j < alpha.fiber_count(); ++j) {
    const Matrix& b = beta_candidate.fiber(j);
    Eigen::PartialPivLU<Matrix> lu(b);
    const Matrix b_inv = lu.solve(Matrix::Identity(b.rows(), b.cols()));
    const Matrix delta = b_inv.adjoint() * alpha.fiber(j) * b_inv;
    const double smin = linalg::smallest_singular_value(delta);
    if (smin < floor || linalg::op_norm(delta) > bound) return false;
  }
  return true;
}

MetabolizerResult metabolizer(const TorsionForm& phi) {
  PosNegSplit split = pos_neg_split(phi);
  MetabolizerResult out;
  out.delta_criterion = true;
  auto handle_block = [&](const TorsionForm::Part& part, int sign) {
    const OperatorField& alpha = part.x.alpha();
    MetabolizerPart mp;
    if (is_symbolic(alpha)) {
      const ScalarGermField& f = alpha.symbolic_field();
      bool all_even = true;
      for (const GermZero& z : f.zeros) {
        if (z.left && z.left->order % 2 != 0) all_even = false;
        if (z.right && z.right->order % 2 != 0) all_even = false;
      }
      if (all_even && f.zeros_known) {
        ScalarGermField beta;
        beta.expression = expr::sqrt(expr::abs(f.expression));
        beta.zeros_known = true;
        beta.floor = std::sqrt(f.floor);
        beta.radius = f.radius;
        for (const GermZero& z : f.zeros) {
          GermZero hz;
          hz.at = z.at;
          for (int dir : {-1, +1}) {
            const auto& side = dir < 0 ? z.left : z.right;
            if (!side) continue;
            SideGerm g;
            g.order = side->order / 2;
            g.sign = 1;
            g.coeff = std::sqrt(side->coeff);
            (dir < 0 ? hz.left : hz.right) = g;
          }
          beta.zeros.push_back(hz);
        }
        beta.validate();
        mp.beta = OperatorField::symbolic(std::move(beta));
      } else {
        // odd vanishing orders have no integer-order germ square root;
        // fall back to a sampled witness on the default grid
        OperatorField sampled = fields::sample_symbolic(alpha, fields::kDefaultSymbolicGrid);
        mp.beta = fields::map_fibers(sampled, [](const Matrix& m) {
          Matrix b(1, 1);
          b(0, 0) = std::sqrt(std::abs(m(0, 0)));
          return b;
        });
      }
      mp.delta = is_symbolic(mp.beta)
                     ? OperatorField::symbolic(ScalarGermField::plain(
                           expr::constant(static_cast<double>(sign))))
                     : OperatorField::constant(mp.beta.space(),
                                               Matrix::Constant(1, 1, Complex(sign, 0.0)));
      double residual = 0.0;
      if (is_symbolic(mp.beta)) {
        for (double z : eval_points({&alpha, &mp.beta})) {
          const double b = mp.beta.eval_scalar(z);
          residual = std::max(residual,
                              std::fabs(sign * b * b - alpha.eval_scalar(z)));
        }
      } else {
        OperatorField sampled_alpha =
            fields::sample_symbolic(alpha, fields::kDefaultSymbolicGrid);
        for (std::size_t j = 0; j < mp.beta.fiber_count(); ++j) {
          const Complex b = mp.beta.fiber(j)(0, 0);
          residual = std::max(residual, std::abs(Complex(sign, 0.0) * b * b -
                                                 sampled_alpha.fiber(j)(0, 0)));
        }
      }
      mp.residual = residual;
      mp.delta_floor = 1.0;
      mp.y = TorsionObject::from_field(mp.beta);
    } else {
      const std::size_t n = alpha.fiber_count();
      std::vector<Matrix> beta_f(n), delta_f(n);
      std::vector<double> residuals(n), floors(n);
      parallel_for(n, [&](std::size_t j) {
        const Matrix& a = alpha.fiber(j);
        linalg::PolarData polar = linalg::sign_modulus(a);
        beta_f[j] = polar.modulus_sqrt;
        delta_f[j] = polar.sign;
        residuals[j] = (polar.sign * polar.modulus_sqrt * polar.modulus_sqrt - a).norm();
        floors[j] = linalg::smallest_singular_value(polar.sign);
      });
      mp.beta = OperatorField::sampled(alpha.space(), std::move(beta_f));
      mp.delta = OperatorField::sampled(alpha.space(), std::move(delta_f));
      mp.residual = *std::max_element(residuals.begin(), residuals.end());
      mp.delta_floor = *std::min_element(floors.begin(), floors.end());
      mp.y = TorsionObject::from_field(mp.beta);
    }
    const OperatorField check_alpha =
        (is_symbolic(alpha) && !is_symbolic(mp.beta))
            ? fields::sample_symbolic(alpha, fields::kDefaultSymbolicGrid)
            : alpha;
    if (!is_metabolizer(check_alpha, mp.beta)) out.delta_criterion = false;
    out.parts.push_back(std::move(mp));
  };
  for (const TorsionForm::Part& p : split.positive.parts) handle_block(p, +1);
  for (const TorsionForm::Part& p : split.negative.parts) handle_block(p, -1);
  return out;
}

CongruenceCertificate congruence_positive(const OperatorField& alpha_phi,
                                          const OperatorField& alpha_psi, const OperatorField& f,
                                          const OperatorField& g) {
  // diagram (7-4): g alpha_phi = alpha_psi f with f, g isomorphisms
  check_commutes(fields::compose(g, alpha_phi), fields::compose(alpha_psi, f), 1e-10,
                 "congruence diagram");
  if (!uniformly_invertible(f) || !uniformly_invertible(g))
    fail(Err::ValidationError, "f and g must be uniform isomorphisms");

  CongruenceCertificate cert;
  cert.kind = CongruenceCertificate::Kind::Direct;
  if (is_symbolic(alpha_phi)) {
    const expr::ScalarExpr prod =
        f.symbolic_field().expression * g.symbolic_field().expression;
    double lo = std::numeric_limits<double>::infinity();
    for (double z : eval_points({&alpha_phi, &alpha_psi, &f, &g}))
      lo = std::min(lo, prod.eval(z));
    if (!(lo > 1e-6)) fail(Err::SpectrumNotPositive, "f*g has spectrum below 1e-6");
    const expr::ScalarExpr k_expr = expr::sqrt(prod);
    OperatorField k = OperatorField::symbolic(ScalarGermField::plain(k_expr));
    double sq = 0.0, comm = 0.0, main_res = 0.0, scale = 0.0;
    for (double z : eval_points({&alpha_phi, &alpha_psi, &f, &g})) {
      const double kv = k_expr.eval(z);
      const double fv = f.eval_scalar(z);
      const double gv = g.eval_scalar(z);
      const double ap = alpha_phi.eval_scalar(z);
      const double as = alpha_psi.eval_scalar(z);
      sq = std::max(sq, std::fabs(kv * kv - fv * gv));
      comm = std::max(comm, std::fabs(kv * ap - ap * kv));
      const double lhs = fv * as * fv;
      const double rhs = kv * ap * kv;
      main_res = std::max(main_res, std::fabs(lhs - rhs));
      scale = std::max(scale, std::fabs(lhs));
    }
    cert.transform = k;
    cert.residual = main_res / rel_scale(scale);
    cert.checks.push_back({"k_square_residual", sq});
    cert.checks.push_back({"k_commute_residual", comm});
  } else {
    const std::size_t n = alpha_phi.fiber_count();
    std::vector<Matrix> k_f(n);
    std::vector<double> sqv(n), commv(n);
    parallel_for(n, [&](std::size_t j) {
      const Matrix prod = f.fiber(j).adjoint() * g.fiber(j);
      Eigen::VectorXcd spec = linalg::spectrum_estimate(prod);
      for (Eigen::Index i = 0; i < spec.size(); ++i) {
        if (!(spec(i).real() > 1e-6) ||
            std::fabs(spec(i).imag()) > 1e-6 * rel_scale(std::abs(spec(i))))
          fail(Err::SpectrumNotPositive, "spectrum of f*g leaves the positive axis");
      }
      const Matrix k = linalg::principal_sqrt(prod, linalg::SqrtMethod::Contour);
      sqv[j] = (k * k - prod).norm();
      commv[j] = (k * alpha_phi.fiber(j) - alpha_phi.fiber(j) * k.adjoint()).norm();
      k_f[j] = k;
    });
    OperatorField k = OperatorField::sampled(alpha_phi.space(), std::move(k_f));
    double sq = 0.0, comm = 0.0, main_res = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sq = std::max(sq, sqv[j]);
      comm = std::max(comm, commv[j]);
      const Matrix lhs = f.fiber(j).adjoint() * alpha_psi.fiber(j) * f.fiber(j);
      const Matrix rhs = k.fiber(j) * alpha_phi.fiber(j) * k.fiber(j).adjoint();
      main_res = std::max(main_res, (lhs - rhs).norm());
      scale = std::max(scale, lhs.norm());
    }
    cert.transform = k;
    cert.residual = main_res / rel_scale(scale);
    cert.checks.push_back({"k_square_residual", sq});
    cert.checks.push_back({"k_commute_residual", comm});
  }
  for (const auto& [name, value] : cert.checks)
    if (!(value <= 1e-9))
      fail(Err::ContourFailure, name + " above 1e-9");
  if (!(cert.residual <= 1e-8)) fail(Err::ContourFailure, "congruence residual above 1e-8");
  return cert;
}

OperatorField complete_diagram(const OperatorField& alpha, const OperatorField& f,
                               const OperatorField& g) {
  const OperatorField alpha_sq = fields::compose(alpha, alpha);
  check_commutes(fields::compose(g, alpha_sq), fields::compose(alpha_sq, f), 1e-10,
                 "square diagram");
  if (is_symbolic(alpha)) {
    // scalars commute; h = f once the square diagram forces g = f
    check_commutes(g, f, 1e-9, "scalar completion");
    return f;
  }
  const std::size_t n = alpha.fiber_count();
  // eta_mu cutoff limit of alpha f eta_mu(alpha)^{-1}
  std::vector<linalg::HermitianEig> eigs(n);
  parallel_for(n, [&](std::size_t j) { eigs[j] = linalg::herm_eig(alpha.fiber(j)); });
  auto h_at = [&](double mu) {
    std::vector<Matrix> h(n);
    parallel_for(n, [&](std::size_t j) {
      const linalg::HermitianEig& e = eigs[j];
      Matrix cut = Matrix::Zero(alpha.dim(), alpha.dim());
      for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) {
        const double lam = e.eigenvalues(i);
        const double eta = lam < mu ? 1.0 : lam;
        cut += (1.0 / eta) * e.eigenvectors.col(i) * e.eigenvectors.col(i).adjoint();
      }
      h[j] = alpha.fiber(j) * f.fiber(j) * cut;
    });
    return OperatorField::sampled(alpha.space(), std::move(h));
  };
  OperatorField prev = h_at(1e-2);
  for (double mu : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    OperatorField next = h_at(mu);
    if (sup_defect(prev, next) < 1e-9) {
      check_commutes(fields::compose(next, alpha), fields::compose(alpha, f), 1e-9,
                     "h alpha = alpha f");
      check_commutes(fields::compose(g, alpha), fields::compose(alpha, next), 1e-9,
                     "g alpha = alpha h");
      return next;
    }
    prev = next;
  }
  fail(Err::NotConverging, "eta_mu completion did not settle by mu = 1e-8");
}

TorsionForm add_forms(const TorsionForm& phi, const TorsionForm& psi) {
  if (phi.parts.size() != 1 || psi.parts.size() != 1)
    fail(Err::ValidationError, "sum of single-component forms expected");
  const OperatorField& alpha = phi.parts.front().x.alpha();
  const OperatorField& beta = psi.parts.front().f;
  check_commutes(alpha, psi.parts.front().x.alpha(), 1e-12, "forms must share the module");
  if (sup_defect(phi.parts.front().f, field_one(alpha)) > 1e-12)
    fail(Err::ValidationError, "phi must be in reduced (discriminant) shape");

  // positivity of psi in the presentation sense: beta alpha >= 0 fiberwise
  const OperatorField beta_alpha = fields::compose(beta, alpha);
  if (is_symbolic(alpha)) {
    for (double z : eval_points({&alpha, &beta})) {
      if (beta_alpha.eval_scalar(z) < -1e-9) fail(Err::NegativityDetected, "beta alpha < 0");
      if (alpha.eval_scalar(z) < 0.0) fail(Err::NegativityDetected, "phi is not positive");
    }
  } else {
    for (std::size_t j = 0; j < alpha.fiber_count(); ++j) {
      const Matrix& ba = beta_alpha.fiber(j);
      if (!linalg::is_hermitian(ba, 1e-8)) fail(Err::NegativityDetected, "beta alpha not Hermitian");
      linalg::HermitianEig e = linalg::herm_eig((ba + ba.adjoint()) / 2.0);
      if (e.eigenvalues(0) < -1e-9 * rel_scale(linalg::op_norm(ba)))
        fail(Err::NegativityDetected, "beta alpha has negative spectrum");
    }
  }

  // conjugation transfer: g = alpha^{-1/2} beta alpha^{1/2} is Hermitian
  // non-negative, so 1 + g and hence 1 + beta are isomorphisms
  OperatorField one_plus_beta = fields::add(field_one(alpha), beta);
  if (!is_symbolic(alpha)) {
    for (std::size_t j = 0; j < alpha.fiber_count(); ++j) {
      const Matrix gam = linalg::principal_sqrt(alpha.fiber(j), linalg::SqrtMethod::Eig);
      const Matrix gam_inv =
          Eigen::PartialPivLU<Matrix>(gam).solve(Matrix::Identity(gam.rows(), gam.cols()));
      const Matrix g = gam_inv * beta.fiber(j) * gam;
      if (!linalg::is_hermitian(g, 1e-7))
        fail(Err::NegativityDetected, "conjugated presentation is not Hermitian");
      linalg::HermitianEig e = linalg::herm_eig((g + g.adjoint()) / 2.0);
      if (e.eigenvalues(0) < -1e-8 * rel_scale(linalg::op_norm(g)))
        fail(Err::NegativityDetected, "conjugated presentation has negative spectrum");
    }
  }
  if (!uniformly_invertible(one_plus_beta, 1e-8))
    fail(Err::NegativityDetected, "1 + beta is not uniformly invertible");

  TorsionForm out;
  out.parts.push_back({phi.parts.front().x, one_plus_beta});
  return out;
}

HyperbolicStructure is_hyperbolic(const TorsionForm& phi) {
  HyperbolicStructure out;
  PosNegSplit split = pos_neg_split(phi);
  if (phi.symbolic()) {
    torsion::GermSignature pos = torsion::forget_signs(form_signature(split.positive));
    torsion::GermSignature neg = torsion::forget_signs(form_signature(split.negative));
    out.heuristic = false;
    out.hyperbolic = torsion::equal_signatures(pos, neg, /*forget_sign=*/true);
    if (!out.hyperbolic) {
      // first mismatching entries, for the report
      std::size_t i = 0, j = 0;
      while (i < pos.size() || j < neg.size()) {
        if (i >= pos.size()) {
          out.distinguishing.push_back(neg[j++]);
          break;
        }
        if (j >= neg.size()) {
          out.distinguishing.push_back(pos[i++]);
          break;
        }
        if (std::fabs(pos[i].location - neg[j].location) <= 1e-12 && pos[i].side == neg[j].side &&
            pos[i].order == neg[j].order) {
          ++i;
          ++j;
          continue;
        }
        out.distinguishing.push_back(pos[i]);
        out.distinguishing.push_back(neg[j]);
        break;
      }
      return out;
    }
  } else {
    if (split.positive.parts.size() != 1 || split.negative.parts.size() != 1)
      fail(Err::ValidationError, "sampled hyperbolicity expects single-part splits");
    torsion::IsoVerdict v =
        torsion::iso_modules(split.positive.parts.front().x, split.negative.parts.front().x);
    out.heuristic = true;
    out.hyperbolic = v.iso;
    if (!out.hyperbolic) return out;
  }

  // hyperbolic structure: Y = X_+ with the off-diagonal two-block
  // presentation; the diagonal inclusion t = (1,1) annihilates itself and
  // the complement (1,-1) carries a non-degenerate form
  double sup_f = 0.0;
  double floor = std::numeric_limits<double>::infinity();
  for (const TorsionForm::Part& p : split.positive.parts) {
    const OperatorField& beta = p.x.alpha();
    out.metabolizer_parts.push_back(p.x);
    out.off_diagonal_blocks.push_back(beta);
    // t* B t = 2 beta = beta . 2: the correction witness is the constant 2
    sup_f = std::max(sup_f, 2.0);
    // complement form is -2 beta, non-degenerate with the same floor as beta
    floor = std::min(floor, 2.0);
  }
  out.annihilator_witness_sup = sup_f;
  out.complement_floor = floor;
  return out;
}

SuperfiniteReport superfinite_check(const OperatorField& alpha, const OperatorField& f,
                                    double floor) {
  SuperfiniteReport report;
  if (is_symbolic(alpha)) {
    // scalars commute: g = f exactly
    report.inf_f_singular = inf_singular(f);
    report.inf_f_eigen = report.inf_f_singular;
    report.inf_g_singular = report.inf_f_singular;
    report.inf_g_eigen = report.inf_f_singular;
    report.condition_slack = 1.0;
    report.ok = report.inf_f_singular >= floor;
    return report;
  }
  if (!uniformly_invertible(f, floor)) fail(Err::ValidationError, "f must be uniformly invertible");
  const std::size_t n = alpha.fiber_count();
  std::vector<double> g_sv(n), g_ev(n), f_sv(n), f_ev(n), conds(n);
  parallel_for(n, [&](std::size_t j) {
    const Matrix& a = alpha.fiber(j);
    const Matrix a_inv =
        Eigen::PartialPivLU<Matrix>(a).solve(Matrix::Identity(a.rows(), a.cols()));
    const Matrix g = a_inv * f.fiber(j) * a;  // (7-3)
    g_sv[j] = linalg::smallest_singular_value(g);
    f_sv[j] = linalg::smallest_singular_value(f.fiber(j));
    auto min_abs_eig = [](const Matrix& m) {
      Eigen::VectorXcd spec = linalg::spectrum_estimate(m);
      double lo = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < spec.size(); ++i) lo = std::min(lo, std::abs(spec(i)));
      return lo;
    };
    g_ev[j] = min_abs_eig(g);
    f_ev[j] = min_abs_eig(f.fiber(j));
    conds[j] = linalg::op_norm(a) / std::max(linalg::smallest_singular_value(a), 1e-300);
  });
  report.inf_g_singular = *std::min_element(g_sv.begin(), g_sv.end());
  report.inf_g_eigen = *std::min_element(g_ev.begin(), g_ev.end());
  report.inf_f_singular = *std::min_element(f_sv.begin(), f_sv.end());
  report.inf_f_eigen = *std::min_element(f_ev.begin(), f_ev.end());
  report.condition_slack = *std::max_element(conds.begin(), conds.end());
  // conjugation preserves fiber spectra, and singular values degrade at
  // most by the condition of alpha
  const bool spectral_bound = report.inf_g_eigen >= (1.0 - 1e-6) * report.inf_f_singular;
  const bool singular_bound =
      report.inf_g_singular >=
      (1.0 - 1e-6) * report.inf_f_singular / rel_scale(report.condition_slack);
  report.ok = spectral_bound && singular_bound && report.inf_g_eigen > 0.0;
  return report;
}

bool spectrum_positivity(const OperatorField& alpha, const OperatorField& beta) {
  if (is_symbolic(alpha)) {
    for (double z : eval_points({&alpha, &beta})) {
      if (!(beta.eval_scalar(z) > 1e-8)) fail(Err::HypothesisViolated, "beta not positive");
      if (beta.eval_scalar(z) * alpha.eval_scalar(z) < -1e-12)
        fail(Err::HypothesisViolated, "beta alpha not non-negative");
      if (alpha.eval_scalar(z) < -1e-9) return false;
    }
    return true;
  }
  const std::size_t n = alpha.fiber_count();
  std::vector<char> verdicts(n, 1);
  parallel_for(n, [&](std::size_t j) {
    const Matrix& b = beta.fiber(j);
    if (!linalg::is_hermitian(b, 1e-10) ||
        linalg::herm_eig(b).eigenvalues(0) <= 1e-8)
      fail(Err::HypothesisViolated, "beta not Hermitian positive above the floor");
    const Matrix ba = b * alpha.fiber(j);
    if (!linalg::is_hermitian(ba, 1e-8))
      fail(Err::HypothesisViolated, "beta alpha not Hermitian");
    if (linalg::herm_eig((ba + ba.adjoint()) / 2.0).eigenvalues(0) <
        -1e-9 * rel_scale(linalg::op_norm(ba)))
      fail(Err::HypothesisViolated, "beta alpha not non-negative");
    // diagram 7-11: conjugate by beta^{1/2}; the middle map is Hermitian
    const Matrix gam = linalg::principal_sqrt(b, linalg::SqrtMethod::Eig);
    const Matrix gam_inv =
        Eigen::PartialPivLU<Matrix>(gam).solve(Matrix::Identity(gam.rows(), gam.cols()));
    const Matrix mid = gam * alpha.fiber(j) * gam_inv;
    if (!linalg::is_hermitian(mid, 1e-7)) {
      verdicts[j] = 0;
      return;
    }
    linalg::HermitianEig e = linalg::herm_eig((mid + mid.adjoint()) / 2.0);
    if (e.eigenvalues(0) < -1e-9 * rel_scale(linalg::op_norm(mid))) verdicts[j] = 0;
  });
  for (std::size_t j = 0; j < n; ++j)
    if (!verdicts[j]) return false;
  return true;
}

}  // namespace tforms::forms
