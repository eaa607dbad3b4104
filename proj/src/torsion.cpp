#include "tforms/torsion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tforms/linalg.hpp"

namespace tforms::torsion {

namespace {

using fields::BaseSpace;
using fields::ScalarGermField;

// one-sided probes near every declared zero; grids alone miss sup growth
void add_probes(const ScalarGermField& f, std::vector<double>& out) {
  for (const auto& z : f.zeros) {
    for (int k = 4; k <= 9; ++k) {
      const double r = std::pow(10.0, -k);
      if (z.at - r > 0.0) out.push_back(z.at - r);
      if (z.at + r < 1.0) out.push_back(z.at + r);
    }
  }
}

std::vector<double> evaluation_points(const std::vector<const OperatorField*>& symbolic_fields,
                                      int grid) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(grid) + 64);
  const BaseSpace space = BaseSpace::circle_grid(grid);
  for (int j = 0; j < grid; ++j) pts.push_back(space.point(j));
  for (const OperatorField* f : symbolic_fields)
    if (f->repr() == OperatorField::Repr::Symbolic) add_probes(f->symbolic_field(), pts);
  return pts;
}

bool same_symbolic_expression(const OperatorField& a, const OperatorField& b) {
  if (a.repr() != OperatorField::Repr::Symbolic || b.repr() != OperatorField::Repr::Symbolic)
    return false;
  return a.symbolic_field().expression.to_string() == b.symbolic_field().expression.to_string();
}

}  // namespace

TorsionObject TorsionObject::from_field(OperatorField alpha) {
  if (!alpha.is_hermitian()) fail(Err::NotHermitian, "torsion presentation must be Hermitian");
  fields::InjectivityVerdict verdict = fields::is_injective_dense(alpha);
  if (!verdict.ok)
    fail(Err::NotInjectiveDense, "field does not present a torsion object: " + verdict.witness);
  TorsionObject x;
  x.alpha_ = std::move(alpha);
  return x;
}

bool equal_signatures(const GermSignature& a, const GermSignature& b, bool forget_sign) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(a[i].location - b[i].location) > 1e-12) return false;
    if (a[i].side != b[i].side) return false;
    if (a[i].order != b[i].order) return false;
    if (!forget_sign && a[i].sign != b[i].sign) return false;
  }
  return true;
}

GermSignature forget_signs(GermSignature sig) {
  for (GermEntry& e : sig) e.sign = 1;
  return sig;
}

TorsionMorphism make_morphism(TorsionObject source, TorsionObject target, OperatorField rep) {
  TorsionMorphism m;
  if (!(source.alpha().space() == rep.space()) || !(target.alpha().space() == rep.space()))
    fail(Err::SpaceMismatch, "morphism representative must share the objects' base space");
  if (rep.repr() == OperatorField::Repr::Symbolic) {
    if (same_symbolic_expression(source.alpha(), target.alpha())) {
      m.witness = rep;  // scalars commute and beta = alpha
    } else {
      // g = f alpha / beta, uniquely determined by injectivity of beta
      expr::ScalarExpr g = rep.symbolic_field().expression *
                           source.alpha().symbolic_field().expression /
                           target.alpha().symbolic_field().expression;
      m.witness = OperatorField::symbolic(ScalarGermField::plain(std::move(g)));
    }
  } else {
    if (source.alpha().dim() != rep.dim() || target.alpha().dim() != rep.dim())
      fail(Err::DimMismatch, "morphism fiber dimensions differ");
    m.witness = fields::zip_fibers(
        fields::compose(rep, source.alpha()), target.alpha(),
        [](const Matrix& fa, const Matrix& beta) -> Matrix {
          return Eigen::PartialPivLU<Matrix>(beta).solve(fa);
        });
    // verify the recomputed witness closes the diagram
    const OperatorField lhs = fields::compose(rep, source.alpha());
    const OperatorField rhs = fields::compose(target.alpha(), m.witness);
    double defect = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < lhs.fiber_count(); ++j) {
      defect = std::max(defect, (lhs.fiber(j) - rhs.fiber(j)).norm());
      scale = std::max(scale, lhs.fiber(j).norm() + rhs.fiber(j).norm());
    }
    if (!(defect <= 1e-10 * rel_scale(scale)))
      fail(Err::ValidationError, "morphism diagram does not commute");
  }
  m.source = std::move(source);
  m.target = std::move(target);
  m.rep = std::move(rep);
  return m;
}

TorsionMorphism identity_morphism(const TorsionObject& x) {
  OperatorField one = x.symbolic()
                          ? OperatorField::identity(BaseSpace::symbolic_circle(), 1)
                          : OperatorField::identity(x.alpha().space(), x.alpha().dim());
  return make_morphism(x, x, one);
}

TorsionObject dual_object(const TorsionObject& x) {
  return TorsionObject::from_field(fields::adjoint(x.alpha()));
}

TorsionMorphism dual_morphism(const TorsionMorphism& m) {
  // e([f]) = [D(h)] with representative the adjoint of the witness
  return make_morphism(dual_object(m.target), dual_object(m.source), fields::adjoint(m.witness));
}

EqualityVerdict morphisms_equal(const TorsionMorphism& m, const TorsionMorphism& m_prime,
                                double bound, int symbolic_grid) {
  if (!(m.source.alpha().space() == m_prime.source.alpha().space()) ||
      !(m.target.alpha().space() == m_prime.target.alpha().space()))
    fail(Err::SpaceMismatch, "morphisms must share source and target");

  EqualityVerdict out;
  double sup = 0.0;
  const double invertibility_cut = 1e-8;
  bool singular_consistent = true;

  if (m.rep.repr() == OperatorField::Repr::Symbolic) {
    const ScalarGermField& beta = m.target.alpha().symbolic_field();
    const ScalarGermField& f = m.rep.symbolic_field();
    const ScalarGermField& fp = m_prime.rep.symbolic_field();
    std::vector<double> pts =
        evaluation_points({&m.target.alpha(), &m.rep, &m_prime.rep}, symbolic_grid);
    for (double z : pts) {
      const double b = beta.eval(z);
      const double diff = f.eval(z) - fp.eval(z);
      if (std::fabs(b) >= invertibility_cut * 1e-6) {
        sup = std::max(sup, std::fabs(diff / b));
      } else if (std::fabs(diff) > 1e-9) {
        singular_consistent = false;
      }
    }
  } else {
    const std::size_t n = m.rep.fiber_count();
    std::vector<double> norms(n, 0.0);
    std::vector<char> flags(n, 1);
    parallel_for(n, [&](std::size_t j) {
      const Matrix beta = m.target.alpha().fiber(j);
      const Matrix diff = m.rep.fiber(j) - m_prime.rep.fiber(j);
      if (linalg::smallest_singular_value(beta) >= invertibility_cut) {
        const Matrix f_witness = Eigen::PartialPivLU<Matrix>(beta).solve(diff);
        norms[j] = linalg::op_norm(f_witness);
      } else {
        flags[j] = diff.norm() <= 1e-9 * rel_scale(beta.norm()) ? 1 : 0;
        norms[j] = 0.0;
      }
    });
    for (std::size_t j = 0; j < n; ++j) {
      sup = std::max(sup, norms[j]);
      if (!flags[j]) singular_consistent = false;
    }
  }

  out.sup_norm = sup;
  if (!singular_consistent) {
    out.verdict = Ternary::False;
  } else if (sup <= bound / 10.0) {
    out.verdict = Ternary::True;
  } else if (sup >= 10.0 * bound) {
    out.verdict = Ternary::False;
  } else {
    out.verdict = Ternary::Inconclusive;
  }
  return out;
}

bool is_isomorphism(const TorsionMorphism& m, double floor, double bound, int symbolic_grid) {
  auto check_field = [&](const OperatorField& f) {
    if (f.repr() == OperatorField::Repr::Symbolic) {
      std::vector<double> pts =
          evaluation_points({&f, &m.source.alpha(), &m.target.alpha()}, symbolic_grid);
      for (double z : pts) {
        const double v = std::fabs(f.eval_scalar(z));
        if (v < floor || v > bound) return false;
      }
      return true;
    }
    for (std::size_t j = 0; j < f.fiber_count(); ++j) {
      if (linalg::smallest_singular_value(f.fiber(j)) < floor) return false;
      if (linalg::op_norm(f.fiber(j)) > bound) return false;
    }
    return true;
  };
  return check_field(m.rep) && check_field(m.witness);
}

GermSignature germ_signature(const TorsionObject& x) {
  if (!x.symbolic() || !x.alpha().symbolic_field().zeros_known)
    fail(Err::ValidationError, "germ signature requires a symbolic field with declared zeros");
  const ScalarGermField& f = x.alpha().symbolic_field();
  f.validate();  // re-check: floor violations surface as UndeclaredZeroSuspected
  GermSignature sig;
  for (const auto& z : f.zeros) {
    if (z.left) {
      GermEntry e;
      e.location = z.at;
      e.side = Side::Left;
      e.order = z.left->order;
      e.sign = z.left->sign;
      sig.push_back(e);
    }
    if (z.right) {
      GermEntry e;
      e.location = z.at;
      e.side = Side::Right;
      e.order = z.right->order;
      e.sign = z.right->sign;
      sig.push_back(e);
    }
  }
  std::sort(sig.begin(), sig.end(), [](const GermEntry& a, const GermEntry& b) {
    if (a.location != b.location) return a.location < b.location;
    return a.side < b.side;
  });
  return sig;
}

DensityCurve density_curve(const TorsionObject& x, double lambda_min, double lambda_max,
                           int points, int symbolic_grid) {
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min) || points < 2)
    fail(Err::ValidationError, "density window must satisfy 0 < lambda_min < lambda_max");
  const OperatorField field = x.symbolic() ? fields::sample_symbolic(x.alpha(), symbolic_grid)
                                           : x.alpha();
  const std::size_t n = field.fiber_count();
  std::vector<std::vector<double>> moduli(n);
  parallel_for(n, [&](std::size_t j) {
    const Matrix& fiber = field.fiber(j);
    if (fiber.rows() == 1) {
      moduli[j] = {std::abs(fiber(0, 0))};
    } else {
      linalg::HermitianEig eig = linalg::herm_eig(fiber);
      moduli[j].resize(static_cast<std::size_t>(eig.eigenvalues.size()));
      for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
        moduli[j][static_cast<std::size_t>(i)] = std::fabs(eig.eigenvalues(i));
    }
  });
  std::vector<double> pooled;
  pooled.reserve(n * static_cast<std::size_t>(field.dim()));
  for (std::size_t j = 0; j < n; ++j)
    pooled.insert(pooled.end(), moduli[j].begin(), moduli[j].end());
  std::sort(pooled.begin(), pooled.end());

  DensityCurve curve;
  curve.lambda.resize(static_cast<std::size_t>(points));
  curve.value.resize(static_cast<std::size_t>(points));
  const double log_lo = std::log(lambda_min);
  const double log_hi = std::log(lambda_max);
  for (int i = 0; i < points; ++i)
    curve.lambda[static_cast<std::size_t>(i)] =
        std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / (points - 1));

  const double w = field.space().weight();
  bool any = false;
  for (int i = 0; i < points; ++i) {
    const double lam = curve.lambda[static_cast<std::size_t>(i)];
    const auto upper = std::upper_bound(pooled.begin(), pooled.end(), lam);
    const double acc = w * static_cast<double>(upper - pooled.begin());
    curve.value[static_cast<std::size_t>(i)] = acc;
    if (acc > 0.0) any = true;
  }
  if (!any) fail(Err::EmptyWindow, "spectral density vanishes on the whole window");
  return curve;
}

double ns_exponent(const DensityCurve& curve) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < curve.lambda.size(); ++i) {
    if (curve.value[i] > 0.0) {
      lx.push_back(std::log10(curve.lambda[i]));
      ly.push_back(std::log10(curve.value[i]));
    }
  }
  if (lx.size() < 2) fail(Err::EmptyWindow, "not enough positive density points");
  const double lo = lx.front();
  const double hi = lx.back();
  const double mid = 0.5 * (lo + hi);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < lx.size(); ++i)
    if (lx[i] >= mid - 0.5 && lx[i] <= mid + 0.5) chosen.push_back(i);
  if (chosen.size() < 8) {
    chosen.clear();
    for (std::size_t i = 0; i < lx.size(); ++i) chosen.push_back(i);
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i : chosen) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double n = static_cast<double>(chosen.size());
  const double denom = n * sxx - sx * sx;
  if (std::fabs(denom) < 1e-30) fail(Err::EmptyWindow, "degenerate fit window");
  return (n * sxy - sx * sy) / denom;
}

namespace {

// right-continuous step evaluation of a curve at x
double curve_at(const DensityCurve& c, double x) {
  if (x < c.lambda.front()) return 0.0;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < c.lambda.size(); ++i)
    if (c.lambda[i] <= x) lo = i;
  return c.value[lo];
}

}  // namespace

IsoVerdict iso_modules(const TorsionObject& x, const TorsionObject& y, int symbolic_grid) {
  IsoVerdict v;
  const bool exact = x.symbolic() && y.symbolic() && x.alpha().symbolic_field().zeros_known &&
                     y.alpha().symbolic_field().zeros_known;
  if (exact) {
    // module isomorphism permits sign flips (bounded invertible f, g absorb
    // them) but pins locations, sides, and orders
    v.heuristic = false;
    v.iso = equal_signatures(germ_signature(x), germ_signature(y), /*forget_sign=*/true);
    v.dilatation = 1.0;
    return v;
  }
  v.heuristic = true;
  const double lo = 1e-6, hi = 1e-1;
  const int points = 200;
  DensityCurve fx, fy;
  try {
    fx = density_curve(x, lo, hi, points, symbolic_grid);
  } catch (const Error&) {
    fx.lambda = {lo, hi};
    fx.value = {0.0, 0.0};
  }
  try {
    fy = density_curve(y, lo, hi, points, symbolic_grid);
  } catch (const Error&) {
    fy.lambda = {lo, hi};
    fy.value = {0.0, 0.0};
  }
  for (double c = 1.0; c <= 64.0 + 1e-9; c *= std::sqrt(2.0)) {
    bool ok = true;
    for (std::size_t i = 0; i < fy.lambda.size() && ok; ++i) {
      const double lam = fy.lambda[i];
      if (!(curve_at(fx, lam / c) <= fy.value[i] + 1e-12) ||
          !(fy.value[i] <= curve_at(fx, lam * c) + 1e-12))
        ok = false;
    }
    if (ok) {
      v.iso = true;
      v.dilatation = c;
      std::ostringstream os;
      os << "density curves dilatationally equivalent at c = " << c;
      v.detail = os.str();
      return v;
    }
  }
  v.iso = false;
  v.dilatation = 64.0;
  v.detail = "no dilatation constant in [1, 64] matches the density curves";
  return v;
}

}  // namespace tforms::torsion
