#include "tforms/field_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tforms/linalg.hpp"

namespace tforms::fields {

BaseSpace BaseSpace::circle_grid(int n) {
  if (n < 1) fail(Err::ValidationError, "grid size must be positive");
  BaseSpace s;
  s.kind = Kind::CircleGrid;
  s.grid_n = n;
  return s;
}

BaseSpace BaseSpace::symbolic_circle() {
  BaseSpace s;
  s.kind = Kind::SymbolicCircle;
  s.grid_n = 0;
  return s;
}

ScalarGermField ScalarGermField::with_germs(expr::ScalarExpr e, std::vector<GermZero> zeros) {
  ScalarGermField f;
  f.expression = std::move(e);
  f.zeros = std::move(zeros);
  std::sort(f.zeros.begin(), f.zeros.end(),
            [](const GermZero& a, const GermZero& b) { return a.at < b.at; });
  f.zeros_known = true;
  f.validate();
  return f;
}

ScalarGermField ScalarGermField::plain(expr::ScalarExpr e) {
  ScalarGermField f;
  f.expression = std::move(e);
  f.zeros_known = false;
  return f;
}

namespace {

double germ_model(const SideGerm& g, double r) {
  return static_cast<double>(g.sign) * g.coeff * std::pow(r, g.order);
}

// nearest distance from z0 to any other zero location or breakpoint
double isolation_radius(const ScalarGermField& f, std::size_t idx) {
  double best = 1.0;
  for (std::size_t j = 0; j < f.zeros.size(); ++j) {
    if (j == idx) continue;
    best = std::min(best, std::fabs(f.zeros[j].at - f.zeros[idx].at));
  }
  std::vector<double> brk;
  expr::collect_breakpoints(f.expression, brk);
  for (double b : brk) {
    const double d = std::fabs(b - f.zeros[idx].at);
    if (d > 1e-15) best = std::min(best, d);
  }
  return best;
}

void check_side(const ScalarGermField& f, double z0, const SideGerm& g, int direction,
                double max_radius) {
  if (g.order < 1) fail(Err::ValidationError, "germ order must be >= 1");
  if (g.coeff <= 0.0) fail(Err::ValidationError, "germ coefficient magnitude must be positive");
  if (g.sign != 1 && g.sign != -1) fail(Err::ValidationError, "germ sign must be +1 or -1");
  const double radii[] = {1e-3, 1e-4, 1e-5};
  for (double r : radii) {
    if (r > max_radius) continue;
    const double z = z0 + direction * r;
    if (z < 0.0 || z >= 1.0) continue;
    const double value = f.eval(z);
    const double model = germ_model(g, r);
    const double ratio = value / model;
    if (!(ratio >= 0.5 && ratio <= 2.0)) {
      std::ostringstream os;
      os << "germ mismatch at " << z0 << (direction > 0 ? " (right)" : " (left)") << ": expr/model = "
         << ratio << " at radius " << r;
      fail(Err::ValidationError, os.str());
    }
  }
}

// analytic reflection: f(z0 - h) ~ (-1)^p f(z0 + h); declared parity may only
// be violated where the expression is genuinely non-analytic at the zero
bool looks_analytic_through(const ScalarGermField& f, double z0, int order) {
  const double h = 1e-4;
  if (z0 - h < 0.0 || z0 + h >= 1.0) return false;
  const double lhs = f.eval(z0 - h);
  const double rhs = f.eval(z0 + h) * (order % 2 == 0 ? 1.0 : -1.0);
  if (lhs == 0.0 || rhs == 0.0) return false;
  return std::fabs(lhs - rhs) <= 0.05 * std::max(std::fabs(lhs), std::fabs(rhs));
}

}  // namespace

void ScalarGermField::validate() const {
  if (!zeros_known) return;
  for (std::size_t i = 0; i + 1 < zeros.size(); ++i)
    if (!(zeros[i].at < zeros[i + 1].at))
      fail(Err::ValidationError, "zero locations must be distinct and sorted");
  for (const GermZero& z : zeros) {
    if (z.at < 0.0 || z.at >= 1.0) fail(Err::ValidationError, "zero location outside [0,1)");
    if (!z.left && !z.right) fail(Err::ValidationError, "zero with no side germ");
  }
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    const GermZero& z = zeros[i];
    const double max_radius = 0.4 * isolation_radius(*this, i);
    if (z.left) check_side(*this, z.at, *z.left, -1, max_radius);
    if (z.right) check_side(*this, z.at, *z.right, +1, max_radius);
    if (z.left && z.right && z.left->order == z.right->order) {
      const bool signs_equal = z.left->sign == z.right->sign;
      const bool parity_even = z.left->order % 2 == 0;
      if (signs_equal != parity_even && looks_analytic_through(*this, z.at, z.left->order)) {
        std::ostringstream os;
        os << "parity violation at analytic zero " << z.at;
        fail(Err::ValidationError, os.str());
      }
    }
  }
  // declared zeros are exactly the zero set, checked by sampling
  const int n = 4096;
  for (int j = 0; j < n; ++j) {
    const double z = (static_cast<double>(j) + 0.5) / n;
    bool near_zero = false;
    for (const GermZero& g : zeros)
      if (std::fabs(z - g.at) <= radius) near_zero = true;
    if (near_zero) continue;
    if (std::fabs(eval(z)) <= floor) {
      std::ostringstream os;
      os << "|expr| <= floor at z = " << z << " away from declared zeros";
      fail(Err::UndeclaredZeroSuspected, os.str());
    }
  }
}

std::vector<SignRegion> sign_regions(const ScalarGermField& f) {
  std::vector<double> cuts;
  for (const GermZero& z : f.zeros) cuts.push_back(z.at);
  expr::collect_breakpoints(f.expression, cuts);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::fabs(a - b) < 1e-14; }),
             cuts.end());
  std::vector<double> bounds;
  bounds.push_back(0.0);
  for (double c : cuts)
    if (c > 1e-14 && c < 1.0 - 1e-14) bounds.push_back(c);
  bounds.push_back(1.0);

  std::vector<SignRegion> regions;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const double mid = 0.5 * (bounds[i] + bounds[i + 1]);
    const double v = f.eval(mid);
    SignRegion r;
    r.lo = bounds[i];
    r.hi = bounds[i + 1];
    r.sign = v >= 0.0 ? 1 : -1;
    if (!regions.empty() && regions.back().sign == r.sign)
      regions.back().hi = r.hi;
    else
      regions.push_back(r);
  }
  return regions;
}

OperatorField OperatorField::sampled(const BaseSpace& space, std::vector<Matrix> fibers) {
  if (space.kind != BaseSpace::Kind::CircleGrid)
    fail(Err::ValidationError, "sampled fields require a circle grid");
  if (static_cast<int>(fibers.size()) != space.grid_n)
    fail(Err::ValidationError, "fiber count must match the grid");
  if (fibers.empty()) fail(Err::ValidationError, "empty fiber list");
  const Eigen::Index d = fibers.front().rows();
  for (const Matrix& m : fibers) {
    if (m.rows() != d || m.cols() != d) fail(Err::DimMismatch, "fibers must share a square dim");
    if (!m.allFinite()) fail(Err::ValidationError, "non-finite fiber entry");
  }
  OperatorField f;
  f.repr_ = Repr::Sampled;
  f.space_ = space;
  f.dim_ = static_cast<int>(d);
  f.fibers_ = std::make_shared<const std::vector<Matrix>>(std::move(fibers));
  return f;
}

OperatorField OperatorField::symbolic(ScalarGermField field) {
  field.validate();
  OperatorField f;
  f.repr_ = Repr::Symbolic;
  f.space_ = BaseSpace::symbolic_circle();
  f.dim_ = 1;
  f.symbolic_ = std::make_shared<const ScalarGermField>(std::move(field));
  return f;
}

OperatorField OperatorField::constant(const BaseSpace& space, const Matrix& fiber) {
  if (space.kind == BaseSpace::Kind::SymbolicCircle) {
    if (fiber.rows() != 1 || fiber.cols() != 1 || fiber(0, 0).imag() != 0.0)
      fail(Err::ValidationError, "symbolic constants must be real scalars");
    return symbolic(ScalarGermField::plain(expr::constant(fiber(0, 0).real())));
  }
  return sampled(space, std::vector<Matrix>(static_cast<std::size_t>(space.grid_n), fiber));
}

OperatorField OperatorField::identity(const BaseSpace& space, int dim) {
  if (space.kind == BaseSpace::Kind::SymbolicCircle) {
    if (dim != 1) fail(Err::ValidationError, "symbolic fields are scalar");
    return symbolic(ScalarGermField::plain(expr::constant(1.0)));
  }
  return constant(space, Matrix::Identity(dim, dim));
}

std::size_t OperatorField::fiber_count() const {
  if (repr_ == Repr::Sampled) return fibers_->size();
  return 0;
}

const Matrix& OperatorField::fiber(std::size_t j) const {
  if (repr_ != Repr::Sampled) fail(Err::ValidationError, "symbolic field has no stored fibers");
  return (*fibers_)[j];
}

const std::vector<Matrix>& OperatorField::fibers() const {
  if (repr_ != Repr::Sampled) fail(Err::ValidationError, "symbolic field has no stored fibers");
  return *fibers_;
}

const ScalarGermField& OperatorField::symbolic_field() const {
  if (repr_ != Repr::Symbolic) fail(Err::ValidationError, "not a symbolic field");
  return *symbolic_;
}

bool OperatorField::is_hermitian() const {
  if (repr_ == Repr::Symbolic) return true;  // real-valued scalar
  for (const Matrix& m : *fibers_)
    if (!linalg::is_hermitian(m)) return false;
  return true;
}

double OperatorField::eval_scalar(double z) const {
  return symbolic_field().eval(z);
}

namespace {

void require_same_space(const OperatorField& a, const OperatorField& b) {
  if (!(a.space() == b.space())) fail(Err::SpaceMismatch, "fields live on different base spaces");
  if (a.dim() != b.dim()) fail(Err::DimMismatch, "fiber dimensions differ");
}

// evaluate a field's value just to one side of a location
double side_value(const ScalarGermField& f, double z0, int direction) {
  return f.eval(z0 + direction * 1e-9);
}

}  // namespace

OperatorField add(const OperatorField& a, const OperatorField& b) {
  require_same_space(a, b);
  if (a.repr() == OperatorField::Repr::Symbolic) {
    // the zero set of a sum is not derivable from the operands' germ data
    return OperatorField::symbolic(ScalarGermField::plain(
        a.symbolic_field().expression + b.symbolic_field().expression));
  }
  return zip_fibers(a, b, [](const Matrix& x, const Matrix& y) { return Matrix(x + y); });
}

OperatorField scale(Complex c, const OperatorField& a) {
  if (a.repr() == OperatorField::Repr::Symbolic) {
    if (c.imag() != 0.0) fail(Err::ValidationError, "symbolic fields are real-valued");
    const double cr = c.real();
    expr::ScalarExpr scaled = expr::constant(cr) * a.symbolic_field().expression;
    if (cr == 0.0 || !a.symbolic_field().zeros_known)
      return OperatorField::symbolic(ScalarGermField::plain(scaled));
    std::vector<GermZero> zeros = a.symbolic_field().zeros;
    for (GermZero& z : zeros) {
      for (auto* side : {&z.left, &z.right}) {
        if (!side->has_value()) continue;
        (*side)->coeff *= std::fabs(cr);
        (*side)->sign *= cr > 0.0 ? 1 : -1;
      }
    }
    return OperatorField::symbolic(ScalarGermField::with_germs(std::move(scaled), std::move(zeros)));
  }
  return map_fibers(a, [c](const Matrix& m) { return Matrix(c * m); });
}

OperatorField compose(const OperatorField& s, const OperatorField& t) {
  require_same_space(s, t);
  if (s.repr() == OperatorField::Repr::Symbolic) {
    const ScalarGermField& fs = s.symbolic_field();
    const ScalarGermField& ft = t.symbolic_field();
    expr::ScalarExpr product = fs.expression * ft.expression;
    if (!fs.zeros_known || !ft.zeros_known)
      return OperatorField::symbolic(ScalarGermField::plain(std::move(product)));

    // merge germ data: orders add at common zeros, otherwise the smooth
    // factor scales the leading coefficient
    std::vector<GermZero> merged;
    std::size_t i = 0, j = 0;
    auto scale_by_other = [](const GermZero& z, const ScalarGermField& other) {
      GermZero out = z;
      for (auto* side : {&out.left, &out.right}) {
        if (!side->has_value()) continue;
        const int dir = (side == &out.left) ? -1 : +1;
        const double v = side_value(other, out.at, dir);
        (*side)->coeff *= std::fabs(v);
        (*side)->sign *= v >= 0.0 ? 1 : -1;
      }
      return out;
    };
    while (i < fs.zeros.size() || j < ft.zeros.size()) {
      if (j >= ft.zeros.size() ||
          (i < fs.zeros.size() && fs.zeros[i].at < ft.zeros[j].at - 1e-14)) {
        merged.push_back(scale_by_other(fs.zeros[i++], ft));
      } else if (i >= fs.zeros.size() || ft.zeros[j].at < fs.zeros[i].at - 1e-14) {
        merged.push_back(scale_by_other(ft.zeros[j++], fs));
      } else {
        const GermZero& a = fs.zeros[i++];
        const GermZero& b = ft.zeros[j++];
        GermZero out;
        out.at = a.at;
        for (int dir : {-1, +1}) {
          const auto& ga = dir < 0 ? a.left : a.right;
          const auto& gb = dir < 0 ? b.left : b.right;
          std::optional<SideGerm> combined;
          if (ga && gb) {
            SideGerm g;
            g.order = ga->order + gb->order;
            g.sign = ga->sign * gb->sign;
            g.coeff = ga->coeff * gb->coeff;
            combined = g;
          } else if (ga) {
            SideGerm g = *ga;
            const double v = side_value(ft, out.at, dir);
            g.coeff *= std::fabs(v);
            g.sign *= v >= 0.0 ? 1 : -1;
            combined = g;
          } else if (gb) {
            SideGerm g = *gb;
            const double v = side_value(fs, out.at, dir);
            g.coeff *= std::fabs(v);
            g.sign *= v >= 0.0 ? 1 : -1;
            combined = g;
          }
          (dir < 0 ? out.left : out.right) = combined;
        }
        merged.push_back(out);
      }
    }
    return OperatorField::symbolic(ScalarGermField::with_germs(std::move(product), std::move(merged)));
  }
  return zip_fibers(s, t, [](const Matrix& x, const Matrix& y) { return Matrix(x * y); });
}

OperatorField adjoint(const OperatorField& a) {
  if (a.repr() == OperatorField::Repr::Symbolic) return a;  // real scalar
  return map_fibers(a, [](const Matrix& m) { return Matrix(m.adjoint()); });
}

FieldNormReport ess_bounds(const OperatorField& t, int symbolic_grid) {
  FieldNormReport report;
  const OperatorField sampled =
      t.repr() == OperatorField::Repr::Symbolic ? sample_symbolic(t, symbolic_grid) : t;
  double sup = 0.0;
  double inf = std::numeric_limits<double>::infinity();
  std::size_t degenerate = 0;
  std::vector<double> mins(sampled.fiber_count());
  std::vector<double> maxs(sampled.fiber_count());
  parallel_for(sampled.fiber_count(), [&](std::size_t j) {
    const Matrix& m = sampled.fiber(j);
    maxs[j] = linalg::op_norm(m);
    mins[j] = linalg::smallest_singular_value(m);
  });
  for (std::size_t j = 0; j < sampled.fiber_count(); ++j) {
    sup = std::max(sup, maxs[j]);
    inf = std::min(inf, mins[j]);
  }
  const double floor = 1e-12 * rel_scale(sup);
  for (std::size_t j = 0; j < sampled.fiber_count(); ++j)
    if (mins[j] <= floor) ++degenerate;
  report.ess_sup = sup;
  report.inf_spectrum = inf;
  report.zero_measure_estimate = static_cast<double>(degenerate) * sampled.space().weight();
  return report;
}

InjectivityVerdict is_injective_dense(const OperatorField& alpha, int symbolic_grid) {
  InjectivityVerdict v;
  if (alpha.repr() == OperatorField::Repr::Symbolic && alpha.symbolic_field().zeros_known) {
    // a validated germ field vanishes exactly on its finite declared zero
    // set, which has measure zero
    v.ok = true;
    return v;
  }
  const OperatorField sampled =
      alpha.repr() == OperatorField::Repr::Symbolic ? sample_symbolic(alpha, symbolic_grid) : alpha;
  for (std::size_t j = 0; j < sampled.fiber_count(); ++j) {
    if (linalg::smallest_singular_value(sampled.fiber(j)) <= 1e-13) {
      v.ok = false;
      std::ostringstream os;
      os << "singular fiber at grid index " << j << " (z = " << sampled.space().point(static_cast<int>(j))
         << ")";
      v.witness = os.str();
      return v;
    }
  }
  v.ok = true;
  return v;
}

OperatorField sample_symbolic(const ScalarGermField& f, int n) {
  if (n < 16) fail(Err::ValidationError, "sampling grid must have at least 16 points");
  const BaseSpace space = BaseSpace::circle_grid(n);
  for (const GermZero& z : f.zeros) {
    for (int j = 0; j < n; ++j) {
      if (std::fabs(space.point(j) - z.at) < 1e-14)
        fail(Err::GridHitsZero, "grid point collides with a declared zero");
    }
  }
  std::vector<Matrix> fibers(static_cast<std::size_t>(n));
  parallel_for(fibers.size(), [&](std::size_t j) {
    Matrix m(1, 1);
    m(0, 0) = f.eval(space.point(static_cast<int>(j)));
    fibers[j] = m;
  });
  return OperatorField::sampled(space, std::move(fibers));
}

OperatorField sample_symbolic(const OperatorField& f, int n) {
  return sample_symbolic(f.symbolic_field(), n);
}

OperatorField map_fibers(const OperatorField& a, const std::function<Matrix(const Matrix&)>& fn) {
  if (a.repr() != OperatorField::Repr::Sampled)
    fail(Err::ValidationError, "map_fibers needs a sampled field");
  std::vector<Matrix> out(a.fiber_count());
  parallel_for(out.size(), [&](std::size_t j) { out[j] = fn(a.fiber(j)); });
  return OperatorField::sampled(a.space(), std::move(out));
}

OperatorField zip_fibers(const OperatorField& a, const OperatorField& b,
                         const std::function<Matrix(const Matrix&, const Matrix&)>& fn) {
  require_same_space(a, b);
  if (a.repr() != OperatorField::Repr::Sampled)
    fail(Err::ValidationError, "zip_fibers needs sampled fields");
  std::vector<Matrix> out(a.fiber_count());
  parallel_for(out.size(), [&](std::size_t j) { out[j] = fn(a.fiber(j), b.fiber(j)); });
  return OperatorField::sampled(a.space(), std::move(out));
}

}  // namespace tforms::fields
