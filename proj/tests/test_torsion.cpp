#include <doctest.h>

#include "oracles.hpp"
#include "tforms/props.hpp"
#include "tforms/torsion.hpp"

using namespace tforms;
using fields::BaseSpace;
using fields::GermZero;
using fields::OperatorField;
using fields::ScalarGermField;
using fields::SideGerm;
using torsion::Side;
using torsion::Ternary;
using torsion::TorsionObject;

namespace {

ScalarGermField linear_at(double a) {
  std::vector<GermZero> zeros(1);
  zeros[0].at = a;
  zeros[0].left = SideGerm{1, -1, 1.0};
  zeros[0].right = SideGerm{1, 1, 1.0};
  return ScalarGermField::with_germs(expr::coordinate() - expr::constant(a), std::move(zeros));
}

ScalarGermField abs_at(double a, double scale = 1.0) {
  std::vector<GermZero> zeros(1);
  zeros[0].at = a;
  zeros[0].left = SideGerm{1, 1, scale};
  zeros[0].right = SideGerm{1, 1, scale};
  return ScalarGermField::with_germs(
      expr::constant(scale) * expr::abs(expr::coordinate() - expr::constant(a)),
      std::move(zeros));
}

ScalarGermField square_at(double a) {
  std::vector<GermZero> zeros(1);
  zeros[0].at = a;
  zeros[0].left = SideGerm{2, 1, 1.0};
  zeros[0].right = SideGerm{2, 1, 1.0};
  return ScalarGermField::with_germs(
      expr::pow_int(expr::coordinate() - expr::constant(a), 2), std::move(zeros));
}

TorsionObject object_of(const ScalarGermField& f) {
  return TorsionObject::from_field(OperatorField::symbolic(f));
}

}  // namespace

TEST_CASE("torsion object construction guards") {
  CHECK_NOTHROW(object_of(linear_at(0.5)));
  OperatorField zero = OperatorField::symbolic(ScalarGermField::plain(expr::constant(0.0)));
  CHECK_THROWS_AS(TorsionObject::from_field(zero), Error);
}

TEST_CASE("duality: double dual is the identity, dual of real symmetric is bitwise equal") {
  Rng rng(23);
  const BaseSpace grid = BaseSpace::circle_grid(128);
  std::vector<Matrix> fibers(128);
  for (int j = 0; j < 128; ++j) {
    Matrix m = props::random_hermitian_mixed(rng, 2, 0.1, 2.0);
    fibers[static_cast<std::size_t>(j)] = (m + m.adjoint()) / 2.0;
  }
  TorsionObject x = TorsionObject::from_field(OperatorField::sampled(grid, fibers));
  TorsionObject dd = torsion::dual_object(torsion::dual_object(x));
  for (std::size_t j = 0; j < 128; ++j)
    CHECK((dd.alpha().fiber(j) - x.alpha().fiber(j)).cwiseAbs().maxCoeff() <= 1e-14);

  // real symmetric fibers: the dual equals the original exactly
  std::vector<Matrix> real_fibers(128);
  for (int j = 0; j < 128; ++j) {
    Matrix m(2, 2);
    const double z = grid.point(j);
    m << z - 0.5 + 2.0, 0.25, 0.25, 1.0;
    real_fibers[static_cast<std::size_t>(j)] = m;
  }
  TorsionObject y = TorsionObject::from_field(OperatorField::sampled(grid, real_fibers));
  TorsionObject dy = torsion::dual_object(y);
  for (std::size_t j = 0; j < 128; ++j)
    CHECK(dy.alpha().fiber(j) == y.alpha().fiber(j));
}

TEST_CASE("dual morphism: identity, scalar conjugation, contravariance") {
  TorsionObject x = object_of(linear_at(0.5));
  torsion::TorsionMorphism id = torsion::identity_morphism(x);
  torsion::TorsionMorphism did = torsion::dual_morphism(id);
  CHECK(torsion::morphisms_equal(did, torsion::identity_morphism(torsion::dual_object(x))).verdict ==
        Ternary::True);

  // sampled scalar: the dual representative is the conjugate
  const BaseSpace grid = BaseSpace::circle_grid(64);
  std::vector<Matrix> alpha_f(64), c_f(64);
  const Complex c(0.6, 0.8);
  for (int j = 0; j < 64; ++j) {
    Matrix a(1, 1), m(1, 1);
    a(0, 0) = grid.point(j) + 0.5;
    m(0, 0) = c;
    alpha_f[static_cast<std::size_t>(j)] = a;
    c_f[static_cast<std::size_t>(j)] = m;
  }
  TorsionObject xs = TorsionObject::from_field(OperatorField::sampled(grid, alpha_f));
  torsion::TorsionMorphism scalar =
      torsion::make_morphism(xs, xs, OperatorField::sampled(grid, c_f));
  torsion::TorsionMorphism dual = torsion::dual_morphism(scalar);
  CHECK(std::abs(dual.rep.fiber(0)(0, 0) - std::conj(c)) < 1e-14);

  // contravariance on composable pairs: e(m2 m1) = e(m1) e(m2)
  torsion::TorsionMorphism m1 = torsion::make_morphism(
      xs, xs, OperatorField::constant(grid, Matrix::Constant(1, 1, Complex(1.0, 0.5))));
  torsion::TorsionMorphism m2 = torsion::make_morphism(
      xs, xs, OperatorField::constant(grid, Matrix::Constant(1, 1, Complex(2.0, -0.25))));
  torsion::TorsionMorphism comp =
      torsion::make_morphism(xs, xs, fields::compose(m2.rep, m1.rep));
  torsion::TorsionMorphism lhs = torsion::dual_morphism(comp);
  torsion::TorsionMorphism rhs = torsion::make_morphism(
      torsion::dual_object(xs), torsion::dual_object(xs),
      fields::compose(torsion::dual_morphism(m1).rep, torsion::dual_morphism(m2).rep));
  CHECK(torsion::morphisms_equal(lhs, rhs).verdict == Ternary::True);
}

TEST_CASE("morphism equality: witness growth separates classes") {
  TorsionObject x_lin = object_of(linear_at(0.5));
  torsion::TorsionMorphism m =
      torsion::make_morphism(x_lin, x_lin,
                             OperatorField::symbolic(ScalarGermField::plain(expr::constant(1.0))));
  torsion::EqualityVerdict self = torsion::morphisms_equal(m, m);
  CHECK(self.verdict == Ternary::True);
  CHECK(self.sup_norm == 0.0);

  // f' = f + (z - 1/2): equal with F = 1
  torsion::TorsionMorphism shifted = torsion::make_morphism(
      x_lin, x_lin,
      OperatorField::symbolic(ScalarGermField::plain(expr::parse("1 + (z - 0.5)"))));
  torsion::EqualityVerdict eq = torsion::morphisms_equal(m, shifted);
  CHECK(eq.verdict == Ternary::True);
  CHECK(eq.sup_norm == doctest::Approx(1.0));

  // beta = (z-1/2)^2 makes the same shift non-equal: F = (z-1/2)^{-1}
  TorsionObject x_sq = object_of(square_at(0.5));
  torsion::TorsionMorphism base = torsion::make_morphism(
      x_sq, x_sq, OperatorField::symbolic(ScalarGermField::plain(expr::constant(1.0))));
  torsion::TorsionMorphism bad = torsion::make_morphism(
      x_sq, x_sq,
      OperatorField::symbolic(ScalarGermField::plain(expr::parse("1 + (z - 0.5)"))));
  CHECK(torsion::morphisms_equal(base, bad).verdict == Ternary::False);
}

TEST_CASE("isomorphism criterion") {
  TorsionObject x = object_of(linear_at(0.5));
  CHECK(torsion::is_isomorphism(torsion::identity_morphism(x)));

  torsion::TorsionMorphism good = torsion::make_morphism(
      x, x, OperatorField::symbolic(ScalarGermField::plain(expr::parse("1 + z"))));
  CHECK(torsion::is_isomorphism(good));

  // a representative vanishing on the circle fails the uniform bound
  torsion::TorsionMorphism bad =
      torsion::make_morphism(x, x, OperatorField::symbolic(linear_at(0.75)));
  CHECK_FALSE(torsion::is_isomorphism(bad));
}

TEST_CASE("germ signatures") {
  torsion::GermSignature lin = torsion::germ_signature(object_of(linear_at(0.5)));
  REQUIRE(lin.size() == 2);
  CHECK(lin[0].side == Side::Left);
  CHECK(lin[0].sign == -1);
  CHECK(lin[0].order == 1);
  CHECK(lin[1].side == Side::Right);
  CHECK(lin[1].sign == 1);

  torsion::GermSignature sq = torsion::germ_signature(object_of(square_at(0.5)));
  REQUIRE(sq.size() == 2);
  CHECK(sq[0].sign == 1);
  CHECK(sq[1].sign == 1);
  CHECK(sq[0].order == 2);

  // (z - 1/4)(z - 1/2)^2: four one-sided germs, signs read off evaluation
  ScalarGermField prod =
      fields::compose(OperatorField::symbolic(linear_at(0.25)),
                      OperatorField::symbolic(square_at(0.5)))
          .symbolic_field();
  torsion::GermSignature sig = torsion::germ_signature(object_of(prod));
  REQUIRE(sig.size() == 4);
  CHECK(sig[0].location == doctest::Approx(0.25));
  CHECK(sig[0].order == 1);
  CHECK(sig[0].sign == -1);  // left of 1/4: negative times positive square
  CHECK(sig[1].sign == 1);
  CHECK(sig[2].location == doctest::Approx(0.5));
  CHECK(sig[2].order == 2);
  CHECK(sig[2].sign == 1);  // (1/2 - 1/4) > 0
  CHECK(sig[3].sign == 1);

  // germ-evaluation oracle: the declared signs match the field at 1e-3
  for (const torsion::GermEntry& e : sig) {
    const double z =
        e.location + (e.side == Side::Right ? 1e-3 : -1e-3);
    CHECK((prod.eval(z) > 0.0 ? 1 : -1) == e.sign);
  }
}

TEST_CASE("module isomorphism: exact symbolic rules") {
  TorsionObject x = object_of(abs_at(0.5));
  torsion::IsoVerdict self = torsion::iso_modules(x, x);
  CHECK(self.iso);
  CHECK_FALSE(self.heuristic);

  // |z-1/2| vs 2|z-1/2|: same signature, ratio bounded
  CHECK(torsion::iso_modules(x, object_of(abs_at(0.5, 2.0))).iso);

  // |z-1/2| vs (z-1/2)^2: order mismatch
  CHECK_FALSE(torsion::iso_modules(x, object_of(square_at(0.5))).iso);

  // sign flips are forgotten at the module level
  CHECK(torsion::iso_modules(x, object_of(linear_at(0.5))).iso);

  // left vs right germs at the same location are distinct modules
  ScalarGermField right_only = ScalarGermField::plain(expr::parse("pw(0.5, 1, z - 0.5)"));
  right_only.zeros_known = true;
  GermZero z0;
  z0.at = 0.5;
  z0.right = SideGerm{1, 1, 1.0};
  right_only.zeros.push_back(z0);
  right_only.validate();
  ScalarGermField left_only = ScalarGermField::plain(expr::parse("pw(0.5, z - 0.5, -1)"));
  left_only.zeros_known = true;
  GermZero z1;
  z1.at = 0.5;
  z1.left = SideGerm{1, -1, 1.0};
  left_only.zeros.push_back(z1);
  left_only.validate();
  CHECK_FALSE(torsion::iso_modules(object_of(right_only), object_of(left_only)).iso);
}

TEST_CASE("density curves and exponents") {
  // F(lambda) = 2 lambda for |z - 1/2|
  torsion::DensityCurve curve =
      torsion::density_curve(object_of(abs_at(0.5)), 1e-6, 1e-1, 200, 65536);
  CHECK(torsion::ns_exponent(curve) == doctest::Approx(1.0).epsilon(0.05));
  // and the curve itself matches the analytic law in the middle
  for (std::size_t i = 0; i < curve.lambda.size(); ++i) {
    if (curve.lambda[i] > 1e-3 && curve.lambda[i] < 1e-2)
      CHECK(curve.value[i] == doctest::Approx(2.0 * curve.lambda[i]).epsilon(0.02));
  }

  CHECK(torsion::ns_exponent(torsion::density_curve(object_of(square_at(0.5)), 1e-6, 1e-1, 200,
                                                    65536)) == doctest::Approx(0.5).epsilon(0.05));

  // a field bounded below has empty density in the window
  ScalarGermField unit;
  unit.zeros_known = true;
  unit.expression = expr::parse("1 + z");
  unit.validate();
  CHECK_THROWS_AS(torsion::density_curve(object_of(unit), 1e-6, 1e-1, 50, 1024), Error);
}

TEST_CASE("heuristic module isomorphism on sampled fields") {
  // sampled |z-1/2| against sampled 2|z-1/2|: dilatationally equivalent
  TorsionObject a = TorsionObject::from_field(
      fields::sample_symbolic(abs_at(0.5), 4096));
  TorsionObject b = TorsionObject::from_field(
      fields::sample_symbolic(abs_at(0.5, 2.0), 4096));
  torsion::IsoVerdict v = torsion::iso_modules(a, b);
  CHECK(v.heuristic);
  CHECK(v.iso);
  CHECK(v.dilatation <= 4.0);

  // order mismatch: no dilatation constant works
  TorsionObject c = TorsionObject::from_field(fields::sample_symbolic(square_at(0.5), 4096));
  torsion::IsoVerdict w = torsion::iso_modules(a, c);
  CHECK(w.heuristic);
  CHECK_FALSE(w.iso);
}
