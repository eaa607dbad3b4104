#include <doctest.h>

#include "oracles.hpp"
#include "tforms/field_space.hpp"

using namespace tforms;
using fields::BaseSpace;
using fields::GermZero;
using fields::OperatorField;
using fields::ScalarGermField;
using fields::SideGerm;

namespace {

ScalarGermField linear_at(double a) {
  std::vector<GermZero> zeros(1);
  zeros[0].at = a;
  SideGerm right{1, 1, 1.0};
  SideGerm left{1, -1, 1.0};
  zeros[0].left = left;
  zeros[0].right = right;
  return ScalarGermField::with_germs(expr::coordinate() - expr::constant(a), std::move(zeros));
}

}  // namespace

TEST_CASE("expression parser round trips and errors") {
  expr::ScalarExpr e = expr::parse("(z-0.5)^2");
  CHECK(e.eval(0.75) == doctest::Approx(0.0625));
  expr::ScalarExpr round = expr::parse(e.to_string());
  CHECK(round.eval(0.3) == doctest::Approx(e.eval(0.3)));

  CHECK(expr::parse("|z-0.5|").eval(0.25) == doctest::Approx(0.25));
  CHECK(expr::parse("abs(z-0.5)").eval(0.25) == doctest::Approx(0.25));
  CHECK(expr::parse("pw(0.5, 1, -1)").eval(0.25) == doctest::Approx(1.0));
  CHECK(expr::parse("pw(0.5, 1, -1)").eval(0.75) == doctest::Approx(-1.0));
  CHECK(expr::parse("sin(2*pi*z)").eval(0.25) == doctest::Approx(1.0));
  CHECK(expr::parse("sqrt(z)").eval(0.25) == doctest::Approx(0.5));

  CHECK_THROWS_WITH_AS(expr::parse("(z-"), doctest::Contains("offset"), Error);
  CHECK_THROWS_AS(expr::parse("foo(z)"), Error);
  CHECK_THROWS_AS(expr::parse("z +"), Error);
}

TEST_CASE("germ validation accepts consistent data and rejects lies") {
  CHECK_NOTHROW(linear_at(0.5));

  // wrong order
  std::vector<GermZero> zeros(1);
  zeros[0].at = 0.5;
  zeros[0].left = SideGerm{2, 1, 1.0};
  zeros[0].right = SideGerm{2, 1, 1.0};
  CHECK_THROWS_AS(
      ScalarGermField::with_germs(expr::coordinate() - expr::constant(0.5), std::move(zeros)),
      Error);

  // undeclared zero, caught by the floor sampling once the floor is set at
  // the field's real scale
  ScalarGermField plain;
  plain.expression = expr::parse("z-0.5");
  plain.zeros_known = true;  // declares an empty zero set
  plain.floor = 1e-3;
  CHECK_THROWS_AS(plain.validate(), Error);

  // |z-0.5| has equal signs at an odd-order zero: legal because the kink is
  // not analytic
  std::vector<GermZero> kink(1);
  kink[0].at = 0.5;
  kink[0].left = SideGerm{1, 1, 1.0};
  kink[0].right = SideGerm{1, 1, 1.0};
  CHECK_NOTHROW(ScalarGermField::with_germs(expr::parse("|z-0.5|"), std::move(kink)));

  // an analytic odd zero with equal declared signs must be rejected
  std::vector<GermZero> lie(1);
  lie[0].at = 0.5;
  lie[0].left = SideGerm{1, 1, 1.0};
  lie[0].right = SideGerm{1, 1, 1.0};
  CHECK_THROWS_AS(
      ScalarGermField::with_germs(expr::coordinate() - expr::constant(0.5), std::move(lie)),
      Error);
}

TEST_CASE("field algebra: double adjoint is exact, symbolic compose adds orders") {
  const BaseSpace grid = BaseSpace::circle_grid(64);
  Rng rng(17);
  std::vector<Matrix> fibers(64);
  for (auto& m : fibers) {
    m.resize(2, 2);
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) m(r, c) = rng.complex_in_disk(1.0);
  }
  OperatorField t = OperatorField::sampled(grid, fibers);
  OperatorField back = fields::adjoint(fields::adjoint(t));
  for (std::size_t j = 0; j < t.fiber_count(); ++j) CHECK(back.fiber(j) == t.fiber(j));

  OperatorField lin = OperatorField::symbolic(linear_at(0.5));
  OperatorField sq = fields::compose(lin, lin);
  const ScalarGermField& f = sq.symbolic_field();
  REQUIRE(f.zeros.size() == 1);
  CHECK(f.zeros[0].at == doctest::Approx(0.5));
  CHECK(f.zeros[0].left->order == 2);
  CHECK(f.zeros[0].right->order == 2);
  CHECK(f.zeros[0].left->sign == 1);   // (-1)(-1)
  CHECK(f.zeros[0].right->sign == 1);
  CHECK(f.eval(0.75) == doctest::Approx(0.0625));
}

TEST_CASE("ess bounds") {
  OperatorField one = OperatorField::identity(BaseSpace::circle_grid(32), 2);
  fields::FieldNormReport r = fields::ess_bounds(one);
  CHECK(r.ess_sup == doctest::Approx(1.0));
  CHECK(r.inf_spectrum == doctest::Approx(1.0));
  CHECK(r.zero_measure_estimate == 0.0);

  OperatorField lin = OperatorField::symbolic(linear_at(0.5));
  r = fields::ess_bounds(lin, 4096);
  CHECK(r.ess_sup == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(r.inf_spectrum > 0.0);                       // half-offset grid
  CHECK(r.inf_spectrum == doctest::Approx(1.0 / 8192.0).epsilon(1e-6));

  // the minimum is attained on the vanishing component
  const BaseSpace grid = BaseSpace::circle_grid(256);
  std::vector<Matrix> fibers(256);
  for (int j = 0; j < 256; ++j) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = grid.point(j) - 0.5;
    m(1, 1) = 1.0;
    fibers[static_cast<std::size_t>(j)] = m;
  }
  r = fields::ess_bounds(OperatorField::sampled(grid, fibers));
  CHECK(r.inf_spectrum == doctest::Approx(1.0 / 512.0).epsilon(1e-9));
}

TEST_CASE("injectivity verdicts") {
  CHECK(fields::is_injective_dense(OperatorField::identity(BaseSpace::circle_grid(32), 2)).ok);
  CHECK(fields::is_injective_dense(OperatorField::symbolic(linear_at(0.5))).ok);

  OperatorField zero = OperatorField::symbolic(ScalarGermField::plain(expr::constant(0.0)));
  fields::InjectivityVerdict v = fields::is_injective_dense(zero);
  CHECK_FALSE(v.ok);
  CHECK(!v.witness.empty());
}

TEST_CASE("sampling a symbolic field") {
  OperatorField ones =
      fields::sample_symbolic(ScalarGermField::plain(expr::constant(1.0)), 16);
  CHECK(ones.fiber_count() == 16);
  for (std::size_t j = 0; j < 16; ++j) CHECK(ones.fiber(j)(0, 0) == Complex(1.0));

  // z - 1/2 sampled at the half-offset points; the four-point grid values
  // (-0.375, -0.125, 0.125, 0.375) come straight from the point formula
  const BaseSpace four = BaseSpace::circle_grid(4);
  const double expected[] = {-0.375, -0.125, 0.125, 0.375};
  for (int j = 0; j < 4; ++j) CHECK(four.point(j) - 0.5 == doctest::Approx(expected[j]));
  OperatorField lin = fields::sample_symbolic(linear_at(0.5), 16);
  for (int j = 0; j < 16; ++j)
    CHECK(lin.fiber(static_cast<std::size_t>(j))(0, 0).real() ==
          doctest::Approx((j + 0.5) / 16.0 - 0.5));
  // grids below the documented minimum are rejected
  CHECK_THROWS_AS(fields::sample_symbolic(linear_at(0.5), 4), Error);

  // slope oracle: order-2 germ shows slope 2 in the sorted small values
  ScalarGermField sq =
      fields::compose(OperatorField::symbolic(linear_at(0.5)), OperatorField::symbolic(linear_at(0.5)))
          .symbolic_field();
  OperatorField sampled = fields::sample_symbolic(sq, 4096);
  std::vector<double> values;
  for (std::size_t j = 0; j < sampled.fiber_count(); ++j)
    values.push_back(std::abs(sampled.fiber(j)(0, 0)));
  CHECK(oracles::small_value_slope(values) == doctest::Approx(2.0).epsilon(0.10));

  // a grid point colliding with a declared zero is rejected: z0 = point 8
  // of the 16-grid
  std::vector<GermZero> zeros(1);
  zeros[0].at = (8.0 + 0.5) / 16.0;
  zeros[0].left = SideGerm{1, -1, 1.0};
  zeros[0].right = SideGerm{1, 1, 1.0};
  ScalarGermField hit = ScalarGermField::with_germs(
      expr::coordinate() - expr::constant(zeros[0].at), std::move(zeros));
  CHECK_THROWS_AS(fields::sample_symbolic(hit, 16), Error);
}

TEST_CASE("sign regions track zeros and breakpoints") {
  std::vector<fields::SignRegion> regions = fields::sign_regions(linear_at(0.5));
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].sign == -1);
  CHECK(regions[1].sign == 1);
  CHECK(regions[0].hi == doctest::Approx(0.5));

  // a pw jump flips sign without a zero
  ScalarGermField jump = ScalarGermField::plain(expr::parse("pw(0.25, 1, -1)"));
  regions = fields::sign_regions(jump);
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].sign == 1);
  CHECK(regions[1].sign == -1);
  CHECK(regions[0].hi == doctest::Approx(0.25));
}
