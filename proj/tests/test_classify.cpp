#include <doctest.h>

#include "tforms/classify.hpp"
#include "tforms/props.hpp"

using namespace tforms;
using fields::GermZero;
using fields::OperatorField;
using fields::ScalarGermField;
using fields::SideGerm;

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

}  // namespace

TEST_CASE("classification report for basic forms") {
  // trivial form: both signatures empty
  ScalarGermField unit;
  unit.zeros_known = true;
  unit.expression = expr::parse("1 + z");
  unit.validate();
  classify::ClassificationReport trivial =
      classify::classify_form(forms::discriminant(OperatorField::symbolic(unit)), 1024);
  CHECK(trivial.positive.empty());
  CHECK(trivial.negative.empty());
  CHECK(trivial.mode == classify::ClassificationReport::Mode::ExactSymbolic);

  // z - 1/2: one right germ in the positive slot, one left in the negative
  classify::ClassificationReport lin =
      classify::classify_form(forms::discriminant(OperatorField::symbolic(linear_at(0.5))), 1024);
  REQUIRE(lin.positive.size() == 1);
  REQUIRE(lin.negative.size() == 1);
  CHECK(lin.positive[0].side == torsion::Side::Right);
  CHECK(lin.positive[0].order == 1);
  CHECK(lin.negative[0].side == torsion::Side::Left);
  CHECK(lin.negative[0].order == 1);
  CHECK(lin.ns_exponent_positive == doctest::Approx(1.0).epsilon(0.10));

  // (z - 1/4)(z - 1/2)^2: slots read off the four one-sided germs
  Rng rng(0);
  ScalarGermField quarter = linear_at(0.25);
  ScalarGermField half_sq;
  {
    std::vector<GermZero> zeros(1);
    zeros[0].at = 0.5;
    zeros[0].left = SideGerm{2, 1, 1.0};
    zeros[0].right = SideGerm{2, 1, 1.0};
    half_sq = ScalarGermField::with_germs(
        expr::pow_int(expr::coordinate() - expr::constant(0.5), 2), std::move(zeros));
  }
  OperatorField prod = fields::compose(OperatorField::symbolic(quarter),
                                       OperatorField::symbolic(half_sq));
  classify::ClassificationReport mixed =
      classify::classify_form(forms::discriminant(prod), 1024);
  REQUIRE(mixed.positive.size() == 3);  // right of 1/4, both sides of 1/2
  REQUIRE(mixed.negative.size() == 1);  // left of 1/4
  CHECK(mixed.negative[0].location == doctest::Approx(0.25));
  CHECK(mixed.positive[1].location == doctest::Approx(0.5));
  CHECK(mixed.positive[1].order == 2);
}

TEST_CASE("congruence decisions with certificates") {
  forms::TorsionForm phi = forms::discriminant(OperatorField::symbolic(abs_at(0.5)));

  classify::CongruenceVerdict self = classify::congruent(phi, phi);
  CHECK(self.congruent);
  CHECK_FALSE(self.heuristic);
  REQUIRE(!self.certificates.empty());
  CHECK(self.certificates.front().residual <= 1e-8);

  // |z-1/2| vs 2|z-1/2|: congruent with k = sqrt(2)
  forms::TorsionForm psi = forms::discriminant(OperatorField::symbolic(abs_at(0.5, 2.0)));
  classify::CongruenceVerdict scaled = classify::congruent(phi, psi);
  CHECK(scaled.congruent);
  REQUIRE(!scaled.certificates.empty());
  const fields::OperatorField& k = scaled.certificates.front().transform;
  for (int j = 0; j < 64; ++j) {
    const double z = (j + 0.5) / 64.0;
    CHECK(k.eval_scalar(z) == doctest::Approx(std::sqrt(2.0)));
  }

  // z - 1/2 vs |z - 1/2|: negative parts differ
  forms::TorsionForm lin = forms::discriminant(OperatorField::symbolic(linear_at(0.5)));
  classify::CongruenceVerdict mixed = classify::congruent(lin, phi);
  CHECK_FALSE(mixed.congruent);
  CHECK(!mixed.distinguishing.empty());
}

TEST_CASE("ratio oracle") {
  ScalarGermField a = abs_at(0.5);
  classify::OracleVerdict self = classify::ratio_oracle(a, a);
  CHECK(self.answer == classify::OracleVerdict::Answer::Congruent);
  CHECK(self.ratio_low == doctest::Approx(1.0));
  CHECK(self.ratio_high == doctest::Approx(1.0));

  // beta = alpha + alpha^2 F with bounded F: ratios tend to one
  ScalarGermField b;
  b.expression = expr::parse("|z-0.5| * (1 + |z-0.5| * 0.8)");
  b.zeros = a.zeros;
  b.zeros_known = true;
  b.validate();
  CHECK(classify::ratio_oracle(a, b).answer == classify::OracleVerdict::Answer::Congruent);

  // alpha^3 vs alpha with a common order-1 zero: the ratio collapses
  ScalarGermField cube;
  {
    std::vector<GermZero> zeros(1);
    zeros[0].at = 0.5;
    zeros[0].left = SideGerm{3, -1, 1.0};
    zeros[0].right = SideGerm{3, 1, 1.0};
    cube = ScalarGermField::with_germs(
        expr::pow_int(expr::coordinate() - expr::constant(0.5), 3), std::move(zeros));
  }
  CHECK(classify::ratio_oracle(linear_at(0.5), cube).answer ==
        classify::OracleVerdict::Answer::NotCongruent);
  // sign flips away from zeros are caught as well
  ScalarGermField flipped;
  flipped.expression = expr::constant(-1.0) * linear_at(0.5).expression;
  flipped.zeros = linear_at(0.5).zeros;
  for (auto& z : flipped.zeros) {
    z.left->sign = 1;
    z.right->sign = -1;
  }
  flipped.zeros_known = true;
  flipped.validate();
  CHECK(classify::ratio_oracle(linear_at(0.5), flipped).answer ==
        classify::OracleVerdict::Answer::NotCongruent);
}

TEST_CASE("random instance generator is seed-deterministic and in-grammar") {
  Rng a(1234), b(1234);
  ScalarGermField fa = classify::random_germ_field(a, 3);
  ScalarGermField fb = classify::random_germ_field(b, 3);
  CHECK(fa.expression.to_string() == fb.expression.to_string());
  REQUIRE(fa.zeros.size() == fb.zeros.size());
  for (std::size_t i = 0; i < fa.zeros.size(); ++i) {
    CHECK(fa.zeros[i].at == fb.zeros[i].at);
    // zeros sit at multiples of 1/32
    CHECK(std::fabs(fa.zeros[i].at * 32.0 - std::round(fa.zeros[i].at * 32.0)) < 1e-12);
    CHECK(fa.zeros[i].left->order <= 3);
  }
}

TEST_CASE("classify property suites at reduced scale") {
  CHECK(props::classification_oracle_agreement(7001, 60).pass);
  CHECK(props::hyperbolicity_consistency(7002, 45).pass);
  CHECK(props::certificate_soundness(7003, 20).pass);
  CHECK(props::germ_distinguished_pairs(7004, 10).pass);
}
