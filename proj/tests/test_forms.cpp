#include <doctest.h>

#include "oracles.hpp"
#include "tforms/forms.hpp"
#include "tforms/props.hpp"

using namespace tforms;
using fields::BaseSpace;
using fields::GermZero;
using fields::OperatorField;
using fields::ScalarGermField;
using fields::SideGerm;
using torsion::TorsionObject;

namespace {

ScalarGermField linear_at(double a) {
  std::vector<GermZero> zeros(1);
  zeros[0].at = a;
  zeros[0].left = SideGerm{1, -1, 1.0};
  zeros[0].right = SideGerm{1, 1, 1.0};
  return ScalarGermField::with_germs(expr::coordinate() - expr::constant(a), std::move(zeros));
}

ScalarGermField abs_at(double a) {
  std::vector<GermZero> zeros(1);
  zeros[0].at = a;
  zeros[0].left = SideGerm{1, 1, 1.0};
  zeros[0].right = SideGerm{1, 1, 1.0};
  return ScalarGermField::with_germs(expr::abs(expr::coordinate() - expr::constant(a)),
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

OperatorField symbolic_plain(const std::string& text) {
  return OperatorField::symbolic(ScalarGermField::plain(expr::parse(text)));
}

double sup_scalar(const OperatorField& f, const std::function<double(double, double)>& defect) {
  double sup = 0.0;
  for (int j = 0; j < 512; ++j) {
    const double z = (j + 0.5) / 512.0;
    sup = std::max(sup, defect(z, f.eval_scalar(z)));
  }
  return sup;
}

}  // namespace

TEST_CASE("symmetrize: F = 0 passes through, complex correction is absorbed") {
  TorsionObject x = TorsionObject::from_field(OperatorField::symbolic(linear_at(0.5)));
  forms::PresentationPair p;
  p.x = x;
  p.f = symbolic_plain("1");
  p.h = symbolic_plain("1");
  p.correction = symbolic_plain("0");
  forms::TorsionForm phi = forms::symmetrize(p);
  CHECK(sup_scalar(phi.parts.front().f,
                   [](double, double v) { return std::fabs(v - 1.0); }) == 0.0);

  // sampled scalar presentation f = h = 1 + i c (z - 1/2), F = 2 i c
  const BaseSpace grid = BaseSpace::circle_grid(256);
  const double c = 0.7;
  std::vector<Matrix> alpha_f(256), f_f(256), corr_f(256);
  for (int j = 0; j < 256; ++j) {
    const double z = grid.point(j);
    alpha_f[j] = Matrix::Constant(1, 1, Complex(z - 0.5, 0.0));
    f_f[j] = Matrix::Constant(1, 1, Complex(1.0, c * (z - 0.5)));
    corr_f[j] = Matrix::Constant(1, 1, Complex(0.0, 2.0 * c));
  }
  forms::PresentationPair q;
  q.x = TorsionObject::from_field(OperatorField::sampled(grid, alpha_f));
  q.f = OperatorField::sampled(grid, f_f);
  q.h = q.f;
  q.correction = OperatorField::sampled(grid, corr_f);
  CHECK_NOTHROW(q.validate());
  forms::TorsionForm psi = forms::symmetrize(q);
  for (std::size_t j = 0; j < psi.parts.front().f.fiber_count(); ++j)
    CHECK(std::abs(psi.parts.front().f.fiber(j)(0, 0) - Complex(1.0)) < 1e-12);
  // the symmetrized representative stays in the same morphism class
  torsion::TorsionMorphism before = torsion::make_morphism(q.x, q.x, q.f);
  torsion::TorsionMorphism after = torsion::make_morphism(q.x, q.x, psi.parts.front().f);
  CHECK(torsion::morphisms_equal(before, after).verdict == torsion::Ternary::True);
}

TEST_CASE("presentation validation rejects unhoused defects") {
  const BaseSpace grid = BaseSpace::circle_grid(64);
  std::vector<Matrix> alpha_f(64), f_f(64), h_f(64);
  for (int j = 0; j < 64; ++j) {
    const double z = grid.point(j);
    alpha_f[j] = Matrix::Constant(1, 1, Complex(z - 0.5, 0.0));
    f_f[j] = Matrix::Constant(1, 1, Complex(1.0, 0.0));
    h_f[j] = Matrix::Constant(1, 1, Complex(2.0, 0.0));  // breaks f alpha = alpha h
  }
  forms::PresentationPair p;
  p.x = TorsionObject::from_field(OperatorField::sampled(grid, alpha_f));
  p.f = OperatorField::sampled(grid, f_f);
  p.h = OperatorField::sampled(grid, h_f);
  p.correction = OperatorField::constant(grid, Matrix::Zero(1, 1));
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("discriminant form basics") {
  // an invertible field presents the trivial torsion object
  ScalarGermField unit;
  unit.zeros_known = true;  // declared empty zero set
  unit.expression = expr::parse("1 + z");
  unit.validate();
  forms::TorsionForm trivial = forms::discriminant(OperatorField::symbolic(unit));
  CHECK(forms::form_signature(trivial).empty());
  CHECK(trivial.parts.size() == 1);

  CHECK_THROWS_AS(forms::discriminant(symbolic_plain("0")), Error);
}

TEST_CASE("spectral excision") {
  // all eigenvalues in [2,3]: nothing to excise
  const BaseSpace grid = BaseSpace::circle_grid(64);
  Rng rng(31);
  std::vector<Matrix> fibers(64);
  for (auto& m : fibers) m = props::random_hermitian(rng, 2, 2.0, 3.0);
  forms::Excision exc =
      forms::excise_spectral(OperatorField::sampled(grid, fibers), 1.0);
  CHECK(exc.regions.empty());
  for (std::size_t j = 0; j < 64; ++j) {
    CHECK(exc.q_field.fiber(j).norm() == 0.0);
    CHECK((exc.p_field.fiber(j) - Matrix::Identity(2, 2)).norm() == 0.0);
  }

  // scalar z - 1/2 at eps = 0.1: the region is [0.4, 0.6]
  forms::Excision lin = forms::excise_spectral(OperatorField::symbolic(linear_at(0.5)), 0.1);
  REQUIRE(lin.regions.size() == 1);
  CHECK(lin.regions[0].lo == doctest::Approx(0.4).epsilon(1e-3));
  CHECK(lin.regions[0].hi == doctest::Approx(0.6).epsilon(1e-3));
  CHECK(lin.restricted.eval_scalar(0.2) == doctest::Approx(1.0));
  CHECK(lin.restricted.eval_scalar(0.55) == doctest::Approx(0.05));

  // 2x2 diag(z - 1/2, 1): only the first coordinate is excised near 1/2
  std::vector<Matrix> diag(256);
  const BaseSpace grid2 = BaseSpace::circle_grid(256);
  for (int j = 0; j < 256; ++j) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = grid2.point(j) - 0.5;
    m(1, 1) = 1.0;
    diag[j] = m;
  }
  forms::Excision d = forms::excise_spectral(OperatorField::sampled(grid2, diag), 0.1);
  REQUIRE(d.regions.size() == 1);
  for (std::size_t j = 0; j < 256; ++j) {
    const double z = grid2.point(static_cast<int>(j));
    Matrix expected = Matrix::Zero(2, 2);
    if (std::fabs(z - 0.5) < 0.1) expected(0, 0) = 1.0;
    CHECK((d.q_field.fiber(j) - expected).norm() < 1e-10);
  }
}

TEST_CASE("splitting witness") {
  // alpha invertible, no f-part: least norm picks sigma = alpha^{-1}-free
  // solution sigma = (1 + 0)^{-1} alpha = alpha on the unit field
  OperatorField one = symbolic_plain("1");
  forms::SplittingWitness w = forms::splitting_witness(one, symbolic_plain("0"));
  CHECK(sup_scalar(w.sigma, [](double, double v) { return std::fabs(v - 1.0); }) < 1e-10);
  CHECK(sup_scalar(w.delta, [](double, double v) { return std::fabs(v); }) < 1e-10);

  // alpha = z - 1/2, f = 1: sigma = alpha/(alpha^2 + 1)
  OperatorField lin = OperatorField::symbolic(linear_at(0.5));
  forms::SplittingWitness v = forms::splitting_witness(lin, one);
  CHECK(v.residual <= 1e-10);
  CHECK(sup_scalar(v.sigma, [](double z, double value) {
          const double a = z - 0.5;
          return std::fabs(value - a / (a * a + 1.0));
        }) < 1e-12);

  // both vanish together: jointly singular
  CHECK_THROWS_AS(forms::splitting_witness(lin, OperatorField::symbolic(linear_at(0.5))), Error);
}

TEST_CASE("reduction to discriminant shape") {
  OperatorField lin = OperatorField::symbolic(linear_at(0.5));
  TorsionObject x = TorsionObject::from_field(lin);

  // already a discriminant form
  forms::TorsionForm phi{{{x, symbolic_plain("1")}}};
  forms::Reduction r = forms::reduce_to_discriminant(phi);
  CHECK(r.certificate.kind == forms::CongruenceCertificate::Kind::Direct);
  CHECK(r.certificate.residual <= 1e-10);
  CHECK(sup_scalar(r.alpha_prime, [&](double z, double v) {
          return std::fabs(v - (z - 0.5));
        }) < 1e-12);

  // constant invertible c > 0: alpha' = c alpha
  forms::TorsionForm scaled{{{x, symbolic_plain("2.5")}}};
  r = forms::reduce_to_discriminant(scaled);
  CHECK(sup_scalar(r.alpha_prime, [&](double z, double v) {
          return std::fabs(v - 2.5 * (z - 0.5));
        }) < 1e-12);

  // f = 1 + (z - 1/2) 0.8, invertible on the circle
  forms::TorsionForm tilted{{{x, symbolic_plain("1 + (z-0.5)*0.8")}}};
  r = forms::reduce_to_discriminant(tilted);
  CHECK(r.certificate.residual <= 1e-8);
  CHECK(sup_scalar(r.alpha_prime, [&](double z, double v) {
          return std::fabs(v - (1.0 + (z - 0.5) * 0.8) * (z - 0.5));
        }) < 1e-12);

  // a vanishing representative of a non-degenerate class: f = 1 - 4(z-1/2)
  // equals 1 modulo alpha F and vanishes at z = 3/4
  ScalarGermField f_field;
  f_field.expression = expr::parse("1 - 4*(z-0.5)");
  GermZero z0;
  z0.at = 0.75;
  z0.left = SideGerm{1, 1, 4.0};
  z0.right = SideGerm{1, -1, 4.0};
  f_field.zeros.push_back(z0);
  f_field.zeros_known = true;
  f_field.validate();
  forms::TorsionForm general{{{x, OperatorField::symbolic(f_field)}}};
  r = forms::reduce_to_discriminant(general);
  CHECK(r.certificate.kind == forms::CongruenceCertificate::Kind::ExcisionPair);
  CHECK(r.certificate.residual <= 1e-8);
  // the reduced field keeps the order-1 torsion at 1/2
  torsion::GermSignature sig =
      torsion::germ_signature(TorsionObject::from_field(r.alpha_prime));
  REQUIRE(sig.size() == 2);
  CHECK(sig[0].location == doctest::Approx(0.5));
  CHECK(sig[0].order == 1);

  // degenerate data is refused
  forms::TorsionForm degenerate{{{x, OperatorField::symbolic(linear_at(0.5))}}};
  CHECK_THROWS_AS(forms::reduce_to_discriminant(degenerate), Error);
}

TEST_CASE("excision isometry certificates") {
  OperatorField alpha = OperatorField::symbolic(abs_at(0.5));
  OperatorField one = symbolic_plain("1");

  // beta = alpha: identity certificate, empty excision
  forms::CongruenceCertificate trivial = forms::excision_isometry(alpha, alpha, one, one);
  CHECK(trivial.excised_source.empty());
  CHECK(trivial.residual <= 1e-12);

  // beta = alpha + alpha^2 with F = 1: h = sqrt(1 + |z-1/2|)
  OperatorField beta = symbolic_plain("|z-0.5| + |z-0.5|^2");
  OperatorField f = symbolic_plain("1 + |z-0.5|");
  forms::CongruenceCertificate cert = forms::excision_isometry(alpha, beta, f, one);
  CHECK(cert.residual <= 1e-10);
  CHECK(sup_scalar(cert.transform, [](double z, double v) {
          return std::fabs(v - std::sqrt(1.0 + std::fabs(z - 0.5)));
        }) < 1e-12);

  // alpha vs 2 alpha via f = sqrt(2), g = 1/sqrt(2): full congruence with
  // the constant sqrt(2)
  OperatorField beta2 = symbolic_plain("2*|z-0.5|");
  OperatorField f2 = symbolic_plain("sqrt(2)");
  OperatorField g2 = symbolic_plain("1/sqrt(2)");
  forms::CongruenceCertificate full = forms::excision_isometry(alpha, beta2, f2, g2);
  CHECK(full.residual <= 1e-12);
  CHECK(sup_scalar(full.transform, [](double, double v) {
          return std::fabs(v - std::sqrt(2.0));
        }) < 1e-12);
}

TEST_CASE("excision isometry on sampled 2x2 data with forced excision") {
  Rng rng(41);
  const int grid_n = 128;
  const BaseSpace grid = BaseSpace::circle_grid(grid_n);
  std::vector<Matrix> alpha_f(grid_n);
  for (int j = 0; j < grid_n; ++j) {
    Matrix u = props::random_unitary(rng, 2);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = grid.point(j) - 0.5 + ((grid.point(j) < 0.5) ? -0.05 : 0.05);
    d(1, 1) = 1.2;
    Matrix m = u * d * u.adjoint();
    alpha_f[j] = (m + m.adjoint()) / 2.0;
  }
  OperatorField alpha = OperatorField::sampled(grid, alpha_f);
  // pick F large enough that ||alpha|| ||F|| >= 1: the pipeline must excise
  const double alpha_norm = fields::ess_bounds(alpha).ess_sup;
  std::vector<Matrix> f_corr(grid_n);
  for (int j = 0; j < grid_n; ++j) {
    Matrix m = props::random_hermitian_mixed(rng, 2, 0.3, 1.2 / alpha_norm);
    f_corr[j] = (m + m.adjoint()) / 2.0;
  }
  OperatorField capital_f = OperatorField::sampled(grid, f_corr);
  OperatorField one = OperatorField::identity(grid, 2);
  OperatorField f = fields::add(one, fields::compose(alpha, capital_f));
  OperatorField beta = fields::compose(f, alpha);
  forms::CongruenceCertificate cert = forms::excision_isometry(alpha, beta, f, one);
  CHECK(cert.kind == forms::CongruenceCertificate::Kind::ExcisionPair);
  CHECK_FALSE(cert.excised_source.empty());
  CHECK(cert.residual <= 1e-8);
  double h_sq = 0.0, intertwine = 0.0;
  for (const auto& [name, value] : cert.checks) {
    if (name == "h_square_residual") h_sq = value;
    if (name == "intertwine_residual") intertwine = value;
  }
  CHECK(h_sq <= 1e-9);
  CHECK(intertwine <= 1e-9);
}

TEST_CASE("positive/negative splitting") {
  // purely positive: trivial negative part
  forms::TorsionForm pos = forms::discriminant(OperatorField::symbolic(abs_at(0.5)));
  forms::PosNegSplit split = forms::pos_neg_split(pos);
  CHECK(forms::form_signature(split.negative).empty());
  CHECK(forms::form_signature(split.positive).size() == 2);

  // z - 1/2 splits into one right germ and one left germ
  forms::TorsionForm lin = forms::discriminant(OperatorField::symbolic(linear_at(0.5)));
  split = forms::pos_neg_split(lin);
  torsion::GermSignature p = forms::form_signature(split.positive);
  torsion::GermSignature n = forms::form_signature(split.negative);
  REQUIRE(p.size() == 1);
  REQUIRE(n.size() == 1);
  CHECK(p[0].side == torsion::Side::Right);
  CHECK(p[0].sign == 1);
  CHECK(n[0].side == torsion::Side::Left);
  CHECK(n[0].sign == -1);
  // the positive field is padded to +1 on the negative region
  CHECK(split.positive.parts.front().x.alpha().eval_scalar(0.25) == doctest::Approx(1.0));
  CHECK(split.negative.parts.front().x.alpha().eval_scalar(0.75) == doctest::Approx(-1.0));
}

TEST_CASE("metabolizer and the delta criterion") {
  // (z-1/2)^2: metabolizer has the half order
  forms::TorsionForm sq = forms::discriminant(OperatorField::symbolic(square_at(0.5)));
  forms::MetabolizerResult met = forms::metabolizer(sq);
  CHECK(met.delta_criterion);
  REQUIRE(met.parts.size() >= 1);
  torsion::GermSignature y_sig = torsion::germ_signature(met.parts.front().y);
  REQUIRE(y_sig.size() == 2);
  CHECK(y_sig[0].order == 1);
  CHECK(met.parts.front().residual <= 1e-8);

  // the field itself is not a metabolizer: delta = alpha^{-1} unbounded
  CHECK_FALSE(forms::is_metabolizer(OperatorField::symbolic(square_at(0.5)),
                                    OperatorField::symbolic(square_at(0.5))));

  // odd order: sampled witness, delta = sign
  forms::TorsionForm lin = forms::discriminant(OperatorField::symbolic(linear_at(0.5)));
  forms::MetabolizerResult odd = forms::metabolizer(lin);
  CHECK(odd.delta_criterion);
  for (const forms::MetabolizerPart& part : odd.parts) CHECK(part.residual <= 1e-8);
}

TEST_CASE("positive congruence certificates") {
  OperatorField alpha = OperatorField::symbolic(abs_at(0.5));
  OperatorField one = symbolic_plain("1");

  // psi = phi: k = 1
  forms::CongruenceCertificate self = forms::congruence_positive(alpha, alpha, one, one);
  CHECK(self.residual <= 1e-12);
  CHECK(sup_scalar(self.transform, [](double, double v) { return std::fabs(v - 1.0); }) < 1e-12);

  // alpha vs c alpha with the scaling absorbed in g: k = sqrt(c)
  const double c = 3.0;
  forms::CongruenceCertificate scaled = forms::congruence_positive(
      alpha, OperatorField::symbolic(ScalarGermField::plain(
                 expr::constant(c) * expr::abs(expr::parse("z-0.5")))),
      one, symbolic_plain("3"));
  CHECK(scaled.residual <= 1e-12);
  CHECK(sup_scalar(scaled.transform, [&](double, double v) {
          return std::fabs(v - std::sqrt(c));
        }) < 1e-12);

  // random sampled 2x2 positive pair related by an invertible map
  Rng rng(53);
  const int grid_n = 64;
  const BaseSpace grid = BaseSpace::circle_grid(grid_n);
  std::vector<Matrix> a_f(grid_n), f_f(grid_n), g_f(grid_n), psi_f(grid_n);
  for (int j = 0; j < grid_n; ++j) {
    Matrix alpha_phi = props::random_hermitian(rng, 2, 0.3, 2.0);
    Matrix t = props::random_invertible(rng, 2, 0.6, 1.6);
    Matrix u = props::random_invertible(rng, 2, 0.7, 1.4);
    Matrix v = alpha_phi * u * Eigen::PartialPivLU<Matrix>(alpha_phi).inverse();
    Matrix t_star_inv = Eigen::PartialPivLU<Matrix>(Matrix(t.adjoint())).inverse();
    Matrix alpha_psi = t_star_inv * alpha_phi * Eigen::PartialPivLU<Matrix>(t).inverse();
    a_f[j] = (alpha_phi + alpha_phi.adjoint()) / 2.0;
    psi_f[j] = (alpha_psi + alpha_psi.adjoint()) / 2.0;
    f_f[j] = t * u;
    g_f[j] = t_star_inv * v;
  }
  forms::CongruenceCertificate sampled = forms::congruence_positive(
      OperatorField::sampled(grid, a_f), OperatorField::sampled(grid, psi_f),
      OperatorField::sampled(grid, f_f), OperatorField::sampled(grid, g_f));
  CHECK(sampled.residual <= 1e-8);
  for (const auto& [name, value] : sampled.checks) CHECK(value <= 1e-9);
}

TEST_CASE("diagram completion") {
  // scalars: h = f
  OperatorField alpha = OperatorField::symbolic(abs_at(0.5));
  OperatorField f = symbolic_plain("1 + z");
  OperatorField h = forms::complete_diagram(alpha, f, f);
  CHECK(sup_scalar(h, [](double z, double v) { return std::fabs(v - (1.0 + z)); }) == 0.0);

  CHECK(props::complete_diagram_conjugation(61, 5).pass);

  // inconsistent data is rejected
  CHECK_THROWS_AS(forms::complete_diagram(alpha, f, symbolic_plain("2 + z")), Error);
}

TEST_CASE("sums of positive forms") {
  CHECK(props::add_forms_positivity(71, 10).pass);

  // a negative psi is refused
  OperatorField alpha = OperatorField::symbolic(abs_at(0.5));
  forms::TorsionForm phi = forms::discriminant(alpha);
  forms::TorsionForm psi;
  psi.parts.push_back({phi.parts.front().x, symbolic_plain("-1")});
  CHECK_THROWS_AS(forms::add_forms(phi, psi), Error);
}

TEST_CASE("hyperbolicity") {
  // psi + (-psi) is hyperbolic with a full structure record
  forms::TorsionForm psi = forms::discriminant(OperatorField::symbolic(abs_at(0.25)));
  forms::TorsionForm phi = forms::orthogonal_sum(psi, forms::negate(psi));
  forms::HyperbolicStructure hs = forms::is_hyperbolic(phi);
  CHECK(hs.hyperbolic);
  CHECK_FALSE(hs.heuristic);
  CHECK(hs.metabolizer_parts.size() == 2);
  CHECK(hs.annihilator_witness_sup <= 1e6);
  CHECK(hs.complement_floor >= 1e-6);

  // a purely positive nontrivial form is not hyperbolic
  forms::HyperbolicStructure flat = forms::is_hyperbolic(psi);
  CHECK_FALSE(flat.hyperbolic);
  CHECK_FALSE(flat.distinguishing.empty());

  // z - 1/2: the two parts carry left/right germs at the same location,
  // which are non-isomorphic modules, so the form is not hyperbolic
  forms::TorsionForm lin = forms::discriminant(OperatorField::symbolic(linear_at(0.5)));
  CHECK_FALSE(forms::is_hyperbolic(lin).hyperbolic);
}

TEST_CASE("superfiniteness witnesses") {
  // identity transports to itself with bound one
  const BaseSpace grid = BaseSpace::circle_grid(128);
  std::vector<Matrix> alpha_f(128);
  Rng rng(83);
  for (int j = 0; j < 128; ++j) {
    Matrix u = props::random_unitary(rng, 2);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = grid.point(j) - 0.5 + 2.0;
    d(1, 1) = 1.0;
    Matrix m = u * d * u.adjoint();
    alpha_f[j] = (m + m.adjoint()) / 2.0;
  }
  OperatorField alpha = OperatorField::sampled(grid, alpha_f);
  forms::SuperfiniteReport id_report =
      forms::superfinite_check(alpha, OperatorField::identity(grid, 2));
  CHECK(id_report.ok);
  CHECK(id_report.inf_g_eigen == doctest::Approx(1.0).epsilon(1e-9));

  // scalar fields: g = f, bound = inf |f|
  forms::SuperfiniteReport scalar =
      forms::superfinite_check(OperatorField::symbolic(abs_at(0.5)), symbolic_plain("1 + z"));
  CHECK(scalar.ok);
  CHECK(scalar.inf_f_singular == doctest::Approx(1.0).epsilon(1e-3));

  CHECK(props::superfinite_instances(91, 10).pass);
}

TEST_CASE("spectrum positivity transfer") {
  // beta = 1, alpha PSD: trivially true
  const BaseSpace grid = BaseSpace::circle_grid(64);
  Rng rng(97);
  std::vector<Matrix> psd(64);
  for (auto& m : psd) m = props::random_hermitian(rng, 2, 0.0, 2.0);
  CHECK(forms::spectrum_positivity(OperatorField::sampled(grid, psd),
                                   OperatorField::identity(grid, 2)));

  // scalar beta = 1 + z, alpha = |z - 1/2|
  CHECK(forms::spectrum_positivity(OperatorField::symbolic(abs_at(0.5)),
                                   symbolic_plain("1 + z")));

  CHECK(props::positivity_instances(101, 10).pass);

  // violated hypothesis is reported as an error
  std::vector<Matrix> not_pos(64);
  for (auto& m : not_pos) m = props::random_hermitian_mixed(rng, 2, 0.2, 1.0);
  CHECK_THROWS_AS(
      forms::spectrum_positivity(OperatorField::sampled(grid, psd),
                                 OperatorField::sampled(grid, not_pos)),
      Error);
}
