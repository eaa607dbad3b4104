#include "tforms/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tforms::classify {

namespace {

using fields::GermZero;
using fields::OperatorField;
using fields::ScalarGermField;
using fields::SideGerm;
using torsion::GermSignature;

bool reduced_shape(const forms::TorsionForm::Part& part) {
  const OperatorField one = part.x.symbolic()
                                ? OperatorField::identity(fields::BaseSpace::symbolic_circle(), 1)
                                : OperatorField::identity(part.f.space(), part.f.dim());
  if (part.f.repr() != one.repr()) return false;
  if (part.f.repr() == OperatorField::Repr::Symbolic) {
    for (int j = 0; j < 64; ++j) {
      const double z = (j + 0.5) / 64.0;
      if (std::fabs(part.f.eval_scalar(z) - 1.0) > 1e-12) return false;
    }
    return true;
  }
  for (std::size_t j = 0; j < part.f.fiber_count(); ++j) {
    const Matrix id = Matrix::Identity(part.f.dim(), part.f.dim());
    if ((part.f.fiber(j) - id).norm() > 1e-12) return false;
  }
  return true;
}

forms::TorsionForm reduce_all(const forms::TorsionForm& phi,
                              std::vector<forms::CongruenceCertificate>& certs) {
  forms::TorsionForm reduced;
  for (const forms::TorsionForm::Part& part : phi.parts) {
    if (reduced_shape(part)) {
      reduced.parts.push_back(part);
      continue;
    }
    forms::TorsionForm single;
    single.parts.push_back(part);
    forms::Reduction r = forms::reduce_to_discriminant(single);
    certs.push_back(r.certificate);
    forms::TorsionForm::Part p;
    p.x = torsion::TorsionObject::from_field(r.alpha_prime);
    p.f = part.x.symbolic() ? OperatorField::identity(fields::BaseSpace::symbolic_circle(), 1)
                            : OperatorField::identity(r.alpha_prime.space(), r.alpha_prime.dim());
    reduced.parts.push_back(std::move(p));
  }
  return reduced;
}

double slot_exponent(const forms::TorsionForm& slot, int density_grid) {
  // trivial slots (no torsion in the window) report NaN
  try {
    if (slot.parts.size() == 1) {
      torsion::DensityCurve curve = torsion::density_curve(
          slot.parts.front().x, 1e-6, 1e-1, 200, density_grid);
      return torsion::ns_exponent(curve);
    }
    // pool parts by summing the curves
    torsion::DensityCurve total;
    for (const forms::TorsionForm::Part& p : slot.parts) {
      torsion::DensityCurve c = torsion::density_curve(p.x, 1e-6, 1e-1, 200, density_grid);
      if (total.lambda.empty()) {
        total = c;
      } else {
        for (std::size_t i = 0; i < total.value.size(); ++i) total.value[i] += c.value[i];
      }
    }
    return torsion::ns_exponent(total);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// the slot signature normalized: positive slot keeps + signs, negative -
void check_slot_signs(const GermSignature& sig, int expected) {
  for (const torsion::GermEntry& e : sig)
    if (e.sign != expected)
      fail(Err::ValidationError, "slot signature carries a foreign sign");
}

}  // namespace

ClassificationReport classify_form(const forms::TorsionForm& phi, int density_grid) {
  ClassificationReport report;
  forms::TorsionForm reduced = reduce_all(phi, report.certificates);
  forms::PosNegSplit split = forms::pos_neg_split(reduced);
  if (reduced.symbolic()) {
    report.mode = ClassificationReport::Mode::ExactSymbolic;
    report.positive = forms::form_signature(split.positive);
    report.negative = forms::form_signature(split.negative);
    check_slot_signs(report.positive, +1);
    check_slot_signs(report.negative, -1);
  } else {
    report.mode = ClassificationReport::Mode::HeuristicSampled;
    if (split.positive.parts.size() == 1) {
      try {
        report.positive_curve =
            torsion::density_curve(split.positive.parts.front().x, 1e-6, 1e-1, 200, density_grid);
      } catch (const Error&) {
      }
    }
    if (split.negative.parts.size() == 1) {
      try {
        report.negative_curve =
            torsion::density_curve(split.negative.parts.front().x, 1e-6, 1e-1, 200, density_grid);
      } catch (const Error&) {
      }
    }
  }
  report.ns_exponent_positive = slot_exponent(split.positive, density_grid);
  report.ns_exponent_negative = slot_exponent(split.negative, density_grid);
  return report;
}

namespace {

GermSignature first_difference(const GermSignature& a, const GermSignature& b) {
  GermSignature out;
  std::size_t i = 0, j = 0;
  auto same = [](const torsion::GermEntry& x, const torsion::GermEntry& y) {
    return std::fabs(x.location - y.location) <= 1e-12 && x.side == y.side && x.order == y.order;
  };
  while (i < a.size() && j < b.size()) {
    if (same(a[i], b[j])) {
      ++i;
      ++j;
      continue;
    }
    out.push_back(a[i]);
    out.push_back(b[j]);
    return out;
  }
  if (i < a.size()) out.push_back(a[i]);
  if (j < b.size()) out.push_back(b[j]);
  return out;
}

// pointwise ratio field psi_part / phi_part as the module-iso data (7-4)
forms::CongruenceCertificate part_certificate(const forms::TorsionForm::Part& phi_part,
                                              const forms::TorsionForm::Part& psi_part,
                                              int slot_sign) {
  const OperatorField& a_phi = phi_part.x.alpha();
  const OperatorField& a_psi = psi_part.x.alpha();
  // negative parts enter through their positive mirrors; the same k field
  // certifies the original pair
  const OperatorField pos_phi =
      slot_sign > 0 ? a_phi : fields::scale(-1.0, a_phi);
  const OperatorField pos_psi =
      slot_sign > 0 ? a_psi : fields::scale(-1.0, a_psi);
  const OperatorField one = OperatorField::identity(fields::BaseSpace::symbolic_circle(), 1);
  const expr::ScalarExpr ratio = pos_psi.symbolic_field().expression /
                                 pos_phi.symbolic_field().expression;
  OperatorField g = OperatorField::symbolic(ScalarGermField::plain(ratio));
  forms::CongruenceCertificate cert = forms::congruence_positive(pos_phi, pos_psi, one, g);
  cert.checks.push_back({"slot_sign", static_cast<double>(slot_sign)});
  return cert;
}

bool sorted_signature_less(const GermSignature& a, const GermSignature& b) {
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(),
      [](const torsion::GermEntry& x, const torsion::GermEntry& y) {
        if (x.location != y.location) return x.location < y.location;
        if (x.side != y.side) return x.side < y.side;
        return x.order < y.order;
      });
}

}  // namespace

CongruenceVerdict congruent(const forms::TorsionForm& phi, const forms::TorsionForm& psi) {
  CongruenceVerdict verdict;
  std::vector<forms::CongruenceCertificate> phi_certs, psi_certs;
  forms::TorsionForm phi_reduced = reduce_all(phi, phi_certs);
  forms::TorsionForm psi_reduced = reduce_all(psi, psi_certs);
  forms::PosNegSplit phi_split = forms::pos_neg_split(phi_reduced);
  forms::PosNegSplit psi_split = forms::pos_neg_split(psi_reduced);

  if (phi_reduced.symbolic() && psi_reduced.symbolic()) {
    verdict.heuristic = false;
    const GermSignature phi_pos = forms::form_signature(phi_split.positive);
    const GermSignature psi_pos = forms::form_signature(psi_split.positive);
    const GermSignature phi_neg = forms::form_signature(phi_split.negative);
    const GermSignature psi_neg = forms::form_signature(psi_split.negative);
    const bool pos_eq = torsion::equal_signatures(phi_pos, psi_pos, /*forget_sign=*/false);
    const bool neg_eq = torsion::equal_signatures(phi_neg, psi_neg, /*forget_sign=*/false);
    verdict.congruent = pos_eq && neg_eq;
    if (!verdict.congruent) {
      verdict.distinguishing =
          !pos_eq ? first_difference(phi_pos, psi_pos) : first_difference(phi_neg, psi_neg);
      return verdict;
    }
    // per-part certificates when the split parts pair up one-to-one
    auto emit = [&](const forms::TorsionForm& a, const forms::TorsionForm& b, int sign) {
      if (a.parts.size() != b.parts.size()) return;
      std::vector<std::size_t> ia(a.parts.size()), ib(b.parts.size());
      for (std::size_t i = 0; i < ia.size(); ++i) ia[i] = i;
      for (std::size_t i = 0; i < ib.size(); ++i) ib[i] = i;
      std::vector<GermSignature> sa, sb;
      for (const auto& p : a.parts) sa.push_back(torsion::germ_signature(p.x));
      for (const auto& p : b.parts) sb.push_back(torsion::germ_signature(p.x));
      std::sort(ia.begin(), ia.end(),
                [&](std::size_t x, std::size_t y) { return sorted_signature_less(sa[x], sa[y]); });
      std::sort(ib.begin(), ib.end(),
                [&](std::size_t x, std::size_t y) { return sorted_signature_less(sb[x], sb[y]); });
      for (std::size_t i = 0; i < ia.size(); ++i) {
        if (!torsion::equal_signatures(sa[ia[i]], sb[ib[i]], /*forget_sign=*/true)) return;
        verdict.certificates.push_back(
            part_certificate(a.parts[ia[i]], b.parts[ib[i]], sign));
      }
    };
    emit(phi_split.positive, psi_split.positive, +1);
    emit(phi_split.negative, psi_split.negative, -1);
    for (const auto& c : phi_certs) verdict.certificates.push_back(c);
    for (const auto& c : psi_certs) verdict.certificates.push_back(c);
    return verdict;
  }

  // heuristic mode: density-curve dilatation per slot
  verdict.heuristic = true;
  if (phi_split.positive.parts.size() != 1 || psi_split.positive.parts.size() != 1 ||
      phi_split.negative.parts.size() != 1 || psi_split.negative.parts.size() != 1)
    fail(Err::ValidationError, "heuristic congruence expects single-part splits");
  torsion::IsoVerdict pos = torsion::iso_modules(phi_split.positive.parts.front().x,
                                                 psi_split.positive.parts.front().x);
  torsion::IsoVerdict neg = torsion::iso_modules(phi_split.negative.parts.front().x,
                                                 psi_split.negative.parts.front().x);
  verdict.congruent = pos.iso && neg.iso;
  verdict.dilatation = std::max(pos.dilatation, neg.dilatation);
  return verdict;
}

OracleVerdict ratio_oracle(const ScalarGermField& alpha, const ScalarGermField& beta,
                           std::vector<int> refinements) {
  if (!alpha.zeros_known || !beta.zeros_known)
    fail(Err::ValidationError, "the oracle needs declared zero sets");
  std::sort(refinements.begin(), refinements.end());

  std::vector<double> locations;
  for (const GermZero& z : alpha.zeros) locations.push_back(z.at);
  for (const GermZero& z : beta.zeros) locations.push_back(z.at);
  std::sort(locations.begin(), locations.end());
  locations.erase(std::unique(locations.begin(), locations.end(),
                              [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
                  locations.end());

  struct ProbeSet {
    double ratio_low = std::numeric_limits<double>::infinity();
    double ratio_high = 0.0;
    bool sign_mismatch = false;
    bool divergent = false;
  };

  auto run = [&](const std::vector<int>& ks) {
    ProbeSet ps;
    for (double z0 : locations) {
      for (int dir : {-1, +1}) {
        double prev_ratio = -1.0;
        for (int k : ks) {
          const double z = z0 + dir * std::pow(10.0, -k);
          if (z <= 0.0 || z >= 1.0) continue;
          const double va = alpha.eval(z);
          const double vb = beta.eval(z);
          if ((va > 0.0) != (vb > 0.0)) ps.sign_mismatch = true;
          const double r = std::fabs(vb / va);
          ps.ratio_low = std::min(ps.ratio_low, r);
          ps.ratio_high = std::max(ps.ratio_high, r);
          if (prev_ratio > 0.0) {
            const double trend = r / prev_ratio;
            if (trend > 3.0 || trend < 1.0 / 3.0) ps.divergent = true;
          }
          prev_ratio = r;
        }
      }
    }
    // away from the zeros the ratio must stay two-sided bounded as well
    for (int j = 0; j < 256; ++j) {
      const double z = (j + 0.5) / 256.0;
      bool near = false;
      for (double z0 : locations)
        if (std::fabs(z - z0) < 1e-2) near = true;
      if (near) continue;
      const double va = alpha.eval(z);
      const double vb = beta.eval(z);
      if ((va > 0.0) != (vb > 0.0)) ps.sign_mismatch = true;
      const double r = std::fabs(vb / va);
      ps.ratio_low = std::min(ps.ratio_low, r);
      ps.ratio_high = std::max(ps.ratio_high, r);
    }
    return ps;
  };

  auto decide = [](const ProbeSet& ps) {
    if (ps.sign_mismatch || ps.divergent) return OracleVerdict::Answer::NotCongruent;
    const double cap = 1e3;
    if (ps.ratio_high <= cap && ps.ratio_low >= 1.0 / cap) return OracleVerdict::Answer::Congruent;
    return OracleVerdict::Answer::Inconclusive;
  };

  OracleVerdict out;
  out.refinements = refinements;
  const ProbeSet full = run(refinements);
  out.ratio_low = full.ratio_low;
  out.ratio_high = full.ratio_high;
  OracleVerdict::Answer answer = decide(full);
  if (refinements.size() >= 2) {
    std::vector<int> coarse(refinements.begin(), refinements.end() - 1);
    if (decide(run(coarse)) != answer) answer = OracleVerdict::Answer::Inconclusive;
  }
  out.answer = answer;
  return out;
}

fields::ScalarGermField random_germ_field(Rng& rng, int max_zeros) {
  const int count = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_zeros)));
  std::vector<int> slots;
  while (static_cast<int>(slots.size()) < count) {
    int s = 1 + static_cast<int>(rng.below(31));
    if (std::find(slots.begin(), slots.end(), s) == slots.end()) slots.push_back(s);
  }
  std::sort(slots.begin(), slots.end());
  std::vector<double> locations;
  std::vector<int> orders;
  for (int s : slots) {
    locations.push_back(static_cast<double>(s) / 32.0);
    orders.push_back(1 + static_cast<int>(rng.below(3)));
  }
  const double unit_sign = rng.uniform01() < 0.5 ? 1.0 : -1.0;

  // expression: unit_sign (1 + z/2) prod (z - a_i)^{p_i}
  expr::ScalarExpr e = expr::constant(unit_sign) *
                       (expr::constant(1.0) + expr::coordinate() * expr::constant(0.5));
  for (std::size_t i = 0; i < locations.size(); ++i)
    e = e * expr::pow_int(expr::coordinate() - expr::constant(locations[i]),
                          orders[i]);

  std::vector<GermZero> zeros;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const double a = locations[i];
    double coeff = std::fabs(unit_sign * (1.0 + a / 2.0));
    double base_sign = unit_sign * (1.0 + a / 2.0) > 0.0 ? 1.0 : -1.0;
    for (std::size_t jj = 0; jj < locations.size(); ++jj) {
      if (jj == i) continue;
      const double factor = std::pow(a - locations[jj], orders[jj]);
      coeff *= std::fabs(factor);
      base_sign *= factor > 0.0 ? 1.0 : -1.0;
    }
    GermZero z;
    z.at = a;
    SideGerm right;
    right.order = orders[i];
    right.sign = base_sign > 0.0 ? 1 : -1;
    right.coeff = coeff;
    SideGerm left = right;
    if (orders[i] % 2 != 0) left.sign = -left.sign;
    z.left = left;
    z.right = right;
    zeros.push_back(z);
  }
  fields::ScalarGermField out;
  out.expression = std::move(e);
  out.zeros = std::move(zeros);
  out.zeros_known = true;
  // products of nearby germ factors legitimately dip far below the default
  // floor just outside the exclusion radius
  out.floor = 1e-16;
  out.validate();
  return out;
}

forms::TorsionForm random_symbolic_form(Rng& rng, int max_zeros) {
  return forms::discriminant(OperatorField::symbolic(random_germ_field(rng, max_zeros)));
}

}  // namespace tforms::classify
