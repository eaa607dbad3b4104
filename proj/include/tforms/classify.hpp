#pragma once

#include <vector>

#include "tforms/forms.hpp"

// End-to-end decision procedures: full classification of torsion Hermitian
// forms and the independent ratio oracle validating every decision.
namespace tforms::classify {

struct ClassificationReport {
  enum class Mode { ExactSymbolic, HeuristicSampled };

  Mode mode = Mode::ExactSymbolic;
  torsion::GermSignature positive;
  torsion::GermSignature negative;
  double ns_exponent_positive = 0.0;  // NaN when the slot is trivial
  double ns_exponent_negative = 0.0;
  torsion::DensityCurve positive_curve;  // heuristic mode only
  torsion::DensityCurve negative_curve;
  std::vector<forms::CongruenceCertificate> certificates;  // reduction steps
};

ClassificationReport classify_form(const forms::TorsionForm& phi, int density_grid = 4096);

struct CongruenceVerdict {
  bool congruent = false;
  bool heuristic = false;
  double dilatation = 1.0;  // heuristic mode
  std::vector<forms::CongruenceCertificate> certificates;
  torsion::GermSignature distinguishing;  // first mismatch when not congruent
};

CongruenceVerdict congruent(const forms::TorsionForm& phi, const forms::TorsionForm& psi);

struct OracleVerdict {
  enum class Answer { Congruent, NotCongruent, Inconclusive };

  Answer answer = Answer::Inconclusive;
  double ratio_low = 1.0;
  double ratio_high = 1.0;
  std::vector<int> refinements;
};

// samples |beta/alpha| on punctured neighborhoods of the union of declared
// zero sets at radii 10^{-k}; entirely independent of the germ bookkeeping
OracleVerdict ratio_oracle(const fields::ScalarGermField& alpha,
                           const fields::ScalarGermField& beta,
                           std::vector<int> refinements = {2, 3, 4, 5, 6});

// seed-deterministic random instances: zeros at distinct multiples of 1/32,
// orders uniform in {1,2,3}, unit factor 1 + z/2
fields::ScalarGermField random_germ_field(Rng& rng, int max_zeros = 3);
forms::TorsionForm random_symbolic_form(Rng& rng, int max_zeros = 3);

}  // namespace tforms::classify
