#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tforms/torsion.hpp"

// Form-level algorithms: presentations, discriminant forms, excision, the
// reduction to discriminant shape with functional-calculus certificates,
// positive/negative splitting, metabolizers, congruence, and the
// superfiniteness checks.
namespace tforms::forms {

using fields::OperatorField;
using torsion::TorsionObject;

// (f, h) presenting a Hermitian form on X = (alpha), with the Hermitian
// defect housed by the anti-symmetric correction: f - h^t = alpha . F
struct PresentationPair {
  TorsionObject x;
  OperatorField f;
  OperatorField h;
  OperatorField correction;  // F, anti-symmetric

  void validate() const;
};

// orthogonal sum of symmetrically presented components (f = h^t per part)
struct TorsionForm {
  struct Part {
    TorsionObject x;
    OperatorField f;  // the target-side map of the symmetric presentation
  };
  std::vector<Part> parts;

  bool symbolic() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;  // [lo, hi)
};

struct CongruenceCertificate {
  enum class Kind { Direct, ExcisionPair };
  Kind kind = Kind::Direct;
  OperatorField transform;  // the h (or k) field realizing the congruence
  std::vector<Interval> excised_source;
  std::vector<Interval> excised_target;
  double residual = 0.0;
  std::vector<std::pair<std::string, double>> checks;
};

struct SplittingWitness {
  OperatorField sigma;
  OperatorField delta;
  double residual = 0.0;    // || sigma alpha + delta f* - 1 ||
  double stack_floor = 0.0; // inf fiber sigma_min of [alpha; f*]
  double sigma_norm = 0.0;  // drives the epsilon selection
};

struct Excision {
  OperatorField p_field;      // projector onto the invertible part
  OperatorField q_field;      // projector onto the small-spectrum part
  OperatorField restricted;   // Q alpha Q extended by the identity on P
  std::vector<Interval> regions;
};

struct Reduction {
  OperatorField alpha_prime;
  CongruenceCertificate certificate;
};

struct PosNegSplit {
  TorsionForm positive;
  TorsionForm negative;
  std::vector<OperatorField> positive_projectors;  // one per input part
  std::vector<OperatorField> negative_projectors;
};

struct MetabolizerPart {
  TorsionObject y;
  OperatorField beta;   // y's presenting field, beta^* delta beta = alpha
  OperatorField delta;  // the sign field; an isomorphism per Prop-style criterion
  double delta_floor = 0.0;
  double residual = 0.0;
};

struct MetabolizerResult {
  std::vector<MetabolizerPart> parts;
  bool delta_criterion = false;
};

struct HyperbolicStructure {
  bool hyperbolic = false;
  bool heuristic = false;
  // present when hyperbolic: the common module Y and the off-diagonal
  // two-block presentation built from it
  std::vector<TorsionObject> metabolizer_parts;
  std::vector<OperatorField> off_diagonal_blocks;  // beta per part
  double annihilator_witness_sup = 0.0;            // F bound in t* B t = beta . F
  double complement_floor = 0.0;                   // invertibility of the complement form
  torsion::GermSignature distinguishing;           // first mismatches when not hyperbolic
};

struct SuperfiniteReport {
  bool ok = false;
  double inf_g_singular = 0.0;
  double inf_g_eigen = 0.0;
  double inf_f_singular = 0.0;
  double inf_f_eigen = 0.0;
  double condition_slack = 1.0;  // max fiber condition number of alpha
};

// ---- operations ----

TorsionForm symmetrize(const PresentationPair& p);

TorsionForm discriminant(const OperatorField& alpha);
TorsionForm orthogonal_sum(const TorsionForm& a, const TorsionForm& b);
TorsionForm negate(const TorsionForm& phi);

Excision excise_spectral(const OperatorField& alpha, double eps);

SplittingWitness splitting_witness(const OperatorField& alpha, const OperatorField& f);

// non-degeneracy: representative-level uniform invertibility, or the
// splitting criterion when the representative itself may vanish
bool certify_nondegenerate(const TorsionForm::Part& part);

Reduction reduce_to_discriminant(const TorsionForm& phi);

CongruenceCertificate excision_isometry(const OperatorField& alpha, const OperatorField& beta,
                                        const OperatorField& f, const OperatorField& g);

PosNegSplit pos_neg_split(const TorsionForm& phi);

MetabolizerResult metabolizer(const TorsionForm& phi);
// delta-boundedness criterion for a candidate metabolizer presentation
bool is_metabolizer(const OperatorField& alpha, const OperatorField& beta_candidate,
                    double floor = 1e-6, double bound = 1e6);

CongruenceCertificate congruence_positive(const OperatorField& alpha_phi,
                                          const OperatorField& alpha_psi, const OperatorField& f,
                                          const OperatorField& g);

OperatorField complete_diagram(const OperatorField& alpha, const OperatorField& f,
                               const OperatorField& g);

TorsionForm add_forms(const TorsionForm& phi, const TorsionForm& psi);

HyperbolicStructure is_hyperbolic(const TorsionForm& phi);

SuperfiniteReport superfinite_check(const OperatorField& alpha, const OperatorField& f,
                                    double floor = 1e-6);

bool spectrum_positivity(const OperatorField& alpha, const OperatorField& beta);

// union of the parts' germ signatures, sorted (symbolic exact mode)
torsion::GermSignature form_signature(const TorsionForm& phi);

}  // namespace tforms::forms
