#pragma once

#include <string>
#include <vector>

#include "tforms/field_space.hpp"

// Torsion objects X = (alpha: A -> A), their morphisms with the
// representative-equivalence relation, duality, and isomorphism tests.
namespace tforms::torsion {

using fields::OperatorField;

class TorsionObject {
 public:
  TorsionObject() = default;

  // requires a Hermitian field with dense image (injective fiberwise /
  // measure-zero symbolic zero set)
  static TorsionObject from_field(OperatorField alpha);

  const OperatorField& alpha() const { return alpha_; }
  bool symbolic() const { return alpha_.repr() == OperatorField::Repr::Symbolic; }

 private:
  OperatorField alpha_;
};

enum class Side { Left, Right };

struct GermEntry {
  double location = 0.0;
  Side side = Side::Right;
  int order = 1;
  int sign = 1;
};

// sorted by (location, side); the complete congruence invariant in
// symbolic mode
using GermSignature = std::vector<GermEntry>;

bool equal_signatures(const GermSignature& a, const GermSignature& b, bool forget_sign);
GermSignature forget_signs(GermSignature sig);

struct TorsionMorphism {
  TorsionObject source;
  TorsionObject target;
  OperatorField rep;      // f: acts on the target component
  OperatorField witness;  // g with f . alpha = beta . g, determined by f
};

// builds the witness fiberwise (or symbolically) and checks the diagram
TorsionMorphism make_morphism(TorsionObject source, TorsionObject target, OperatorField rep);
TorsionMorphism identity_morphism(const TorsionObject& x);

TorsionObject dual_object(const TorsionObject& x);
TorsionMorphism dual_morphism(const TorsionMorphism& m);

enum class Ternary { True, False, Inconclusive };

struct EqualityVerdict {
  Ternary verdict = Ternary::Inconclusive;
  double sup_norm = 0.0;  // sup over fibers of ||F||
};

// [f] = [f'] iff f - f' = beta . F with F bounded; decided against the
// bound B with an inconclusive band when the sup straddles [B/10, 10B]
EqualityVerdict morphisms_equal(const TorsionMorphism& m, const TorsionMorphism& m_prime,
                                double bound = 1e6, int symbolic_grid = fields::kDefaultSymbolicGrid);

// uniform-invertibility criterion on both the representative and the witness
bool is_isomorphism(const TorsionMorphism& m, double floor = 1e-6, double bound = 1e6,
                    int symbolic_grid = fields::kDefaultSymbolicGrid);

GermSignature germ_signature(const TorsionObject& x);

struct DensityCurve {
  std::vector<double> lambda;
  std::vector<double> value;  // F(lambda), non-decreasing
};

DensityCurve density_curve(const TorsionObject& x, double lambda_min, double lambda_max,
                           int points, int symbolic_grid = 65536);
double ns_exponent(const DensityCurve& curve);

struct IsoVerdict {
  bool iso = false;
  bool heuristic = false;
  double dilatation = 1.0;  // achieved c in heuristic mode
  std::string detail;
};

IsoVerdict iso_modules(const TorsionObject& x, const TorsionObject& y,
                       int symbolic_grid = fields::kDefaultSymbolicGrid);

}  // namespace tforms::torsion
