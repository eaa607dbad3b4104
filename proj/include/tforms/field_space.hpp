#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tforms/common.hpp"
#include "tforms/expr.hpp"

// Base measure spaces and decomposable operator fields over the circle
// [0,1) with Lebesgue measure, in sampled (one matrix per grid fiber) and
// symbolic (exact germ) representations.
namespace tforms::fields {

struct BaseSpace {
  enum class Kind { CircleGrid, SymbolicCircle };

  Kind kind = Kind::SymbolicCircle;
  int grid_n = 0;

  static BaseSpace circle_grid(int n);
  static BaseSpace symbolic_circle();

  // half-offset grid points never collide with dyadic-rational zeros
  double point(int j) const { return (static_cast<double>(j) + 0.5) / grid_n; }
  double weight() const { return 1.0 / grid_n; }

  bool operator==(const BaseSpace& other) const {
    return kind == other.kind && (kind == Kind::SymbolicCircle || grid_n == other.grid_n);
  }
};

// One-sided leading behavior at a zero: field(z) ~ sign * coeff * |z - at|^order.
struct SideGerm {
  int order = 1;
  int sign = 1;        // +1 or -1
  double coeff = 1.0;  // magnitude of the leading coefficient, > 0
};

struct GermZero {
  double at = 0.0;
  std::optional<SideGerm> left;
  std::optional<SideGerm> right;
};

// Real-valued scalar expression with declared (not inferred) zero set.
class ScalarGermField {
 public:
  expr::ScalarExpr expression;
  std::vector<GermZero> zeros;  // sorted by location, distinct
  bool zeros_known = false;
  double floor = 1e-9;   // |expr| stays above this away from declared zeros
  double radius = 1e-2;  // neighborhood radius used by the floor check

  static ScalarGermField with_germs(expr::ScalarExpr e, std::vector<GermZero> zeros);
  static ScalarGermField plain(expr::ScalarExpr e);  // germ data unknown

  double eval(double z) const { return expression.eval(z); }
  // germ consistency + floor sampling; throws on mismatch
  void validate() const;
};

// maximal intervals of constant sign, boundaries at zeros and pw breakpoints
struct SignRegion {
  double lo = 0.0;
  double hi = 1.0;
  int sign = 1;
};
std::vector<SignRegion> sign_regions(const ScalarGermField& f);

// A decomposable morphism: one complex matrix per fiber, or a symbolic
// scalar. Values are immutable; copies share fiber storage.
class OperatorField {
 public:
  enum class Repr { Sampled, Symbolic };

  OperatorField() = default;

  static OperatorField sampled(const BaseSpace& space, std::vector<Matrix> fibers);
  static OperatorField symbolic(ScalarGermField field);
  static OperatorField constant(const BaseSpace& space, const Matrix& fiber);
  static OperatorField identity(const BaseSpace& space, int dim);

  Repr repr() const { return repr_; }
  const BaseSpace& space() const { return space_; }
  int dim() const { return dim_; }

  std::size_t fiber_count() const;
  const Matrix& fiber(std::size_t j) const;
  const std::vector<Matrix>& fibers() const;
  const ScalarGermField& symbolic_field() const;

  bool is_hermitian() const;
  double eval_scalar(double z) const;  // symbolic only

 private:
  Repr repr_ = Repr::Sampled;
  BaseSpace space_;
  int dim_ = 0;
  std::shared_ptr<const std::vector<Matrix>> fibers_;
  std::shared_ptr<const ScalarGermField> symbolic_;
};

struct FieldNormReport {
  double ess_sup = 0.0;
  double inf_spectrum = 0.0;
  double zero_measure_estimate = 0.0;
};

struct InjectivityVerdict {
  bool ok = false;
  std::string witness;  // failing fiber / zero when not ok
};

OperatorField add(const OperatorField& a, const OperatorField& b);
OperatorField scale(Complex c, const OperatorField& a);
// compose(s, t) = s after t, fiberwise s(xi) * t(xi)
OperatorField compose(const OperatorField& s, const OperatorField& t);
OperatorField adjoint(const OperatorField& a);

// symbolic fields are evaluated on a default grid of this size
inline constexpr int kDefaultSymbolicGrid = 4096;

FieldNormReport ess_bounds(const OperatorField& t, int symbolic_grid = kDefaultSymbolicGrid);
InjectivityVerdict is_injective_dense(const OperatorField& alpha,
                                      int symbolic_grid = kDefaultSymbolicGrid);
OperatorField sample_symbolic(const ScalarGermField& f, int n);
OperatorField sample_symbolic(const OperatorField& f, int n);

// apply per fiber (parallel, deterministic slot writes)
OperatorField map_fibers(const OperatorField& a, const std::function<Matrix(const Matrix&)>& fn);
OperatorField zip_fibers(const OperatorField& a, const OperatorField& b,
                         const std::function<Matrix(const Matrix&, const Matrix&)>& fn);

}  // namespace tforms::fields
