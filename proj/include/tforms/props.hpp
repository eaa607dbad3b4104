#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tforms/classify.hpp"

// Seeded property suites shared by `tforms check` and the acceptance
// runner. Each function is deterministic in (seed, count).
namespace tforms::props {

struct PropertyResult {
  std::string name;
  bool pass = false;
  double metric = 0.0;  // governing residual or bound
  int instances = 0;
  std::string detail;
};

// linalg
PropertyResult eig_reconstruction(std::uint64_t seed, int count);
PropertyResult sqrt_cross_methods(std::uint64_t seed, int count);
PropertyResult projector_lattice(std::uint64_t seed, int count);
PropertyResult polar_identities(std::uint64_t seed, int count);
PropertyResult resolvent_residual(std::uint64_t seed, int count);

// fields + torsion + forms
PropertyResult field_algebra_exactness(std::uint64_t seed, int count);
PropertyResult hermitian_propagation(std::uint64_t seed, int count);
PropertyResult commuting_square(std::uint64_t seed, int count);
PropertyResult duality_identities(std::uint64_t seed, int count);
PropertyResult morphism_equivalence_relation(std::uint64_t seed, int count);
PropertyResult germ_unit_invariance(std::uint64_t seed);
PropertyResult transpose_involution(std::uint64_t seed, int count);
PropertyResult density_exponents(int grid);
PropertyResult excision_congruence(std::uint64_t seed, int count);
PropertyResult functional_calculus_k(std::uint64_t seed, int count);
PropertyResult functional_calculus_h(std::uint64_t seed, int count);
PropertyResult theorem48_pairs(std::uint64_t seed, int count);
PropertyResult germ_distinguished_pairs(std::uint64_t seed, int count);
PropertyResult split_reassembly(std::uint64_t seed, int count);
PropertyResult definite_forms_empty_opposite(std::uint64_t seed, int count);
PropertyResult metabolizer_blocks(std::uint64_t seed, int count);
PropertyResult complete_diagram_conjugation(std::uint64_t seed, int count);
PropertyResult add_forms_positivity(std::uint64_t seed, int count);
PropertyResult superfinite_instances(std::uint64_t seed, int count);
PropertyResult positivity_instances(std::uint64_t seed, int count);

// classify
PropertyResult classification_oracle_agreement(std::uint64_t seed, int count);
PropertyResult hyperbolicity_consistency(std::uint64_t seed, int count);
PropertyResult certificate_soundness(std::uint64_t seed, int count);

struct SuiteReport {
  std::string suite;
  std::vector<PropertyResult> results;
  int passed() const;
  int failed() const;
};

// suite is one of linalg | forms | classify | all
SuiteReport run_suite(const std::string& suite, std::uint64_t seed);

// deterministic instance helpers, exposed for tests
Matrix random_unitary(Rng& rng, int dim);
Matrix random_hermitian(Rng& rng, int dim, double lo, double hi);        // spectrum in [lo, hi]
Matrix random_hermitian_mixed(Rng& rng, int dim, double lo, double hi);  // |spectrum| in [lo, hi]
Matrix random_invertible(Rng& rng, int dim, double min_sv, double max_sv);

}  // namespace tforms::props
