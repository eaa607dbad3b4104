#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tforms {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Error codes shared by all modules.
enum class Err {
  NotHermitian,
  NoConvergence,
  EigenvalueAtThreshold,
  SpectrumOnCut,
  ContourTooTight,
  SingularShift,
  KernelPresent,
  SpaceMismatch,
  DimMismatch,
  GridHitsZero,
  UndeclaredZeroSuspected,
  NotInjectiveDense,
  Degenerate,
  NoSplitting,
  JointlySingular,
  ContourFailure,
  SmallnessUnreachable,
  ZeroEigenvalueFiber,
  NotBlockDefinite,
  SpectrumNotPositive,
  NotConverging,
  NegativityDetected,
  HypothesisViolated,
  EmptyWindow,
  ParseError,
  ValidationError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg);
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] void fail(Err code, const std::string& msg);

// Portable deterministic uniforms on top of mt19937_64; std::uniform_*
// distributions are implementation-defined, these are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t bits() { return gen_(); }
  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }
  Complex complex_in_disk(double radius) {
    double re = uniform(-radius, radius);
    double im = uniform(-radius, radius);
    return Complex(re, im);
  }

 private:
  std::mt19937_64 gen_;
};

// Fiberwise maps are independent writes; honors TFORMS_THREADS (0/unset =
// hardware concurrency). Reductions stay sequential for reproducibility.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

inline double rel_scale(double norm) { return std::max(1.0, norm); }

}  // namespace tforms
