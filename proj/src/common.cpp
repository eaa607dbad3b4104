#include "tforms/common.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace tforms {

const char* err_name(Err e) {
  switch (e) {
    case Err::NotHermitian: return "NotHermitian";
    case Err::NoConvergence: return "NoConvergence";
    case Err::EigenvalueAtThreshold: return "EigenvalueAtThreshold";
    case Err::SpectrumOnCut: return "SpectrumOnCut";
    case Err::ContourTooTight: return "ContourTooTight";
    case Err::SingularShift: return "SingularShift";
    case Err::KernelPresent: return "KernelPresent";
    case Err::SpaceMismatch: return "SpaceMismatch";
    case Err::DimMismatch: return "DimMismatch";
    case Err::GridHitsZero: return "GridHitsZero";
    case Err::UndeclaredZeroSuspected: return "UndeclaredZeroSuspected";
    case Err::NotInjectiveDense: return "NotInjectiveDense";
    case Err::Degenerate: return "Degenerate";
    case Err::NoSplitting: return "NoSplitting";
    case Err::JointlySingular: return "JointlySingular";
    case Err::ContourFailure: return "ContourFailure";
    case Err::SmallnessUnreachable: return "SmallnessUnreachable";
    case Err::ZeroEigenvalueFiber: return "ZeroEigenvalueFiber";
    case Err::NotBlockDefinite: return "NotBlockDefinite";
    case Err::SpectrumNotPositive: return "SpectrumNotPositive";
    case Err::NotConverging: return "NotConverging";
    case Err::NegativityDetected: return "NegativityDetected";
    case Err::HypothesisViolated: return "HypothesisViolated";
    case Err::EmptyWindow: return "EmptyWindow";
    case Err::ParseError: return "ParseError";
    case Err::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Error::Error(Err code, const std::string& msg)
    : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}

void fail(Err code, const std::string& msg) { throw Error(code, msg); }

namespace {

unsigned thread_budget() {
  if (const char* env = std::getenv("TFORMS_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned threads = thread_budget();
  if (threads <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  if (threads > n) threads = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::exception_ptr> errors(threads, nullptr);
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, t, &body, &errors] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace tforms
