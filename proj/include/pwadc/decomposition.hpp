#pragma once

#include "pwadc/pwa.hpp"

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>

namespace pwadc {

enum class Method { Folds, Optim, Novel };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Folds: return "Folds";
    case Method::Optim: return "Optim";
    case Method::Novel: return "Novel";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "Folds" || s == "folds") return Method::Folds;
  if (s == "Optim" || s == "optim") return Method::Optim;
  if (s == "Novel" || s == "novel") return Method::Novel;
  throw std::invalid_argument("unknown decomposition method '" + s + "'");
}

struct DecompositionStats {
  std::size_t cells_g = 0;
  std::size_t cells_h = 0;
  long lp_calls = 0;
  double wall_time = 0.0;  // seconds
};

struct ArrangementInfo {
  std::size_t hyperplanes = 0;  // distinct fold separators p'
  std::size_t cells = 0;        // |K|
};

/// f = g - h with g, h convex PWA functions.
struct Decomposition {
  PwaFunction g;
  PwaFunction h;
  Method method = Method::Folds;
  DecompositionStats stats;
  bool regularized = false;
  std::string objective;  // Optim/Novel only
  std::optional<ArrangementInfo> arrangement;
  bool convex_domain = true;  // F is a single polyhedron
};

class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Wall time and LP-call delta for a scope.
class StatsScope {
 public:
  StatsScope() : t0_(std::chrono::steady_clock::now()), calls0_(lp::call_counter().load()) {}
  void finish(DecompositionStats& s) const {
    s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    s.lp_calls = lp::call_counter().load() - calls0_;
  }

 private:
  std::chrono::steady_clock::time_point t0_;
  long calls0_;
};

}  // namespace detail

}  // namespace pwadc
