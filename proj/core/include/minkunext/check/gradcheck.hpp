#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "minkunext/autodiff/tape.hpp"

namespace minkunext::check {

struct GradCheckOptions {
  double step = 1e-5;
  double rel_tolerance = 1e-4;
  /// Entries where both gradients are below this magnitude are not compared.
  double min_magnitude = 1e-6;
  /// Entries sampled per leaf tensor (all when the tensor is smaller).
  std::size_t max_entries_per_leaf = 24;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  std::string name;
  std::size_t compared = 0;
  /// Mismatching entries excused because one-sided slopes disagree (a kink
  /// of relu, max or the truncation lies within one step).
  std::size_t kinks = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;

  bool passed() const noexcept { return failures == 0 && compared > 0; }
};

/// Builds a scalar objective on the tape from the given leaves.
using Objective = std::function<ad::VarId(ad::Tape<double>&)>;

/// Compares tape gradients of `objective` with respect to every leaf in
/// `leaves` against central differences.
GradCheckResult check_gradients(std::string name, const std::vector<ad::Parameter<double>*>& leaves,
                                const Objective& objective, const GradCheckOptions& opts);

/// Names accepted by run_gradcheck_suite.
std::vector<std::string> gradcheck_case_names();

/// Runs every case, or only `only` when non-empty. Throws for an unknown name.
std::vector<GradCheckResult> run_gradcheck_suite(std::string_view only = {}, const GradCheckOptions& opts = {});

}  // namespace minkunext::check
