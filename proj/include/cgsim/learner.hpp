#pragma once

#include <optional>
#include <vector>

#include "cgsim/class_cg.hpp"
#include "cgsim/domain.hpp"

namespace cgsim {

struct LearnerOutput {
  FiniteDistribution estimate;
  std::optional<CgParams> decoded;
  std::int64_t indicators_seen = 0;
};

// Empirical distribution of a sample, raw frequencies, no smoothing.
// Pre: nonempty.
FiniteDistribution empirical_distribution(const Sample& s);

// Decodes the majority indicator (ties to the smallest canonical set
// encoding) as (B, j) and outputs p_{B, j, g(j)}; with no indicator in
// sight falls back to the point mass at (0,0), whose error against any
// member with parameter j is exactly 1/j.
LearnerOutput realizable_learner(const Sample& s, const GFunction& g);

// Proper baseline: the candidate closest in TV to the empirical
// distribution, ties broken by list order; the empty sample yields the
// first candidate. Candidates must be fixed before data is drawn.
LearnerOutput min_distance_learner(const Sample& s, const std::vector<CgParams>& candidates);

}  // namespace cgsim
