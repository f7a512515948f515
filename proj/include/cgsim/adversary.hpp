#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cgsim/class_cg.hpp"
#include "cgsim/domain.hpp"

namespace cgsim {

// Raised when a claimed adversary output cannot arise from the stated prior.
struct InconsistentSample : std::runtime_error {
  explicit InconsistentSample(const std::string& what) : std::runtime_error(what) {}
};

// Fixed-constant-budget convention: the manipulated count at sample size m
// is floor(eta*m), the unique integer in (eta*m - 1, eta*m].
struct AdversaryBudget {
  enum class Kind { Additive, Subtractive };
  Rat eta;
  Kind kind = Kind::Subtractive;

  std::int64_t count(std::int64_t m) const { return to_i64(rat_floor(eta * Rat(m))); }
};

inline std::int64_t budget_count(const Rat& eta, std::int64_t m) {
  if (eta < 0 || eta >= 1) throw std::invalid_argument("budget: eta must lie in [0,1)");
  return to_i64(rat_floor(eta * Rat(m)));
}

// Prior over size-m samples: p^m for a fixed member, or |Q|^m (draw a
// member from Q, then sample i.i.d. from it).
struct Prior {
  enum class Form { Power, MetaPower };
  Form form = Form::Power;
  std::optional<CgParams> p;  // Power
  std::optional<MetaQ> q;     // MetaPower
  std::int64_t m = 0;

  static Prior power(CgParams member, std::int64_t m);
  static Prior meta_power(MetaQ q, std::int64_t m);

  std::uint64_t j() const;
  std::uint64_t k() const;
  const SetId& base_set() const;  // member B (Power) or the big B (MetaPower)
};

// Removes as many indicator elements as the budget allows, then removes
// uniformly chosen elements to land exactly on |S| - floor(eta|S|).
Sample v_sub(const Sample& s, const Rat& eta, RandomSource& rng);

// Posterior indicator count: T ~ Binom(m, 1/k) conditioned on T <= r.
// Shared by the explicit and collapsed inverse samplers.
std::int64_t truncated_indicator_count(std::int64_t m, std::uint64_t k, std::int64_t r,
                                       RandomSource& rng);

// Posterior resampling of the uncorrupted sample: returns S of size m
// distributed as the prior conditioned on v_sub(S) = s_prime. Structured
// sampler: the indicator count is truncated-binomial, deleted
// non-indicators are fresh i.i.d. draws from the member's non-indicator
// conditional, and the MetaPower member is completed uniformly among
// size-s supersets of the observed odds.
Sample inverse_sub(const Sample& s_prime, const Prior& prior, const Rat& eta, RandomSource& rng);

// Theorem-style paired additive adversary: add what the inverse under the
// other prior says the subtractive adversary would have deleted.
// Pre: eta < 1/2.
Sample v_add_pair(const Sample& s, const Rat& eta, const Prior& other_prior, RandomSource& rng);

struct UniversalAdditiveConfig {
  std::int64_t k = 1;
  Prior prior_p;
  Prior prior_q;
  Rat eta;

  UniversalAdditiveConfig(std::int64_t k_, Prior pp, Prior pq, Rat eta_);
};

// Single additive adversary: picks u uniform in {0..k}, draws k inverse
// completions (u from the p-prior, k-u from the Q-prior) and adds their
// fresh parts. Output size m + k*floor(eta*m).
Sample v_add_k(const Sample& s, const UniversalAdditiveConfig& cfg, RandomSource& rng);

// Appendix-style oblivious-to-adaptive lift.
// Deletes x with probability eta*r(x)/p(x); pre: eta*r(x) <= p(x), p(x) > 0.
DomainElement element_random_delete(const DomainElement& x, const FiniteDistribution& p,
                                    const FiniteDistribution& r, const Rat& eta,
                                    RandomSource& rng);

struct LiftResult {
  Sample output;       // size m - ceil(eta*m)
  bool case2 = false;  // deletion count stayed within the budget
};

LiftResult v_adp_lift_detail(const Sample& s, const FiniteDistribution& p,
                             const FiniteDistribution& r, const Rat& eta, RandomSource& rng);
Sample v_adp_lift(const Sample& s, const FiniteDistribution& p, const FiniteDistribution& r,
                  const Rat& eta, RandomSource& rng);

// Wire form of an adversary selection, used in experiment configs.
struct AdversarySpec {
  enum class Kind { Sub, AddPair, AddK, Lift };
  Kind kind = Kind::Sub;
  Rat eta;
  std::int64_t k = 1;  // AddK repetition count

  Json to_json() const;
  static AdversarySpec from_json(const Json& j);
};

}  // namespace cgsim
