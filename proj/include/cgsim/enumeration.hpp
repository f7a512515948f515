#pragma once

#include <functional>
#include <map>

#include "cgsim/adversary.hpp"
#include "cgsim/class_cg.hpp"
#include "cgsim/domain.hpp"

namespace cgsim {

// Exact distribution over samples, rational probabilities. Only usable at
// micro scale; this is the ground-truth side of every dual-route check.
using Law = std::map<Sample, Rat>;
using Channel = std::function<Law(const Sample&)>;

Rat law_total(const Law& l);
Rat tv_law(const Law& a, const Law& b);
Law apply_channel(const Law& in, const Channel& ch);

// Law of m i.i.d. draws collected into a multiset (multinomial weights).
Law power_law(const ExactDistribution& p, std::int64_t m);

// All size-s subsets of base B as members (B', j, k).
std::vector<CgParams> enumerate_members(const MetaQ& q, std::uint64_t cap = 100);

// Law of S ~ |Q|^m: uniform member, then i.i.d.
Law meta_power_law(const MetaQ& q, std::int64_t m, std::uint64_t cap = 100);

Law prior_law(const Prior& prior, std::uint64_t cap = 100);

// Law of choose(S, n).
Law choose_law(const Sample& s, std::int64_t n);

// Law of v_sub(S) at budget eta.
Law v_sub_law(const Sample& s, const Rat& eta);

// Law of the structured inverse sampler on input S'. Mirrors inverse_sub
// exactly (truncated-binomial indicator count, i.i.d. completions, uniform
// member completion), with rational weights.
Law inverse_sub_law(const Sample& s_prime, const Prior& prior, const Rat& eta,
                    std::uint64_t cap = 100);

// Law of the oblivious-lift output for a fixed input sample.
Law lift_law(const Sample& s, const ExactDistribution& p, const ExactDistribution& r,
             const Rat& eta);

// Same, split by case: first = over-budget branch (padding), second =
// in-budget branch (subsampling). Each is weighted by its case
// probability, so the two totals sum to 1.
std::pair<Law, Law> lift_case_laws(const Sample& s, const ExactDistribution& p,
                                   const ExactDistribution& r, const Rat& eta);

// Exact TV between channel(p^m) and channel(|Q|^m), brute force.
// Guards: m <= 3, member support <= 8, C(|B|, s) <= cap.
Rat exact_channel_tv(const CgParams& p, const MetaQ& q, std::int64_t m, const Channel& ch,
                     std::uint64_t cap = 100);

// Law of inverse_sub(v_sub(S)) for S ~ prior; equals the prior exactly when
// the structured sampler matches the Bayes posterior.
Law roundtrip_law(const Prior& prior, const Rat& eta, std::uint64_t cap = 100);

}  // namespace cgsim
