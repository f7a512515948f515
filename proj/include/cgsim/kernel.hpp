#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "cgsim/adversary.hpp"
#include "cgsim/class_cg.hpp"
#include "cgsim/domain.hpp"
#include "cgsim/rng.hpp"

// High-throughput trial engine for the mixture-class experiments.
//
// The generic path materializes every member subset; at the committed scale
// (|B| = 1e7, s = 2.5e5, 1e5 trials) that is far too slow, so this engine
// keeps each random subset lazy: only the elements a trial actually touches
// are ever drawn, by the exchangeable urn rule
//    P(next draw = already-revealed member v) = 1/s  for each v,
//    P(next draw is fresh)                    = (s - f)/s, fresh uniform
//                                               over base minus decisions.
// Set-identity comparisons and overlap thresholds are resolved exactly by
// revealing just enough of the sets (or, when a query is genuinely
// ambiguous, by materializing the remainder), so the trial law matches the
// explicit reference implementation; the equivalence is tested.

namespace cgsim::kernel {

class SubsetTable {
 public:
  static constexpr std::uint32_t kBase = 0;

  explicit SubsetTable(std::uint64_t base_n);

  // Lazy uniform size-s subset of the base, conditioned to contain
  // `forced` (distinct values). Returns its handle.
  std::uint32_t new_subset(std::uint64_t s, std::span<const std::uint64_t> forced = {});

  std::uint64_t subset_size(std::uint32_t h) const;
  std::uint64_t base_n() const { return base_n_; }

  // One draw uniform over the subset.
  std::uint64_t draw_member(std::uint32_t h, RandomSource& rng);

  // Ordering of canonical encodings: -1, 0, +1 for enc(a) vs enc(b).
  int compare_enc(std::uint32_t a, std::uint32_t b, RandomSource& rng);

  // Exact indicator draw of the event |a n b| >= t.
  bool overlap_at_least(std::uint32_t a, std::uint32_t b, std::int64_t t, RandomSource& rng);
  // Same against a fixed sorted element list.
  bool overlap_with_sorted_at_least(std::uint32_t a, const std::vector<std::uint64_t>& sorted,
                                    std::int64_t t, RandomSource& rng);

  // Draws every remaining hidden element. Exposed for tests.
  void materialize(std::uint32_t h, RandomSource& rng);
  bool is_materialized(std::uint32_t h) const;
  const std::vector<std::uint64_t>& decided_members(std::uint32_t h) const;

 private:
  struct Sub {
    std::uint64_t s = 0;
    std::vector<std::uint64_t> in;   // sorted decided members
    std::vector<std::uint64_t> out;  // sorted decided non-members
    bool full = false;               // `in` holds the whole subset
  };

  Sub& sub(std::uint32_t h);
  const Sub& sub(std::uint32_t h) const;
  // Resolves membership of v in h (exact integer Bernoulli).
  bool decide_membership(std::uint32_t h, std::uint64_t v, RandomSource& rng);
  std::uint64_t fresh_hidden_value(Sub& s, RandomSource& rng);

  std::uint64_t base_n_;
  std::vector<Sub> subs_;  // handle h corresponds to subs_[h-1]
};

// Collapsed sample element; `subset` is a SubsetTable handle and is only
// meaningful for indicators.
struct Elem {
  Kind kind = Kind::Const;
  std::uint64_t value = 0;
  std::uint32_t subset = SubsetTable::kBase;
};

struct ChannelStats {
  std::int32_t n_const = 0;
  std::int32_t n_odds = 0;
  std::int32_t n_ind = 0;
  std::int32_t size = 0;
  bool repeated_odds = false;
};

enum class Feature { IndicatorPresence, RepeatedOdds, OddsCount };
inline constexpr Feature kAllFeatures[] = {Feature::IndicatorPresence, Feature::RepeatedOdds,
                                           Feature::OddsCount};
const char* feature_name(Feature f);
double feature_value(const ChannelStats& st, Feature f);

// Scale parameters shared by one experiment.
struct CgScale {
  std::uint64_t base_n = 0;  // |B|; the base set is {0,...,base_n-1}
  std::uint64_t s = 0;       // member subset size
  std::uint64_t j = 2;
  std::uint64_t k = 3;
  Rat eta;
  std::int64_t m = 0;
  std::int64_t k_add = 2;

  // derived
  std::int64_t r = 0;        // floor(eta*m)
  double p_const = 0, p_odd = 0, p_ind = 0;
  double p_const_cond = 0;   // const weight of the non-indicator conditional

  static CgScale from(const CgParams& p, const MetaQ& q, const Rat& eta, std::int64_t m,
                      std::int64_t k_add);
};

// Precomputed failure-threshold decisions at gamma/2 (exact comparisons).
struct FailureThresholds {
  bool fallback_fails = false;      // tv(delta_00, member) = 1/j   vs gamma/2
  bool base_vs_subset_fails = false;// tv(p_B, p_B') with B' subset vs gamma/2
  std::int64_t o_star = 0;          // least overlap with tv <= gamma/2 (same-size sets)
  static FailureThresholds from(const CgScale& sc, const Rat& gamma);
};

struct Candidate {
  bool is_base = false;
  std::vector<std::uint64_t> elems;  // sorted, size s (when not base)
  std::vector<std::uint64_t> bits;   // membership bitmap over the base interval

  void build_bits(std::uint64_t base_n);
  bool contains(std::uint64_t v) const {
    if (is_base) return true;
    if (!bits.empty()) return (bits[v >> 6] >> (v & 63)) & 1;
    return std::binary_search(elems.begin(), elems.end(), v);
  }
};

enum class ChannelId { Raw, Sub, Pair, AddK };

struct TrialPlan {
  bool raw = false;
  bool sub = false;
  bool pair = false;
  bool addk = false;
  bool learners_sub = false;
  bool learners_addk = false;
  bool learners_raw = false;  // no-adversary control
  FailureThresholds thresholds;
  std::vector<Candidate> candidates;  // [0] must be the base member when present
  std::uint64_t stream_tag = 0;
};

struct TrialResult {
  ChannelStats raw[2], sub[2], pair[2], addk[2];
  std::int64_t size_sub[2] = {0, 0}, size_pair[2] = {0, 0}, size_addk[2] = {0, 0};
  bool fail_real_sub[2] = {false, false}, fail_min_sub[2] = {false, false};
  bool fail_real_addk[2] = {false, false}, fail_min_addk[2] = {false, false};
  bool fail_real_raw[2] = {false, false}, fail_min_raw[2] = {false, false};
};

// Runs `trials` independent paired trials (arm 0: data from the base
// member; arm 1: data from a fresh random member). Results land at fixed
// indices, so the output is identical for any thread count.
void run_cg_trials(const CgScale& sc, const TrialPlan& plan, std::uint64_t master_seed,
                   std::int64_t trials, std::vector<TrialResult>& out, bool parallel);

// Serial reference loop, kept for the parallel-equivalence test and the
// benchmark target.
void run_cg_trials_serial(const CgScale& sc, const TrialPlan& plan, std::uint64_t master_seed,
                          std::int64_t trials, std::vector<TrialResult>& out);

}  // namespace cgsim::kernel
