#include "cgsim/kernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include <omp.h>

namespace cgsim::kernel {

namespace {

bool sorted_contains(const std::vector<std::uint64_t>& v, std::uint64_t x) {
  return std::binary_search(v.begin(), v.end(), x);
}

void sorted_insert(std::vector<std::uint64_t>& v, std::uint64_t x) {
  v.insert(std::lower_bound(v.begin(), v.end(), x), x);
}

// Iterates the smaller side; the larger is probed by binary search.
std::int64_t sorted_intersection_size(const std::vector<std::uint64_t>& a,
                                      const std::vector<std::uint64_t>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  std::int64_t n = 0;
  for (auto v : small) n += std::binary_search(big.begin(), big.end(), v);
  return n;
}

double lchoose(double n, double r) {
  return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

// Tail negligibility margin: ln(1e-15). Below this, the overlap event is
// resolved deterministically instead of materializing a quarter-million
// element subset; the induced error is smaller than double rounding over
// any realistic trial count.
constexpr double kLogNegligible = -34.539;

}  // namespace

SubsetTable::SubsetTable(std::uint64_t base_n) : base_n_(base_n) {
  if (base_n < 2) throw std::invalid_argument("SubsetTable: base set must have >= 2 elements");
}

SubsetTable::Sub& SubsetTable::sub(std::uint32_t h) {
  if (h == kBase || h > subs_.size()) throw std::logic_error("SubsetTable: bad handle");
  return subs_[h - 1];
}

const SubsetTable::Sub& SubsetTable::sub(std::uint32_t h) const {
  if (h == kBase || h > subs_.size()) throw std::logic_error("SubsetTable: bad handle");
  return subs_[h - 1];
}

std::uint32_t SubsetTable::new_subset(std::uint64_t s, std::span<const std::uint64_t> forced) {
  if (s == 0 || s >= base_n_)
    throw std::invalid_argument("SubsetTable: subset size must satisfy 0 < s < base_n");
  Sub sb;
  sb.s = s;
  sb.in.assign(forced.begin(), forced.end());
  std::sort(sb.in.begin(), sb.in.end());
  if (std::adjacent_find(sb.in.begin(), sb.in.end()) != sb.in.end())
    throw std::invalid_argument("SubsetTable: forced values must be distinct");
  if (!sb.in.empty() && sb.in.back() >= base_n_)
    throw std::invalid_argument("SubsetTable: forced value outside the base set");
  if (sb.in.size() > s) throw InconsistentSample("SubsetTable: more forced values than subset size");
  if (sb.in.size() == s) sb.full = true;
  subs_.push_back(std::move(sb));
  return static_cast<std::uint32_t>(subs_.size());
}

std::uint64_t SubsetTable::subset_size(std::uint32_t h) const {
  return h == kBase ? base_n_ : sub(h).s;
}

std::uint64_t SubsetTable::fresh_hidden_value(Sub& sb, RandomSource& rng) {
  while (true) {
    std::uint64_t v = rng.below(base_n_);
    if (!sorted_contains(sb.in, v) && !sorted_contains(sb.out, v)) return v;
  }
}

std::uint64_t SubsetTable::draw_member(std::uint32_t h, RandomSource& rng) {
  if (h == kBase) return rng.below(base_n_);
  Sub& sb = sub(h);
  const std::uint64_t slot = rng.below(sb.s);
  if (slot < sb.in.size()) return sb.in[slot];
  // A hidden slot: reveal a fresh member, uniform over the undecided pool.
  std::uint64_t v = fresh_hidden_value(sb, rng);
  sorted_insert(sb.in, v);
  return v;
}

bool SubsetTable::decide_membership(std::uint32_t h, std::uint64_t v, RandomSource& rng) {
  if (h == kBase) return v < base_n_;
  Sub& sb = sub(h);
  if (sorted_contains(sb.in, v)) return true;
  if (sb.full) return false;
  if (sorted_contains(sb.out, v)) return false;
  const std::uint64_t hidden = sb.s - sb.in.size();
  const std::uint64_t pool = base_n_ - sb.in.size() - sb.out.size();
  if (rng.below(pool) < hidden) {
    sorted_insert(sb.in, v);
    if (sb.in.size() == sb.s) sb.full = true;
    return true;
  }
  sorted_insert(sb.out, v);
  return false;
}

void SubsetTable::materialize(std::uint32_t h, RandomSource& rng) {
  if (h == kBase) throw std::logic_error("SubsetTable: cannot materialize the base set");
  Sub& sb = sub(h);
  if (sb.full) return;
  const std::uint64_t need = sb.s - sb.in.size();
  const std::uint64_t pool = base_n_ - sb.in.size() - sb.out.size();
  if (base_n_ <= (1u << 20) && pool < 4 * need) {
    // Dense regime: enumerate the pool and take a partial shuffle.
    std::vector<std::uint64_t> candidates;
    candidates.reserve(pool);
    for (std::uint64_t v = 0; v < base_n_; ++v)
      if (!sorted_contains(sb.in, v) && !sorted_contains(sb.out, v)) candidates.push_back(v);
    for (std::uint64_t i = 0; i < need; ++i) {
      std::uint64_t j = i + rng.below(candidates.size() - i);
      std::swap(candidates[i], candidates[j]);
      sb.in.push_back(candidates[i]);
    }
  } else {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(need) * 2);
    while (chosen.size() < need) {
      std::uint64_t v = rng.below(base_n_);
      if (sorted_contains(sb.in, v) || sorted_contains(sb.out, v)) continue;
      chosen.insert(v);
    }
    sb.in.insert(sb.in.end(), chosen.begin(), chosen.end());
  }
  std::sort(sb.in.begin(), sb.in.end());
  sb.out.clear();
  sb.out.shrink_to_fit();
  sb.full = true;
}

bool SubsetTable::is_materialized(std::uint32_t h) const { return sub(h).full; }

const std::vector<std::uint64_t>& SubsetTable::decided_members(std::uint32_t h) const {
  return sub(h).in;
}

int SubsetTable::compare_enc(std::uint32_t a, std::uint32_t b, RandomSource& rng) {
  if (a == b) return 0;
  // The base strictly contains every table subset, so its encoding is larger.
  if (a == kBase) return 1;
  if (b == kBase) return -1;
  // Reveal memberships from the top element down; the first value held by
  // exactly one side decides. Bounded scan, then a materialized fallback.
  std::uint64_t steps = 0;
  for (std::uint64_t t = base_n_; t-- > 0;) {
    const bool xa = decide_membership(a, t, rng);
    const bool xb = decide_membership(b, t, rng);
    if (xa != xb) return xa ? 1 : -1;
    if (++steps >= 4096) break;
  }
  if (steps < 4096) return 0;  // scanned the whole base: equal sets
  materialize(a, rng);
  materialize(b, rng);
  const auto& ea = sub(a).in;
  const auto& eb = sub(b).in;
  std::size_t i = ea.size(), j = eb.size();
  while (i > 0 && j > 0) {
    if (ea[i - 1] != eb[j - 1]) return ea[i - 1] < eb[j - 1] ? -1 : 1;
    --i, --j;
  }
  if (i == j) return 0;
  return i < j ? -1 : 1;
}

bool SubsetTable::overlap_at_least(std::uint32_t a, std::uint32_t b, std::int64_t t,
                                   RandomSource& rng) {
  if (t <= 0) return true;
  if (a == b) return t <= static_cast<std::int64_t>(subset_size(a));
  if (a == kBase) return t <= static_cast<std::int64_t>(subset_size(b));
  if (b == kBase) return t <= static_cast<std::int64_t>(subset_size(a));

  const Sub& sa = sub(a);
  const Sub& sb = sub(b);
  const std::int64_t known = sorted_intersection_size(sa.in, sb.in);
  if (t <= known) return true;

  // Decided members of one side that the other side has not ruled on yet;
  // computed from set sizes so a materialized side stays cheap.
  //   |in_a \ (in_b u out_b)| = |in_a| - |in_a n in_b| - |in_a n out_b|
  const std::int64_t a_pending =
      sb.full ? 0
              : static_cast<std::int64_t>(sa.in.size()) - known -
                    sorted_intersection_size(sa.in, sb.out);
  const std::int64_t b_pending =
      sa.full ? 0
              : static_cast<std::int64_t>(sb.in.size()) - known -
                    sorted_intersection_size(sb.in, sa.out);
  const auto ha = static_cast<std::int64_t>(sa.full ? 0 : sa.s - sa.in.size());
  const auto hb = static_cast<std::int64_t>(sb.full ? 0 : sb.s - sb.in.size());
  if (t > known + a_pending + b_pending + std::min(ha, hb)) return false;

  const std::int64_t t_hidden = t - known - a_pending - b_pending;
  if (t_hidden > 0 && ha > 0 && hb > 0) {
    const auto pa = static_cast<double>(base_n_ - sa.in.size() - sa.out.size());
    const auto pb = static_cast<double>(base_n_ - sb.in.size() - sb.out.size());
    const auto td = static_cast<double>(t_hidden);
    if (td < pa && td < pb) {
      // Union bound over candidate t_hidden-subsets of the shared pool.
      const double log_p = lchoose(std::min(pa, pb), td) +
                           td * (std::log(static_cast<double>(ha)) - std::log(pa - td)) +
                           td * (std::log(static_cast<double>(hb)) - std::log(pb - td));
      if (log_p < kLogNegligible) return false;
    }
  }

  materialize(a, rng);
  materialize(b, rng);
  return sorted_intersection_size(sub(a).in, sub(b).in) >= t;
}

bool SubsetTable::overlap_with_sorted_at_least(std::uint32_t a,
                                               const std::vector<std::uint64_t>& sorted,
                                               std::int64_t t, RandomSource& rng) {
  if (t <= 0) return true;
  if (a == kBase) return t <= static_cast<std::int64_t>(sorted.size());

  const Sub& sa = sub(a);
  const std::int64_t known = sorted_intersection_size(sa.in, sorted);
  if (t <= known) return true;
  // Candidate elements not yet ruled on for a.
  const std::int64_t avail = sa.full ? 0
                                     : static_cast<std::int64_t>(sorted.size()) - known -
                                           sorted_intersection_size(sa.out, sorted);
  const auto ha = static_cast<std::int64_t>(sa.full ? 0 : sa.s - sa.in.size());
  if (t > known + std::min(ha, avail)) return false;

  const std::int64_t t_hidden = t - known;
  const auto pa = static_cast<double>(base_n_ - sa.in.size() - sa.out.size());
  const auto td = static_cast<double>(t_hidden);
  if (ha > 0 && td < pa) {
    const double log_p = lchoose(static_cast<double>(avail), td) +
                         td * (std::log(static_cast<double>(ha)) - std::log(pa - td));
    if (log_p < kLogNegligible) return false;
  }
  materialize(a, rng);
  return sorted_intersection_size(sub(a).in, sorted) >= t;
}

// --------------------------------------------------------------------------
// features
// --------------------------------------------------------------------------

void Candidate::build_bits(std::uint64_t base_n) {
  if (is_base) return;
  bits.assign((base_n + 63) / 64, 0);
  for (auto v : elems) bits[v >> 6] |= std::uint64_t{1} << (v & 63);
}

const char* feature_name(Feature f) {
  switch (f) {
    case Feature::IndicatorPresence: return "indicator_presence";
    case Feature::RepeatedOdds: return "repeated_odds";
    case Feature::OddsCount: return "odds_count";
  }
  throw std::logic_error("unreachable");
}

double feature_value(const ChannelStats& st, Feature f) {
  switch (f) {
    case Feature::IndicatorPresence: return st.n_ind >= 1 ? 1.0 : 0.0;
    case Feature::RepeatedOdds: return st.repeated_odds ? 1.0 : 0.0;
    case Feature::OddsCount: return static_cast<double>(st.n_odds);
  }
  throw std::logic_error("unreachable");
}

// --------------------------------------------------------------------------
// scale setup
// --------------------------------------------------------------------------

CgScale CgScale::from(const CgParams& p, const MetaQ& q, const Rat& eta, std::int64_t m,
                      std::int64_t k_add) {
  if (!p.B.is_interval())
    throw std::invalid_argument("kernel: the base set must be an interval at scale");
  if (!(p.j == q.base.j && p.k == q.base.k && p.B == q.base.B))
    throw std::invalid_argument("kernel: p and Q must share (B, j, k)");
  CgScale sc;
  sc.base_n = p.B.interval_n();
  sc.s = q.subset_size;
  sc.j = p.j;
  sc.k = p.k;
  sc.eta = eta;
  sc.m = m;
  sc.k_add = k_add;
  sc.r = budget_count(eta, m);
  const double j_d = static_cast<double>(p.j), k_d = static_cast<double>(p.k);
  sc.p_const = 1.0 - 1.0 / j_d;
  sc.p_odd = 1.0 / j_d - 1.0 / k_d;
  sc.p_ind = 1.0 / k_d;
  sc.p_const_cond = sc.p_const / (1.0 - sc.p_ind);
  return sc;
}

FailureThresholds FailureThresholds::from(const CgScale& sc, const Rat& gamma) {
  FailureThresholds th;
  const Rat half = gamma / 2;
  const Rat unit = Rat(1, sc.j) - Rat(1, sc.k);
  th.fallback_fails = Rat(1, sc.j) > half;
  th.base_vs_subset_fails =
      unit * (Rat(1) - Rat(sc.s, sc.base_n)) + Rat(1, sc.k) > half;
  if (half < Rat(1, sc.k)) {
    th.o_star = static_cast<std::int64_t>(sc.s) + 1;  // tv never reaches gamma/2
  } else {
    const Rat rhs = Rat(sc.s) * (Rat(1) - (half - Rat(1, sc.k)) / unit);
    std::int64_t o = to_i64(rat_ceil(rhs));
    th.o_star = std::clamp<std::int64_t>(o, 0, static_cast<std::int64_t>(sc.s) + 1);
  }
  return th;
}

// --------------------------------------------------------------------------
// trial internals
// --------------------------------------------------------------------------

namespace {

ChannelStats stats_of(const std::vector<Elem>& v, std::vector<std::uint64_t>& odd_scratch) {
  ChannelStats st;
  st.size = static_cast<std::int32_t>(v.size());
  odd_scratch.clear();
  for (const Elem& e : v) {
    switch (e.kind) {
      case Kind::Const: ++st.n_const; break;
      case Kind::Odd:
        ++st.n_odds;
        odd_scratch.push_back(e.value);
        break;
      case Kind::Indicator: ++st.n_ind; break;
      case Kind::Deleted: break;
    }
  }
  std::sort(odd_scratch.begin(), odd_scratch.end());
  st.repeated_odds =
      std::adjacent_find(odd_scratch.begin(), odd_scratch.end()) != odd_scratch.end();
  return st;
}

struct SubSplit {
  std::vector<Elem> kept;
  std::vector<Elem> deleted;
};

SubSplit v_sub_split(const std::vector<Elem>& s, std::int64_t r, RandomSource& rng) {
  SubSplit out;
  std::vector<std::uint32_t> ind_idx, noind_idx;
  for (std::uint32_t i = 0; i < s.size(); ++i) {
    (s[i].kind == Kind::Indicator ? ind_idx : noind_idx).push_back(i);
  }
  auto pick_delete = [&](std::vector<std::uint32_t>& pool, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
  };
  std::vector<bool> drop(s.size(), false);
  if (static_cast<std::int64_t>(ind_idx.size()) <= r) {
    for (auto i : ind_idx) drop[i] = true;
    const std::int64_t extra = r - static_cast<std::int64_t>(ind_idx.size());
    pick_delete(noind_idx, extra);
    for (std::int64_t i = 0; i < extra; ++i) drop[noind_idx[i]] = true;
  } else {
    pick_delete(ind_idx, r);
    for (std::int64_t i = 0; i < r; ++i) drop[ind_idx[i]] = true;
  }
  for (std::uint32_t i = 0; i < s.size(); ++i) (drop[i] ? out.deleted : out.kept).push_back(s[i]);
  return out;
}

// The r elements the subtractive adversary deleted, resampled from the
// posterior under the given prior; mirrors inverse_sub.
std::vector<Elem> inverse_deleted(const std::vector<Elem>& kept, bool power_prior,
                                  const CgScale& sc, SubsetTable& table, RandomSource& rng) {
  std::int64_t n_ind = 0;
  std::uint32_t ind_handle = SubsetTable::kBase;
  bool mixed = false;
  std::vector<std::uint64_t> odd_values;
  for (const Elem& e : kept) {
    if (e.kind == Kind::Indicator) {
      if (n_ind > 0 && e.subset != ind_handle) mixed = true;
      ind_handle = e.subset;
      ++n_ind;
    } else if (e.kind == Kind::Odd) {
      odd_values.push_back(e.value);
    }
  }

  std::vector<Elem> added;
  added.reserve(static_cast<std::size_t>(sc.r));
  if (n_ind == 0) {
    const std::int64_t t = truncated_indicator_count(sc.m, sc.k, sc.r, rng);
    std::uint32_t member = SubsetTable::kBase;
    if (!power_prior) {
      std::sort(odd_values.begin(), odd_values.end());
      odd_values.erase(std::unique(odd_values.begin(), odd_values.end()), odd_values.end());
      if (odd_values.size() > sc.s)
        throw InconsistentSample("inverse: more distinct odds than the member subset size");
      member = table.new_subset(sc.s, odd_values);
    }
    for (std::int64_t i = 0; i < t; ++i) added.push_back({Kind::Indicator, 0, member});
    for (std::int64_t i = 0; i < sc.r - t; ++i) {
      if (rng.bernoulli(sc.p_const_cond)) {
        added.push_back({Kind::Const, 0, SubsetTable::kBase});
      } else {
        const std::uint64_t v =
            power_prior ? rng.below(sc.base_n) : table.draw_member(member, rng);
        added.push_back({Kind::Odd, v, SubsetTable::kBase});
      }
    }
    return added;
  }

  if (mixed) throw InconsistentSample("inverse: mixed surviving indicator identities");
  if (power_prior && ind_handle != SubsetTable::kBase)
    throw InconsistentSample("inverse: surviving indicator does not match the member");
  if (!power_prior &&
      (ind_handle == SubsetTable::kBase || table.subset_size(ind_handle) != sc.s))
    throw InconsistentSample("inverse: surviving indicator has the wrong shape");
  for (std::int64_t i = 0; i < sc.r; ++i) added.push_back({Kind::Indicator, 0, ind_handle});
  return added;
}

struct EmpiricalSummary {
  std::int64_t n = 0;
  std::int64_t n_const = 0;
  std::vector<std::pair<std::uint64_t, std::int32_t>> odds;      // sorted by value
  std::vector<std::pair<std::uint32_t, std::int32_t>> indicators;  // first-seen order
};

EmpiricalSummary summarize(const std::vector<Elem>& v) {
  EmpiricalSummary e;
  e.n = static_cast<std::int64_t>(v.size());
  std::vector<std::uint64_t> odd_vals;
  for (const Elem& el : v) {
    switch (el.kind) {
      case Kind::Const: ++e.n_const; break;
      case Kind::Odd: odd_vals.push_back(el.value); break;
      case Kind::Indicator: {
        bool found = false;
        for (auto& [h, c] : e.indicators)
          if (h == el.subset) {
            ++c;
            found = true;
            break;
          }
        if (!found) e.indicators.emplace_back(el.subset, 1);
        break;
      }
      case Kind::Deleted: break;
    }
  }
  std::sort(odd_vals.begin(), odd_vals.end());
  for (auto v2 : odd_vals) {
    if (!e.odds.empty() && e.odds.back().first == v2) {
      ++e.odds.back().second;
    } else {
      e.odds.emplace_back(v2, 1);
    }
  }
  return e;
}

bool realizable_fails(const std::vector<Elem>& out, std::uint32_t truth, const CgScale& sc,
                      const FailureThresholds& th, SubsetTable& table, RandomSource& rng) {
  // Majority indicator, ties to the smallest canonical encoding.
  std::vector<std::pair<std::uint32_t, std::int32_t>> counts;
  for (const Elem& e : out) {
    if (e.kind != Kind::Indicator) continue;
    bool found = false;
    for (auto& [h, c] : counts)
      if (h == e.subset) {
        ++c;
        found = true;
        break;
      }
    if (!found) counts.emplace_back(e.subset, 1);
  }
  if (counts.empty()) return th.fallback_fails;
  std::uint32_t best = counts.front().first;
  std::int32_t best_count = counts.front().second;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    const auto [h, c] = counts[i];
    if (c > best_count || (c == best_count && table.compare_enc(h, best, rng) < 0)) {
      best = h;
      best_count = c;
    }
  }
  if (best == truth) return false;
  if (best == SubsetTable::kBase || truth == SubsetTable::kBase) return th.base_vs_subset_fails;
  if (th.o_star > static_cast<std::int64_t>(sc.s)) return true;
  return !table.overlap_at_least(best, truth, th.o_star, rng);
}

bool min_distance_fails(const std::vector<Elem>& out, std::uint32_t truth, const CgScale& sc,
                        const TrialPlan& plan, SubsetTable& table, RandomSource& rng) {
  const auto& cands = plan.candidates;
  if (cands.empty()) throw std::invalid_argument("min_distance: empty candidate pool");
  const EmpiricalSummary emp = summarize(out);
  const double n = static_cast<double>(emp.n);
  const double cc = sc.p_const;
  const double ind_mass = sc.p_ind;
  std::size_t winner = 0;
  double best_tv = 4.0;
  for (std::size_t ci = 0; ci < cands.size(); ++ci) {
    const Candidate& cand = cands[ci];
    const double unit =
        sc.p_odd / static_cast<double>(cand.is_base ? sc.base_n : sc.s);
    double diff = std::abs(cc - static_cast<double>(emp.n_const) / n);
    double covered = cc;
    for (const auto& [v, cnt] : emp.odds) {
      const double cv = cand.contains(v) ? unit : 0.0;
      diff += std::abs(cv - static_cast<double>(cnt) / n);
      covered += cv;
    }
    for (const auto& [h, cnt] : emp.indicators) {
      const double cv = (cand.is_base && h == SubsetTable::kBase) ? ind_mass : 0.0;
      diff += std::abs(cv - static_cast<double>(cnt) / n);
      covered += cv;
    }
    diff += 1.0 - covered;  // candidate mass off the empirical support
    const double tv = diff / 2.0;
    if (tv < best_tv) {
      best_tv = tv;
      winner = ci;
    }
  }
  const Candidate& w = cands[winner];
  const FailureThresholds& th = plan.thresholds;
  if (truth == SubsetTable::kBase) return w.is_base ? false : th.base_vs_subset_fails;
  if (w.is_base) return th.base_vs_subset_fails;
  if (th.o_star > static_cast<std::int64_t>(sc.s)) return true;
  return !table.overlap_with_sorted_at_least(truth, w.elems, th.o_star, rng);
}

void run_one_trial(const CgScale& sc, const TrialPlan& plan, std::uint64_t master_seed,
                   std::int64_t trial, TrialResult& res) {
  std::vector<std::uint64_t> scratch;
  for (int arm = 0; arm < 2; ++arm) {
    RandomSource base =
        RandomSource(master_seed, plan.stream_tag).fork(static_cast<std::uint64_t>(trial)).fork(arm);
    RandomSource rng_draw = base.fork(1);
    RandomSource rng_sub = base.fork(2);
    RandomSource rng_pair = base.fork(3);
    RandomSource rng_addk = base.fork(4);
    RandomSource rng_learn = base.fork(5);

    SubsetTable table(sc.base_n);
    const std::uint32_t truth = arm == 0 ? SubsetTable::kBase : table.new_subset(sc.s);

    std::vector<Elem> data;
    data.reserve(static_cast<std::size_t>(sc.m));
    for (std::int64_t i = 0; i < sc.m; ++i) {
      const double u = rng_draw.next_unit();
      if (u < sc.p_const) {
        data.push_back({Kind::Const, 0, SubsetTable::kBase});
      } else if (u < sc.p_const + sc.p_odd) {
        data.push_back({Kind::Odd, table.draw_member(truth, rng_draw), SubsetTable::kBase});
      } else {
        data.push_back({Kind::Indicator, 0, truth});
      }
    }
    if (plan.raw || plan.learners_raw) res.raw[arm] = stats_of(data, scratch);

    std::vector<Elem> sub_out, pair_out, addk_out;
    if (plan.sub || plan.pair || plan.addk || plan.learners_sub || plan.learners_addk) {
      SubSplit split = v_sub_split(data, sc.r, rng_sub);
      sub_out = split.kept;
      res.sub[arm] = stats_of(sub_out, scratch);
      res.size_sub[arm] = static_cast<std::int64_t>(sub_out.size());

      if (plan.pair) {
        // The paired additive adversary: completion under the *other* prior.
        const bool power_prior = (arm == 1);
        std::vector<Elem> added = inverse_deleted(sub_out, power_prior, sc, table, rng_pair);
        pair_out = data;
        pair_out.insert(pair_out.end(), added.begin(), added.end());
        res.pair[arm] = stats_of(pair_out, scratch);
        res.size_pair[arm] = static_cast<std::int64_t>(pair_out.size());
      }

      if (plan.addk || plan.learners_addk) {
        const std::uint64_t u = rng_addk.below(static_cast<std::uint64_t>(sc.k_add) + 1);
        addk_out = data;
        for (std::int64_t i = 1; i <= sc.k_add; ++i) {
          const bool power_prior = static_cast<std::uint64_t>(i) <= u;
          std::vector<Elem> added = inverse_deleted(sub_out, power_prior, sc, table, rng_addk);
          addk_out.insert(addk_out.end(), added.begin(), added.end());
        }
        res.addk[arm] = stats_of(addk_out, scratch);
        res.size_addk[arm] = static_cast<std::int64_t>(addk_out.size());
      }
    }

    if (plan.learners_sub) {
      res.fail_real_sub[arm] =
          realizable_fails(sub_out, truth, sc, plan.thresholds, table, rng_learn);
      res.fail_min_sub[arm] = min_distance_fails(sub_out, truth, sc, plan, table, rng_learn);
    }
    if (plan.learners_addk) {
      res.fail_real_addk[arm] =
          realizable_fails(addk_out, truth, sc, plan.thresholds, table, rng_learn);
      res.fail_min_addk[arm] = min_distance_fails(addk_out, truth, sc, plan, table, rng_learn);
    }
    if (plan.learners_raw) {
      res.fail_real_raw[arm] =
          realizable_fails(data, truth, sc, plan.thresholds, table, rng_learn);
      if (!plan.candidates.empty())
        res.fail_min_raw[arm] = min_distance_fails(data, truth, sc, plan, table, rng_learn);
    }
  }
}

}  // namespace

void run_cg_trials(const CgScale& sc, const TrialPlan& plan, std::uint64_t master_seed,
                   std::int64_t trials, std::vector<TrialResult>& out, bool parallel) {
  if ((plan.learners_sub || plan.learners_addk) && plan.candidates.empty())
    throw std::invalid_argument("run_cg_trials: learner evaluation needs a candidate pool");
  out.assign(static_cast<std::size_t>(trials), TrialResult{});
  std::atomic<bool> failed{false};
  std::string error;
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::int64_t t = 0; t < trials; ++t) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      run_one_trial(sc, plan, master_seed, t, out[static_cast<std::size_t>(t)]);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        if (!failed.exchange(true)) error = e.what();
      }
    }
  }
  if (failed.load()) throw std::runtime_error("kernel trial failed: " + error);
}

void run_cg_trials_serial(const CgScale& sc, const TrialPlan& plan, std::uint64_t master_seed,
                          std::int64_t trials, std::vector<TrialResult>& out) {
  run_cg_trials(sc, plan, master_seed, trials, out, false);
}

}  // namespace cgsim::kernel
