#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cgsim/rational.hpp"
#include "cgsim/rng.hpp"

namespace cgsim {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// SetId: canonical identity of a finite subset of the naturals.
//
// The canonical encoding of a set B is the integer sum_{x in B} 2^x; two
// equal sets encode identically regardless of construction order. We keep
// the bijective representation (sorted unique element list) instead of the
// integer itself, plus a compact interval form {0,...,n-1} for the large
// base sets used at scale. Ordering and equality follow the encoding.
// ---------------------------------------------------------------------------
class SetId {
 public:
  static SetId of(std::vector<std::uint64_t> elems);  // canonicalizes
  static SetId interval(std::uint64_t n);             // {0,...,n-1}, n >= 1

  std::uint64_t size() const;
  bool contains(std::uint64_t x) const;
  bool is_interval() const { return rep_->interval; }
  std::uint64_t interval_n() const;
  // Elements in increasing order; only for explicit sets.
  const std::vector<std::uint64_t>& elements() const;
  std::uint64_t max_element() const;

  // Comparison by canonical encoding: -1, 0, +1.
  int compare(const SetId& o) const;
  bool operator==(const SetId& o) const { return compare(o) == 0; }
  bool operator!=(const SetId& o) const { return compare(o) != 0; }
  bool operator<(const SetId& o) const { return compare(o) < 0; }

  // sum_{x in B} 2^x; guarded against huge sets.
  BigInt encoding() const;

  std::size_t hash() const { return hash_; }

  Json to_json() const;
  static SetId from_json(const Json& j);

 private:
  struct Rep {
    bool interval = false;
    std::uint64_t n = 0;                   // interval size
    std::vector<std::uint64_t> elems;      // sorted unique (explicit form)
  };
  explicit SetId(std::shared_ptr<const Rep> rep);

  // k-th largest element, k in [0, size).
  std::uint64_t from_top(std::uint64_t k) const;

  std::shared_ptr<const Rep> rep_;
  std::size_t hash_ = 0;
};

enum class Kind : std::uint8_t { Const = 0, Odd = 1, Indicator = 2, Deleted = 3 };

// ---------------------------------------------------------------------------
// A point of the domain N x N plus the lift module's deletion mark:
//   Const      -> (0, 0)
//   Odd        -> (value, 2j+1)      level odd
//   Indicator  -> (set id, 2j+2)     level even, >= 2
//   Deleted    -> the mark, only meaningful inside the oblivious lift
// ---------------------------------------------------------------------------
class DomainElement {
 public:
  static DomainElement constant();
  static DomainElement odd(std::uint64_t value, std::uint32_t level);
  static DomainElement indicator(SetId set, std::uint32_t level);
  static DomainElement deleted();

  Kind kind() const { return kind_; }
  std::uint32_t level() const { return level_; }
  std::uint64_t value() const;       // Odd only
  const SetId& set() const;          // Indicator only

  int compare(const DomainElement& o) const;
  bool operator==(const DomainElement& o) const { return compare(o) == 0; }
  bool operator!=(const DomainElement& o) const { return compare(o) != 0; }
  bool operator<(const DomainElement& o) const { return compare(o) < 0; }

  std::size_t hash() const;
  std::string str() const;

  Json to_json() const;
  static DomainElement from_json(const Json& j);

 private:
  DomainElement(Kind k, std::uint64_t value, std::uint32_t level, std::optional<SetId> set);

  Kind kind_;
  std::uint32_t level_;
  std::uint64_t value_;
  std::optional<SetId> set_;
};

// ---------------------------------------------------------------------------
// Sample: a multiset over the domain. Stored as sorted (element, count)
// pairs; set operations follow multiset semantics, e.g.
//   {a,b,b,c} u {a,b,d,d} = {a,a,b,b,c,d,d}
//   {a,b,b,c} \ {a,b,d,d} = {b,c}
// ---------------------------------------------------------------------------
class Sample {
 public:
  Sample() = default;
  static Sample of(const std::vector<DomainElement>& elems);

  std::int64_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::int64_t count(const DomainElement& e) const;
  const std::vector<std::pair<DomainElement, std::int64_t>>& counts() const { return counts_; }

  void add(const DomainElement& e, std::int64_t n = 1);

  bool contains_deleted() const;

  Sample union_with(const Sample& o) const;
  Sample difference(const Sample& o) const;   // multiset difference
  bool submultiset_of(const Sample& o) const;

  int compare(const Sample& o) const;
  bool operator==(const Sample& o) const { return compare(o) == 0; }
  bool operator!=(const Sample& o) const { return compare(o) != 0; }
  bool operator<(const Sample& o) const { return compare(o) < 0; }

  std::string str() const;
  Json to_json() const;
  static Sample from_json(const Json& j);

 private:
  std::vector<std::pair<DomainElement, std::int64_t>> counts_;
  std::int64_t size_ = 0;
};

struct Partition {
  Sample constants;
  Sample odds;
  Sample indicators;
};

// Splits by variant tag. Pre: no Deleted marks.
Partition partition(const Sample& s);

// Uniformly random size-n sub-multiset (uniform over labeled copies,
// then collapsed). Pre: 0 <= n <= |S|.
Sample choose(const Sample& s, std::int64_t n, RandomSource& rng);

// ---------------------------------------------------------------------------
// Finite discrete distribution, sparse. Two arithmetic modes exist as two
// instantiations: double (float64 mode) and Rat (exact mode). Mixing modes
// without an explicit cast is a compile error, which is the mode-mismatch
// contract.
// ---------------------------------------------------------------------------
template <class P>
class BasicDistribution {
 public:
  BasicDistribution() = default;
  // Validates: masses in [0,1], sum == 1 (exact mode) or |sum-1| <= 1e-12.
  static BasicDistribution from_mass(std::vector<std::pair<DomainElement, P>> mass);
  static BasicDistribution point_mass(const DomainElement& e) { return from_mass({{e, P(1)}}); }

  P mass(const DomainElement& e) const;
  const std::vector<std::pair<DomainElement, P>>& entries() const { return mass_; }
  std::size_t support_size() const { return mass_.size(); }

  bool operator==(const BasicDistribution& o) const { return mass_ == o.mass_; }

  Json to_json() const;
  static BasicDistribution from_json(const Json& j);

 private:
  std::vector<std::pair<DomainElement, P>> mass_;  // sorted by element, p > 0
};

using FiniteDistribution = BasicDistribution<double>;
using ExactDistribution = BasicDistribution<Rat>;

ExactDistribution to_exact(const FiniteDistribution& p);   // dyadic-exact reading of each double
FiniteDistribution to_float(const ExactDistribution& p);

// Total variation distance: half the L1 gap over the union support.
double tv_exact(const FiniteDistribution& p, const FiniteDistribution& q);
Rat tv_exact(const ExactDistribution& p, const ExactDistribution& q);

// m i.i.d. draws. Bit-reproducible for a fixed RandomSource state.
Sample sample_iid(const FiniteDistribution& p, std::int64_t m, RandomSource& rng);

}  // namespace cgsim

template <>
struct std::hash<cgsim::DomainElement> {
  std::size_t operator()(const cgsim::DomainElement& e) const { return e.hash(); }
};
