#include "cgsim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace cgsim {

Prior Prior::power(CgParams member, std::int64_t m) {
  Prior pr;
  pr.form = Form::Power;
  pr.p = std::move(member);
  pr.m = m;
  return pr;
}

Prior Prior::meta_power(MetaQ q, std::int64_t m) {
  Prior pr;
  pr.form = Form::MetaPower;
  pr.q = std::move(q);
  pr.m = m;
  return pr;
}

std::uint64_t Prior::j() const { return form == Form::Power ? p->j : q->base.j; }
std::uint64_t Prior::k() const { return form == Form::Power ? p->k : q->base.k; }
const SetId& Prior::base_set() const { return form == Form::Power ? p->B : q->base.B; }

Sample v_sub(const Sample& s, const Rat& eta, RandomSource& rng) {
  if (s.contains_deleted()) throw std::invalid_argument("v_sub: sample contains deleted marks");
  const std::int64_t m = s.size();
  const std::int64_t r = budget_count(eta, m);
  Partition part = partition(s);
  const Sample noind = part.constants.union_with(part.odds);
  if (part.indicators.size() <= r) {
    return choose(noind, m - r, rng);
  }
  return noind.union_with(choose(part.indicators, part.indicators.size() - r, rng));
}

// Weights evaluated in double, which is the sampling precision everywhere
// outside the rational oracle.
std::int64_t truncated_indicator_count(std::int64_t m, std::uint64_t k, std::int64_t r,
                                       RandomSource& rng) {
  std::vector<double> w(static_cast<std::size_t>(r) + 1);
  const double lp = std::log(1.0 / static_cast<double>(k));
  const double lq = std::log1p(-1.0 / static_cast<double>(k));
  double lbin = 0.0;  // log C(m, t)
  for (std::int64_t t = 0; t <= r; ++t) {
    if (t > 0) lbin += std::log(static_cast<double>(m - t + 1)) - std::log(static_cast<double>(t));
    w[static_cast<std::size_t>(t)] =
        std::exp(lbin + static_cast<double>(t) * lp + static_cast<double>(m - t) * lq);
  }
  return static_cast<std::int64_t>(rng.weighted(w));
}

namespace {

std::uint64_t uniform_element(const SetId& b, RandomSource& rng) {
  if (b.is_interval()) return rng.below(b.interval_n());
  return b.elements()[rng.below(b.elements().size())];
}

// One draw from the member's non-indicator conditional:
// const w.p. (1-1/j)/(1-1/k), else a uniform element of B at the odd level.
DomainElement draw_non_indicator(const CgParams& member, RandomSource& rng) {
  const double j = static_cast<double>(member.j), k = static_cast<double>(member.k);
  const double p_const = (1.0 - 1.0 / j) / (1.0 - 1.0 / k);
  if (rng.bernoulli(p_const)) return DomainElement::constant();
  return DomainElement::odd(uniform_element(member.B, rng), member.odd_level());
}

std::vector<std::uint64_t> distinct_odd_values(const Sample& odds, std::uint32_t expected_level) {
  std::vector<std::uint64_t> vals;
  for (const auto& [e, n] : odds.counts()) {
    if (e.level() != expected_level)
      throw InconsistentSample("inverse_sub: odd level does not match the prior's j");
    vals.push_back(e.value());
  }
  return vals;
}

// Uniform size-s superset of `forced` inside `base`.
SetId complete_subset(const SetId& base, std::uint64_t s, const std::vector<std::uint64_t>& forced,
                      RandomSource& rng) {
  if (forced.size() > s)
    throw InconsistentSample("inverse_sub: more distinct odds than the member subset size");
  std::unordered_set<std::uint64_t> chosen(forced.begin(), forced.end());
  std::vector<std::uint64_t> elems(forced);
  elems.reserve(static_cast<std::size_t>(s));
  // Rejection against the (few) already-chosen values; base is much larger
  // than s in every supported configuration, and for small bases the loop
  // still terminates quickly because s < |B|.
  while (elems.size() < s) {
    std::uint64_t v = uniform_element(base, rng);
    if (chosen.insert(v).second) elems.push_back(v);
  }
  return SetId::of(std::move(elems));
}

void check_member_consistency(const Sample& s_prime, const Partition& part, const Prior& prior) {
  const std::uint32_t odd_level = static_cast<std::uint32_t>(2 * prior.j() + 1);
  for (const auto& [e, n] : part.odds.counts()) {
    if (e.level() != odd_level)
      throw InconsistentSample("inverse_sub: odd level inconsistent with prior");
    if (prior.form == Prior::Form::Power) {
      if (!prior.p->B.contains(e.value()))
        throw InconsistentSample("inverse_sub: odd value outside the member's support");
    } else {
      if (!prior.q->base.B.contains(e.value()))
        throw InconsistentSample("inverse_sub: odd value outside the base set");
    }
  }
  if (s_prime.contains_deleted())
    throw InconsistentSample("inverse_sub: sample contains deleted marks");
}

}  // namespace

Sample inverse_sub(const Sample& s_prime, const Prior& prior, const Rat& eta, RandomSource& rng) {
  const std::int64_t m = prior.m;
  const std::int64_t r = budget_count(eta, m);
  if (s_prime.size() != m - r)
    throw InconsistentSample("inverse_sub: |S'| does not equal m - floor(eta*m)");
  Partition part = partition(s_prime);
  check_member_consistency(s_prime, part, prior);

  if (part.indicators.empty()) {
    const std::int64_t t = truncated_indicator_count(m, prior.k(), r, rng);
    Sample out = s_prime;
    if (prior.form == Prior::Form::Power) {
      const CgParams& member = *prior.p;
      if (t > 0) out.add(member.indicator_element(), t);
      for (std::int64_t i = 0; i < r - t; ++i) out.add(draw_non_indicator(member, rng));
      return out;
    }
    const MetaQ& q = *prior.q;
    const auto forced = distinct_odd_values(part.odds, static_cast<std::uint32_t>(2 * q.base.j + 1));
    SetId member_set = complete_subset(q.base.B, q.subset_size, forced, rng);
    CgParams member(member_set, q.base.j, q.base.k);
    Sample out2 = s_prime;
    if (t > 0) out2.add(member.indicator_element(), t);
    for (std::int64_t i = 0; i < r - t; ++i) out2.add(draw_non_indicator(member, rng));
    return out2;
  }

  // Budget exceeded: v_sub kept noind(S) whole and deleted exactly r
  // indicators, so S = S' plus r more copies of the surviving identity.
  if (part.indicators.counts().size() != 1)
    throw InconsistentSample("inverse_sub: surviving indicators with mixed identities");
  const DomainElement& ind = part.indicators.counts().front().first;
  if (prior.form == Prior::Form::Power) {
    if (ind != prior.p->indicator_element())
      throw InconsistentSample("inverse_sub: surviving indicator does not match the member");
  } else {
    const MetaQ& q = *prior.q;
    if (ind.level() != static_cast<std::uint32_t>(2 * q.base.j + 2) ||
        ind.set().size() != q.subset_size)
      throw InconsistentSample("inverse_sub: surviving indicator has the wrong shape");
    for (const auto& [e, n] : part.odds.counts())
      if (!ind.set().contains(e.value()))
        throw InconsistentSample("inverse_sub: surviving indicator misses an observed odd");
  }
  Sample out = s_prime;
  if (r > 0) out.add(ind, r);
  return out;
}

Sample v_add_pair(const Sample& s, const Rat& eta, const Prior& other_prior, RandomSource& rng) {
  if (eta >= Rat(1, 2)) throw std::invalid_argument("v_add_pair: requires eta < 1/2");
  Sample core = v_sub(s, eta, rng);
  Sample inv = inverse_sub(core, other_prior, eta, rng);
  return inv.union_with(s.difference(core));
}

UniversalAdditiveConfig::UniversalAdditiveConfig(std::int64_t k_, Prior pp, Prior pq, Rat eta_)
    : k(k_), prior_p(std::move(pp)), prior_q(std::move(pq)), eta(std::move(eta_)) {
  if (k < 1) throw std::invalid_argument("UniversalAdditiveConfig: k must be >= 1");
  if (eta >= Rat(1, 2 * k))
    throw std::invalid_argument("UniversalAdditiveConfig: requires eta < 1/(2k)");
}

Sample v_add_k(const Sample& s, const UniversalAdditiveConfig& cfg, RandomSource& rng) {
  const std::uint64_t u = rng.below(static_cast<std::uint64_t>(cfg.k) + 1);
  Sample core = v_sub(s, cfg.eta, rng);
  Sample out = s;
  for (std::int64_t i = 1; i <= cfg.k; ++i) {
    const Prior& prior = (static_cast<std::uint64_t>(i) <= u) ? cfg.prior_p : cfg.prior_q;
    Sample inv = inverse_sub(core, prior, cfg.eta, rng);
    out = out.union_with(inv.difference(core));
  }
  return out;
}

DomainElement element_random_delete(const DomainElement& x, const FiniteDistribution& p,
                                    const FiniteDistribution& r, const Rat& eta,
                                    RandomSource& rng) {
  const double px = p.mass(x);
  if (!(px > 0.0)) throw std::invalid_argument("element_random_delete: p(x) must be positive");
  const double hazard = to_double(eta) * r.mass(x);
  if (hazard > px)
    throw std::invalid_argument("element_random_delete: eta*r(x) > p(x), invalid decomposition");
  return rng.bernoulli(hazard / px) ? DomainElement::deleted() : x;
}

LiftResult v_adp_lift_detail(const Sample& s, const FiniteDistribution& p,
                             const FiniteDistribution& r, const Rat& eta, RandomSource& rng) {
  const std::int64_t m = s.size();
  const std::int64_t big_r = to_i64(rat_ceil(eta * Rat(m)));
  for (const auto& [e, n] : r.entries()) {
    if (to_double(eta) * n > p.mass(e))
      throw std::invalid_argument("v_adp_lift: eta*r(x) > p(x), invalid decomposition");
  }
  Sample survivors, deleted;
  for (const auto& [e, n] : s.counts()) {
    for (std::int64_t i = 0; i < n; ++i) {
      if (element_random_delete(e, p, r, eta, rng).kind() == Kind::Deleted) {
        deleted.add(e);
      } else {
        survivors.add(e);
      }
    }
  }
  LiftResult res;
  res.case2 = deleted.size() <= big_r;
  if (!res.case2) {
    // Too many deletions: pad back uniformly chosen deleted elements.
    Sample padding = choose(deleted, (m - big_r) - survivors.size(), rng);
    res.output = survivors.union_with(padding);
  } else {
    res.output = choose(survivors, m - big_r, rng);
  }
  return res;
}

Sample v_adp_lift(const Sample& s, const FiniteDistribution& p, const FiniteDistribution& r,
                  const Rat& eta, RandomSource& rng) {
  return v_adp_lift_detail(s, p, r, eta, rng).output;
}

Json AdversarySpec::to_json() const {
  Json j{{"eta", rat_to_string(eta)}};
  switch (kind) {
    case Kind::Sub: j["kind"] = "sub"; break;
    case Kind::AddPair: j["kind"] = "add_pair"; break;
    case Kind::AddK:
      j["kind"] = "add_k";
      j["k"] = k;
      break;
    case Kind::Lift: j["kind"] = "lift"; break;
  }
  return j;
}

AdversarySpec AdversarySpec::from_json(const Json& j) {
  AdversarySpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sub") {
    spec.kind = Kind::Sub;
  } else if (kind == "add_pair") {
    spec.kind = Kind::AddPair;
  } else if (kind == "add_k") {
    spec.kind = Kind::AddK;
    spec.k = j.at("k").get<std::int64_t>();
  } else if (kind == "lift") {
    spec.kind = Kind::Lift;
  } else {
    throw std::invalid_argument("AdversarySpec: bad kind " + kind);
  }
  spec.eta = parse_rat(j.at("eta").get<std::string>());
  return spec;
}

}  // namespace cgsim
