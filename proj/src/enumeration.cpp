#include "cgsim/enumeration.hpp"

#include <algorithm>

namespace cgsim {

Rat law_total(const Law& l) {
  Rat t = 0;
  for (const auto& [s, p] : l) t += p;
  return t;
}

Rat tv_law(const Law& a, const Law& b) {
  Rat acc = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      acc += ia->second;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      acc += ib->second;
      ++ib;
    } else {
      Rat d = ia->second - ib->second;
      acc += d < 0 ? Rat(-d) : d;
      ++ia, ++ib;
    }
  }
  return acc / 2;
}

Law apply_channel(const Law& in, const Channel& ch) {
  Law out;
  for (const auto& [s, p] : in) {
    Law piece = ch(s);
    for (const auto& [t, q] : piece) out[t] += p * q;
  }
  return out;
}

namespace {

// Distributes m draws over the support entries; multinomial weights.
void power_rec(const std::vector<std::pair<DomainElement, Rat>>& support, std::size_t idx,
               std::int64_t remaining, const Rat& weight, Sample acc, Law& out) {
  if (remaining == 0) {
    out[std::move(acc)] += weight;
    return;
  }
  if (idx + 1 == support.size()) {
    acc.add(support[idx].first, remaining);
    out[std::move(acc)] += weight * rat_pow(support[idx].second, remaining);
    return;
  }
  for (std::int64_t take = 0; take <= remaining; ++take) {
    Sample s = acc;
    if (take > 0) s.add(support[idx].first, take);
    power_rec(support, idx + 1, remaining - take,
               weight * Rat(binomial(remaining, take)) * rat_pow(support[idx].second, take),
               std::move(s), out);
  }
}

}  // namespace

Law power_law(const ExactDistribution& p, std::int64_t m) {
  if (m < 0) throw std::invalid_argument("power_law: m must be >= 0");
  Law out;
  if (m == 0 || p.entries().empty()) {
    out[Sample{}] = 1;
    return out;
  }
  power_rec(p.entries(), 0, m, Rat(1), Sample{}, out);
  return out;
}

std::vector<CgParams> enumerate_members(const MetaQ& q, std::uint64_t cap) {
  const std::uint64_t n = q.base.B.size(), s = q.subset_size;
  if (binomial(n, s) > BigInt(cap))
    throw std::domain_error("enumerate_members: C(|B|, s) exceeds the enumeration cap");
  std::vector<std::uint64_t> base;
  if (q.base.B.is_interval()) {
    base.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) base[i] = i;
  } else {
    base = q.base.B.elements();
  }
  std::vector<CgParams> members;
  std::vector<std::uint64_t> idx(s);
  for (std::uint64_t i = 0; i < s; ++i) idx[i] = i;
  while (true) {
    std::vector<std::uint64_t> elems;
    elems.reserve(s);
    for (auto i : idx) elems.push_back(base[i]);
    members.emplace_back(SetId::of(std::move(elems)), q.base.j, q.base.k);
    // next combination
    std::int64_t pos = static_cast<std::int64_t>(s) - 1;
    while (pos >= 0 && idx[pos] == n - s + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (std::uint64_t t = pos + 1; t < s; ++t) idx[t] = idx[t - 1] + 1;
  }
  return members;
}

Law meta_power_law(const MetaQ& q, std::int64_t m, std::uint64_t cap) {
  const auto members = enumerate_members(q, cap);
  const Rat w(1, members.size());
  Law out;
  for (const auto& member : members) {
    Law piece = power_law(make_distribution_exact(member), m);
    for (const auto& [s, p] : piece) out[s] += w * p;
  }
  return out;
}

Law prior_law(const Prior& prior, std::uint64_t cap) {
  if (prior.form == Prior::Form::Power)
    return power_law(make_distribution_exact(*prior.p), prior.m);
  return meta_power_law(*prior.q, prior.m, cap);
}

namespace {

void choose_rec(const std::vector<std::pair<DomainElement, std::int64_t>>& counts, std::size_t idx,
                std::int64_t remaining, const BigInt& ways, Sample acc, Law& out,
                const BigInt& denom) {
  if (remaining == 0) {
    out[std::move(acc)] += Rat(ways, denom);
    return;
  }
  if (idx >= counts.size()) return;
  std::int64_t avail = counts[idx].second;
  for (std::int64_t take = 0; take <= std::min(avail, remaining); ++take) {
    Sample s = acc;
    if (take > 0) s.add(counts[idx].first, take);
    choose_rec(counts, idx + 1, remaining - take, ways * binomial(avail, take), std::move(s), out,
               denom);
  }
}

}  // namespace

Law choose_law(const Sample& s, std::int64_t n) {
  if (n < 0 || n > s.size()) throw std::invalid_argument("choose_law: n out of range");
  Law out;
  choose_rec(s.counts(), 0, n, 1, Sample{}, out, binomial(s.size(), n));
  return out;
}

Law v_sub_law(const Sample& s, const Rat& eta) {
  if (s.contains_deleted()) throw std::invalid_argument("v_sub_law: deleted marks present");
  const std::int64_t m = s.size();
  const std::int64_t r = budget_count(eta, m);
  Partition part = partition(s);
  const Sample noind = part.constants.union_with(part.odds);
  if (part.indicators.size() <= r) return choose_law(noind, m - r);
  Law kept_ind = choose_law(part.indicators, part.indicators.size() - r);
  Law out;
  for (const auto& [ind_part, p] : kept_ind) out[noind.union_with(ind_part)] += p;
  return out;
}

namespace {

ExactDistribution non_indicator_conditional(const CgParams& member) {
  std::vector<std::uint64_t> xs;
  if (member.B.is_interval()) {
    xs.resize(member.B.interval_n());
    for (std::uint64_t i = 0; i < xs.size(); ++i) xs[i] = i;
  } else {
    xs = member.B.elements();
  }
  const Rat denom = Rat(1) - Rat(1, member.k);
  std::vector<std::pair<DomainElement, Rat>> mass;
  mass.emplace_back(DomainElement::constant(), (Rat(1) - Rat(1, member.j)) / denom);
  const Rat per_odd = (Rat(1, member.j) - Rat(1, member.k)) / (Rat(xs.size()) * denom);
  for (auto x : xs) mass.emplace_back(DomainElement::odd(x, member.odd_level()), per_odd);
  return ExactDistribution::from_mass(std::move(mass));
}

// P(T = t | T <= r), T ~ Binom(m, 1/k), exact.
std::vector<Rat> truncated_indicator_weights(std::int64_t m, std::uint64_t k, std::int64_t r) {
  std::vector<Rat> w(static_cast<std::size_t>(r) + 1);
  Rat total = 0;
  for (std::int64_t t = 0; t <= r; ++t) {
    w[t] = Rat(binomial(m, t)) * rat_pow(Rat(1, k), t) * rat_pow(Rat(1) - Rat(1, k), m - t);
    total += w[t];
  }
  for (auto& v : w) v /= total;
  return w;
}

// All size-s supersets of `forced` inside base, uniform.
std::vector<SetId> complete_subset_all(const SetId& base, std::uint64_t s,
                                       const std::vector<std::uint64_t>& forced,
                                       std::uint64_t cap) {
  if (forced.size() > s) throw InconsistentSample("completion: too many forced values");
  std::vector<std::uint64_t> pool;
  if (base.is_interval()) {
    for (std::uint64_t x = 0; x < base.interval_n(); ++x)
      if (std::find(forced.begin(), forced.end(), x) == forced.end()) pool.push_back(x);
  } else {
    for (auto x : base.elements())
      if (std::find(forced.begin(), forced.end(), x) == forced.end()) pool.push_back(x);
  }
  const std::uint64_t need = s - forced.size();
  if (binomial(pool.size(), need) > BigInt(cap))
    throw std::domain_error("completion: too many completions to enumerate");
  std::vector<SetId> out;
  if (need == 0) {
    out.push_back(SetId::of(forced));
    return out;
  }
  std::vector<std::uint64_t> idx(need);
  for (std::uint64_t i = 0; i < need; ++i) idx[i] = i;
  while (true) {
    std::vector<std::uint64_t> elems(forced);
    for (auto i : idx) elems.push_back(pool[i]);
    out.push_back(SetId::of(std::move(elems)));
    std::int64_t pos = static_cast<std::int64_t>(need) - 1;
    while (pos >= 0 && idx[pos] == pool.size() - need + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (std::uint64_t t = pos + 1; t < need; ++t) idx[t] = idx[t - 1] + 1;
  }
  return out;
}

// Law of S' + t indicators + (r - t) fresh non-indicator draws, for a
// fixed member, mixing over t with the truncated-binomial weights.
void member_inverse_law(const Sample& s_prime, const CgParams& member,
                        const std::vector<Rat>& t_weights, std::int64_t r, const Rat& outer,
                        Law& out) {
  const ExactDistribution nu = non_indicator_conditional(member);
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(t_weights.size()); ++t) {
    if (t_weights[t] == 0) continue;
    Sample with_ind = s_prime;
    if (t > 0) with_ind.add(member.indicator_element(), t);
    Law fresh = power_law(nu, r - t);
    for (const auto& [extra, q] : fresh)
      out[with_ind.union_with(extra)] += outer * t_weights[t] * q;
  }
}

}  // namespace

Law inverse_sub_law(const Sample& s_prime, const Prior& prior, const Rat& eta, std::uint64_t cap) {
  const std::int64_t m = prior.m;
  const std::int64_t r = budget_count(eta, m);
  if (s_prime.size() != m - r)
    throw InconsistentSample("inverse_sub_law: |S'| does not equal m - floor(eta*m)");
  Partition part = partition(s_prime);

  Law out;
  if (part.indicators.empty()) {
    const auto t_weights = truncated_indicator_weights(m, prior.k(), r);
    if (prior.form == Prior::Form::Power) {
      member_inverse_law(s_prime, *prior.p, t_weights, r, Rat(1), out);
      return out;
    }
    const MetaQ& q = *prior.q;
    std::vector<std::uint64_t> forced;
    for (const auto& [e, n] : part.odds.counts()) forced.push_back(e.value());
    const auto completions = complete_subset_all(q.base.B, q.subset_size, forced, cap);
    const Rat w(1, completions.size());
    for (const auto& set : completions)
      member_inverse_law(s_prime, CgParams(set, q.base.j, q.base.k), t_weights, r, w, out);
    return out;
  }

  if (part.indicators.counts().size() != 1)
    throw InconsistentSample("inverse_sub_law: mixed surviving indicator identities");
  Sample s = s_prime;
  if (r > 0) s.add(part.indicators.counts().front().first, r);
  out[std::move(s)] = 1;
  return out;
}

std::pair<Law, Law> lift_case_laws(const Sample& s, const ExactDistribution& p,
                                   const ExactDistribution& r, const Rat& eta) {
  const std::int64_t m = s.size();
  const std::int64_t big_r = to_i64(rat_ceil(eta * Rat(m)));

  // Deletion hazard per distinct element.
  std::vector<Rat> hazard;
  for (const auto& [e, n] : s.counts()) {
    const Rat pe = p.mass(e);
    if (pe == 0) throw std::invalid_argument("lift_law: p(x) = 0 on a sample point");
    const Rat h = eta * r.mass(e) / pe;
    if (h > 1) throw std::invalid_argument("lift_law: eta*r(x) > p(x)");
    hazard.push_back(h);
  }

  // Enumerate per-element binomial deletion counts.
  struct Split {
    Sample survivors, deleted;
    Rat prob;
  };
  std::vector<Split> splits{{Sample{}, Sample{}, Rat(1)}};
  std::size_t idx = 0;
  for (const auto& [e, n] : s.counts()) {
    std::vector<Split> next;
    for (const auto& sp : splits) {
      for (std::int64_t d = 0; d <= n; ++d) {
        Split s2 = sp;
        if (n - d > 0) s2.survivors.add(e, n - d);
        if (d > 0) s2.deleted.add(e, d);
        s2.prob *= Rat(binomial(n, d)) * rat_pow(hazard[idx], d) *
                   rat_pow(Rat(1) - hazard[idx], n - d);
        if (s2.prob != 0) next.push_back(std::move(s2));
      }
    }
    splits = std::move(next);
    ++idx;
  }

  std::pair<Law, Law> out;
  for (const auto& sp : splits) {
    if (sp.deleted.size() > big_r) {
      // Over budget: pad with uniformly chosen deleted elements.
      Law pad = choose_law(sp.deleted, (m - big_r) - sp.survivors.size());
      for (const auto& [extra, q] : pad) out.first[sp.survivors.union_with(extra)] += sp.prob * q;
    } else {
      Law sub = choose_law(sp.survivors, m - big_r);
      for (const auto& [kept, q] : sub) out.second[kept] += sp.prob * q;
    }
  }
  return out;
}

Law lift_law(const Sample& s, const ExactDistribution& p, const ExactDistribution& r,
             const Rat& eta) {
  auto [case1, case2] = lift_case_laws(s, p, r, eta);
  for (const auto& [t, q] : case2) case1[t] += q;
  return case1;
}

Rat exact_channel_tv(const CgParams& p, const MetaQ& q, std::int64_t m, const Channel& ch,
                     std::uint64_t cap) {
  if (m > 3) throw std::domain_error("exact_channel_tv: m must be <= 3");
  if (p.B.size() + 2 > 8) throw std::domain_error("exact_channel_tv: member support too large");
  Law lp = apply_channel(power_law(make_distribution_exact(p), m), ch);
  Law lq = apply_channel(meta_power_law(q, m, cap), ch);
  return tv_law(lp, lq);
}

Law roundtrip_law(const Prior& prior, const Rat& eta, std::uint64_t cap) {
  Law base = prior_law(prior, cap);
  Channel forward_then_back = [&](const Sample& s) {
    Law fwd = v_sub_law(s, eta);
    Law out;
    for (const auto& [sp, w] : fwd) {
      Law inv = inverse_sub_law(sp, prior, eta, cap);
      for (const auto& [s2, w2] : inv) out[s2] += w * w2;
    }
    return out;
  };
  return apply_channel(base, forward_then_back);
}

}  // namespace cgsim
