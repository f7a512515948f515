#include "cgsim/learner.hpp"

#include <algorithm>

namespace cgsim {

FiniteDistribution empirical_distribution(const Sample& s) {
  if (s.empty()) throw std::invalid_argument("empirical_distribution: empty sample");
  std::vector<std::pair<DomainElement, double>> mass;
  mass.reserve(s.counts().size());
  const double m = static_cast<double>(s.size());
  for (const auto& [e, n] : s.counts()) mass.emplace_back(e, static_cast<double>(n) / m);
  return FiniteDistribution::from_mass(std::move(mass));
}

LearnerOutput realizable_learner(const Sample& s, const GFunction& g) {
  const DomainElement* best = nullptr;
  std::int64_t best_count = 0;
  std::int64_t seen = 0;
  for (const auto& [e, n] : s.counts()) {
    if (e.kind() != Kind::Indicator) continue;
    seen += n;
    if (n > best_count || (n == best_count && best && e.set().compare(best->set()) < 0)) {
      best = &e;
      best_count = n;
    }
  }
  LearnerOutput out;
  out.indicators_seen = seen;
  if (best == nullptr) {
    out.estimate = FiniteDistribution::point_mass(DomainElement::constant());
    return out;
  }
  const std::uint32_t level = best->level();
  if (level < 6)
    throw std::invalid_argument("realizable_learner: indicator level " + std::to_string(level) +
                                " does not decode to a class member (j >= 2)");
  const std::uint64_t j = (level - 2) / 2;
  CgParams decoded(best->set(), j, g(j));
  out.decoded = decoded;
  out.estimate = make_distribution(decoded);
  return out;
}

LearnerOutput min_distance_learner(const Sample& s, const std::vector<CgParams>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("min_distance_learner: no candidates");
  LearnerOutput out;
  if (s.empty()) {
    out.decoded = candidates.front();
    out.estimate = make_distribution(candidates.front());
    return out;
  }
  const FiniteDistribution emp = empirical_distribution(s);
  out.indicators_seen = partition(s).indicators.size();
  std::size_t best = 0;
  double best_tv = 2.0;
  std::vector<FiniteDistribution> dists;
  dists.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    dists.push_back(make_distribution(candidates[i]));
    const double tv = tv_exact(dists.back(), emp);
    if (tv < best_tv) {
      best_tv = tv;
      best = i;
    }
  }
  out.decoded = candidates[best];
  out.estimate = dists[best];
  return out;
}

}  // namespace cgsim
