#include "cgsim/class_cg.hpp"

#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace cgsim {

std::uint64_t GFunction::operator()(std::uint64_t j) const {
  switch (rule) {
    case Rule::Square: return j * j;
    case Rule::ScaledSquare: return scale * j * j;
    case Rule::Cube: return j * j * j;
  }
  throw std::logic_error("unreachable");
}

bool GFunction::superlinear_on_grid(std::uint64_t j_max) const {
  const GFunction& g = *this;
  for (std::uint64_t j = 1; j < j_max; ++j) {
    if (g(j + 1) < g(j)) return false;
    // g(j)/j strictly increasing: g(j+1)*j > g(j)*(j+1)
    if (g(j + 1) * j <= g(j) * (j + 1)) return false;
  }
  return true;
}

std::string GFunction::name() const {
  switch (rule) {
    case Rule::Square: return "square";
    case Rule::ScaledSquare: return "scaled_square(" + std::to_string(scale) + ")";
    case Rule::Cube: return "cube";
  }
  throw std::logic_error("unreachable");
}

Json GFunction::to_json() const {
  switch (rule) {
    case Rule::Square: return Json{{"rule", "square"}};
    case Rule::ScaledSquare: return Json{{"rule", "scaled_square"}, {"c", scale}};
    case Rule::Cube: return Json{{"rule", "cube"}};
  }
  throw std::logic_error("unreachable");
}

GFunction GFunction::from_json(const Json& j) {
  const std::string rule = j.at("rule").get<std::string>();
  if (rule == "square") return square();
  if (rule == "scaled_square") return scaled_square(j.at("c").get<std::uint64_t>());
  if (rule == "cube") return cube();
  throw std::invalid_argument("GFunction::from_json: bad rule " + rule);
}

CgParams::CgParams(SetId b, std::uint64_t j_, std::uint64_t k_) : B(std::move(b)), j(j_), k(k_) {
  if (j < 2) throw std::invalid_argument("CgParams: j must be >= 2");
  if (k <= j) throw std::invalid_argument("CgParams: need 1/j - 1/k > 0, i.e. k > j");
}

Json CgParams::to_json() const { return Json{{"B", B.to_json()}, {"j", j}, {"k", k}}; }

CgParams CgParams::from_json(const Json& j) {
  return CgParams(SetId::from_json(j.at("B")), j.at("j").get<std::uint64_t>(),
                  j.at("k").get<std::uint64_t>());
}

MetaQ::MetaQ(CgParams base_, std::uint64_t s) : base(std::move(base_)), subset_size(s) {
  if (s == 0 || s >= base.B.size())
    throw std::invalid_argument("MetaQ: subset size must satisfy 0 < s < |B|");
}

Json MetaQ::to_json() const {
  return Json{{"base", base.to_json()}, {"subset_size", subset_size}};
}

MetaQ MetaQ::from_json(const Json& j) {
  return MetaQ(CgParams::from_json(j.at("base")), j.at("subset_size").get<std::uint64_t>());
}

namespace {
constexpr std::uint64_t kMaterializeCap = 1u << 21;

std::vector<std::uint64_t> set_elements(const SetId& b) {
  if (!b.is_interval()) return b.elements();
  if (b.interval_n() > kMaterializeCap)
    throw std::domain_error("make_distribution: base set too large to materialize");
  std::vector<std::uint64_t> xs(b.interval_n());
  for (std::uint64_t i = 0; i < xs.size(); ++i) xs[i] = i;
  return xs;
}
}  // namespace

ExactDistribution make_distribution_exact(const CgParams& params) {
  const auto xs = set_elements(params.B);
  const Rat cmass = Rat(1) - Rat(1, params.j);
  const Rat omass = (Rat(1, params.j) - Rat(1, params.k)) / Rat(xs.size());
  std::vector<std::pair<DomainElement, Rat>> mass;
  mass.reserve(xs.size() + 2);
  mass.emplace_back(DomainElement::constant(), cmass);
  for (auto x : xs) mass.emplace_back(DomainElement::odd(x, params.odd_level()), omass);
  mass.emplace_back(params.indicator_element(), Rat(1, params.k));
  return ExactDistribution::from_mass(std::move(mass));
}

FiniteDistribution make_distribution(const CgParams& params) {
  const auto xs = set_elements(params.B);
  const double j = static_cast<double>(params.j), k = static_cast<double>(params.k);
  const double omass = (1.0 / j - 1.0 / k) / static_cast<double>(xs.size());
  std::vector<std::pair<DomainElement, double>> mass;
  mass.reserve(xs.size() + 2);
  mass.emplace_back(DomainElement::constant(), 1.0 - 1.0 / j);
  for (auto x : xs) mass.emplace_back(DomainElement::odd(x, params.odd_level()), omass);
  mass.emplace_back(params.indicator_element(), 1.0 / k);
  return FiniteDistribution::from_mass(std::move(mass));
}

double tv_lower_bound(std::uint64_t j, std::uint64_t k) {
  return to_double(tv_lower_bound_exact(j, k));
}

Rat tv_lower_bound_exact(std::uint64_t j, std::uint64_t k) {
  if (j < 2 || k <= j) throw std::invalid_argument("tv_lower_bound: need k > j >= 2");
  return (Rat(1, j) - Rat(1, k)) / 2;
}

CgParams sample_q(const MetaQ& q, RandomSource& rng) {
  const std::uint64_t n = q.base.B.size(), s = q.subset_size;
  // Floyd's subset sampling: s iterations regardless of n.
  std::unordered_set<std::uint64_t> idx;
  idx.reserve(static_cast<std::size_t>(s * 2));
  for (std::uint64_t i = n - s; i < n; ++i) {
    std::uint64_t t = rng.below(i + 1);
    if (!idx.insert(t).second) idx.insert(i);
  }
  std::vector<std::uint64_t> elems;
  elems.reserve(static_cast<std::size_t>(s));
  if (q.base.B.is_interval()) {
    for (auto i : idx) elems.push_back(i);
  } else {
    for (auto i : idx) elems.push_back(q.base.B.elements()[i]);
  }
  return CgParams(SetId::of(std::move(elems)), q.base.j, q.base.k);
}

namespace {
// Least n with (1 - m/n)^m >= 31/32, decided by exact rational comparison.
// This is the integer form of n >= m / (1 - (31/32)^{1/m}).
std::uint64_t least_birthday_n(std::uint64_t m) {
  if (m == 0) return 1;
  const Rat target(31, 32);
  auto ok = [&](std::uint64_t n) {
    if (n <= m) return false;
    return rat_pow(Rat(1) - Rat(m, n), m) >= target;
  };
  // Start from the double estimate, then fix up exactly.
  double est = static_cast<double>(m) / (1.0 - std::pow(31.0 / 32.0, 1.0 / static_cast<double>(m)));
  auto n = static_cast<std::uint64_t>(std::max(est, 1.0));
  while (!ok(n)) ++n;
  while (n > m + 1 && ok(n - 1)) --n;
  return n;
}
}  // namespace

Json PlannerOutput::to_json() const {
  return Json{{"j", j},
              {"eta", rat_to_string(eta)},
              {"gamma_prime", rat_to_string(gamma_prime)},
              {"gamma", rat_to_string(gamma)},
              {"tv_bound", rat_to_string(tv_bound)},
              {"n_required", n_required},
              {"birthday_term", birthday_term},
              {"markov_term", markov_term},
              {"separation_ok", separation_ok}};
}

PlannerOutput plan_parameters(const Rat& alpha, const GFunction& g, std::uint64_t m,
                              std::uint64_t j_search_cap) {
  if (alpha < 1) throw std::invalid_argument("plan_parameters: alpha must be >= 1");
  if (!g.superlinear_on_grid()) throw std::invalid_argument("plan_parameters: g is not superlinear");
  std::uint64_t j = 0;
  for (std::uint64_t cand = 2; cand <= j_search_cap; ++cand) {
    if (Rat(g(cand)) >= Rat(1024) * alpha * Rat(cand)) {
      j = cand;
      break;
    }
  }
  if (j == 0) throw std::runtime_error("plan_parameters: no j <= cap with g(j) >= 1024*alpha*j");

  PlannerOutput out;
  out.j = j;
  const std::uint64_t gj = g(j);
  out.eta = Rat(32, gj);
  out.gamma_prime = alpha / Rat(gj);
  out.gamma = Rat(4) * alpha * out.eta + Rat(4) * out.gamma_prime;
  out.tv_bound = tv_lower_bound_exact(j, gj);
  out.separation_ok = out.tv_bound >= out.gamma;
  out.n_required = least_birthday_n(m);
  // Reported in double; exact guarantees flow through n_required and the
  // monotone bound 2^n >= n, so 2*(1-(1-m/2^n)^m) <= 1/16.
  const double pow2n = std::ldexp(1.0, out.n_required > 1023 ? 1023 : static_cast<int>(out.n_required));
  const double ratio = static_cast<double>(m) / pow2n;
  out.birthday_term = 2.0 * (1.0 - std::pow(1.0 - ratio, static_cast<double>(m)));
  out.markov_term = to_double(Rat(2) / (Rat(gj) * out.eta));
  return out;
}

double RobustnessProfile::operator()(double eta) const {
  switch (rule) {
    case Rule::Linear: return eta;
    case Rule::Sqrt: return std::sqrt(eta);
    case Rule::Power: return std::pow(eta, exponent);
  }
  throw std::logic_error("unreachable");
}

double RobustnessProfile::inverse(double y) const {
  switch (rule) {
    case Rule::Linear: return y;
    case Rule::Sqrt: return y * y;
    case Rule::Power:
      if (!(exponent > 0.0))
        throw std::invalid_argument("RobustnessProfile: not invertible on (0,1]");
      return std::pow(y, 1.0 / exponent);
  }
  throw std::logic_error("unreachable");
}

std::string RobustnessProfile::name() const {
  switch (rule) {
    case Rule::Linear: return "linear";
    case Rule::Sqrt: return "sqrt";
    case Rule::Power: return "power(" + std::to_string(exponent) + ")";
  }
  throw std::logic_error("unreachable");
}

FRobustPlan plan_parameters_f(const RobustnessProfile& f, std::uint64_t j) {
  if (j == 0) throw std::invalid_argument("plan_parameters_f: j must be >= 1");
  const double bound = 1.0 / (16.0 * static_cast<double>(j));
  double eta = f.inverse(bound);
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("plan_parameters_f: profile has no usable preimage");
  // Largest representable eta with f(eta) strictly below the bound.
  while (!(f(eta) < bound)) eta = std::nextafter(eta, 0.0);
  FRobustPlan plan;
  plan.eta_j = eta;
  const double g1 = std::ceil(32.0 / eta);
  const double g2 = 4.0 * static_cast<double>(j);
  plan.g_min = static_cast<std::uint64_t>(std::max(g1, g2));
  return plan;
}

std::uint64_t realizable_sample_complexity(double eps, double delta, const GFunction& g) {
  if (!(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("realizable_sample_complexity: eps, delta must lie in (0,1)");
  const auto inv_eps = static_cast<std::uint64_t>(std::ceil(1.0 / eps));
  const double m = std::log(1.0 / delta) * static_cast<double>(g(inv_eps));
  return static_cast<std::uint64_t>(std::ceil(m));
}

}  // namespace cgsim
