#pragma once

#include <cstdint>
#include <string>

#include "cgsim/domain.hpp"

namespace cgsim {

// Closed-form monotone superlinear rule on the naturals.
struct GFunction {
  enum class Rule { Square, ScaledSquare, Cube };
  Rule rule = Rule::Square;
  std::uint64_t scale = 1;  // ScaledSquare only: j -> scale * j^2

  static GFunction square() { return {Rule::Square, 1}; }
  static GFunction scaled_square(std::uint64_t c) { return {Rule::ScaledSquare, c}; }
  static GFunction cube() { return {Rule::Cube, 1}; }

  std::uint64_t operator()(std::uint64_t j) const;

  // Checks g(j+1) >= g(j) and g(j)/j strictly increasing on a grid.
  bool superlinear_on_grid(std::uint64_t j_max = 64) const;

  std::string name() const;
  Json to_json() const;
  static GFunction from_json(const Json& j);
};

// Parameters (B, j, k) of the two-point-mass/uniform mixture member.
struct CgParams {
  SetId B;
  std::uint64_t j = 2;
  std::uint64_t k = 3;

  CgParams(SetId b, std::uint64_t j_, std::uint64_t k_);

  bool in_class(const GFunction& g) const { return k == g(j); }
  std::uint32_t odd_level() const { return static_cast<std::uint32_t>(2 * j + 1); }
  std::uint32_t indicator_level() const { return static_cast<std::uint32_t>(2 * j + 2); }
  DomainElement indicator_element() const { return DomainElement::indicator(B, indicator_level()); }

  bool operator==(const CgParams& o) const { return j == o.j && k == o.k && B == o.B; }

  Json to_json() const;
  static CgParams from_json(const Json& j);
};

// Meta-distribution over members restricted to uniform size-s subsets of
// the base member's B.
struct MetaQ {
  CgParams base;
  std::uint64_t subset_size;

  MetaQ(CgParams base_, std::uint64_t s);

  Json to_json() const;
  static MetaQ from_json(const Json& j);
};

// The mixture (1-1/j) delta_(0,0) + (1/j-1/k) U_{B x {2j+1}} + (1/k) delta_ind.
// Materializes the support, so B must be modest; the large-scale kernels
// never build this object.
FiniteDistribution make_distribution(const CgParams& params);
ExactDistribution make_distribution_exact(const CgParams& params);

// (1/j - 1/k)/2, valid lower bound on tv(p_B, p_B') for B' a proper subset
// of B of size at most |B|/2.
double tv_lower_bound(std::uint64_t j, std::uint64_t k);
Rat tv_lower_bound_exact(std::uint64_t j, std::uint64_t k);

// Uniformly random size-s member restriction (B', j, k), B' explicit.
CgParams sample_q(const MetaQ& q, RandomSource& rng);

struct PlannerOutput {
  std::uint64_t j = 0;
  Rat eta;           // 32 / g(j)
  Rat gamma_prime;   // alpha / g(j)
  Rat gamma;         // 4*alpha*eta + 4*gamma_prime
  Rat tv_bound;      // (1/j - 1/g(j)) / 2
  std::uint64_t n_required = 0;  // least n with (1 - m/n)^m >= 31/32
  double birthday_term = 0.0;    // 2*(1 - (1 - m/2^n)^m) at n_required
  double markov_term = 0.0;      // 2/(g(j)*eta) = 1/16
  bool separation_ok = false;    // tv_bound >= gamma, exact comparison

  Json to_json() const;
};

// Resolves (j, eta, gamma', n) for a requested robustness factor alpha >= 1:
// the least j with g(j) >= 1024*alpha*j, then eta = 32/g(j), gamma' = alpha/g(j),
// and the least n making the doubled birthday term at subset size 2^n at most
// 1/16. Throws if no j below the search cap qualifies.
PlannerOutput plan_parameters(const Rat& alpha, const GFunction& g, std::uint64_t m,
                              std::uint64_t j_search_cap = 1000000);

// Monotone robustness profile f with closed-form inverse.
struct RobustnessProfile {
  enum class Rule { Linear, Sqrt, Power };
  Rule rule = Rule::Linear;
  double exponent = 1.0;  // Power only, must be > 0

  static RobustnessProfile linear() { return {Rule::Linear, 1.0}; }
  static RobustnessProfile sqrt() { return {Rule::Sqrt, 0.5}; }
  static RobustnessProfile power(double a) { return {Rule::Power, a}; }

  double operator()(double eta) const;
  double inverse(double y) const;  // throws if not invertible on (0,1]
  std::string name() const;
};

struct FRobustPlan {
  double eta_j = 0.0;      // largest representable eta with f(eta) < 1/(16j)
  std::uint64_t g_min = 0; // max(ceil(32/eta_j), 4j)
};

FRobustPlan plan_parameters_f(const RobustnessProfile& f, std::uint64_t j);

// ceil(ln(1/delta) * g(ceil(1/eps)))
std::uint64_t realizable_sample_complexity(double eps, double delta, const GFunction& g);

}  // namespace cgsim
