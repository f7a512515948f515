#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cgsim/class_cg.hpp"
#include "cgsim/domain.hpp"

namespace cgsim {

// Empirical lower bound on a TV distance via a feature-threshold event.
struct AdvantageEstimate {
  double estimate = 0.0;   // P_A[event] - P_B[event] on held-out trials
  double se = 0.0;
  std::int64_t n = 0;      // held-out trials per arm
  std::string distinguisher;
  bool degenerate = false; // constant feature: advantage pinned to 0

  Json to_json() const;
};

// Threshold distinguisher on precomputed feature values, one per trial and
// arm. The first half trains the threshold/direction, the second half
// scores it, so the estimate is an unbiased event-probability gap and in
// expectation lower-bounds the true TV between the two laws.
AdvantageEstimate threshold_advantage(const std::vector<double>& feature_a,
                                      const std::vector<double>& feature_b,
                                      const std::string& name);

// Convenience driver that draws the two arms itself. Pre: n >= 1000.
AdvantageEstimate distinguisher_advantage(const std::function<Sample(RandomSource&)>& sampler_a,
                                          const std::function<Sample(RandomSource&)>& sampler_b,
                                          const std::function<double(const Sample&)>& feature,
                                          const std::string& name, std::int64_t n,
                                          const RandomSource& rng_base);

// 1 - (1 - m/s)^m, upper bound on the probability of a repeated draw.
// Pre: 0 <= m <= s.
double birthday_bound(std::int64_t m, std::int64_t s);
Rat birthday_bound_exact(std::int64_t m, std::int64_t s);

// min(1, 2/(k*eta)): the two indicator-overflow tail terms jointly.
double markov_indicator_bound(std::uint64_t k, const Rat& eta);
Rat markov_indicator_bound_exact(std::uint64_t k, const Rat& eta);

// zeta upper bound certified for the subtractive channel:
// 2 * birthday(m, s) + 2/(k*eta).
double tv_upper_bound_decomposition(std::uint64_t k, const Rat& eta, std::int64_t m,
                                    std::int64_t s);
Rat tv_upper_bound_decomposition_exact(std::uint64_t k, const Rat& eta, std::int64_t m,
                                       std::int64_t s);

struct ConfusionParams {
  Rat gamma;          // 4*alpha*eta + 4*gamma_prime
  Rat zeta_ub;        // certified channel-closeness bound
  std::int64_t m = 0;
  Rat alpha;
  Rat gamma_prime;
  Rat eta;
  double failure_floor = 0.0;  // (1 - zeta_ub)/2, the per-arm floor

  Json to_json() const;
};

struct CertificateResult {
  bool accepted = false;
  ConfusionParams params;
  std::string rejection;  // names the violated inequality with both sides

  Json to_json() const;
};

// Checks the two confusion conditions for (p, Q) under the subtractive
// adversary at budget eta: exact separation tv_lower_bound(j,k) >= gamma,
// and zeta_ub = 2*birthday + 2/(k*eta) < 1/2.
CertificateResult confusion_certificate(const CgParams& p, const MetaQ& q, const Rat& eta,
                                        const Rat& alpha, const Rat& gamma_prime, std::int64_t m);

}  // namespace cgsim
