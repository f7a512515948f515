#include "cgsim/stats.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cgsim/rng.hpp"

namespace cgsim {

Json AdvantageEstimate::to_json() const {
  return Json{{"distinguisher", distinguisher},
              {"estimate", estimate},
              {"se", se},
              {"n", n},
              {"degenerate", degenerate}};
}

namespace {

double event_rate(const std::vector<double>& xs, std::size_t lo, std::size_t hi, double thr,
                  bool geq) {
  std::int64_t hit = 0;
  for (std::size_t i = lo; i < hi; ++i) hit += geq ? (xs[i] >= thr) : (xs[i] < thr);
  return static_cast<double>(hit) / static_cast<double>(hi - lo);
}

}  // namespace

AdvantageEstimate threshold_advantage(const std::vector<double>& feature_a,
                                      const std::vector<double>& feature_b,
                                      const std::string& name) {
  if (feature_a.size() != feature_b.size() || feature_a.size() < 4)
    throw std::invalid_argument("threshold_advantage: need matched arms with >= 4 trials");
  const std::size_t n = feature_a.size();
  const std::size_t half = n / 2;

  // Candidate thresholds: distinct training values (event {x >= t} sweeps
  // every achievable split).
  std::vector<double> cand(feature_a.begin(), feature_a.begin() + half);
  cand.insert(cand.end(), feature_b.begin(), feature_b.begin() + half);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  AdvantageEstimate out;
  out.distinguisher = name;
  out.n = static_cast<std::int64_t>(n - half);
  if (cand.size() <= 1) {
    out.degenerate = true;
    out.estimate = 0.0;
    out.se = std::sqrt(0.5 / static_cast<double>(n - half));
    return out;
  }

  double best_gap = -1.0, best_thr = cand.front();
  bool best_geq = true;
  for (double thr : cand) {
    const double pa = event_rate(feature_a, 0, half, thr, true);
    const double pb = event_rate(feature_b, 0, half, thr, true);
    const double gap = pa - pb;
    if (std::abs(gap) > best_gap) {
      best_gap = std::abs(gap);
      best_thr = thr;
      best_geq = gap >= 0.0;
    }
  }

  const double pa = event_rate(feature_a, half, n, best_thr, true);
  const double pb = event_rate(feature_b, half, n, best_thr, true);
  out.estimate = best_geq ? (pa - pb) : (pb - pa);
  const double held = static_cast<double>(n - half);
  out.se = std::sqrt(pa * (1.0 - pa) / held + pb * (1.0 - pb) / held);
  return out;
}

AdvantageEstimate distinguisher_advantage(const std::function<Sample(RandomSource&)>& sampler_a,
                                          const std::function<Sample(RandomSource&)>& sampler_b,
                                          const std::function<double(const Sample&)>& feature,
                                          const std::string& name, std::int64_t n,
                                          const RandomSource& rng_base) {
  if (n < 1000) throw std::invalid_argument("distinguisher_advantage: need n >= 1000");
  std::vector<double> fa(static_cast<std::size_t>(n)), fb(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < n; ++t) {
    RandomSource ra = rng_base.fork(0x0a, static_cast<std::uint64_t>(t));
    RandomSource rb = rng_base.fork(0x0b, static_cast<std::uint64_t>(t));
    fa[static_cast<std::size_t>(t)] = feature(sampler_a(ra));
    fb[static_cast<std::size_t>(t)] = feature(sampler_b(rb));
  }
  return threshold_advantage(fa, fb, name);
}

Rat birthday_bound_exact(std::int64_t m, std::int64_t s) {
  if (m < 0 || s <= 0 || m > s) throw std::invalid_argument("birthday_bound: need 0 <= m <= s");
  return Rat(1) - rat_pow(Rat(1) - Rat(m, s), static_cast<std::uint64_t>(m));
}

double birthday_bound(std::int64_t m, std::int64_t s) {
  if (m < 0 || s <= 0 || m > s) throw std::invalid_argument("birthday_bound: need 0 <= m <= s");
  const double ratio = static_cast<double>(m) / static_cast<double>(s);
  return -std::expm1(static_cast<double>(m) * std::log1p(-ratio));
}

Rat markov_indicator_bound_exact(std::uint64_t k, const Rat& eta) {
  if (k == 0 || eta <= 0) throw std::invalid_argument("markov_indicator_bound: need k, eta > 0");
  Rat v = Rat(2) / (Rat(k) * eta);
  return v > 1 ? Rat(1) : v;
}

double markov_indicator_bound(std::uint64_t k, const Rat& eta) {
  return to_double(markov_indicator_bound_exact(k, eta));
}

Rat tv_upper_bound_decomposition_exact(std::uint64_t k, const Rat& eta, std::int64_t m,
                                       std::int64_t s) {
  return Rat(2) * birthday_bound_exact(m, s) + markov_indicator_bound_exact(k, eta);
}

double tv_upper_bound_decomposition(std::uint64_t k, const Rat& eta, std::int64_t m,
                                    std::int64_t s) {
  return to_double(tv_upper_bound_decomposition_exact(k, eta, m, s));
}

Json ConfusionParams::to_json() const {
  return Json{{"gamma", rat_to_string(gamma)},
              {"zeta_ub", to_double(zeta_ub)},
              {"zeta_ub_exact", rat_to_string(zeta_ub)},
              {"m", m},
              {"alpha", rat_to_string(alpha)},
              {"gamma_prime", rat_to_string(gamma_prime)},
              {"eta", rat_to_string(eta)},
              {"failure_floor", failure_floor}};
}

Json CertificateResult::to_json() const {
  Json j{{"accepted", accepted}};
  if (accepted) {
    j["params"] = params.to_json();
  } else {
    j["rejection"] = rejection;
  }
  return j;
}

CertificateResult confusion_certificate(const CgParams& p, const MetaQ& q, const Rat& eta,
                                        const Rat& alpha, const Rat& gamma_prime, std::int64_t m) {
  CertificateResult res;
  if (!(p.j == q.base.j && p.k == q.base.k && p.B == q.base.B))
    throw std::invalid_argument("confusion_certificate: p and Q must share (B, j, k)");
  const Rat gamma = Rat(4) * alpha * eta + Rat(4) * gamma_prime;
  const Rat sep = tv_lower_bound_exact(p.j, p.k);
  if (gamma > sep) {
    res.rejection = "separation: gamma = " + rat_to_string(gamma) + " > (1/j - 1/k)/2 = " +
                    rat_to_string(sep);
    return res;
  }
  const Rat zeta =
      tv_upper_bound_decomposition_exact(p.k, eta, m, static_cast<std::int64_t>(q.subset_size));
  if (zeta >= Rat(1, 2)) {
    res.rejection = "closeness: zeta_ub = " + rat_to_string(zeta) + " >= 1/2";
    return res;
  }
  res.accepted = true;
  res.params.gamma = gamma;
  res.params.zeta_ub = zeta;
  res.params.m = m;
  res.params.alpha = alpha;
  res.params.gamma_prime = gamma_prime;
  res.params.eta = eta;
  res.params.failure_floor = to_double((Rat(1) - zeta) / 2);
  return res;
}

}  // namespace cgsim
