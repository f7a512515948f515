#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "cgsim/class_cg.hpp"
#include "cgsim/enumeration.hpp"

using namespace cgsim;

TEST_CASE("g-function rules and the superlinearity grid check") {
  CHECK(GFunction::square()(7) == 49);
  CHECK(GFunction::scaled_square(3)(4) == 48);
  CHECK(GFunction::cube()(5) == 125);
  CHECK(GFunction::square().superlinear_on_grid());
  CHECK(GFunction::cube().superlinear_on_grid());
  GFunction g = GFunction::from_json(GFunction::square().to_json());
  CHECK(g(6) == 36);
}

TEST_CASE("class parameter invariants") {
  CHECK_THROWS(CgParams(SetId::of({1}), 2, 2));  // needs 1/j - 1/k > 0
  CHECK_THROWS(CgParams(SetId::of({1}), 1, 4));
  CgParams ok(SetId::of({1, 2}), 2, 4);
  CHECK(ok.in_class(GFunction::square()));
  CHECK_FALSE(CgParams(SetId::of({1}), 2, 5).in_class(GFunction::square()));
  CHECK(ok.odd_level() == 5);
  CHECK(ok.indicator_level() == 6);
  CHECK_THROWS(MetaQ(ok, 2));  // s must be < |B|
  CHECK_THROWS(MetaQ(ok, 0));
}

TEST_CASE("make_distribution matches the worked two-element member") {
  CgParams params(SetId::of({1, 2}), 2, 4);
  ExactDistribution d = make_distribution_exact(params);
  CHECK(d.mass(DomainElement::constant()) == Rat(1, 2));
  CHECK(d.mass(DomainElement::odd(1, 5)) == Rat(1, 8));
  CHECK(d.mass(DomainElement::odd(2, 5)) == Rat(1, 8));
  CHECK(d.mass(DomainElement::indicator(SetId::of({1, 2}), 6)) == Rat(1, 4));
  CHECK(d.support_size() == 4);

  FiniteDistribution f = make_distribution(params);
  CHECK(f.mass(DomainElement::constant()) == 0.5);
}

TEST_CASE("make_distribution is normalized exactly for random parameters") {
  RandomSource rng(17, 0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::uint64_t> elems;
    const std::uint64_t n = 1 + rng.below(12);
    while (elems.size() < n) {
      auto v = rng.below(100);
      if (std::find(elems.begin(), elems.end(), v) == elems.end()) elems.push_back(v);
    }
    const std::uint64_t j = 2 + rng.below(7);
    const std::uint64_t k = j + 1 + rng.below(30);
    ExactDistribution d = make_distribution_exact(CgParams(SetId::of(elems), j, k));
    Rat total = 0;
    for (const auto& [e, p] : d.entries()) total += p;
    CHECK(total == Rat(1));  // normalization forced, exact mode
  }
}

TEST_CASE("tv lower bound formula and limiting case") {
  CHECK(tv_lower_bound(2, 4) == doctest::Approx(0.125));
  CHECK(tv_lower_bound_exact(2, 4) == Rat(1, 8));
  // k -> infinity proxy: approaches 1/(2j)
  CHECK(tv_lower_bound(3, 1000000000) == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  CHECK_THROWS(tv_lower_bound(2, 2));
}

TEST_CASE("tv lower bound is dominated by the exact distance on the worked pair") {
  CgParams p(SetId::of({1, 2, 3, 4}), 2, 4);
  CgParams q(SetId::of({1, 2}), 2, 4);
  const Rat tv = tv_exact(make_distribution_exact(p), make_distribution_exact(q));
  CHECK(tv == Rat(3, 8));
  CHECK(tv_lower_bound_exact(2, 4) <= tv);  // 0.125 <= 0.375
}

TEST_CASE("tv lower bound holds across a randomized subset grid, exact arithmetic") {
  RandomSource rng(23, 5);
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const std::uint64_t nb = 4 + rng.below(29);  // |B| <= 32 here; acceptance goes to 64
    std::vector<std::uint64_t> base;
    while (base.size() < nb) {
      auto v = rng.below(200);
      if (std::find(base.begin(), base.end(), v) == base.end()) base.push_back(v);
    }
    const std::uint64_t s = 1 + rng.below(nb / 2);  // |B'| <= |B|/2
    std::vector<std::uint64_t> sub(base.begin(), base.begin() + s);
    const std::uint64_t j = 2 + rng.below(5);
    const std::uint64_t k = j + 1 + rng.below(20);
    ExactDistribution dp = make_distribution_exact(CgParams(SetId::of(base), j, k));
    ExactDistribution dq = make_distribution_exact(CgParams(SetId::of(sub), j, k));
    CHECK(tv_exact(dp, dq) >= tv_lower_bound_exact(j, k));
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("sample_q: explicit subset of the right size, marginal inclusion s/|B|") {
  CgParams base(SetId::interval(40), 2, 4);
  MetaQ q(base, 10);
  RandomSource rng(31, 2);
  CgParams member = sample_q(q, rng);
  CHECK(member.B.size() == 10);
  CHECK(member.j == 2);
  for (auto x : member.B.elements()) CHECK(x < 40);

  // marginal inclusion of a fixed element: s/|B| = 1/4 at N draws, 5 sigma
  const std::int64_t n = 100000;
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    RandomSource r = rng.fork(i);
    hits += sample_q(q, r).B.contains(7);
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(n);
  const double se = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
  CHECK(std::abs(freq - 0.25) <= 5.0 * se);
}

TEST_CASE("sample_q hits all subsets uniformly on a tiny base") {
  CgParams base(SetId::of({0, 1, 2, 3}), 2, 4);
  MetaQ q(base, 2);
  const auto members = enumerate_members(q);
  CHECK(members.size() == 6);
  RandomSource rng(77, 0);
  const std::int64_t n = 60000;
  std::vector<std::int64_t> counts(members.size(), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    RandomSource r = rng.fork(i);
    CgParams m = sample_q(q, r);
    for (std::size_t c = 0; c < members.size(); ++c)
      if (members[c].B == m.B) ++counts[c];
  }
  double chi2 = 0.0;
  const double want = static_cast<double>(n) / 6.0;
  for (auto c : counts) chi2 += (c - want) * (c - want) / want;
  CHECK(chi2 < 30.0);  // df = 5, fixed seed

  // independence across distinct streams: joint uniformity over 36 pairs
  std::vector<std::int64_t> joint(36, 0);
  for (std::int64_t i = 0; i < n / 2; ++i) {
    RandomSource r1 = rng.fork(2 * i + 1000000);
    RandomSource r2 = rng.fork(2 * i + 1000001);
    std::size_t a = 0, b = 0;
    CgParams m1 = sample_q(q, r1), m2 = sample_q(q, r2);
    for (std::size_t c = 0; c < 6; ++c) {
      if (members[c].B == m1.B) a = c;
      if (members[c].B == m2.B) b = c;
    }
    ++joint[a * 6 + b];
  }
  double chi2j = 0.0;
  const double wantj = static_cast<double>(n / 2) / 36.0;
  for (auto c : joint) chi2j += (c - wantj) * (c - wantj) / wantj;
  CHECK(chi2j < 80.0);  // df = 35, fixed seed
}

TEST_CASE("planner: frozen values for alpha=1, g=square") {
  PlannerOutput plan = plan_parameters(Rat(1), GFunction::square(), 2);
  CHECK(plan.j == 1024);
  CHECK(plan.eta == Rat(1, 32768));
  CHECK(to_double(plan.eta) == doctest::Approx(3.0518e-5).epsilon(1e-4));
  CHECK(plan.gamma_prime == Rat(1, 1048576));
  CHECK(to_double(plan.gamma_prime) == doctest::Approx(9.537e-7).epsilon(1e-4));
  CHECK(plan.separation_ok);
  // exact inequality of the separation chain
  CHECK(plan.tv_bound >= plan.gamma);
  CHECK(plan.markov_term == doctest::Approx(1.0 / 16.0));

  // Least n with (1 - m/n)^m >= 31/32 at m = 2. The double formula
  // m/(1-(31/32)^(1/m)) evaluates to 126.99...; the exact integer check
  // confirms 127 (126 fails, 127 holds).
  CHECK(plan.n_required == 127);
  CHECK(rat_pow(Rat(1) - Rat(2, 127), 2) >= Rat(31, 32));
  CHECK(rat_pow(Rat(1) - Rat(2, 126), 2) < Rat(31, 32));
}

TEST_CASE("planner output satisfies the displayed inequalities exactly") {
  for (const Rat& alpha : {Rat(1), Rat(2), Rat(7, 2)}) {
    PlannerOutput plan = plan_parameters(alpha, GFunction::square(), 5);
    const std::uint64_t gj = plan.j * plan.j;
    CHECK(Rat(gj) >= Rat(1024) * alpha * Rat(plan.j));
    CHECK(plan.eta == Rat(32, gj));
    CHECK(plan.gamma_prime == alpha / Rat(gj));
    // (1/j - 1/g(j))/2 >= 4 alpha eta + 4 gamma'
    CHECK((Rat(1, plan.j) - Rat(1, gj)) / 2 >= Rat(4) * alpha * plan.eta + Rat(4) * plan.gamma_prime);
    // planned zeta: birthday chain at n_required plus exact markov term 1/16
    CHECK(rat_pow(Rat(1) - Rat(5, plan.n_required), 5) >= Rat(31, 32));
    CHECK(Rat(2) / (Rat(gj) * plan.eta) == Rat(1, 16));
  }
}

TEST_CASE("planner error paths") {
  CHECK_THROWS(plan_parameters(Rat(1, 2), GFunction::square(), 2));  // alpha >= 1
  // search cap too small to reach g(j) >= 1024 j
  CHECK_THROWS(plan_parameters(Rat(1), GFunction::square(), 2, 512));
}

TEST_CASE("f-robust planner: sqrt and linear profiles") {
  const FRobustPlan sq = plan_parameters_f(RobustnessProfile::sqrt(), 2);
  // f(eta) < 1/32 forces eta just below 1/1024
  CHECK(sq.eta_j < 1.0 / 1024.0);
  CHECK(sq.eta_j > 1.0 / 1024.0 * (1.0 - 1e-9));
  CHECK(std::sqrt(sq.eta_j) < 1.0 / 32.0);
  CHECK(sq.g_min >= 32768);
  CHECK(sq.g_min <= 32800);

  const FRobustPlan lin = plan_parameters_f(RobustnessProfile::linear(), 2);
  CHECK(lin.eta_j < 1.0 / 32.0);
  CHECK(lin.eta_j > 1.0 / 32.0 * (1.0 - 1e-9));

  // returned pair satisfies the displayed inequality chain
  for (const auto& f : {RobustnessProfile::sqrt(), RobustnessProfile::linear(),
                        RobustnessProfile::power(1.5)}) {
    for (std::uint64_t j : {1ull, 2ull, 5ull, 16ull}) {
      const FRobustPlan plan = plan_parameters_f(f, j);
      CHECK(f(plan.eta_j) < 1.0 / (16.0 * static_cast<double>(j)));
      CHECK(plan.g_min >= 4 * j);
      CHECK(4.0 * f(plan.eta_j) + 1.0 / static_cast<double>(plan.g_min) <=
            1.0 / (2.0 * static_cast<double>(j)));
    }
  }
  CHECK_THROWS(plan_parameters_f(RobustnessProfile::power(0.0), 2));
}

TEST_CASE("realizable sample complexity") {
  CHECK(realizable_sample_complexity(0.25, 0.01, GFunction::square()) == 74);
  // delta -> 1-: log(1/delta) -> 0, so the bound collapses
  CHECK(realizable_sample_complexity(0.25, 0.999999, GFunction::square()) <= 1);
  // monotone nonincreasing in eps and delta
  std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
  for (double eps : {0.05, 0.1, 0.2, 0.5}) {
    const std::uint64_t m = realizable_sample_complexity(eps, 0.05, GFunction::square());
    CHECK(m <= prev);
    prev = m;
  }
  prev = std::numeric_limits<std::uint64_t>::max();
  for (double delta : {0.01, 0.05, 0.2, 0.9}) {
    const std::uint64_t m = realizable_sample_complexity(0.2, delta, GFunction::square());
    CHECK(m <= prev);
    prev = m;
  }
  CHECK_THROWS(realizable_sample_complexity(0.0, 0.5, GFunction::square()));
  CHECK_THROWS(realizable_sample_complexity(0.5, 1.0, GFunction::square()));
}

TEST_CASE("config json round trips") {
  CgParams p(SetId::interval(1000), 2, 200);
  CHECK(CgParams::from_json(p.to_json()) == p);
  MetaQ q(p, 50);
  Json jq = q.to_json();
  MetaQ q2 = MetaQ::from_json(jq);
  CHECK(q2.subset_size == 50);
  CHECK(q2.base == p);
}
