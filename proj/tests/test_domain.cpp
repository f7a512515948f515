#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cgsim/domain.hpp"
#include "cgsim/enumeration.hpp"

using namespace cgsim;

namespace {

DomainElement c0() { return DomainElement::constant(); }
DomainElement od(std::uint64_t v, std::uint32_t l = 5) { return DomainElement::odd(v, l); }
DomainElement ind(std::initializer_list<std::uint64_t> xs, std::uint32_t l = 6) {
  return DomainElement::indicator(SetId::of(xs), l);
}

Sample multiset(std::initializer_list<DomainElement> elems) { return Sample::of(elems); }

}  // namespace

TEST_CASE("set encoding is canonical and order independent") {
  CHECK(SetId::of({1, 2, 3}) == SetId::of({3, 1, 2, 2}));
  CHECK(SetId::of({1, 2}).encoding() == 6);
  CHECK(SetId::of({0, 10}).encoding() == 1025);
  // interval {0..3} encodes as 2^4 - 1
  CHECK(SetId::interval(4).encoding() == 15);
  CHECK(SetId::interval(4) == SetId::of({0, 1, 2, 3}));
  // ordering follows the encoding
  CHECK(SetId::of({1, 2}) < SetId::of({1, 3}));    // 6 < 10
  CHECK(SetId::of({0, 1, 2}) < SetId::of({3}));    // 7 < 8
  CHECK(SetId::of({5}) < SetId::interval(7));
  CHECK(SetId::of({0, 1}).compare(SetId::of({0, 1})) == 0);
}

TEST_CASE("domain element invariants") {
  CHECK_THROWS(DomainElement::odd(3, 4));        // odd level must be odd
  CHECK_THROWS(DomainElement::indicator(SetId::of({1}), 5));
  CHECK_THROWS(DomainElement::indicator(SetId::of({1}), 0));
  CHECK(od(7).level() == 5);
  CHECK(ind({1, 2}).set().size() == 2);
  CHECK(c0() < od(0, 1));
  CHECK(od(9, 5) < ind({0}, 2));
}

TEST_CASE("multiset union and difference respect multiplicities") {
  const auto a = od(1), b = od(2), c = od(3), d = od(4);
  Sample s1 = multiset({a, b, b, c});
  Sample s2 = multiset({a, b, d, d});
  // Union concatenates copies (|A u B| = |A| + |B|); the additive budget
  // algebra depends on this.
  CHECK(s1.union_with(s2) == multiset({a, a, b, b, b, c, d, d}));
  CHECK(s1.difference(s2) == multiset({b, c}));
  CHECK(s1.size() == 4);
  CHECK(s1.count(b) == 2);
}

TEST_CASE("multiset identities hold on random inputs") {
  RandomSource rng(11, 0);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<DomainElement> xs, ys;
    for (std::uint64_t i = 0, n = rng.below(6); i < n; ++i) xs.push_back(od(rng.below(4)));
    for (std::uint64_t i = 0, n = rng.below(6); i < n; ++i) ys.push_back(od(rng.below(4)));
    Sample a = Sample::of(xs), b = Sample::of(ys);
    CHECK(a.union_with(b).size() == a.size() + b.size());
    CHECK(a.difference(b).submultiset_of(a));
    CHECK(a.union_with(b).difference(b) == a);
    CHECK(a.difference(b).size() == a.size() - a.difference(a.difference(b)).size());
  }
}

TEST_CASE("partition splits by tag") {
  Sample s = multiset({c0(), c0(), od(7), ind({5}, 6)});
  Partition p = partition(s);
  CHECK(p.constants == multiset({c0(), c0()}));
  CHECK(p.odds == multiset({od(7)}));
  CHECK(p.indicators == multiset({ind({5}, 6)}));

  CHECK(partition(Sample{}).constants.empty());
  // even level >= 2 is an indicator regardless of value
  Partition p2 = partition(multiset({ind({5}, 8)}));
  CHECK(p2.indicators.size() == 1);
  CHECK(p2.odds.empty());

  Sample bad;
  bad.add(DomainElement::deleted());
  CHECK_THROWS(partition(bad));
}

namespace {
ExactDistribution member(std::initializer_list<std::uint64_t> b, std::uint64_t j, std::uint64_t k) {
  std::vector<std::pair<DomainElement, Rat>> mass;
  std::vector<std::uint64_t> bs(b);
  mass.emplace_back(DomainElement::constant(), Rat(1) - Rat(1, j));
  for (auto x : bs)
    mass.emplace_back(DomainElement::odd(x, 2 * j + 1), (Rat(1, j) - Rat(1, k)) / Rat(bs.size()));
  mass.emplace_back(DomainElement::indicator(SetId::of(bs), 2 * j + 2), Rat(1, k));
  return ExactDistribution::from_mass(std::move(mass));
}
}  // namespace

TEST_CASE("tv_exact basics and the frozen cross-member value") {
  ExactDistribution p = member({1, 2, 3, 4}, 2, 4);
  CHECK(tv_exact(p, p) == Rat(0));

  ExactDistribution da = ExactDistribution::point_mass(od(0));
  ExactDistribution db = ExactDistribution::point_mass(od(1));
  CHECK(tv_exact(da, db) == Rat(1));

  // half-L1 over the 8-point union support, computed by this exact oracle
  ExactDistribution q = member({1, 2}, 2, 4);
  CHECK(tv_exact(p, q) == Rat(3, 8));
  CHECK(to_double(tv_exact(p, q)) == doctest::Approx(0.375));
  CHECK(tv_exact(p, q) == tv_exact(q, p));
}

TEST_CASE("tv_exact triangle inequality on random exact triples") {
  RandomSource rng(5, 1);
  for (int rep = 0; rep < 100; ++rep) {
    auto random_dist = [&]() {
      std::vector<std::pair<DomainElement, Rat>> mass;
      Rat left(1);
      const std::uint64_t n = 1 + rng.below(4);
      for (std::uint64_t i = 0; i < n; ++i) {
        Rat w = left / Rat(1 + rng.below(3));
        if (i + 1 == n) w = left;
        mass.emplace_back(od(i), w);
        left -= w;
      }
      return ExactDistribution::from_mass(std::move(mass));
    };
    ExactDistribution a = random_dist(), b = random_dist(), c = random_dist();
    CHECK(tv_exact(a, c) <= tv_exact(a, b) + tv_exact(b, c));
    CHECK(tv_exact(a, b) == tv_exact(b, a));
  }
}

TEST_CASE("distribution validation") {
  CHECK_THROWS(FiniteDistribution::from_mass({{c0(), 0.5}, {od(1), 0.6}}));
  CHECK_THROWS(FiniteDistribution::from_mass({{c0(), -0.1}, {od(1), 1.1}}));
  CHECK_THROWS(ExactDistribution::from_mass({{c0(), Rat(1, 2)}}));
  FiniteDistribution ok = FiniteDistribution::from_mass({{c0(), 0.5}, {od(1), 0.5}});
  CHECK(ok.mass(c0()) == 0.5);
  CHECK(ok.mass(od(2)) == 0.0);
}

TEST_CASE("sample_iid: point mass, empty, and frequency convergence") {
  RandomSource rng(42, 0);
  FiniteDistribution delta = FiniteDistribution::point_mass(od(3));
  CHECK(sample_iid(delta, 3, rng) == multiset({od(3), od(3), od(3)}));
  CHECK(sample_iid(delta, 0, rng).empty());

  // Uniform on two points at N = 1e5: 6-sigma band is +-0.0095
  FiniteDistribution u = FiniteDistribution::from_mass({{od(0), 0.5}, {od(1), 0.5}});
  RandomSource rng2(42, 7);
  Sample big = sample_iid(u, 100000, rng2);
  const double freq = static_cast<double>(big.count(od(0))) / 100000.0;
  CHECK(std::abs(freq - 0.5) < 0.01);
}

TEST_CASE("sample_iid chi-square against a three-point law") {
  FiniteDistribution p =
      FiniteDistribution::from_mass({{c0(), 0.5}, {od(1), 0.375}, {od(2), 0.125}});
  RandomSource rng(9, 3);
  const std::int64_t n = 100000;
  Sample s = sample_iid(p, n, rng);
  double chi2 = 0.0;
  for (const auto& [e, expected] : p.entries()) {
    const double want = expected * static_cast<double>(n);
    const double got = static_cast<double>(s.count(e));
    chi2 += (got - want) * (got - want) / want;
  }
  CHECK(chi2 < 25.0);  // df = 2; generous fixed-seed ceiling
}

TEST_CASE("sample_iid is bit-reproducible for a fixed (seed, stream)") {
  FiniteDistribution p = FiniteDistribution::from_mass({{c0(), 0.25}, {od(1), 0.75}});
  RandomSource a(123, 456), b(123, 456);
  CHECK(sample_iid(p, 1000, a) == sample_iid(p, 1000, b));
  RandomSource c(123, 457);
  CHECK(sample_iid(p, 1000, c) != sample_iid(p, 1000, b));
}

TEST_CASE("choose: boundaries, exact law, inclusion probabilities") {
  RandomSource rng(3, 0);
  Sample s = multiset({od(1), od(1), od(2)});
  CHECK(choose(s, 3, rng) == s);
  CHECK(choose(s, 0, rng).empty());
  CHECK_THROWS(choose(s, 4, rng));

  // law: {a,a} w.p. 1/3, {a,b} w.p. 2/3 (three labeled pairs)
  Law law = choose_law(s, 2);
  CHECK(law.at(multiset({od(1), od(1)})) == Rat(1, 3));
  CHECK(law.at(multiset({od(1), od(2)})) == Rat(2, 3));

  std::int64_t aa = 0;
  const std::int64_t n = 60000;
  for (std::int64_t i = 0; i < n; ++i) {
    RandomSource r = rng.fork(i);
    if (choose(s, 2, r).count(od(1)) == 2) ++aa;
  }
  const double freq = static_cast<double>(aa) / static_cast<double>(n);
  CHECK(std::abs(freq - 1.0 / 3.0) < 5.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n));
}

TEST_CASE("choose is exchangeable: inclusion probability equals n/|S|") {
  // Exact check on the law for |S| <= 6 with repeated elements.
  Sample s = multiset({od(1), od(1), od(2), od(3), od(3), od(3)});
  for (std::int64_t n = 0; n <= s.size(); ++n) {
    Law law = choose_law(s, n);
    Rat total_mass = 0;
    Rat included_copies = 0;
    for (const auto& [t, p] : law) {
      total_mass += p;
      included_copies += p * Rat(t.size());
    }
    CHECK(total_mass == Rat(1));
    CHECK(included_copies == Rat(n));
    // per-element inclusion: E[count of v in subset] = n * count_v / |S|
    for (const auto& [v, cnt] : s.counts()) {
      Rat inc = 0;
      for (const auto& [t, p] : law) inc += p * Rat(t.count(v));
      CHECK(inc == Rat(n) * Rat(cnt) / Rat(s.size()));
    }
  }
}

TEST_CASE("json round trips with deterministic key order") {
  Sample s = multiset({c0(), od(7), ind({1, 2})});
  Json js = s.to_json();
  CHECK(Sample::from_json(js) == s);
  CHECK(js.dump() == Sample::from_json(js).to_json().dump());

  FiniteDistribution p = FiniteDistribution::from_mass({{c0(), 0.5}, {ind({1, 2}), 0.5}});
  CHECK(FiniteDistribution::from_json(p.to_json()).to_json().dump() == p.to_json().dump());

  ExactDistribution q = ExactDistribution::from_mass({{c0(), Rat(1, 3)}, {od(1), Rat(2, 3)}});
  CHECK(ExactDistribution::from_json(q.to_json()).to_json().dump() == q.to_json().dump());

  // element shape: {"kind":..., "x":..., "level":...}
  Json je = ind({2, 1}).to_json();
  CHECK(je.at("kind") == "indicator");
  CHECK(je.at("x") == Json::array({1, 2}));
  CHECK(je.at("level") == 6);
}

TEST_CASE("exact/float mode conversion round trip") {
  FiniteDistribution p = FiniteDistribution::from_mass({{c0(), 0.5}, {od(1), 0.25}, {od(2), 0.25}});
  ExactDistribution e = to_exact(p);
  CHECK(e.mass(c0()) == Rat(1, 2));
  CHECK(to_float(e).mass(od(1)) == 0.25);
}
