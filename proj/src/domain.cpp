#include "cgsim/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cgsim {

// --------------------------------------------------------------------------
// rational parsing
// --------------------------------------------------------------------------

Rat parse_rat(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    BigInt num(text.substr(0, slash));
    BigInt den(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("parse_rat: zero denominator in " + text);
    return Rat(num, den);
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rat(BigInt(text));
  std::string head = text.substr(0, dot), tail = text.substr(dot + 1);
  bool neg = !head.empty() && head[0] == '-';
  if (neg) head = head.substr(1);
  if (head.empty()) head = "0";
  BigInt den = 1;
  for (std::size_t i = 0; i < tail.size(); ++i) den *= 10;
  BigInt num = BigInt(head) * den + (tail.empty() ? BigInt(0) : BigInt(tail));
  Rat q(num, den);
  return neg ? -q : q;
}

std::string rat_to_string(const Rat& q) {
  std::ostringstream os;
  os << numerator(q);
  if (denominator(q) != 1) os << "/" << denominator(q);
  return os.str();
}

// --------------------------------------------------------------------------
// SetId
// --------------------------------------------------------------------------

namespace {
std::size_t hash_combine(std::size_t h, std::uint64_t v) {
  return h ^ (std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}
}  // namespace

SetId::SetId(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {
  std::size_t h = rep_->interval ? 0x517cc1b727220a95ULL : 0;
  if (rep_->interval) {
    h = hash_combine(h, rep_->n);
  } else {
    for (auto x : rep_->elems) h = hash_combine(h, x);
  }
  hash_ = h;
}

SetId SetId::of(std::vector<std::uint64_t> elems) {
  if (elems.empty()) throw std::invalid_argument("SetId: set must be nonempty");
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  auto rep = std::make_shared<Rep>();
  rep->interval = false;
  rep->elems = std::move(elems);
  return SetId(std::move(rep));
}

SetId SetId::interval(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("SetId::interval: n must be >= 1");
  auto rep = std::make_shared<Rep>();
  rep->interval = true;
  rep->n = n;
  return SetId(std::move(rep));
}

std::uint64_t SetId::size() const { return rep_->interval ? rep_->n : rep_->elems.size(); }

bool SetId::contains(std::uint64_t x) const {
  if (rep_->interval) return x < rep_->n;
  return std::binary_search(rep_->elems.begin(), rep_->elems.end(), x);
}

std::uint64_t SetId::interval_n() const {
  if (!rep_->interval) throw std::logic_error("SetId: not an interval");
  return rep_->n;
}

const std::vector<std::uint64_t>& SetId::elements() const {
  if (rep_->interval) throw std::logic_error("SetId: interval set has no element list");
  return rep_->elems;
}

std::uint64_t SetId::max_element() const {
  return rep_->interval ? rep_->n - 1 : rep_->elems.back();
}

std::uint64_t SetId::from_top(std::uint64_t k) const {
  if (rep_->interval) return rep_->n - 1 - k;
  return rep_->elems[rep_->elems.size() - 1 - k];
}

int SetId::compare(const SetId& o) const {
  if (rep_ == o.rep_) return 0;
  // Compare encodings: scan elements from the largest down; the first
  // position where they differ decides, a proper prefix is smaller.
  const std::uint64_t na = size(), nb = o.size();
  const std::uint64_t steps = std::min(na, nb);
  for (std::uint64_t i = 0; i < steps; ++i) {
    std::uint64_t a = from_top(i), b = o.from_top(i);
    if (a != b) return a < b ? -1 : 1;
  }
  if (na == nb) return 0;
  return na < nb ? -1 : 1;
}

BigInt SetId::encoding() const {
  if (max_element() > 100000) throw std::domain_error("SetId::encoding: set too large to expand");
  BigInt e = 0;
  if (rep_->interval) {
    e = (BigInt(1) << rep_->n) - 1;
  } else {
    for (auto x : rep_->elems) e += BigInt(1) << x;
  }
  return e;
}

Json SetId::to_json() const {
  if (rep_->interval) return Json{{"interval", rep_->n}};
  return Json(rep_->elems);
}

SetId SetId::from_json(const Json& j) {
  if (j.is_object()) return SetId::interval(j.at("interval").get<std::uint64_t>());
  return SetId::of(j.get<std::vector<std::uint64_t>>());
}

// --------------------------------------------------------------------------
// DomainElement
// --------------------------------------------------------------------------

DomainElement::DomainElement(Kind k, std::uint64_t value, std::uint32_t level,
                             std::optional<SetId> set)
    : kind_(k), level_(level), value_(value), set_(std::move(set)) {}

DomainElement DomainElement::constant() { return DomainElement(Kind::Const, 0, 0, std::nullopt); }

DomainElement DomainElement::odd(std::uint64_t value, std::uint32_t level) {
  if (level % 2 == 0) throw std::invalid_argument("odd element level must be odd (2j+1)");
  return DomainElement(Kind::Odd, value, level, std::nullopt);
}

DomainElement DomainElement::indicator(SetId set, std::uint32_t level) {
  if (level % 2 != 0 || level < 2)
    throw std::invalid_argument("indicator level must be even and >= 2 (2j+2)");
  return DomainElement(Kind::Indicator, 0, level, std::move(set));
}

DomainElement DomainElement::deleted() { return DomainElement(Kind::Deleted, 0, 0, std::nullopt); }

std::uint64_t DomainElement::value() const {
  if (kind_ != Kind::Odd) throw std::logic_error("value(): not an odd element");
  return value_;
}

const SetId& DomainElement::set() const {
  if (kind_ != Kind::Indicator) throw std::logic_error("set(): not an indicator");
  return *set_;
}

int DomainElement::compare(const DomainElement& o) const {
  if (kind_ != o.kind_) return kind_ < o.kind_ ? -1 : 1;
  if (level_ != o.level_) return level_ < o.level_ ? -1 : 1;
  switch (kind_) {
    case Kind::Odd:
      if (value_ != o.value_) return value_ < o.value_ ? -1 : 1;
      return 0;
    case Kind::Indicator:
      return set_->compare(*o.set_);
    default:
      return 0;
  }
}

std::size_t DomainElement::hash() const {
  std::size_t h = static_cast<std::size_t>(kind_);
  h = hash_combine(h, level_);
  if (kind_ == Kind::Odd) h = hash_combine(h, value_);
  if (kind_ == Kind::Indicator) h = hash_combine(h, set_->hash());
  return h;
}

std::string DomainElement::str() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Const: os << "(0,0)"; break;
    case Kind::Odd: os << "(" << value_ << "," << level_ << ")"; break;
    case Kind::Indicator: {
      os << "(I";
      if (set_->is_interval()) {
        os << "[0.." << set_->interval_n() << ")";
      } else {
        os << "{";
        for (std::size_t i = 0; i < set_->elements().size(); ++i)
          os << (i ? "," : "") << set_->elements()[i];
        os << "}";
      }
      os << "," << level_ << ")";
      break;
    }
    case Kind::Deleted: os << "bot"; break;
  }
  return os.str();
}

Json DomainElement::to_json() const {
  switch (kind_) {
    case Kind::Const: return Json{{"kind", "const"}};
    case Kind::Odd: return Json{{"kind", "odd"}, {"x", value_}, {"level", level_}};
    case Kind::Indicator:
      return Json{{"kind", "indicator"}, {"x", set_->to_json()}, {"level", level_}};
    case Kind::Deleted: return Json{{"kind", "deleted"}};
  }
  throw std::logic_error("unreachable");
}

DomainElement DomainElement::from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "const") return constant();
  if (kind == "odd") return odd(j.at("x").get<std::uint64_t>(), j.at("level").get<std::uint32_t>());
  if (kind == "indicator")
    return indicator(SetId::from_json(j.at("x")), j.at("level").get<std::uint32_t>());
  if (kind == "deleted") return deleted();
  throw std::invalid_argument("DomainElement::from_json: bad kind " + kind);
}

// --------------------------------------------------------------------------
// Sample
// --------------------------------------------------------------------------

Sample Sample::of(const std::vector<DomainElement>& elems) {
  std::vector<DomainElement> sorted = elems;
  std::sort(sorted.begin(), sorted.end());
  Sample s;
  for (const auto& e : sorted) {
    if (!s.counts_.empty() && s.counts_.back().first == e) {
      ++s.counts_.back().second;
    } else {
      s.counts_.emplace_back(e, 1);
    }
  }
  s.size_ = static_cast<std::int64_t>(elems.size());
  return s;
}

std::int64_t Sample::count(const DomainElement& e) const {
  auto it = std::lower_bound(counts_.begin(), counts_.end(), e,
                             [](const auto& a, const DomainElement& b) { return a.first < b; });
  if (it != counts_.end() && it->first == e) return it->second;
  return 0;
}

void Sample::add(const DomainElement& e, std::int64_t n) {
  if (n <= 0) throw std::invalid_argument("Sample::add: multiplicity must be positive");
  auto it = std::lower_bound(counts_.begin(), counts_.end(), e,
                             [](const auto& a, const DomainElement& b) { return a.first < b; });
  if (it != counts_.end() && it->first == e) {
    it->second += n;
  } else {
    counts_.insert(it, {e, n});
  }
  size_ += n;
}

bool Sample::contains_deleted() const {
  for (const auto& [e, n] : counts_)
    if (e.kind() == Kind::Deleted) return true;
  return false;
}

Sample Sample::union_with(const Sample& o) const {
  Sample r;
  r.counts_.reserve(counts_.size() + o.counts_.size());
  std::size_t i = 0, j = 0;
  while (i < counts_.size() || j < o.counts_.size()) {
    if (j >= o.counts_.size() || (i < counts_.size() && counts_[i].first < o.counts_[j].first)) {
      r.counts_.push_back(counts_[i++]);
    } else if (i >= counts_.size() || o.counts_[j].first < counts_[i].first) {
      r.counts_.push_back(o.counts_[j++]);
    } else {
      r.counts_.emplace_back(counts_[i].first, counts_[i].second + o.counts_[j].second);
      ++i, ++j;
    }
  }
  r.size_ = size_ + o.size_;
  return r;
}

Sample Sample::difference(const Sample& o) const {
  Sample r;
  for (const auto& [e, n] : counts_) {
    std::int64_t keep = n - o.count(e);
    if (keep > 0) {
      r.counts_.emplace_back(e, keep);
      r.size_ += keep;
    }
  }
  return r;
}

bool Sample::submultiset_of(const Sample& o) const {
  for (const auto& [e, n] : counts_)
    if (n > o.count(e)) return false;
  return true;
}

int Sample::compare(const Sample& o) const {
  std::size_t i = 0;
  for (; i < counts_.size() && i < o.counts_.size(); ++i) {
    int c = counts_[i].first.compare(o.counts_[i].first);
    if (c != 0) return c;
    if (counts_[i].second != o.counts_[i].second)
      return counts_[i].second < o.counts_[i].second ? -1 : 1;
  }
  if (counts_.size() != o.counts_.size()) return counts_.size() < o.counts_.size() ? -1 : 1;
  return 0;
}

std::string Sample::str() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [e, n] : counts_) {
    for (std::int64_t i = 0; i < n; ++i) {
      if (!first) os << ",";
      os << e.str();
      first = false;
    }
  }
  os << "}";
  return os.str();
}

Json Sample::to_json() const {
  Json arr = Json::array();
  for (const auto& [e, n] : counts_) arr.push_back(Json{{"elem", e.to_json()}, {"n", n}});
  return Json{{"size", size_}, {"counts", arr}};
}

Sample Sample::from_json(const Json& j) {
  Sample s;
  for (const auto& row : j.at("counts"))
    s.add(DomainElement::from_json(row.at("elem")), row.at("n").get<std::int64_t>());
  if (s.size() != j.at("size").get<std::int64_t>())
    throw std::invalid_argument("Sample::from_json: size mismatch");
  return s;
}

Partition partition(const Sample& s) {
  if (s.contains_deleted()) throw std::invalid_argument("partition: sample contains deleted marks");
  Partition out;
  for (const auto& [e, n] : s.counts()) {
    switch (e.kind()) {
      case Kind::Const: out.constants.add(e, n); break;
      case Kind::Odd: out.odds.add(e, n); break;
      case Kind::Indicator: out.indicators.add(e, n); break;
      case Kind::Deleted: break;  // unreachable
    }
  }
  return out;
}

Sample choose(const Sample& s, std::int64_t n, RandomSource& rng) {
  if (n < 0 || n > s.size()) throw std::invalid_argument("choose: n out of range");
  if (n == s.size()) return s;
  // Uniform over labeled copies: expand, partially shuffle, collapse.
  std::vector<const DomainElement*> labels;
  labels.reserve(static_cast<std::size_t>(s.size()));
  for (const auto& [e, c] : s.counts())
    for (std::int64_t i = 0; i < c; ++i) labels.push_back(&e);
  std::vector<DomainElement> picked;
  picked.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    std::size_t j = i + rng.below(labels.size() - i);
    std::swap(labels[i], labels[j]);
    picked.push_back(*labels[i]);
  }
  return Sample::of(picked);
}

// --------------------------------------------------------------------------
// BasicDistribution
// --------------------------------------------------------------------------

namespace {
void check_probability_double(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("mass outside [0,1]");
}
void check_probability_rat(const Rat& p) {
  if (p < 0 || p > 1) throw std::invalid_argument("mass outside [0,1]");
}
}  // namespace

template <class P>
BasicDistribution<P> BasicDistribution<P>::from_mass(
    std::vector<std::pair<DomainElement, P>> mass) {
  std::sort(mass.begin(), mass.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  BasicDistribution<P> d;
  P total(0);
  for (auto& [e, p] : mass) {
    if constexpr (std::is_same_v<P, double>) {
      check_probability_double(p);
    } else {
      check_probability_rat(p);
    }
    if (p == P(0)) continue;
    if (!d.mass_.empty() && d.mass_.back().first == e) {
      d.mass_.back().second += p;
    } else {
      d.mass_.emplace_back(e, p);
    }
    total += p;
  }
  if constexpr (std::is_same_v<P, double>) {
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("distribution mass does not sum to 1 (float mode)");
  } else {
    if (total != P(1)) throw std::invalid_argument("distribution mass does not sum to 1 (exact mode)");
  }
  return d;
}

template <class P>
P BasicDistribution<P>::mass(const DomainElement& e) const {
  auto it = std::lower_bound(mass_.begin(), mass_.end(), e,
                             [](const auto& a, const DomainElement& b) { return a.first < b; });
  if (it != mass_.end() && it->first == e) return it->second;
  return P(0);
}

template <class P>
Json BasicDistribution<P>::to_json() const {
  Json arr = Json::array();
  for (const auto& [e, p] : mass_) {
    if constexpr (std::is_same_v<P, double>) {
      arr.push_back(Json{{"elem", e.to_json()}, {"p", p}});
    } else {
      arr.push_back(Json{{"elem", e.to_json()}, {"p", rat_to_string(p)}});
    }
  }
  return Json{{"mode", std::is_same_v<P, double> ? "float64" : "rational"}, {"mass", arr}};
}

template <class P>
BasicDistribution<P> BasicDistribution<P>::from_json(const Json& j) {
  std::vector<std::pair<DomainElement, P>> mass;
  for (const auto& row : j.at("mass")) {
    if constexpr (std::is_same_v<P, double>) {
      mass.emplace_back(DomainElement::from_json(row.at("elem")), row.at("p").get<double>());
    } else {
      mass.emplace_back(DomainElement::from_json(row.at("elem")),
                        parse_rat(row.at("p").get<std::string>()));
    }
  }
  return from_mass(std::move(mass));
}

template class BasicDistribution<double>;
template class BasicDistribution<Rat>;

ExactDistribution to_exact(const FiniteDistribution& p) {
  std::vector<std::pair<DomainElement, Rat>> mass;
  Rat total = 0;
  for (const auto& [e, v] : p.entries()) {
    Rat q(v);  // exact dyadic value of the double
    mass.emplace_back(e, q);
    total += q;
  }
  // Renormalize the float rounding slack onto the heaviest entry so the
  // exact-mode invariant (sum == 1) holds.
  if (total != 1 && !mass.empty()) {
    auto heaviest = std::max_element(mass.begin(), mass.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
    heaviest->second += Rat(1) - total;
  }
  return ExactDistribution::from_mass(std::move(mass));
}

FiniteDistribution to_float(const ExactDistribution& p) {
  std::vector<std::pair<DomainElement, double>> mass;
  for (const auto& [e, v] : p.entries()) mass.emplace_back(e, to_double(v));
  return FiniteDistribution::from_mass(std::move(mass));
}

namespace {
template <class P>
P tv_impl(const BasicDistribution<P>& p, const BasicDistribution<P>& q) {
  P acc(0);
  const auto& a = p.entries();
  const auto& b = q.entries();
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j >= b.size() || (i < a.size() && a[i].first < b[j].first)) {
      acc += a[i].second;
      ++i;
    } else if (i >= a.size() || b[j].first < a[i].first) {
      acc += b[j].second;
      ++j;
    } else {
      P d = a[i].second - b[j].second;
      acc += d < P(0) ? P(-d) : d;
      ++i, ++j;
    }
  }
  return acc / P(2);
}
}  // namespace

double tv_exact(const FiniteDistribution& p, const FiniteDistribution& q) { return tv_impl(p, q); }
Rat tv_exact(const ExactDistribution& p, const ExactDistribution& q) { return tv_impl(p, q); }

Sample sample_iid(const FiniteDistribution& p, std::int64_t m, RandomSource& rng) {
  if (m < 0) throw std::invalid_argument("sample_iid: m must be >= 0");
  if (p.entries().empty()) throw std::invalid_argument("sample_iid: empty distribution");
  std::vector<double> cdf;
  cdf.reserve(p.entries().size());
  double acc = 0.0;
  for (const auto& [e, v] : p.entries()) {
    acc += v;
    cdf.push_back(acc);
  }
  cdf.back() = 1.0;
  std::vector<DomainElement> draws;
  draws.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    double u = rng.next_unit();
    std::size_t idx = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (idx >= cdf.size()) idx = cdf.size() - 1;
    draws.push_back(p.entries()[idx].first);
  }
  return Sample::of(draws);
}

}  // namespace cgsim
