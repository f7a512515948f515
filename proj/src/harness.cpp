#include "cgsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <omp.h>

#include "cgsim/adversary.hpp"
#include "cgsim/class_cg.hpp"
#include "cgsim/enumeration.hpp"
#include "cgsim/kernel.hpp"
#include "cgsim/learner.hpp"
#include "cgsim/stats.hpp"

namespace cgsim {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CheckLine check(std::string name, double lhs, std::string rel, double rhs,
                std::string detail = "") {
  CheckLine c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.relation = std::move(rel);
  c.rhs = rhs;
  c.detail = std::move(detail);
  bool ok = false;
  if (c.relation == "<=") ok = lhs <= rhs;
  if (c.relation == ">=") ok = lhs >= rhs;
  if (c.relation == "==") ok = lhs == rhs;
  c.verdict = ok ? "PASS" : "FAIL";
  return c;
}

CheckLine info(std::string name, double lhs, std::string rel, double rhs,
               std::string detail = "") {
  CheckLine c = check(std::move(name), lhs, std::move(rel), rhs, std::move(detail));
  c.verdict = "INFO";
  return c;
}

double binom_se(double p, double n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

}  // namespace

Json CheckLine::to_json() const {
  Json j{{"name", name},   {"lhs", lhs},         {"relation", relation},
         {"rhs", rhs},     {"verdict", verdict}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

bool RunReport::all_pass() const {
  for (const auto& c : checks)
    if (c.verdict == "FAIL") return false;
  return true;
}

Json RunReport::to_json() const {
  Json checks_json = Json::array();
  for (const auto& c : checks) checks_json.push_back(c.to_json());
  Json est = Json::array();
  for (const auto& e : estimates) est.push_back(e);
  Json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["config"] = config_echo;
  j["checks"] = checks_json;
  j["estimates"] = est;
  j["summary"] = summary;
  j["all_pass"] = all_pass();
  return j;
}

std::string RunReport::estimates_csv() const {
  std::ostringstream os;
  os << "config_hash,name,estimate,se,n,bound,verdict\n";
  for (const auto& e : estimates) {
    os << config_hash << "," << e.at("name").get<std::string>() << ","
       << fmt(e.at("estimate").get<double>()) << "," << fmt(e.at("se").get<double>()) << ","
       << e.at("n").get<std::int64_t>() << "," << fmt(e.at("bound").get<double>()) << ","
       << e.at("verdict").get<std::string>() << "\n";
  }
  return os.str();
}

void RunReport::write(const std::string& out_dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "report.json");
    f << to_json().dump(2) << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "estimates.csv");
    f << estimates_csv();
  }
  if (!trial_rows.empty()) {
    std::ofstream f(fs::path(out_dir) / "trials.csv");
    f << trial_header << "\n";
    for (const auto& row : trial_rows) f << row << "\n";
  }
}

std::string config_hash(const Json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// shared experiment context for the mixture-class runs
// ---------------------------------------------------------------------------

namespace {

struct CgContext {
  CgParams p;
  MetaQ q;
  Rat eta, alpha, gamma_prime;
  std::int64_t m = 0, k_add = 2, trials = 0;
  std::uint64_t seed = 1;
  bool parallel = true;
  bool trial_csv = false;
  CertificateResult cert;
  kernel::CgScale scale;
};

// Trial streams are keyed by this tag for both the confusion and the
// failure run, so the two share per-trial samples at equal seeds.
constexpr std::uint64_t kCgTrialTag = 0xC91A17;
constexpr std::uint64_t kCandidateTag = 0xCA4D1D;

CgContext parse_cg_context(const Json& cfg) {
  CgParams p = CgParams::from_json(cfg.at("class"));
  MetaQ q(p, cfg.at("meta").at("subset_size").get<std::uint64_t>());
  CgContext ctx{p,
                q,
                parse_rat(cfg.at("eta").get<std::string>()),
                parse_rat(cfg.value("alpha", std::string("1/2"))),
                parse_rat(cfg.value("gamma_prime", std::string("1/100"))),
                cfg.at("m").get<std::int64_t>(),
                cfg.value("k_add", std::int64_t{2}),
                cfg.value("trials", std::int64_t{100000}),
                cfg.value("seed", std::uint64_t{1}),
                cfg.value("parallel", true),
                cfg.value("trial_csv", false),
                {},
                {}};
  ctx.cert = confusion_certificate(ctx.p, ctx.q, ctx.eta, ctx.alpha, ctx.gamma_prime, ctx.m);
  ctx.scale = kernel::CgScale::from(ctx.p, ctx.q, ctx.eta, ctx.m, ctx.k_add);
  return ctx;
}

std::vector<kernel::Candidate> build_candidates(const kernel::CgScale& sc, std::int64_t n_q,
                                                std::uint64_t seed) {
  std::vector<kernel::Candidate> out;
  out.push_back({true, {}});
  for (std::int64_t i = 0; i < n_q; ++i) {
    RandomSource rng(seed, kCandidateTag + static_cast<std::uint64_t>(i));
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(sc.s) * 2);
    while (chosen.size() < sc.s) chosen.insert(rng.below(sc.base_n));
    kernel::Candidate c;
    c.is_base = false;
    c.elems.assign(chosen.begin(), chosen.end());
    std::sort(c.elems.begin(), c.elems.end());
    c.build_bits(sc.base_n);
    out.push_back(std::move(c));
  }
  return out;
}

struct FeatureArrays {
  // [feature][arm] -> per-trial values
  std::vector<double> v[3][2];
};

void collect_features(const std::vector<kernel::TrialResult>& res,
                      kernel::ChannelStats (kernel::TrialResult::*channel)[2], FeatureArrays& fa) {
  const std::size_t n = res.size();
  for (int f = 0; f < 3; ++f)
    for (int arm = 0; arm < 2; ++arm) fa.v[f][arm].resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const kernel::ChannelStats* stats = res[t].*channel;
    for (int arm = 0; arm < 2; ++arm)
      for (int f = 0; f < 3; ++f)
        fa.v[f][arm][t] = kernel::feature_value(stats[arm], kernel::kAllFeatures[f]);
  }
}

Json estimate_row(const std::string& name, const AdvantageEstimate& est, double bound,
                  const std::string& verdict) {
  return Json{{"name", name},     {"estimate", est.estimate}, {"se", est.se},
              {"n", est.n},       {"bound", bound},           {"verdict", verdict},
              {"degenerate", est.degenerate}};
}

}  // namespace

// ---------------------------------------------------------------------------
// confuse
// ---------------------------------------------------------------------------

RunReport run_confusion(const Json& cfg) {
  RunReport rep;
  rep.experiment = "confuse";
  rep.config_echo = cfg;
  rep.config_hash = config_hash(cfg);

  CgContext ctx = parse_cg_context(cfg);
  rep.summary["certificate"] = ctx.cert.to_json();
  if (!ctx.cert.accepted) {
    CheckLine c;
    c.name = "certificate";
    c.relation = "<=";
    c.verdict = "FAIL";
    c.detail = ctx.cert.rejection;
    rep.checks.push_back(c);
    return rep;
  }
  const double zeta_ub = to_double(ctx.cert.params.zeta_ub);
  const bool informative = ctx.scale.r == 0;

  kernel::TrialPlan plan;
  plan.raw = true;
  plan.sub = plan.pair = plan.addk = true;
  plan.stream_tag = kCgTrialTag;
  plan.thresholds = kernel::FailureThresholds::from(ctx.scale, ctx.cert.params.gamma);

  std::vector<kernel::TrialResult> res;
  kernel::run_cg_trials(ctx.scale, plan, ctx.seed, ctx.trials, res, ctx.parallel);

  // Size contracts hold on every trial.
  std::int64_t bad_sizes = 0;
  const std::int64_t want_sub = ctx.m - ctx.scale.r;
  const std::int64_t want_pair = ctx.m + ctx.scale.r;
  const std::int64_t want_addk = ctx.m + ctx.k_add * ctx.scale.r;
  for (const auto& t : res)
    for (int arm = 0; arm < 2; ++arm)
      bad_sizes += (t.size_sub[arm] != want_sub) + (t.size_pair[arm] != want_pair) +
                   (t.size_addk[arm] != want_addk);
  rep.checks.push_back(check("size_contracts_violations", static_cast<double>(bad_sizes), "==", 0,
                             "sub=m-r, pair=m+r, addk=m+k*r on every trial"));

  struct ChannelCase {
    const char* name;
    kernel::ChannelStats (kernel::TrialResult::*member)[2];
    double cap;
    bool swap_arms;  // pair compares V_add,p^m(Q-arm) against V_add,Q^m(p-arm)
  };
  const double addk_cap = zeta_ub + 1.0 / (static_cast<double>(ctx.k_add) + 1.0);
  const ChannelCase cases[] = {
      {"sub", &kernel::TrialResult::sub, zeta_ub, false},
      {"add_pair", &kernel::TrialResult::pair, zeta_ub, true},
      {"add_k", &kernel::TrialResult::addk, addk_cap, false},
  };

  AdvantageEstimate sub_adv[3], pair_adv[3];
  for (const auto& cc : cases) {
    FeatureArrays fa;
    collect_features(res, cc.member, fa);
    for (int f = 0; f < 3; ++f) {
      const std::string name =
          std::string(cc.name) + "/" + kernel::feature_name(kernel::kAllFeatures[f]);
      // Arm 0 holds data from the base member; the advantage estimate is
      // oriented so a positive value means the channels are told apart.
      AdvantageEstimate est = cc.swap_arms
                                  ? threshold_advantage(fa.v[f][1], fa.v[f][0], name)
                                  : threshold_advantage(fa.v[f][0], fa.v[f][1], name);
      const double cap = cc.cap + 3.0 * est.se;
      std::string verdict = informative ? "INFO" : (est.estimate <= cap ? "PASS" : "FAIL");
      rep.estimates.push_back(estimate_row(name, est, cap, verdict));
      if (!informative) {
        rep.checks.push_back(check("advantage/" + name, est.estimate, "<=", cap,
                                   "cap = zeta bound + 3*se"));
      } else {
        rep.checks.push_back(info("advantage/" + name, est.estimate, "<=", cap,
                                  "eta = 0: no corruption, advantage reported only"));
      }
      if (std::string(cc.name) == "sub") sub_adv[f] = est;
      if (std::string(cc.name) == "add_pair") pair_adv[f] = est;
    }
  }

  // Additive transfer: the paired additive channels are never easier to
  // tell apart than the subtractive ones (paired trials).
  for (int f = 0; f < 3; ++f) {
    const double sigma = std::sqrt(sub_adv[f].se * sub_adv[f].se + pair_adv[f].se * pair_adv[f].se);
    const std::string name =
        std::string("transfer/") + kernel::feature_name(kernel::kAllFeatures[f]);
    auto line = informative
                    ? info(name, pair_adv[f].estimate, "<=", sub_adv[f].estimate + 3.0 * sigma)
                    : check(name, pair_adv[f].estimate, "<=", sub_adv[f].estimate + 3.0 * sigma,
                            "pair advantage <= sub advantage + 3*sigma");
    rep.checks.push_back(line);
  }

  rep.summary["zeta_ub"] = zeta_ub;
  rep.summary["trials"] = ctx.trials;
  rep.summary["informative_only"] = informative;

  if (ctx.trial_csv) {
    rep.trial_header = "trial,arm,channel,n_const,n_odds,n_ind,size,repeated_odds";
    auto emit = [&](std::int64_t t, int arm, const char* ch, const kernel::ChannelStats& st) {
      std::ostringstream os;
      os << t << "," << arm << "," << ch << "," << st.n_const << "," << st.n_odds << ","
         << st.n_ind << "," << st.size << "," << (st.repeated_odds ? 1 : 0);
      rep.trial_rows.push_back(os.str());
    };
    for (std::int64_t t = 0; t < ctx.trials; ++t) {
      for (int arm = 0; arm < 2; ++arm) {
        emit(t, arm, "raw", res[t].raw[arm]);
        emit(t, arm, "sub", res[t].sub[arm]);
        emit(t, arm, "pair", res[t].pair[arm]);
        emit(t, arm, "addk", res[t].addk[arm]);
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// failure
// ---------------------------------------------------------------------------

RunReport run_failure(const Json& cfg) {
  RunReport rep;
  rep.experiment = "failure";
  rep.config_echo = cfg;
  rep.config_hash = config_hash(cfg);

  CgContext ctx = parse_cg_context(cfg);
  rep.summary["certificate"] = ctx.cert.to_json();
  if (!ctx.cert.accepted)
    throw std::invalid_argument("run_failure: certificate rejected: " + ctx.cert.rejection);

  const double zeta_ub = to_double(ctx.cert.params.zeta_ub);
  const double floor = 1.0 - zeta_ub;

  kernel::TrialPlan plan;
  plan.sub = plan.addk = true;
  plan.learners_sub = plan.learners_addk = true;
  plan.stream_tag = kCgTrialTag;
  plan.thresholds = kernel::FailureThresholds::from(ctx.scale, ctx.cert.params.gamma);
  plan.candidates =
      build_candidates(ctx.scale, cfg.value("candidate_pool", std::int64_t{10}), ctx.seed);

  std::vector<kernel::TrialResult> res;
  kernel::run_cg_trials(ctx.scale, plan, ctx.seed, ctx.trials, res, ctx.parallel);

  struct LearnerCase {
    const char* name;
    bool (kernel::TrialResult::*flags)[2];
  };
  const LearnerCase learner_cases[] = {
      {"sub/realizable", &kernel::TrialResult::fail_real_sub},
      {"sub/min_distance", &kernel::TrialResult::fail_min_sub},
      {"add_k/realizable", &kernel::TrialResult::fail_real_addk},
      {"add_k/min_distance", &kernel::TrialResult::fail_min_addk},
  };
  const double n = static_cast<double>(ctx.trials);
  for (const auto& lc : learner_cases) {
    double fp = 0, fq = 0;
    for (const auto& t : res) {
      fp += (t.*(lc.flags))[0];
      fq += (t.*(lc.flags))[1];
    }
    fp /= n;
    fq /= n;
    const double sigma = std::sqrt(binom_se(fp, n) * binom_se(fp, n) +
                                   binom_se(fq, n) * binom_se(fq, n));
    rep.checks.push_back(check(std::string("failure_floor/") + lc.name, fp + fq, ">=",
                               floor - 3.0 * sigma, "f_p + f_q vs 1 - zeta_ub - 3*sigma"));
    rep.estimates.push_back(Json{{"name", std::string("failure_sum/") + lc.name},
                                 {"estimate", fp + fq},
                                 {"se", sigma},
                                 {"n", ctx.trials},
                                 {"bound", floor},
                                 {"verdict", rep.checks.back().verdict},
                                 {"f_p", fp},
                                 {"f_q", fq}});
  }

  // No-adversary control: at a sample size where the indicator is all but
  // sure to arrive, the realizable learner succeeds on both arms at the
  // same threshold gamma/2.
  if (cfg.contains("control")) {
    const Json& cc = cfg.at("control");
    kernel::CgScale control_scale =
        kernel::CgScale::from(ctx.p, ctx.q, Rat(0), cc.at("m").get<std::int64_t>(), ctx.k_add);
    kernel::TrialPlan control_plan;
    control_plan.raw = true;
    control_plan.learners_raw = true;
    control_plan.stream_tag = kCgTrialTag + 1;
    control_plan.thresholds = plan.thresholds;  // same gamma/2 threshold
    std::vector<kernel::TrialResult> control_res;
    const std::int64_t control_trials = cc.value("trials", std::int64_t{20000});
    kernel::run_cg_trials(control_scale, control_plan, ctx.seed, control_trials, control_res,
                          ctx.parallel);
    double fp = 0, fq = 0;
    for (const auto& t : control_res) {
      fp += t.fail_real_raw[0];
      fq += t.fail_real_raw[1];
    }
    fp /= static_cast<double>(control_trials);
    fq /= static_cast<double>(control_trials);
    rep.checks.push_back(check("control/realizable_sum", fp + fq, "<=", 0.05,
                               "no-adversary control at m = " +
                                   std::to_string(cc.at("m").get<std::int64_t>())));
    rep.summary["control"] = Json{{"f_p", fp}, {"f_q", fq}, {"trials", control_trials}};
  }

  rep.summary["zeta_ub"] = zeta_ub;
  rep.summary["gamma"] = rat_to_string(ctx.cert.params.gamma);
  rep.summary["trials"] = ctx.trials;

  if (ctx.trial_csv) {
    rep.trial_header = "trial,channel,learner,fail_p,fail_q";
    for (std::int64_t t = 0; t < ctx.trials; ++t) {
      for (const auto& lc : learner_cases) {
        std::ostringstream os;
        os << t << "," << lc.name << "," << (res[t].*(lc.flags))[0] << ","
           << (res[t].*(lc.flags))[1];
        rep.trial_rows.push_back(os.str());
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// realizable
// ---------------------------------------------------------------------------

RunReport run_realizable(const Json& cfg) {
  RunReport rep;
  rep.experiment = "realizable";
  rep.config_echo = cfg;
  rep.config_hash = config_hash(cfg);

  const GFunction g = cfg.contains("g") ? GFunction::from_json(cfg.at("g")) : GFunction::square();
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{1});
  const std::int64_t trials = cfg.value("trials", std::int64_t{10000});
  const bool parallel = cfg.value("parallel", true);

  std::vector<std::pair<double, double>> grid;
  if (cfg.contains("grid")) {
    for (const auto& cell : cfg.at("grid"))
      grid.emplace_back(cell.at("eps").get<double>(), cell.at("delta").get<double>());
  } else {
    grid = {{0.1, 0.01}, {0.1, 0.05}, {0.25, 0.01}, {0.25, 0.05}};
  }

  Json cells = Json::array();
  for (const auto& [eps, delta] : grid) {
    const std::uint64_t m = realizable_sample_complexity(eps, delta, g);
    const auto j = static_cast<std::uint64_t>(std::ceil(1.0 / eps));
    const std::uint64_t k = g(j);

    std::vector<std::uint8_t> success(static_cast<std::size_t>(trials)),
        identified(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t t = 0; t < trials; ++t) {
      RandomSource rng(seed, 0xEA11AB1E);
      rng = rng.fork(static_cast<std::uint64_t>(t)).fork(static_cast<std::uint64_t>(m));
      // Random in-class member: a small random support set.
      const std::uint64_t bsize = 1 + rng.below(8);
      std::vector<std::uint64_t> elems;
      while (elems.size() < bsize) {
        std::uint64_t v = rng.below(64);
        if (std::find(elems.begin(), elems.end(), v) == elems.end()) elems.push_back(v);
      }
      CgParams truth(SetId::of(elems), j, k);
      const FiniteDistribution dist = make_distribution(truth);
      const Sample s = sample_iid(dist, static_cast<std::int64_t>(m), rng);
      const LearnerOutput out = realizable_learner(s, g);
      // Error measured in exact arithmetic: the fallback error is exactly
      // 1/j, which sits right on the eps boundary when j = 1/eps.
      const ExactDistribution truth_exact = make_distribution_exact(truth);
      const ExactDistribution est_exact =
          out.decoded ? make_distribution_exact(*out.decoded)
                      : ExactDistribution::point_mass(DomainElement::constant());
      const Rat err = tv_exact(est_exact, truth_exact);
      success[static_cast<std::size_t>(t)] = err <= Rat(eps);
      identified[static_cast<std::size_t>(t)] = out.decoded.has_value() && *out.decoded == truth;
    }
    double freq = 0, ident = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
      freq += success[static_cast<std::size_t>(t)];
      ident += identified[static_cast<std::size_t>(t)];
    }
    freq /= static_cast<double>(trials);
    ident /= static_cast<double>(trials);
    const double se = binom_se(1.0 - delta, static_cast<double>(trials));
    const double analytic_identify =
        1.0 - std::pow(1.0 - 1.0 / static_cast<double>(k), static_cast<double>(m));

    std::ostringstream name;
    name << "success@eps=" << eps << ",delta=" << delta;
    rep.checks.push_back(check(name.str(), freq, ">=", 1.0 - delta - 3.0 * se,
                               "m = " + std::to_string(m)));
    cells.push_back(Json{{"eps", eps},
                         {"delta", delta},
                         {"m", m},
                         {"success_freq", freq},
                         {"identify_freq", ident},
                         {"identify_analytic", analytic_identify}});
    rep.estimates.push_back(Json{{"name", name.str()},
                                 {"estimate", freq},
                                 {"se", se},
                                 {"n", trials},
                                 {"bound", 1.0 - delta},
                                 {"verdict", rep.checks.back().verdict}});
  }
  rep.summary["cells"] = cells;
  rep.summary["g"] = g.to_json();
  return rep;
}

// ---------------------------------------------------------------------------
// invert-check
// ---------------------------------------------------------------------------

namespace {

struct InvertInstance {
  Prior prior;
  Rat eta;
  std::string label;
};

std::vector<InvertInstance> default_invert_battery() {
  std::vector<InvertInstance> out;
  const std::vector<Rat> etas = {Rat(1, 3), Rat(1, 2)};
  for (const bool meta : {false, true}) {
    for (const auto& [j, k] : std::vector<std::pair<std::uint64_t, std::uint64_t>>{{2, 4}, {3, 6}}) {
      for (std::int64_t m = 1; m <= 3; ++m) {
        for (const Rat& eta : etas) {
          std::ostringstream label;
          label << (meta ? "meta" : "power") << ",j=" << j << ",k=" << k << ",m=" << m
                << ",eta=" << rat_to_string(eta);
          if (meta) {
            CgParams base(SetId::of({0, 1, 2, 3}), j, k);
            out.push_back({Prior::meta_power(MetaQ(base, 2), m), eta, label.str()});
          } else {
            CgParams member(SetId::of({0, 1}), j, k);
            out.push_back({Prior::power(member, m), eta, label.str()});
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

RunReport run_invert_check(const Json& cfg) {
  RunReport rep;
  rep.experiment = "invert-check";
  rep.config_echo = cfg;
  rep.config_hash = config_hash(cfg);

  std::vector<InvertInstance> instances;
  if (cfg.contains("instances")) {
    for (const auto& inst : cfg.at("instances")) {
      const std::int64_t m = inst.at("m").get<std::int64_t>();
      const Rat eta = parse_rat(inst.at("eta").get<std::string>());
      if (inst.contains("meta")) {
        MetaQ q = MetaQ::from_json(inst.at("meta"));
        instances.push_back({Prior::meta_power(q, m), eta, "config meta instance"});
      } else {
        CgParams p = CgParams::from_json(inst.at("class"));
        instances.push_back({Prior::power(p, m), eta, "config power instance"});
      }
    }
  } else {
    instances = default_invert_battery();
  }

  Json rows = Json::array();
  for (const auto& inst : instances) {
    if (inst.prior.m > 3) throw std::invalid_argument("invert-check: micro instances only (m <= 3)");
    const Law prior = prior_law(inst.prior);
    const Law round = roundtrip_law(inst.prior, inst.eta);
    const Rat tv = tv_law(prior, round);
    rep.checks.push_back(check("roundtrip_tv/" + inst.label, to_double(tv), "==", 0.0,
                               "exact rational TV, value " + rat_to_string(tv)));
    rows.push_back(Json{{"instance", inst.label}, {"tv", rat_to_string(tv)}});
  }
  rep.summary["instances"] = rows;
  rep.summary["count"] = instances.size();
  return rep;
}

// ---------------------------------------------------------------------------
// lift-check
// ---------------------------------------------------------------------------

RunReport run_lift_check(const Json& cfg) {
  RunReport rep;
  rep.experiment = "lift-check";
  rep.config_echo = cfg;
  rep.config_hash = config_hash(cfg);

  const std::uint64_t seed = cfg.value("seed", std::uint64_t{1});
  const std::int64_t n_mc = cfg.value("trials", std::int64_t{100000});
  const Rat eta = cfg.contains("eta") ? parse_rat(cfg.at("eta").get<std::string>()) : Rat(1, 4);

  // Default decomposition: p = 3/4, 1/4 on two points; r concentrates on
  // the first, so eta*r <= p holds with room.
  const DomainElement a = DomainElement::odd(0, 1), b = DomainElement::odd(1, 1);
  FiniteDistribution p = cfg.contains("p")
                             ? FiniteDistribution::from_json(cfg.at("p"))
                             : FiniteDistribution::from_mass({{a, 0.75}, {b, 0.25}});
  FiniteDistribution r = cfg.contains("r") ? FiniteDistribution::from_json(cfg.at("r"))
                                           : FiniteDistribution::point_mass(a);

  // Aggregate deletion probability equals eta exactly.
  RandomSource rng(seed, 0x11F7);
  std::int64_t deleted = 0;
  for (std::int64_t i = 0; i < n_mc; ++i) {
    const Sample s = sample_iid(p, 1, rng);
    const DomainElement& x = s.counts().front().first;
    if (element_random_delete(x, p, r, eta, rng).kind() == Kind::Deleted) ++deleted;
  }
  const double del_freq = static_cast<double>(deleted) / static_cast<double>(n_mc);
  const double eta_d = to_double(eta);
  const double se_del = binom_se(eta_d, static_cast<double>(n_mc));
  rep.checks.push_back(check("aggregate_deletion|freq-eta|", std::abs(del_freq - eta_d), "<=",
                             5.0 * se_del, "P(deleted) = eta within 5 sigma"));

  // Case-2 frequency at m = 8 meets the binomial-median floor.
  const std::int64_t m_case = cfg.value("m_case", std::int64_t{8});
  std::int64_t case2 = 0;
  const std::int64_t n_case = std::min<std::int64_t>(n_mc, 20000);
  for (std::int64_t i = 0; i < n_case; ++i) {
    const Sample s = sample_iid(p, m_case, rng);
    case2 += v_adp_lift_detail(s, p, r, eta, rng).case2;
  }
  const double case2_freq = static_cast<double>(case2) / static_cast<double>(n_case);
  const double se_case = binom_se(0.5, static_cast<double>(n_case));
  rep.checks.push_back(
      check("case2_frequency", case2_freq, ">=", 0.5 - 3.0 * se_case, "binomial median floor"));

  // Size contract on every trial is enforced inside v_adp_lift; verify the
  // arithmetic once more here.
  {
    const Sample s = sample_iid(p, m_case, rng);
    const Sample out = v_adp_lift(s, p, r, eta, rng);
    const std::int64_t want = m_case - to_i64(rat_ceil(eta * Rat(m_case)));
    rep.checks.push_back(check("lift_output_size", static_cast<double>(out.size()), "==",
                               static_cast<double>(want)));
  }

  // Exact conditional law on micro instances: given the in-budget case,
  // the output is i.i.d. from the survivor conditional.
  const ExactDistribution pe = to_exact(p);
  const ExactDistribution re = to_exact(r);
  for (const std::int64_t m : {2, 3}) {
    const std::int64_t big_r = to_i64(rat_ceil(eta * Rat(m)));
    // Survivor conditional (p - eta*r)/(1 - eta).
    std::vector<std::pair<DomainElement, Rat>> mass;
    for (const auto& [e, v] : pe.entries()) {
      Rat w = (v - eta * re.mass(e)) / (Rat(1) - eta);
      if (w < 0) throw std::invalid_argument("lift-check: invalid decomposition");
      mass.emplace_back(e, w);
    }
    const ExactDistribution vobl = ExactDistribution::from_mass(std::move(mass));
    const Law want = power_law(vobl, m - big_r);

    Law case2_law;
    Rat case2_mass = 0;
    const Law base = power_law(pe, m);
    for (const auto& [s, ps] : base) {
      // Enumerate deletion splits of s; keep the in-budget branch.
      const auto split = lift_case_laws(s, pe, re, eta);
      for (const auto& [t, q] : split.second) {
        case2_law[t] += ps * q;
        case2_mass += ps * q;
      }
    }
    for (auto& [t, q] : case2_law) q /= case2_mass;
    const Rat tv = tv_law(case2_law, want);
    rep.checks.push_back(check("case2_conditional_tv@m=" + std::to_string(m), to_double(tv), "==",
                               0.0, "exact rational TV, value " + rat_to_string(tv)));
  }

  rep.summary["deletion_freq"] = del_freq;
  rep.summary["case2_freq"] = case2_freq;
  return rep;
}

// ---------------------------------------------------------------------------
// example-b
// ---------------------------------------------------------------------------

RunReport run_example_b(const Json& cfg) {
  RunReport rep;
  rep.experiment = "example-b";
  rep.config_echo = cfg;
  rep.config_hash = config_hash(cfg);

  const std::int64_t m = cfg.value("m", std::int64_t{5});
  const Rat zeta = cfg.contains("zeta") ? parse_rat(cfg.at("zeta").get<std::string>()) : Rat(1, 10);
  const std::int64_t trials = cfg.value("trials", std::int64_t{100000});
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{1});

  // |B| = 2^m * m / (1 - (1-zeta)^{1/m}), rounded up to a multiple of 2^m
  // so the subset size s = 2^-m |B| is integral.
  const double zeta_d = to_double(zeta);
  const double denom = 1.0 - std::pow(1.0 - zeta_d, 1.0 / static_cast<double>(m));
  const double pow2m = std::ldexp(1.0, static_cast<int>(m));
  std::uint64_t base_n =
      static_cast<std::uint64_t>(std::ceil(pow2m * static_cast<double>(m) / denom));
  const auto mult = static_cast<std::uint64_t>(pow2m);
  base_n = ((base_n + mult - 1) / mult) * mult;
  const std::uint64_t s = cfg.value("s", base_n / mult);

  // Exact separation: tv(U_B, U_B') = 1 - s/|B| = 1 - 2^-m.
  const Rat sep = Rat(1) - Rat(s, base_n);
  const Rat want_sep = Rat(1) - Rat(1, BigInt(1) << static_cast<unsigned>(m));
  rep.checks.push_back(check("separation", to_double(sep), ">=", to_double(want_sep),
                             "1 - s/|B| vs 1 - 2^-m, exact values " + rat_to_string(sep) + " vs " +
                                 rat_to_string(want_sep)));

  // Repeated-element distinguisher between U_B^m and |Q|^m.
  std::vector<double> fa(static_cast<std::size_t>(trials)), fb(static_cast<std::size_t>(trials));
  const bool parallel = cfg.value("parallel", true);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t t = 0; t < trials; ++t) {
    RandomSource rng = RandomSource(seed, 0xEBB).fork(static_cast<std::uint64_t>(t));
    std::vector<std::uint64_t> vals;
    vals.reserve(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) vals.push_back(rng.below(base_n));
    std::sort(vals.begin(), vals.end());
    fa[static_cast<std::size_t>(t)] =
        std::adjacent_find(vals.begin(), vals.end()) != vals.end() ? 1.0 : 0.0;

    vals.clear();
    if (s == base_n) {
      for (std::int64_t i = 0; i < m; ++i) vals.push_back(rng.below(base_n));
    } else {
      kernel::SubsetTable table(base_n);
      const std::uint32_t sub = table.new_subset(s);
      for (std::int64_t i = 0; i < m; ++i) vals.push_back(table.draw_member(sub, rng));
    }
    std::sort(vals.begin(), vals.end());
    fb[static_cast<std::size_t>(t)] =
        std::adjacent_find(vals.begin(), vals.end()) != vals.end() ? 1.0 : 0.0;
  }
  AdvantageEstimate est = threshold_advantage(fb, fa, "repeated_element");
  const double cap = to_double(zeta) + 3.0 * est.se;
  rep.checks.push_back(
      check("advantage/repeated_element", est.estimate, "<=", cap, "zeta + 3*se"));
  rep.estimates.push_back(estimate_row("repeated_element", est, cap, rep.checks.back().verdict));

  rep.summary["base_n"] = base_n;
  rep.summary["s"] = s;
  rep.summary["m"] = m;
  rep.summary["separation_exact"] = rat_to_string(sep);
  return rep;
}

// ---------------------------------------------------------------------------
// params
// ---------------------------------------------------------------------------

RunReport run_params(const Json& cfg) {
  RunReport rep;
  rep.experiment = "params";
  rep.config_echo = cfg;
  rep.config_hash = config_hash(cfg);

  const Rat alpha = cfg.contains("alpha") ? parse_rat(cfg.at("alpha").get<std::string>()) : Rat(1);
  const GFunction g = cfg.contains("g") ? GFunction::from_json(cfg.at("g")) : GFunction::square();
  const std::uint64_t m = cfg.value("m", std::uint64_t{2});

  const PlannerOutput plan = plan_parameters(alpha, g, m);
  rep.summary["plan"] = plan.to_json();
  rep.checks.push_back(check("separation", to_double(plan.tv_bound), ">=", to_double(plan.gamma),
                             "(1/j - 1/g(j))/2 >= 4*alpha*eta + 4*gamma', exact comparison was " +
                                 std::string(plan.separation_ok ? "true" : "false")));

  // zeta chain: the doubled birthday term at n_required stays below 1/16
  // (exact), and the markov term is exactly 1/16, so the sum is <= 1/8.
  const Rat birthday_chain = Rat(2) * (Rat(1) - rat_pow(Rat(1) - Rat(m, plan.n_required),
                                                        static_cast<std::uint64_t>(m)));
  rep.checks.push_back(check("birthday_chain", to_double(birthday_chain), "<=",
                             to_double(Rat(1, 16)),
                             "2*(1 - (1 - m/n)^m) at n_required, exact value " +
                                 rat_to_string(birthday_chain)));
  rep.checks.push_back(check("markov_term", plan.markov_term, "<=", 1.0 / 16.0));
  rep.checks.push_back(check("zeta_ub_planned", to_double(birthday_chain) + plan.markov_term, "<=",
                             0.125, "total planned channel-closeness bound"));

  if (cfg.contains("f")) {
    const Json& fj = cfg.at("f");
    const std::string rule = fj.at("rule").get<std::string>();
    RobustnessProfile f = rule == "sqrt"    ? RobustnessProfile::sqrt()
                          : rule == "linear" ? RobustnessProfile::linear()
                                             : RobustnessProfile::power(fj.at("a").get<double>());
    const std::uint64_t j = fj.value("j", std::uint64_t{2});
    const FRobustPlan fp = plan_parameters_f(f, j);
    rep.summary["f_plan"] = Json{{"rule", f.name()}, {"j", j}, {"eta_j", fp.eta_j},
                                 {"g_min", fp.g_min}};
    const double lhs = 1.0 / (2.0 * static_cast<double>(j));
    const double rhs = 4.0 * f(fp.eta_j) + 1.0 / static_cast<double>(fp.g_min);
    rep.checks.push_back(check("f_plan_inequality", rhs, "<=", lhs,
                               "4 f(eta_j) + 1/g_min <= 1/(2j)"));
  }
  return rep;
}

RunReport run_experiment(const Json& config) {
  const std::string kind = config.at("experiment").get<std::string>();
  if (kind == "realizable") return run_realizable(config);
  if (kind == "confuse") return run_confusion(config);
  if (kind == "failure") return run_failure(config);
  if (kind == "invert-check") return run_invert_check(config);
  if (kind == "lift-check") return run_lift_check(config);
  if (kind == "example-b") return run_example_b(config);
  if (kind == "params") return run_params(config);
  throw std::invalid_argument("unknown experiment: " + kind);
}

}  // namespace cgsim
