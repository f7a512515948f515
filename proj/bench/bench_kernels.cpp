// Throughput comparison: the lazy-subset kernel against the explicit
// reference pipeline, and the kernel's serial loop against its OpenMP loop.

#include <chrono>
#include <iostream>

#include <omp.h>

#include "cgsim/adversary.hpp"
#include "cgsim/class_cg.hpp"
#include "cgsim/kernel.hpp"

using namespace cgsim;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Explicit pipeline: materialize the member subset, build the full
// distribution and push real multisets through v_sub.
double run_generic(std::uint64_t base_n, std::uint64_t s, std::int64_t m, std::int64_t trials) {
  CgParams base(SetId::interval(base_n), 2, 8);
  MetaQ q(base, s);
  const Rat eta(1, 4);
  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t sink = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    RandomSource rng(7, static_cast<std::uint64_t>(t));
    CgParams member = sample_q(q, rng);
    Sample sample = sample_iid(make_distribution(member), m, rng);
    Sample out = v_sub(sample, eta, rng);
    sink += out.size();
  }
  if (sink < 0) std::cout << "";
  return seconds_since(t0);
}

double run_kernel(std::uint64_t base_n, std::uint64_t s, std::int64_t m, std::int64_t trials,
                  bool parallel) {
  CgParams base(SetId::interval(base_n), 2, 8);
  MetaQ q(base, s);
  kernel::CgScale sc = kernel::CgScale::from(base, q, Rat(1, 4), m, 2);
  kernel::TrialPlan plan;
  plan.sub = true;
  plan.stream_tag = 0xBE;
  std::vector<kernel::TrialResult> res;
  const auto t0 = std::chrono::steady_clock::now();
  kernel::run_cg_trials(sc, plan, 7, trials, res, parallel);
  return seconds_since(t0);
}

}  // namespace

int main() {
  const std::uint64_t base_n = 200000, s = 20000;
  const std::int64_t m = 50;
  const std::int64_t trials_generic = 200, trials_kernel = 20000;

  std::cout << "config: |B|=" << base_n << " s=" << s << " m=" << m << "\n";

  const double tg = run_generic(base_n, s, m, trials_generic);
  std::cout << "explicit reference: " << trials_generic << " trials in " << tg << " s  ("
            << tg / trials_generic * 1e3 << " ms/trial)\n";

  const double tk = run_kernel(base_n, s, m, trials_kernel, false);
  std::cout << "lazy kernel serial: " << trials_kernel << " trials in " << tk << " s  ("
            << tk / trials_kernel * 1e6 << " us/trial)\n";
  std::cout << "kernel speedup vs reference: " << (tg / trials_generic) / (tk / trials_kernel)
            << "x per trial\n";

  const double tp = run_kernel(base_n, s, m, trials_kernel, true);
  std::cout << "lazy kernel OpenMP (" << omp_get_max_threads() << " threads): " << trials_kernel
            << " trials in " << tp << " s\n";
  std::cout << "parallel speedup: " << tk / tp << "x\n";
  return 0;
}
