// Benchmark comparing the OpenMP kernels against the serial reference
// implementations on a synthetic generative instance.
#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "phylnet/model.hpp"
#include "phylnet/parallel.hpp"
#include "phylnet/reference.hpp"
#include "phylnet/sampler.hpp"
#include "phylnet/simulate.hpp"

namespace {

template <typename F>
double time_ms(F&& f, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phylnet kernel benchmark"};
  int V = 60, M = 30, K = 3, reps = 20;
  std::uint64_t seed = 7;
  app.add_option("--nodes", V, "node count");
  app.add_option("--networks", M, "network count");
  app.add_option("--dim", K, "latent dimension");
  app.add_option("--reps", reps, "repetitions per timing");
  app.add_option("--seed", seed, "seed");
  CLI11_PARSE(app, argc, argv);

  phylnet::Rng rng = phylnet::make_rng(seed, {phylnet::kSimulateStream});
  phylnet::GenerativeSpec spec;
  spec.V = V;
  spec.M = M;
  spec.K = K;
  auto sim = phylnet::simulate_generative(spec, rng);

  volatile double sink = 0;
  std::printf("instance: V=%d M=%d K=%d threads=%d\n", V, M, K, phylnet::max_threads());
  std::printf("%-24s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

  struct Row {
    const char* name;
    double serial;
    double parallel;
  };

  // loglik: extended-precision pair loop vs the parallel kernel.
  Row loglik{"loglik_networks", 0, 0};
  loglik.serial = time_ms(
      [&] { sink = phylnet::reference::loglik_networks_serial(sim.data, spec.a0, sim.features); },
      reps);
  loglik.parallel = time_ms(
      [&] { sink = phylnet::loglik_networks(sim.data, spec.a0, sim.features); }, reps);

  // bbm prior: dense per-(m,k) inverse vs one shared Cholesky.
  Row bbm{"bbm_log_prior", 0, 0};
  bbm.serial = time_ms(
      [&] { sink = phylnet::reference::bbm_log_prior_dense(sim.features, spec.sigma0_2, sim.tree); },
      reps);
  bbm.parallel = time_ms(
      [&] { sink = phylnet::bbm_log_prior(sim.features, spec.sigma0_2, sim.tree); }, reps);

  Row dist{"distance_matrix", 0, 0};
  dist.serial = time_ms(
      [&] { sink = phylnet::reference::distance_matrix_serial(sim.features.z[0]).sum(); }, reps);
  dist.parallel = time_ms([&] { sink = phylnet::distance_matrix(sim.features.z[0]).sum(); }, reps);

  for (const Row& r : {loglik, bbm, dist})
    std::printf("%-24s %12.3f %12.3f %8.2fx\n", r.name, r.serial, r.parallel,
                r.serial / r.parallel);

  // Full sweeps at 1 thread vs all threads (identical samples either way).
  phylnet::SamplerConfig config;
  config.n_iter = 50;
  config.burn_in = 1;
  config.thin = 1;
  config.n_chains = 1;
  config.seed = seed;
  phylnet::Hyperparams hyper;
  hyper.K = K;
  const int hw = phylnet::max_threads();
  phylnet::set_max_threads(1);
  const double sweep_serial =
      time_ms([&] { phylnet::run_chain(sim.data, hyper, config, 0); }, 1) / config.n_iter;
  phylnet::set_max_threads(hw);
  const double sweep_parallel =
      time_ms([&] { phylnet::run_chain(sim.data, hyper, config, 0); }, 1) / config.n_iter;
  std::printf("%-24s %12.3f %12.3f %8.2fx\n", "sampler sweep", sweep_serial, sweep_parallel,
              sweep_serial / sweep_parallel);
  (void)sink;
  return 0;
}
