#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phylnet/model.hpp"
#include "phylnet/moves.hpp"
#include "phylnet/rng.hpp"

namespace phylnet {

struct SamplerConfig {
  std::int64_t n_iter = 20000;
  std::int64_t burn_in = 15000;
  int thin = 10;
  int n_chains = 4;
  int tree_moves_per_sweep = 5;  // per move kind
  double age_window = 0.1;
  std::uint64_t seed = 1;
  bool store_z = false;
  bool likelihood_off = false;  // test switch: the chain targets the prior
};
void require_valid(const SamplerConfig& config);

// Robbins-Monro step-size adaptation towards the target acceptance rate:
// log eta_(s) = log eta_(s-1) + s^(-0.8) (alpha_s - target).
inline constexpr double kAdaptExponent = 0.8;

struct AdaptiveScale {
  double log_step = 0.0;
  std::int64_t s = 1;
  double target = 0.23;

  double step() const;
};
AdaptiveScale adapt(AdaptiveScale scale, double accept_prob);

struct PosteriorSample {
  int chain = 0;
  std::int64_t iter = 0;
  double a = 0.0;
  double sigma2 = 1.0;
  double b = 1.0;
  std::string newick;
  std::vector<double> z;  // flattened [(m*K + k)*V + v], only when store_z
};

struct BlockStats {
  std::int64_t attempts = 0;
  std::int64_t accepted = 0;
  double accept_sum = 0.0;  // sum of realized acceptance probabilities

  void record(double alpha, bool accept);
  double rate() const { return attempts == 0 ? 0.0 : double(accepted) / double(attempts); }
  double mean_accept_prob() const {
    return attempts == 0 ? 0.0 : accept_sum / double(attempts);
  }
};

struct ChainDiagnostics {
  BlockStats a_block, rescale_block, b_block;
  std::int64_t sigma2_draws = 0;
  std::int64_t mu_draws = 0;
  std::vector<BlockStats> z_blocks;  // per network
  std::array<BlockStats, kNumMoveKinds> tree_kind{};
  std::int64_t tree_infeasible = 0;
  double final_step_a = 1.0, final_step_h = 1.0, final_step_b = 1.0;
  std::vector<double> final_step_z;
};

struct ChainResult {
  std::vector<PosteriorSample> samples;
  ChainDiagnostics diag;
};

// One Metropolis-within-Gibbs chain with incrementally maintained caches:
// the tree Gaussian (Cholesky + inverse), per-network distance matrices and
// log-likelihoods, centered feature columns zc (V x M*K), w = Sigma^-1 zc and
// the quadratic forms quad_c = zc' Sigma^-1 zc. Each update block leaves the
// caches consistent with the parameters.
struct ChainState {
  ChainState(const NetworkData& data, const Hyperparams& hyper, const SamplerConfig& config,
             int chain_index);

  const NetworkData* data = nullptr;
  Hyperparams hyper;
  SamplerConfig config;
  int chain_index = 0;
  ModelParams params;
  Rng rng;

  AdaptiveScale scale_a, scale_h, scale_b;
  std::vector<AdaptiveScale> scale_z;

  TreeGaussian tg;
  std::vector<Eigen::MatrixXd> dist;
  std::vector<double> loglik_m;
  double loglik = 0.0;
  Eigen::MatrixXd zc;
  Eigen::MatrixXd w;
  Eigen::VectorXd quad;

  ChainDiagnostics diag;

  int num_nodes() const { return data->num_nodes(); }
  int num_networks() const { return data->num_networks(); }
  int dim() const { return hyper.K; }

  // Update blocks (one sweep applies all seven in random order).
  void update_a();
  void update_z();
  void gibbs_sigma2();
  void gibbs_mu();
  void rescale_move();
  void update_tree();
  void update_b();
  void sweep();

  // Deterministic pieces, exposed for tests.
  double a_log_ratio(double a_new) const;
  double rescale_log_ratio(double g) const;  // includes the Jacobian term
  std::pair<double, double> sigma2_full_conditional() const;  // (alpha*, beta*)
  std::pair<double, double> mu_full_conditional(int m, int k) const;  // (mean, var)
  double cached_log_posterior() const;
  void refresh_caches();
  double cache_drift();  // max |cached - recomputed|, for consistency tests

 private:
  double loglik_from_dist(int m, double a, double dist_scale = 1.0) const;
  void init_from_prior();
};

ChainResult run_chain(const NetworkData& data, const Hyperparams& hyper,
                      const SamplerConfig& config, int chain_index);
// Runs config.n_chains chains (OpenMP-parallel); chain c uses the rng stream
// derive_seed(seed, {kChainStream, c}), so results are identical for any
// thread count.
std::vector<ChainResult> run_chains(const NetworkData& data, const Hyperparams& hyper,
                                    const SamplerConfig& config);

}  // namespace phylnet
