#include "phylnet/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "phylnet/parallel.hpp"

namespace phylnet {

void require_valid(const SamplerConfig& config) {
  if (config.n_iter < 1) throw std::invalid_argument("sampler config: n_iter must be positive");
  if (config.burn_in < 0 || config.burn_in >= config.n_iter)
    throw std::invalid_argument("sampler config: burn_in must lie in [0, n_iter)");
  if (config.thin < 1) throw std::invalid_argument("sampler config: thin must be >= 1");
  if (config.n_chains < 1) throw std::invalid_argument("sampler config: n_chains must be >= 1");
  if (config.tree_moves_per_sweep < 1)
    throw std::invalid_argument("sampler config: tree_moves_per_sweep must be >= 1");
  if (!(config.age_window > 0))
    throw std::invalid_argument("sampler config: age_window must be positive");
}

double AdaptiveScale::step() const { return std::exp(log_step); }

AdaptiveScale adapt(AdaptiveScale scale, double accept_prob) {
  scale.log_step += std::pow(double(scale.s), -kAdaptExponent) * (accept_prob - scale.target);
  ++scale.s;
  return scale;
}

void BlockStats::record(double alpha, bool accept) {
  ++attempts;
  accept_sum += alpha;
  if (accept) ++accepted;
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

double inv_gamma_draw(double alpha, double beta, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0 / beta);
  return 1.0 / gamma(rng);
}

}  // namespace

ChainState::ChainState(const NetworkData& data_in, const Hyperparams& hyper_in,
                       const SamplerConfig& config_in, int chain_index_in)
    : data(&data_in),
      hyper(hyper_in),
      config(config_in),
      chain_index(chain_index_in),
      rng(make_rng(config_in.seed, {kChainStream, std::uint64_t(chain_index_in)})) {
  require_valid(*data);
  require_valid(hyper);
  require_valid(config);
  scale_a.target = scale_h.target = scale_b.target = hyper.target_accept;
  scale_h.log_step = 0.5 * std::log(hyper.sigma_h2);
  scale_z.assign(num_networks(), AdaptiveScale{0.0, 1, hyper.target_accept});
  diag.z_blocks.resize(num_networks());
  init_from_prior();
}

void ChainState::init_from_prior() {
  const int V = num_nodes();
  const int M = num_networks();
  const int K = dim();
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 0; attempt < 100; ++attempt) {
    params.b = inv_gamma_draw(hyper.alpha_b, hyper.beta_b, rng);
    params.tree = sample_yule_tree(data->labels, params.b, rng);
    params.sigma2 = inv_gamma_draw(hyper.alpha_sigma, hyper.beta_sigma, rng);
    tg = TreeGaussian(params.tree);

    params.features.z.assign(M, Eigen::MatrixXd(K, V));
    params.features.mu.assign(M, Eigen::VectorXd(K));
    const double sd_mu = std::sqrt(hyper.sigma_mu2);
    const double sd_z = std::sqrt(params.sigma2);
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k < K; ++k) {
        params.features.mu[m](k) = sd_mu * normal(rng);
        Eigen::VectorXd u(V);
        for (int v = 0; v < V; ++v) u(v) = normal(rng);
        Eigen::VectorXd row = tg.llt.matrixL() * u;
        row *= sd_z;
        row.array() += params.features.mu[m](k);
        params.features.z[m].row(k) = row.transpose();
      }
    }

    // a starts at logit(edge density) plus the mean pairwise feature distance
    // of the prior draw, which puts the initial edge probabilities in scale.
    double edges = 0.0;
    for (int m = 0; m < M; ++m) edges += data->adjacency[m].cast<double>().sum() / 2.0;
    const double pairs = double(M) * V * (V - 1) / 2.0;
    const double density = std::clamp(edges / pairs, 1e-6, 1.0 - 1e-6);
    params.a = 0.0;
    refresh_caches();
    double mean_dist = 0.0;
    for (int m = 0; m < M; ++m)
      mean_dist += dist[m].sum() / (double(V) * (V - 1));
    mean_dist /= M;
    params.a = logit(density) + mean_dist;
    refresh_caches();

    if (std::isfinite(cached_log_posterior())) return;
  }
  throw std::runtime_error("sampler initialization failed: non-finite log posterior after 100 draws");
}

double ChainState::loglik_from_dist(int m, double a, double dist_scale) const {
  const auto& y = data->adjacency[m];
  const auto& d = dist[m];
  const int V = num_nodes();
  double total = 0.0;
  for (int v = 1; v < V; ++v)
    for (int u = 0; u < v; ++u)
      total += bernoulli_logpmf(y(v, u), a - dist_scale * d(v, u));
  return total;
}

void ChainState::refresh_caches() {
  const int V = num_nodes();
  const int M = num_networks();
  const int K = dim();
  tg = TreeGaussian(params.tree);
  dist.resize(M);
  loglik_m.assign(M, 0.0);
  for (int m = 0; m < M; ++m) dist[m] = distance_matrix(params.features.z[m]);
  if (!config.likelihood_off)
    for (int m = 0; m < M; ++m) loglik_m[m] = loglik_from_dist(m, params.a);
  loglik = std::accumulate(loglik_m.begin(), loglik_m.end(), 0.0);

  zc.resize(V, M * K);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k)
      zc.col(m * K + k) =
          params.features.z[m].row(k).transpose().array() - params.features.mu[m](k);
  const Eigen::MatrixXd half = tg.llt.matrixL().solve(zc);
  quad = half.colwise().squaredNorm();
  w = tg.llt.matrixU().solve(half);
}

double ChainState::cached_log_posterior() const {
  const int V = num_nodes();
  const double mk = double(num_networks()) * dim();
  const double bbm = -0.5 * mk * (V * std::log(2.0 * M_PI) + V * std::log(params.sigma2) +
                                  tg.log_det) -
                     quad.sum() / (2.0 * params.sigma2);
  return loglik + bbm + log_priors(params, hyper);
}

double ChainState::cache_drift() {
  ChainState fresh = *this;
  fresh.refresh_caches();
  double drift = std::abs(fresh.loglik - loglik);
  drift = std::max(drift, (fresh.quad - quad).cwiseAbs().maxCoeff());
  drift = std::max(drift, (fresh.w - w).cwiseAbs().maxCoeff());
  drift = std::max(drift, (fresh.zc - zc).cwiseAbs().maxCoeff());
  for (int m = 0; m < num_networks(); ++m)
    drift = std::max(drift, (fresh.dist[m] - dist[m]).cwiseAbs().maxCoeff());
  return drift;
}

double ChainState::a_log_ratio(double a_new) const {
  double delta = normal_logpdf(a_new, 0.0, hyper.sigma_a2) -
                 normal_logpdf(params.a, 0.0, hyper.sigma_a2);
  if (!config.likelihood_off) {
    double ll_new = 0.0;
    for (int m = 0; m < num_networks(); ++m) ll_new += loglik_from_dist(m, a_new);
    delta += ll_new - loglik;
  }
  return delta;
}

void ChainState::update_a() {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a_new = params.a + scale_a.step() * normal(rng);

  double delta = normal_logpdf(a_new, 0.0, hyper.sigma_a2) -
                 normal_logpdf(params.a, 0.0, hyper.sigma_a2);
  const int M = num_networks();
  std::vector<double> ll_new(M, 0.0);
  if (!config.likelihood_off) {
#pragma omp parallel for schedule(static) if (M > 1)
    for (int m = 0; m < M; ++m) ll_new[m] = loglik_from_dist(m, a_new);
    delta += std::accumulate(ll_new.begin(), ll_new.end(), 0.0) - loglik;
  }

  const double alpha = std::min(1.0, std::exp(delta));
  const bool accept = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < alpha;
  if (accept) {
    params.a = a_new;
    if (!config.likelihood_off) {
      loglik_m = ll_new;
      loglik = std::accumulate(loglik_m.begin(), loglik_m.end(), 0.0);
    }
  }
  diag.a_block.record(alpha, accept);
  scale_a = adapt(scale_a, alpha);
}

void ChainState::update_z() {
  const int V = num_nodes();
  const int M = num_networks();
  const int K = dim();

  // Per-network streams are pre-drawn serially so the result does not depend
  // on the OpenMP schedule.
  std::vector<std::uint64_t> seeds(M);
  for (int m = 0; m < M; ++m) seeds[m] = rng();

  std::vector<double> mean_alpha(M, 0.0);
#pragma omp parallel for schedule(static) if (M > 1)
  for (int m = 0; m < M; ++m) {
    Rng lrng(seeds[m]);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto& z = params.features.z[m];
    auto& d = dist[m];
    const auto& y = data->adjacency[m];
    const double step = scale_z[m].step();
    double alpha_sum = 0.0;

    std::vector<int> order(V);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), lrng);

    Eigen::VectorXd delta(K), dq(K), d_new(V);
    for (int v : order) {
      for (int k = 0; k < K; ++k) delta(k) = step * normal(lrng);

      double dprior = 0.0;
      for (int k = 0; k < K; ++k) {
        const int c = m * K + k;
        dq(k) = 2.0 * delta(k) * w(v, c) + delta(k) * delta(k) * tg.sigma_inv(v, v);
        dprior -= dq(k) / (2.0 * params.sigma2);
      }

      double dll = 0.0;
      if (!config.likelihood_off) {
        const Eigen::VectorXd z_new = z.col(v) + delta;
        for (int u = 0; u < V; ++u) {
          if (u == v) continue;
          const double dn = (z_new - z.col(u)).norm();
          d_new(u) = dn;
          dll += bernoulli_logpmf(y(v, u), params.a - dn) -
                 bernoulli_logpmf(y(v, u), params.a - d(v, u));
        }
      }

      const double alpha = std::min(1.0, std::exp(dprior + dll));
      alpha_sum += alpha;
      if (unif(lrng) < alpha) {
        z.col(v) += delta;
        if (!config.likelihood_off) {
          for (int u = 0; u < V; ++u) {
            if (u == v) continue;
            d(v, u) = d_new(u);
            d(u, v) = d_new(u);
          }
          loglik_m[m] += dll;
        } else {
          for (int u = 0; u < V; ++u) {
            if (u == v) continue;
            const double dn = (z.col(v) - z.col(u)).norm();
            d(v, u) = dn;
            d(u, v) = dn;
          }
        }
        for (int k = 0; k < K; ++k) {
          const int c = m * K + k;
          quad(c) += dq(k);
          w.col(c) += delta(k) * tg.sigma_inv.col(v);
          zc(v, c) += delta(k);
        }
      }
    }
    mean_alpha[m] = alpha_sum / V;
  }

  loglik = std::accumulate(loglik_m.begin(), loglik_m.end(), 0.0);
  for (int m = 0; m < M; ++m) {
    diag.z_blocks[m].record(mean_alpha[m], false);
    scale_z[m] = adapt(scale_z[m], mean_alpha[m]);
  }
}

std::pair<double, double> ChainState::sigma2_full_conditional() const {
  const double alpha_star = hyper.alpha_sigma + double(num_nodes()) * dim() * num_networks() / 2.0;
  const double beta_star = hyper.beta_sigma + quad.sum() / 2.0;
  return {alpha_star, beta_star};
}

void ChainState::gibbs_sigma2() {
  const auto [alpha_star, beta_star] = sigma2_full_conditional();
  params.sigma2 = inv_gamma_draw(alpha_star, beta_star, rng);
  ++diag.sigma2_draws;
}

std::pair<double, double> ChainState::mu_full_conditional(int m, int k) const {
  const int c = m * dim() + k;
  const double s = w.col(c).sum();  // 1' Sigma^-1 (Z_row - mu 1)
  const double prec = 1.0 / hyper.sigma_mu2 + tg.one_sigma_inv_one / params.sigma2;
  const double mean =
      ((s + params.features.mu[m](k) * tg.one_sigma_inv_one) / params.sigma2) / prec;
  return {mean, 1.0 / prec};
}

void ChainState::gibbs_mu() {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int K = dim();
  for (int m = 0; m < num_networks(); ++m) {
    for (int k = 0; k < K; ++k) {
      const auto [mean, var] = mu_full_conditional(m, k);
      const double mu_new = mean + std::sqrt(var) * normal(rng);
      const int c = m * K + k;
      const double dmu = params.features.mu[m](k) - mu_new;
      const double s_old = w.col(c).sum();
      quad(c) += 2.0 * dmu * s_old + dmu * dmu * tg.one_sigma_inv_one;
      w.col(c) += dmu * tg.sigma_inv_one;
      zc.col(c).array() += dmu;
      params.features.mu[m](k) = mu_new;
      ++diag.mu_draws;
    }
  }
}

double ChainState::rescale_log_ratio(double g) const {
  const double h = std::exp(g);
  const int V = num_nodes();
  const int M = num_networks();
  const int K = dim();
  const double mkv = double(M) * K * V;
  const double mk = double(M) * K;

  double lr = 0.0;
  if (!config.likelihood_off) {
    double ll_new = 0.0;
    for (int m = 0; m < M; ++m) ll_new += loglik_from_dist(m, params.a, h);
    lr += ll_new - loglik;
  }
  // BBM prior: the quadratic form is exactly invariant (h^2 q / h^2 sigma2),
  // only the normalizer moves.
  lr += -mkv * g;
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k)
      lr += normal_logpdf(h * params.features.mu[m](k), 0.0, hyper.sigma_mu2) -
            normal_logpdf(params.features.mu[m](k), 0.0, hyper.sigma_mu2);
  lr += inv_gamma_logpdf(h * h * params.sigma2, hyper.alpha_sigma, hyper.beta_sigma) -
        inv_gamma_logpdf(params.sigma2, hyper.alpha_sigma, hyper.beta_sigma);
  lr += (mkv + mk + 2.0) * g;  // log Jacobian of (Z, mu, sigma2) -> (hZ, hmu, h^2 sigma2)
  return lr;
}

void ChainState::rescale_move() {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double g = scale_h.step() * normal(rng);
  const double lr = rescale_log_ratio(g);
  const double alpha = std::min(1.0, std::exp(lr));
  const bool accept = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < alpha;
  if (accept) {
    const double h = std::exp(g);
    for (auto& z : params.features.z) z *= h;
    for (auto& mu : params.features.mu) mu *= h;
    params.sigma2 *= h * h;
    for (auto& d : dist) d *= h;
    zc *= h;
    w *= h;
    quad *= h * h;
    if (!config.likelihood_off) {
      for (int m = 0; m < num_networks(); ++m) loglik_m[m] = loglik_from_dist(m, params.a);
      loglik = std::accumulate(loglik_m.begin(), loglik_m.end(), 0.0);
    }
  }
  diag.rescale_block.record(alpha, accept);
  scale_h = adapt(scale_h, alpha);
}

void ChainState::update_tree() {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double mk = double(num_networks()) * dim();
  for (int kind_idx = 0; kind_idx < kNumMoveKinds; ++kind_idx) {
    const auto kind = static_cast<MoveKind>(kind_idx);
    for (int rep = 0; rep < config.tree_moves_per_sweep; ++rep) {
      auto outcome = propose(params.tree, kind, rng, config.age_window);
      if (!outcome.feasible) {
        ++diag.tree_infeasible;
        diag.tree_kind[kind_idx].record(0.0, false);
        continue;
      }
      TreeGaussian tg_new(outcome.proposed, /*with_inverse=*/false);
      const Eigen::MatrixXd half = tg_new.llt.matrixL().solve(zc);
      const Eigen::VectorXd quad_new = half.colwise().squaredNorm();
      const double delta = -0.5 * mk * (tg_new.log_det - tg.log_det) -
                           (quad_new.sum() - quad.sum()) / (2.0 * params.sigma2) +
                           yule_log_density(outcome.proposed, params.b) -
                           yule_log_density(params.tree, params.b);
      const double alpha = std::min(1.0, std::exp(delta));
      const bool accept = unif(rng) < alpha;
      if (accept) {
        params.tree = std::move(outcome.proposed);
        tg_new.complete_inverse();
        tg = std::move(tg_new);
        quad = quad_new;
        w = tg.llt.matrixU().solve(half);
      }
      diag.tree_kind[kind_idx].record(alpha, accept);
    }
  }
}

void ChainState::update_b() {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double log_b = std::log(params.b);
  const double log_b_new = log_b + scale_b.step() * normal(rng);
  const double b_new = std::exp(log_b_new);
  const double delta = inv_gamma_logpdf(b_new, hyper.alpha_b, hyper.beta_b) -
                       inv_gamma_logpdf(params.b, hyper.alpha_b, hyper.beta_b) +
                       yule_log_density(params.tree, b_new) -
                       yule_log_density(params.tree, params.b) +
                       (log_b_new - log_b);  // Jacobian of the log-scale walk
  const double alpha = std::min(1.0, std::exp(delta));
  const bool accept = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < alpha;
  if (accept) params.b = b_new;
  diag.b_block.record(alpha, accept);
  scale_b = adapt(scale_b, alpha);
}

void ChainState::sweep() {
  std::array<int, 7> order{0, 1, 2, 3, 4, 5, 6};
  std::shuffle(order.begin(), order.end(), rng);
  for (int block : order) {
    switch (block) {
      case 0: update_a(); break;
      case 1: update_z(); break;
      case 2: gibbs_sigma2(); break;
      case 3: gibbs_mu(); break;
      case 4: rescale_move(); break;
      case 5: update_tree(); break;
      case 6: update_b(); break;
    }
  }
}

ChainResult run_chain(const NetworkData& data, const Hyperparams& hyper,
                      const SamplerConfig& config, int chain_index) {
  ChainState state(data, hyper, config, chain_index);
  ChainResult res;
  const std::int64_t expected =
      (config.n_iter - config.burn_in + config.thin - 1) / config.thin;
  res.samples.reserve(expected);
  for (std::int64_t iter = 1; iter <= config.n_iter; ++iter) {
    state.sweep();
    if (iter % 1024 == 0) state.refresh_caches();  // bounds incremental fp drift
    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      PosteriorSample s;
      s.chain = chain_index;
      s.iter = iter;
      s.a = state.params.a;
      s.sigma2 = state.params.sigma2;
      s.b = state.params.b;
      s.newick = to_newick(state.params.tree);
      if (config.store_z) {
        const int V = state.num_nodes();
        const int K = state.dim();
        s.z.resize(size_t(state.num_networks()) * K * V);
        for (int m = 0; m < state.num_networks(); ++m)
          for (int k = 0; k < K; ++k)
            for (int v = 0; v < V; ++v)
              s.z[(size_t(m) * K + k) * V + v] = state.params.features.z[m](k, v);
      }
      res.samples.push_back(std::move(s));
    }
  }
  res.diag = state.diag;
  res.diag.final_step_a = state.scale_a.step();
  res.diag.final_step_h = state.scale_h.step();
  res.diag.final_step_b = state.scale_b.step();
  res.diag.final_step_z.resize(state.num_networks());
  for (int m = 0; m < state.num_networks(); ++m)
    res.diag.final_step_z[m] = state.scale_z[m].step();
  return res;
}

std::vector<ChainResult> run_chains(const NetworkData& data, const Hyperparams& hyper,
                                    const SamplerConfig& config) {
  require_valid(config);
  std::vector<ChainResult> out(config.n_chains);
  std::vector<std::string> errors(config.n_chains);
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < config.n_chains; ++c) {
    try {
      out[c] = run_chain(data, hyper, config, c);
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("chain failed: " + e);
  return out;
}

}  // namespace phylnet
