#include "phylnet/model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace phylnet {

void require_valid(const NetworkData& data) {
  const int V = data.num_nodes();
  if (V < 2) throw std::invalid_argument("network data: need at least 2 nodes");
  std::unordered_set<std::string> seen(data.labels.begin(), data.labels.end());
  if (static_cast<int>(seen.size()) != V)
    throw std::invalid_argument("network data: duplicate node labels");
  if (data.adjacency.empty()) throw std::invalid_argument("network data: no networks");
  for (int m = 0; m < data.num_networks(); ++m) {
    const auto& y = data.adjacency[m];
    if (y.rows() != V || y.cols() != V)
      throw std::invalid_argument("network " + std::to_string(m + 1) + ": dimension mismatch (" +
                                  std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                                  ", expected " + std::to_string(V) + "x" + std::to_string(V) + ")");
    for (int v = 0; v < V; ++v) {
      if (y(v, v) != 0)
        throw std::invalid_argument("network " + std::to_string(m + 1) + ": nonzero diagonal at (" +
                                    std::to_string(v + 1) + "," + std::to_string(v + 1) + ")");
      for (int u = 0; u < V; ++u) {
        if (y(v, u) != 0 && y(v, u) != 1)
          throw std::invalid_argument("network " + std::to_string(m + 1) + ": non-binary entry at (" +
                                      std::to_string(v + 1) + "," + std::to_string(u + 1) + ")");
        if (y(v, u) != y(u, v))
          throw std::invalid_argument("network " + std::to_string(m + 1) + ": asymmetric at (" +
                                      std::to_string(v + 1) + "," + std::to_string(u + 1) + ")");
      }
    }
  }
}

void require_valid(const Hyperparams& hyper) {
  if (hyper.K < 1) throw std::invalid_argument("hyperparams: K must be positive");
  for (double x : {hyper.alpha_sigma, hyper.beta_sigma, hyper.alpha_b, hyper.beta_b,
                   hyper.sigma_a2, hyper.sigma_mu2, hyper.sigma_h2})
    if (!(x > 0)) throw std::invalid_argument("hyperparams: all scale parameters must be positive");
  if (!(hyper.target_accept > 0 && hyper.target_accept < 1))
    throw std::invalid_argument("hyperparams: target acceptance rate must lie in (0,1)");
}

double log1pexp(double x) {
  if (x > 33.3) return x;            // exp(-x) below double epsilon
  if (x < -37.0) return std::exp(x); // log1p(e^x) ~ e^x
  return std::log1p(std::exp(x));
}

double bernoulli_logpmf(int y, double logit) {
  return y == 1 ? -log1pexp(-logit) : -log1pexp(logit);
}

double edge_logit(double a, const Eigen::VectorXd& zv, const Eigen::VectorXd& zu) {
  return a - (zv - zu).norm();
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& z) {
  const int V = static_cast<int>(z.cols());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(V, V);
#pragma omp parallel for schedule(static) if (V >= 64)
  for (int v = 1; v < V; ++v)
    for (int u = 0; u < v; ++u) {
      const double dist = (z.col(v) - z.col(u)).norm();
      d(v, u) = dist;
      d(u, v) = dist;
    }
  return d;
}

namespace {

double loglik_one_network(const Eigen::MatrixXi& y, double a, const Eigen::MatrixXd& z) {
  const int V = static_cast<int>(y.rows());
  double total = 0.0;
  for (int v = 1; v < V; ++v)
    for (int u = 0; u < v; ++u)
      total += bernoulli_logpmf(y(v, u), a - (z.col(v) - z.col(u)).norm());
  return total;
}

}  // namespace

double loglik_networks(const NetworkData& data, double a, const LatentFeatures& features) {
  const int M = data.num_networks();
  if (features.num_networks() != M || features.num_nodes() != data.num_nodes())
    throw std::invalid_argument("loglik_networks: dimension mismatch between data and features");
  std::vector<double> partial(M, 0.0);
#pragma omp parallel for schedule(static) if (M > 1)
  for (int m = 0; m < M; ++m)
    partial[m] = loglik_one_network(data.adjacency[m], a, features.z[m]);
  double total = 0.0;  // fixed-order reduction keeps results thread-count invariant
  for (double p : partial) total += p;
  return total;
}

TreeGaussian::TreeGaussian(const PhyloTree& tree, bool with_inverse) {
  sigma = correlation_matrix(tree);
  sigma.diagonal().array() += jitter;
  llt.compute(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("tree correlation matrix is numerically singular");
  log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (with_inverse) complete_inverse();
}

void TreeGaussian::complete_inverse() {
  if (inverse_ready) return;
  const int V = static_cast<int>(sigma.rows());
  sigma_inv = llt.solve(Eigen::MatrixXd::Identity(V, V));
  sigma_inv_one = sigma_inv.rowwise().sum();
  one_sigma_inv_one = sigma_inv_one.sum();
  inverse_ready = true;
}

double bbm_log_prior(const LatentFeatures& features, double sigma2, const PhyloTree& tree) {
  if (!(sigma2 > 0)) throw std::invalid_argument("bbm_log_prior: sigma2 must be positive");
  const TreeGaussian tg(tree, /*with_inverse=*/false);
  const int V = tree.num_leaves();
  const int M = features.num_networks();
  const int K = features.dim();
  if (features.num_nodes() != V)
    throw std::invalid_argument("bbm_log_prior: features/tree dimension mismatch");

  std::vector<double> partial(M, 0.0);
#pragma omp parallel for schedule(static) if (M > 1)
  for (int m = 0; m < M; ++m) {
    Eigen::MatrixXd centered = features.z[m].transpose();  // V x K
    centered.rowwise() -= features.mu[m].transpose();
    const Eigen::MatrixXd half = tg.llt.matrixL().solve(centered);
    partial[m] = -0.5 * half.squaredNorm() / sigma2;
  }
  double quad_term = 0.0;
  for (double p : partial) quad_term += p;
  const double norm_term =
      -0.5 * M * K * (V * std::log(2.0 * M_PI) + V * std::log(sigma2) + tg.log_det);
  return norm_term + quad_term;
}

double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

double inv_gamma_logpdf(double x, double alpha, double beta) {
  if (!(x > 0)) throw std::invalid_argument("inv_gamma_logpdf: x must be positive");
  return alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(x) - beta / x;
}

double log_priors(const ModelParams& params, const Hyperparams& hyper) {
  if (!(params.sigma2 > 0)) throw std::invalid_argument("log_priors: sigma2 must be positive");
  if (!(params.b > 0)) throw std::invalid_argument("log_priors: b must be positive");
  double total = normal_logpdf(params.a, 0.0, hyper.sigma_a2);
  total += inv_gamma_logpdf(params.sigma2, hyper.alpha_sigma, hyper.beta_sigma);
  for (const auto& mu : params.features.mu)
    for (int k = 0; k < mu.size(); ++k) total += normal_logpdf(mu(k), 0.0, hyper.sigma_mu2);
  total += yule_log_density(params.tree, params.b);
  total += inv_gamma_logpdf(params.b, hyper.alpha_b, hyper.beta_b);
  return total;
}

double log_posterior(const NetworkData& data, const ModelParams& params,
                     const Hyperparams& hyper) {
  return loglik_networks(data, params.a, params.features) +
         bbm_log_prior(params.features, params.sigma2, params.tree) +
         log_priors(params, hyper);
}

}  // namespace phylnet
