#pragma once

#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "phylnet/tree.hpp"

namespace phylnet {

// M symmetric binary V x V adjacency matrices over shared node labels.
struct NetworkData {
  std::vector<std::string> labels;
  std::vector<Eigen::MatrixXi> adjacency;

  int num_nodes() const { return static_cast<int>(labels.size()); }
  int num_networks() const { return static_cast<int>(adjacency.size()); }
};
// Throws std::invalid_argument naming the first offending entry.
void require_valid(const NetworkData& data);

// Per network m: a K x V latent feature matrix (column v = features of node v)
// and a K-vector of centering parameters.
struct LatentFeatures {
  std::vector<Eigen::MatrixXd> z;
  std::vector<Eigen::VectorXd> mu;

  int num_networks() const { return static_cast<int>(z.size()); }
  int dim() const { return z.empty() ? 0 : static_cast<int>(z[0].rows()); }
  int num_nodes() const { return z.empty() ? 0 : static_cast<int>(z[0].cols()); }
};

struct Hyperparams {
  int K = 3;
  double alpha_sigma = 1.0;
  double beta_sigma = 1.0;
  double alpha_b = 1.0;
  double beta_b = 1.0;
  double sigma_a2 = 100.0;
  double sigma_mu2 = 1000.0;
  double sigma_h2 = 0.1;       // initial variance of the rescale log-multiplier
  double target_accept = 0.23; // adaptive MH target acceptance rate
};
void require_valid(const Hyperparams& hyper);

struct ModelParams {
  double a = 0.0;
  double sigma2 = 1.0;
  double b = 1.0;
  PhyloTree tree;
  LatentFeatures features;
};

// Numerically stable log(1 + exp(x)).
double log1pexp(double x);
// log Bern(y | expit(logit)).
double bernoulli_logpmf(int y, double logit);

double edge_logit(double a, const Eigen::VectorXd& zv, const Eigen::VectorXd& zu);

// Pairwise Euclidean distances between the columns of z.
Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& z);

// Sum over networks and unordered pairs of the Bernoulli log-likelihood with
// logit a - ||z_v - z_u||. Parallel over networks.
double loglik_networks(const NetworkData& data, double a, const LatentFeatures& features);

// Branching-Brownian-motion prior: each feature row is N_V(mu 1, sigma2 * Sigma)
// with Sigma the tree correlation matrix; one Cholesky per tree, reused
// across all (m, k).
double bbm_log_prior(const LatentFeatures& features, double sigma2, const PhyloTree& tree);

double log_priors(const ModelParams& params, const Hyperparams& hyper);
double log_posterior(const NetworkData& data, const ModelParams& params,
                     const Hyperparams& hyper);

double normal_logpdf(double x, double mean, double var);
double inv_gamma_logpdf(double x, double alpha, double beta);

// Diagonal jitter applied to the tree correlation matrix before factorization
// (two leaves coalescing near age 1 make it near-singular).
inline constexpr double kSigmaJitter = 1e-10;

// Cached Gaussian machinery for one tree, shared by the densities and the
// sampler's incremental updates.
struct TreeGaussian {
  Eigen::MatrixXd sigma;      // correlation matrix + jitter on the diagonal
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;       // log det(sigma)
  double jitter = kSigmaJitter;
  // Filled by complete_inverse(); needed only once a tree is accepted.
  Eigen::MatrixXd sigma_inv;
  Eigen::VectorXd sigma_inv_one;
  double one_sigma_inv_one = 0.0;
  bool inverse_ready = false;

  TreeGaussian() = default;
  explicit TreeGaussian(const PhyloTree& tree, bool with_inverse = true);
  void complete_inverse();
};

}  // namespace phylnet
