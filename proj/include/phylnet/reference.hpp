#pragma once

#include <Eigen/Dense>

#include "phylnet/model.hpp"
#include "phylnet/tree.hpp"

// Serial reference implementations. These deliberately take the most direct
// route (path walks, explicit matrix inverses, extended-precision pair loops)
// so the tests can use them as independent oracles and the benchmark tool can
// compare them against the parallel kernels.
namespace phylnet::reference {

// MRCA ages per leaf pair obtained by walking both root-to-leaf paths and
// taking the age of the last shared node.
Eigen::MatrixXd mrca_matrix_pathwalk(const PhyloTree& tree);

// Robinson-Foulds by materializing both clade systems as sets of label sets.
double rf_distance_bruteforce(const PhyloTree& a, const PhyloTree& b, bool normalized = false);

// Plain pair loop accumulating Bernoulli log-pmfs in long double.
double loglik_networks_serial(const NetworkData& data, double a, const LatentFeatures& features);

// Multivariate normal log density via explicit inverse and determinant.
double mvn_logpdf_dense(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::MatrixXd& cov);

// BBM prior through mvn_logpdf_dense, one dense solve per (m,k).
double bbm_log_prior_dense(const LatentFeatures& features, double sigma2, const PhyloTree& tree);

Eigen::MatrixXd distance_matrix_serial(const Eigen::MatrixXd& z);

}  // namespace phylnet::reference
