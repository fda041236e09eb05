#include "phylnet/reference.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace phylnet::reference {

Eigen::MatrixXd mrca_matrix_pathwalk(const PhyloTree& tree) {
  require_valid(tree);
  const int V = tree.num_leaves();
  std::vector<std::vector<int>> path(V);  // root .. leaf
  for (int v = 0; v < V; ++v) {
    for (int n = v; n >= 0; n = tree.nodes[n].parent) path[v].push_back(n);
    std::reverse(path[v].begin(), path[v].end());
  }
  Eigen::MatrixXd sigma(V, V);
  for (int v = 0; v < V; ++v) {
    for (int u = 0; u < V; ++u) {
      size_t i = 0;
      while (i < path[v].size() && i < path[u].size() && path[v][i] == path[u][i]) ++i;
      sigma(v, u) = tree.nodes[path[v][i - 1]].age;
    }
  }
  return sigma;
}

double rf_distance_bruteforce(const PhyloTree& a, const PhyloTree& b, bool normalized) {
  using Clade = std::set<std::string>;
  auto clades = [](const PhyloTree& t) {
    std::set<Clade> out;
    for (int n = t.num_leaves(); n < t.num_nodes(); ++n) {
      if (n == t.root) continue;
      Clade c;
      std::vector<int> stack{n};
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        if (t.is_leaf(x)) {
          c.insert(t.leaf_labels[x]);
        } else {
          stack.push_back(t.nodes[x].left);
          stack.push_back(t.nodes[x].right);
        }
      }
      out.insert(c);
    }
    return out;
  };
  if (std::set<std::string>(a.leaf_labels.begin(), a.leaf_labels.end()) !=
      std::set<std::string>(b.leaf_labels.begin(), b.leaf_labels.end()))
    throw std::invalid_argument("rf_distance_bruteforce: leaf label sets differ");
  const auto ca = clades(a);
  const auto cb = clades(b);
  int diff = 0;
  for (const auto& c : ca)
    if (!cb.count(c)) ++diff;
  for (const auto& c : cb)
    if (!ca.count(c)) ++diff;
  if (!normalized) return diff;
  const int V = a.num_leaves();
  return V <= 2 ? 0.0 : diff / (2.0 * (V - 2));
}

double loglik_networks_serial(const NetworkData& data, double a, const LatentFeatures& features) {
  const int V = data.num_nodes();
  const int M = data.num_networks();
  long double total = 0.0L;
  for (int m = 0; m < M; ++m) {
    const auto& z = features.z[m];
    for (int v = 1; v < V; ++v) {
      for (int u = 0; u < v; ++u) {
        long double d2 = 0.0L;
        for (int k = 0; k < z.rows(); ++k) {
          const long double diff = static_cast<long double>(z(k, v)) - z(k, u);
          d2 += diff * diff;
        }
        const long double s = static_cast<long double>(a) - sqrtl(d2);
        long double lp;  // log Bern(y | expit(s))
        if (data.adjacency[m](v, u) == 1)
          lp = s > 0 ? -log1pl(expl(-s)) : s - log1pl(expl(s));
        else
          lp = s > 0 ? -s - log1pl(expl(-s)) : -log1pl(expl(s));
        total += lp;
      }
    }
  }
  return static_cast<double>(total);
}

double mvn_logpdf_dense(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::MatrixXd& cov) {
  const int n = static_cast<int>(x.size());
  const Eigen::MatrixXd inv = cov.inverse();
  const double det = cov.determinant();
  if (!(det > 0)) throw std::runtime_error("mvn_logpdf_dense: covariance not positive definite");
  const Eigen::VectorXd centered = x - mean;
  const double quad = centered.dot(inv * centered);
  return -0.5 * (n * std::log(2.0 * M_PI) + std::log(det) + quad);
}

double bbm_log_prior_dense(const LatentFeatures& features, double sigma2, const PhyloTree& tree) {
  const Eigen::MatrixXd sigma = mrca_matrix_pathwalk(tree);
  // same diagonal jitter as the production density definition
  Eigen::MatrixXd cov = sigma2 * sigma;
  cov.diagonal().array() += sigma2 * kSigmaJitter;
  const int V = tree.num_leaves();
  double total = 0.0;
  for (size_t m = 0; m < features.z.size(); ++m) {
    for (int k = 0; k < features.z[m].rows(); ++k) {
      const Eigen::VectorXd row = features.z[m].row(k).transpose();
      const Eigen::VectorXd mean = Eigen::VectorXd::Constant(V, features.mu[m](k));
      total += mvn_logpdf_dense(row, mean, cov);
    }
  }
  return total;
}

Eigen::MatrixXd distance_matrix_serial(const Eigen::MatrixXd& z) {
  const int V = static_cast<int>(z.cols());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(V, V);
  for (int v = 1; v < V; ++v) {
    for (int u = 0; u < v; ++u) {
      double d2 = 0;
      for (int k = 0; k < z.rows(); ++k) d2 += (z(k, v) - z(k, u)) * (z(k, v) - z(k, u));
      d(v, u) = d(u, v) = std::sqrt(d2);
    }
  }
  return d;
}

}  // namespace phylnet::reference
