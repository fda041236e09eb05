#include "phylnet/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace phylnet {

namespace {

std::vector<std::string> default_labels(int V, const std::vector<std::string>& given) {
  if (!given.empty()) {
    if (static_cast<int>(given.size()) != V)
      throw std::invalid_argument("simulate: label count does not match V");
    return given;
  }
  std::vector<std::string> labels(V);
  for (int v = 0; v < V; ++v) labels[v] = "v" + std::to_string(v + 1);
  return labels;
}

}  // namespace

GenerativeResult simulate_generative(const GenerativeSpec& spec, Rng& rng) {
  if (spec.V < 2 || spec.K < 1 || spec.M < 1)
    throw std::invalid_argument("simulate: need V >= 2, K >= 1, M >= 1");
  if (!(spec.sigma0_2 > 0)) throw std::invalid_argument("simulate: sigma0_2 must be positive");
  if (spec.mu0.size() != 0 && (spec.mu0.rows() != spec.M || spec.mu0.cols() != spec.K))
    throw std::invalid_argument("simulate: mu0 must be M x K");

  GenerativeResult out;
  out.data.labels = default_labels(spec.V, spec.labels);
  if (spec.tree) {
    out.tree = *spec.tree;
    require_valid(out.tree);
    if (sorted_labels(out.tree) != [&] {
          auto l = out.data.labels;
          std::sort(l.begin(), l.end());
          return l;
        }())
      throw std::invalid_argument("simulate: fixed tree labels do not match node labels");
  } else {
    if (!(spec.b0 > 0)) throw std::invalid_argument("simulate: b0 must be positive");
    out.tree = sample_yule_tree(out.data.labels, spec.b0, rng);
  }

  const int V = spec.V;
  const int M = spec.M;
  const int K = spec.K;
  const TreeGaussian tg(out.tree, /*with_inverse=*/false);
  const double sd = std::sqrt(spec.sigma0_2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  out.features.z.assign(M, Eigen::MatrixXd(K, V));
  out.features.mu.assign(M, Eigen::VectorXd::Zero(K));
  out.data.adjacency.assign(M, Eigen::MatrixXi::Zero(V, V));
  for (int m = 0; m < M; ++m) {
    if (spec.mu0.size() != 0) out.features.mu[m] = spec.mu0.row(m).transpose();
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd u(V);
      for (int v = 0; v < V; ++v) u(v) = normal(rng);
      Eigen::VectorXd row = tg.llt.matrixL() * u;
      row *= sd;
      row.array() += out.features.mu[m](k);
      out.features.z[m].row(k) = row.transpose();
    }
    auto& y = out.data.adjacency[m];
    const auto& z = out.features.z[m];
    for (int v = 1; v < V; ++v) {
      for (int u2 = 0; u2 < v; ++u2) {
        const double logit = spec.a0 - (z.col(v) - z.col(u2)).norm();
        const double p = 1.0 / (1.0 + std::exp(-logit));
        const int edge = unif(rng) < p ? 1 : 0;
        y(v, u2) = edge;
        y(u2, v) = edge;
      }
    }
  }
  return out;
}

NetworkData simulate_from_probability_matrix(const ProbabilityMatrixSpec& spec, Rng& rng) {
  const int V = spec.V;
  if (V < 2 || spec.M < 1) throw std::invalid_argument("simulate: need V >= 2, M >= 1");
  if (spec.P.rows() != V || spec.P.cols() != V)
    throw std::invalid_argument("simulate: P must be V x V");
  for (int v = 0; v < V; ++v) {
    if (spec.P(v, v) != 0.0) throw std::invalid_argument("simulate: P diagonal must be zero");
    for (int u = 0; u < V; ++u) {
      if (spec.P(v, u) != spec.P(u, v)) throw std::invalid_argument("simulate: P must be symmetric");
      if (spec.P(v, u) < 0.0 || spec.P(v, u) > 1.0)
        throw std::invalid_argument("simulate: P entries must lie in [0,1]");
    }
  }
  NetworkData data;
  data.labels = default_labels(V, spec.labels);
  data.adjacency.assign(spec.M, Eigen::MatrixXi::Zero(V, V));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int m = 0; m < spec.M; ++m) {
    auto& y = data.adjacency[m];
    for (int v = 1; v < V; ++v)
      for (int u = 0; u < v; ++u) {
        const int edge = unif(rng) < spec.P(v, u) ? 1 : 0;
        y(v, u) = edge;
        y(u, v) = edge;
      }
  }
  return data;
}

Eigen::MatrixXd block_probability_matrix(int V, int n_blocks, double within, double between) {
  if (V < 2 || n_blocks < 1) throw std::invalid_argument("block matrix: need V >= 2, blocks >= 1");
  Eigen::MatrixXd P(V, V);
  for (int v = 0; v < V; ++v)
    for (int u = 0; u < V; ++u) {
      const int bv = v * n_blocks / V;
      const int bu = u * n_blocks / V;
      P(v, u) = v == u ? 0.0 : (bv == bu ? within : between);
    }
  return P;
}

}  // namespace phylnet
