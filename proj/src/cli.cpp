#include "phylnet/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "phylnet/io.hpp"
#include "phylnet/parallel.hpp"
#include "phylnet/simulate.hpp"
#include "phylnet/summarize.hpp"

namespace fs = std::filesystem;

namespace phylnet {

namespace {

std::string trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad numeric value '" + v + "' for key '" + key + "'");
  }
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer value '" + v + "' for key '" + key + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean value '" + v + "' for key '" + key + "'");
}

std::string fmtg(double x, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& content, const std::string& origin) {
  RunConfig cfg;
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"K", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.K = int(parse_int(v, k)); }},
      {"alpha_sigma", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.alpha_sigma = parse_double(v, k); }},
      {"beta_sigma", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.beta_sigma = parse_double(v, k); }},
      {"alpha_b", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.alpha_b = parse_double(v, k); }},
      {"beta_b", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.beta_b = parse_double(v, k); }},
      {"sigma_a2", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.sigma_a2 = parse_double(v, k); }},
      {"sigma_mu2", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.sigma_mu2 = parse_double(v, k); }},
      {"sigma_h2", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.sigma_h2 = parse_double(v, k); }},
      {"target_accept", [](RunConfig& c, const std::string& v, const std::string& k) { c.hyper.target_accept = parse_double(v, k); }},
      {"n_iter", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.n_iter = parse_int(v, k); }},
      {"burn_in", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.burn_in = parse_int(v, k); }},
      {"thin", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.thin = int(parse_int(v, k)); }},
      {"n_chains", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.n_chains = int(parse_int(v, k)); }},
      {"tree_moves_per_sweep", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.tree_moves_per_sweep = int(parse_int(v, k)); }},
      {"age_window", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.age_window = parse_double(v, k); }},
      {"seed", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.seed = std::uint64_t(parse_int(v, k)); }},
      {"store_z", [](RunConfig& c, const std::string& v, const std::string& k) { c.sampler.store_z = parse_bool(v, k); }},
      {"scenario", [](RunConfig& c, const std::string& v, const std::string&) { c.scenario = v; }},
      {"V", [](RunConfig& c, const std::string& v, const std::string& k) { c.V = int(parse_int(v, k)); }},
      {"M", [](RunConfig& c, const std::string& v, const std::string& k) { c.M = int(parse_int(v, k)); }},
      {"b0", [](RunConfig& c, const std::string& v, const std::string& k) { c.b0 = parse_double(v, k); }},
      {"sigma0_2", [](RunConfig& c, const std::string& v, const std::string& k) { c.sigma0_2 = parse_double(v, k); }},
      {"a0", [](RunConfig& c, const std::string& v, const std::string& k) { c.a0 = parse_double(v, k); }},
      {"mu0", [](RunConfig& c, const std::string& v, const std::string& k) { c.mu0 = parse_double(v, k); }},
      {"truth_tree", [](RunConfig& c, const std::string& v, const std::string&) { c.truth_tree = v; }},
      {"n_blocks", [](RunConfig& c, const std::string& v, const std::string& k) { c.n_blocks = int(parse_int(v, k)); }},
      {"within_prob", [](RunConfig& c, const std::string& v, const std::string& k) { c.within_prob = parse_double(v, k); }},
      {"between_prob", [](RunConfig& c, const std::string& v, const std::string& k) { c.between_prob = parse_double(v, k); }},
      {"threshold", [](RunConfig& c, const std::string& v, const std::string& k) { c.threshold = parse_double(v, k); }},
      {"level", [](RunConfig& c, const std::string& v, const std::string& k) { c.level = parse_double(v, k); }},
      {"jobs", [](RunConfig& c, const std::string& v, const std::string& k) { c.jobs = int(parse_int(v, k)); }},
  };

  std::istringstream ss(content);
  std::string line;
  size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, value, key);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  return parse_config(read_text_file(path), path);
}

void apply_env_overrides(RunConfig& config) {
  if (const char* s = std::getenv("PHYLNET_SEED"))
    config.sampler.seed = std::uint64_t(parse_int(s, "PHYLNET_SEED"));
  if (const char* s = std::getenv("PHYLNET_JOBS"))
    config.jobs = int(parse_int(s, "PHYLNET_JOBS"));
}

void apply_overrides(RunConfig& config, const CliOverrides& o) {
  if (o.seed) config.sampler.seed = *o.seed;
  if (o.jobs) config.jobs = *o.jobs;
  if (o.threshold) config.threshold = *o.threshold;
  if (o.level) config.level = *o.level;
}

std::vector<std::string> expand_data_paths(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
          found.push_back(entry.path().string());
      std::sort(found.begin(), found.end());
      if (found.empty()) throw std::runtime_error("no .csv files in directory: " + p);
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

namespace {

std::string network_filename(int m) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "network_%03d.csv", m + 1);
  return buf;
}

double network_density(const Eigen::MatrixXi& y) {
  const double V = double(y.rows());
  return y.cast<double>().sum() / (V * (V - 1.0));
}

}  // namespace

std::vector<std::string> cmd_simulate(const RunConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Rng rng = make_rng(config.sampler.seed, {kSimulateStream});
  std::vector<std::string> written;

  std::string manifest = "# phylnet truth manifest\nscenario=" + config.scenario + "\n";
  manifest += "V=" + std::to_string(config.V) + "\nM=" + std::to_string(config.M) + "\n";
  manifest += "seed=" + std::to_string(config.sampler.seed) + "\n";

  NetworkData data;
  if (config.scenario == "generative") {
    GenerativeSpec spec;
    spec.V = config.V;
    spec.K = config.hyper.K;
    spec.M = config.M;
    spec.b0 = config.b0;
    spec.sigma0_2 = config.sigma0_2;
    spec.a0 = config.a0;
    if (config.mu0 != 0.0)
      spec.mu0 = Eigen::MatrixXd::Constant(config.M, config.hyper.K, config.mu0);
    if (!config.truth_tree.empty()) {
      spec.tree = from_newick(read_text_file(config.truth_tree), config.V);
      spec.labels = spec.tree->leaf_labels;
    }
    auto res = simulate_generative(spec, rng);
    data = std::move(res.data);
    const std::string truth_newick = to_newick(res.tree);
    const std::string truth_path = (fs::path(out_dir) / "truth.nwk").string();
    write_text_file(truth_path, truth_newick + "\n");
    written.push_back(truth_path);
    manifest += "K=" + std::to_string(config.hyper.K) + "\n";
    manifest += "a0=" + format_full(config.a0) + "\n";
    manifest += "sigma0_2=" + format_full(config.sigma0_2) + "\n";
    manifest += "b0=" + format_full(config.b0) + "\n";
    manifest += "mu0=" + format_full(config.mu0) + "\n";
    manifest += "truth_newick=" + truth_newick + "\n";
  } else if (config.scenario == "blocks") {
    ProbabilityMatrixSpec spec;
    spec.V = config.V;
    spec.M = config.M;
    spec.P = block_probability_matrix(config.V, config.n_blocks, config.within_prob,
                                      config.between_prob);
    data = simulate_from_probability_matrix(spec, rng);
    manifest += "n_blocks=" + std::to_string(config.n_blocks) + "\n";
    manifest += "within_prob=" + format_full(config.within_prob) + "\n";
    manifest += "between_prob=" + format_full(config.between_prob) + "\n";
  } else {
    throw std::runtime_error("unknown scenario '" + config.scenario + "' (generative|blocks)");
  }

  for (int m = 0; m < data.num_networks(); ++m) {
    const std::string path = (fs::path(out_dir) / network_filename(m)).string();
    write_text_file(path, adjacency_to_csv(data.labels, data.adjacency[m]));
    written.push_back(path);
    std::cout << "network " << (m + 1) << ": V=" << data.num_nodes()
              << " density=" << fmtg(network_density(data.adjacency[m])) << "\n";
  }
  const std::string manifest_path = (fs::path(out_dir) / "manifest.txt").string();
  write_text_file(manifest_path, manifest);
  written.push_back(manifest_path);
  return written;
}

namespace {

std::string acceptance_report(const std::vector<ChainResult>& results) {
  std::string out;
  for (size_t c = 0; c < results.size(); ++c) {
    const auto& d = results[c].diag;
    out += "# acceptance (chain " + std::to_string(c) + ")\n";
    out += "a: attempts=" + std::to_string(d.a_block.attempts) +
           " rate=" + fmtg(d.a_block.rate(), "%.4f") +
           " mean_alpha=" + fmtg(d.a_block.mean_accept_prob(), "%.4f") +
           " final_step=" + fmtg(d.final_step_a) + "\n";
    for (size_t m = 0; m < d.z_blocks.size(); ++m)
      out += "z[" + std::to_string(m + 1) + "]: mean_alpha=" +
             fmtg(d.z_blocks[m].mean_accept_prob(), "%.4f") +
             " final_step=" + fmtg(d.final_step_z[m]) + "\n";
    out += "rescale: rate=" + fmtg(d.rescale_block.rate(), "%.4f") +
           " mean_alpha=" + fmtg(d.rescale_block.mean_accept_prob(), "%.4f") +
           " final_step=" + fmtg(d.final_step_h) + "\n";
    out += "b: rate=" + fmtg(d.b_block.rate(), "%.4f") +
           " mean_alpha=" + fmtg(d.b_block.mean_accept_prob(), "%.4f") +
           " final_step=" + fmtg(d.final_step_b) + "\n";
    for (int k = 0; k < kNumMoveKinds; ++k)
      out += std::string("tree ") + move_kind_name(static_cast<MoveKind>(k)) +
             ": attempts=" + std::to_string(d.tree_kind[k].attempts) +
             " rate=" + fmtg(d.tree_kind[k].rate(), "%.4f") + "\n";
    out += "tree infeasible: " + std::to_string(d.tree_infeasible) + "\n";
  }
  return out;
}

}  // namespace

std::vector<std::string> cmd_fit(const RunConfig& config, const std::vector<std::string>& data_paths,
                                 const std::string& out_dir) {
  const auto paths = expand_data_paths(data_paths);
  NetworkData data = read_adjacency_csvs(paths);
  set_max_threads(config.jobs);
  require_valid(config.sampler);
  if (config.sampler.n_iter - config.sampler.burn_in < config.sampler.thin)
    throw std::runtime_error("fit: no samples would be retained (n_iter - burn_in < thin)");

  const auto results = run_chains(data, config.hyper, config.sampler);

  fs::create_directories(out_dir);
  std::vector<std::string> written;
  std::vector<std::vector<double>> a_chains, s2_chains, b_chains;
  for (size_t c = 0; c < results.size(); ++c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "samples_chain_%02d.tsv", int(c + 1));
    const std::string path = (fs::path(out_dir) / buf).string();
    write_text_file(path, sample_log_to_string(results[c].samples));
    written.push_back(path);
    std::vector<double> a, s2, b;
    for (const auto& s : results[c].samples) {
      a.push_back(s.a);
      s2.push_back(s.sigma2);
      b.push_back(s.b);
    }
    a_chains.push_back(std::move(a));
    s2_chains.push_back(std::move(s2));
    b_chains.push_back(std::move(b));
  }

  std::string report = "# phylnet fit diagnostics\n";
  report += "networks=" + std::to_string(data.num_networks()) +
            " nodes=" + std::to_string(data.num_nodes()) + " K=" + std::to_string(config.hyper.K) +
            " chains=" + std::to_string(config.sampler.n_chains) +
            " n_iter=" + std::to_string(config.sampler.n_iter) + "\n";
  if (data.num_nodes() <= 2 * config.hyper.K + 1)
    report += "warning: V <= 2K+1, outside the identifiability regime\n";
  report += diagnostics(a_chains, s2_chains, b_chains, config.level).render();
  report += acceptance_report(results);
  const std::string report_path = (fs::path(out_dir) / "diagnostics.txt").string();
  write_text_file(report_path, report);
  written.push_back(report_path);
  return written;
}

std::vector<std::string> cmd_summarize(const RunConfig& config,
                                       const std::vector<std::string>& log_paths,
                                       const std::string& out_dir,
                                       const std::string& truth_path) {
  if (log_paths.empty()) throw std::runtime_error("summarize: no sample logs given");
  std::vector<PhyloTree> trees;
  std::vector<std::vector<double>> a_chains, s2_chains, b_chains;
  for (const auto& path : log_paths) {
    const auto samples = read_sample_log(path);
    if (samples.empty()) throw std::runtime_error(path + ": empty sample log");
    std::map<int, size_t> chain_slot;
    for (const auto& s : samples) {
      trees.push_back(from_newick(s.newick));
      auto it = chain_slot.find(s.chain);
      if (it == chain_slot.end()) {
        chain_slot[s.chain] = a_chains.size();
        a_chains.emplace_back();
        s2_chains.emplace_back();
        b_chains.emplace_back();
        it = chain_slot.find(s.chain);
      }
      a_chains[it->second].push_back(s.a);
      s2_chains[it->second].push_back(s.sigma2);
      b_chains[it->second].push_back(s.b);
    }
  }

  const TreeSampleSet set = make_sample_set(std::move(trees));
  const ConsensusTree cons = consensus(set, config.threshold);

  fs::create_directories(out_dir);
  std::vector<std::string> written;
  const std::string consensus_path = (fs::path(out_dir) / "consensus.nwk").string();
  write_text_file(consensus_path, consensus_to_newick(cons) + "\n");
  written.push_back(consensus_path);

  const auto leaf_order = consensus_leaf_order(cons);
  const auto dt = densitree_export(set, leaf_order);
  std::string trees_text;
  for (const auto& n : dt.newicks) trees_text += n + "\n";
  const std::string trees_path = (fs::path(out_dir) / "densitree_trees.nwk").string();
  write_text_file(trees_path, trees_text);
  written.push_back(trees_path);
  const std::string coords_path = (fs::path(out_dir) / "densitree_coords.tsv").string();
  write_text_file(coords_path, dt.coordinate_table);
  written.push_back(coords_path);

  int retained = 0;
  for (size_t i = 0; i < cons.nodes.size(); ++i)
    if (!cons.nodes[i].children.empty() && int(i) != cons.root) ++retained;
  std::string report = "# phylnet posterior summary\n";
  report += "samples=" + std::to_string(set.trees.size()) +
            " threshold=" + fmtg(config.threshold) + " retained_splits=" +
            std::to_string(retained) + "\n";
  report += diagnostics(a_chains, s2_chains, b_chains, config.level).render();
  if (!truth_path.empty()) {
    const PhyloTree truth = from_newick(trim(read_text_file(truth_path)));
    const double radius = credible_radius(set, truth, config.level);
    report += "credible_radius level=" + fmtg(config.level) + " rf=" + fmtg(radius, "%.12g") + "\n";
    std::cout << "credible_radius level=" << fmtg(config.level) << " rf=" << fmtg(radius, "%.12g")
              << "\n";
  }
  const std::string report_path = (fs::path(out_dir) / "summary.txt").string();
  write_text_file(report_path, report);
  written.push_back(report_path);
  return written;
}

double cmd_dist(const std::string& newick_path_a, const std::string& newick_path_b) {
  const PhyloTree a = from_newick(trim(read_text_file(newick_path_a)));
  const PhyloTree b = from_newick(trim(read_text_file(newick_path_b)));
  return rf_distance(a, b, /*normalized=*/true);
}

}  // namespace phylnet
