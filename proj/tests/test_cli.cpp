#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "phylnet/cli.hpp"
#include "phylnet/io.hpp"
#include "phylnet/summarize.hpp"

using namespace phylnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("phylnet_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("config defaults reproduce the reference hyperparameter settings") {
  const RunConfig cfg = parse_config("", "defaults");
  CHECK(cfg.hyper.K == 3);
  CHECK(cfg.hyper.alpha_sigma == 1.0);
  CHECK(cfg.hyper.beta_sigma == 1.0);
  CHECK(cfg.hyper.alpha_b == 1.0);
  CHECK(cfg.hyper.beta_b == 1.0);
  CHECK(cfg.hyper.sigma_a2 == 100.0);
  CHECK(cfg.hyper.sigma_mu2 == 1000.0);
  CHECK(cfg.hyper.target_accept == 0.23);
  CHECK(cfg.threshold == 0.8);
  CHECK(cfg.level == 0.9);
  CHECK(cfg.sampler.n_iter == 20000);
  CHECK(cfg.sampler.burn_in == 15000);
  CHECK(cfg.sampler.thin == 10);
  CHECK(cfg.sampler.n_chains == 4);
  CHECK(cfg.sampler.tree_moves_per_sweep == 5);
  CHECK(cfg.sampler.age_window == 0.1);
}

TEST_CASE("config parsing: values, comments, unknown keys") {
  const auto cfg = parse_config("# comment\nn_iter = 500\nV=12\nscenario = blocks\n", "t");
  CHECK(cfg.sampler.n_iter == 500);
  CHECK(cfg.V == 12);
  CHECK(cfg.scenario == "blocks");
  CHECK_THROWS_WITH_AS(parse_config("no_such_key = 1\n", "t"), doctest::Contains("unknown key"),
                       std::runtime_error);
  CHECK_THROWS(parse_config("n_iter = abc\n", "t"));
  CHECK_THROWS(parse_config("just a line\n", "t"));
}

TEST_CASE("environment overrides for seed and jobs") {
  RunConfig cfg;
  setenv("PHYLNET_SEED", "4321", 1);
  setenv("PHYLNET_JOBS", "2", 1);
  apply_env_overrides(cfg);
  unsetenv("PHYLNET_SEED");
  unsetenv("PHYLNET_JOBS");
  CHECK(cfg.sampler.seed == 4321);
  CHECK(cfg.jobs == 2);
  CliOverrides o;
  o.seed = 11;
  apply_overrides(cfg, o);
  CHECK(cfg.sampler.seed == 11);
}

TEST_CASE("adjacency csv round trip, with and without header") {
  TempDir dir("csv");
  Eigen::MatrixXi y(3, 3);
  y << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  write_text_file(dir.file("a.csv"), adjacency_to_csv({"n1", "n2", "n3"}, y));
  std::vector<std::string> labels;
  CHECK(read_adjacency_csv(dir.file("a.csv"), &labels) == y);
  CHECK(labels == std::vector<std::string>{"n1", "n2", "n3"});

  write_text_file(dir.file("b.csv"), adjacency_to_csv({}, y));
  labels.clear();
  CHECK(read_adjacency_csv(dir.file("b.csv"), &labels) == y);
  CHECK(labels.empty());
  const auto data = read_adjacency_csvs({dir.file("b.csv")});
  CHECK(data.labels == std::vector<std::string>{"v1", "v2", "v3"});
}

TEST_CASE("adjacency validation names the offending cell") {
  TempDir dir("bad");
  write_text_file(dir.file("asym.csv"), "0,1,0\n0,0,1\n0,1,0\n");
  CHECK_THROWS_WITH_AS(read_adjacency_csvs({dir.file("asym.csv")}),
                       doctest::Contains("asymmetric"), std::invalid_argument);
  write_text_file(dir.file("nonbin.csv"), "0,1,0\n1,0,2\n0,2,0\n");
  CHECK_THROWS_WITH_AS(read_adjacency_csvs({dir.file("nonbin.csv")}),
                       doctest::Contains("non-binary"), std::runtime_error);
  write_text_file(dir.file("small.csv"), "0,1\n1,0\n");
  write_text_file(dir.file("big.csv"), "0,1,0\n1,0,1\n0,1,0\n");
  CHECK_THROWS_WITH_AS(read_adjacency_csvs({dir.file("small.csv"), dir.file("big.csv")}),
                       doctest::Contains("dimension mismatch"), std::runtime_error);
  CHECK_THROWS(read_adjacency_csvs({dir.file("missing.csv")}));
}

TEST_CASE("sample log round trip") {
  PosteriorSample s;
  s.chain = 2;
  s.iter = 150;
  s.a = 2.5999999999999996;
  s.sigma2 = 0.61234;
  s.b = 1.75;
  s.newick = "(A:1.0,B:1.0);";
  s.z = {0.25, -1.5};
  const auto text = sample_log_to_string({s});
  const auto back = parse_sample_log(text, "mem");
  REQUIRE(back.size() == 1);
  CHECK(back[0].chain == 2);
  CHECK(back[0].iter == 150);
  CHECK(back[0].a == s.a);
  CHECK(back[0].sigma2 == s.sigma2);
  CHECK(back[0].b == s.b);
  CHECK(back[0].newick == s.newick);
  CHECK(back[0].z == s.z);
  CHECK_THROWS(parse_sample_log("1\t2\t3\n", "mem"));
}

TEST_CASE("cmd_simulate writes V=2 M=1 csv with zero diagonal") {
  TempDir dir("sim2");
  RunConfig cfg;
  cfg.V = 2;
  cfg.M = 1;
  cfg.hyper.K = 1;
  cfg.sampler.seed = 5;
  cmd_simulate(cfg, dir.str());
  const auto y = read_adjacency_csv(dir.file("network_001.csv"), nullptr);
  CHECK(y.rows() == 2);
  CHECK(y(0, 0) == 0);
  CHECK(y(1, 1) == 0);
  CHECK(fs::exists(dir.file("truth.nwk")));
  CHECK(fs::exists(dir.file("manifest.txt")));
  const auto manifest = read_text_file(dir.file("manifest.txt"));
  CHECK(manifest.find("a0=") != std::string::npos);
  CHECK(manifest.find("truth_newick=") != std::string::npos);
}

TEST_CASE("cmd_simulate rerun with the same seed is byte-identical") {
  TempDir d1("det1"), d2("det2");
  RunConfig cfg;
  cfg.V = 6;
  cfg.M = 2;
  cfg.hyper.K = 2;
  cfg.sampler.seed = 99;
  cmd_simulate(cfg, d1.str());
  cmd_simulate(cfg, d2.str());
  for (const auto& name : {"network_001.csv", "network_002.csv", "truth.nwk", "manifest.txt"})
    CHECK(read_text_file(d1.file(name)) == read_text_file(d2.file(name)));
}

TEST_CASE("fit then summarize end to end on simulated data") {
  TempDir dir("e2e");
  RunConfig cfg;
  cfg.V = 8;
  cfg.M = 10;
  cfg.hyper.K = 2;
  cfg.sampler.seed = 12;
  cmd_simulate(cfg, dir.file("data"));

  RunConfig fit_cfg = cfg;
  fit_cfg.sampler.n_iter = 400;
  fit_cfg.sampler.burn_in = 200;
  fit_cfg.sampler.thin = 10;
  fit_cfg.sampler.n_chains = 4;
  const auto written = cmd_fit(fit_cfg, {dir.file("data")}, dir.file("fit"));
  int logs = 0;
  for (const auto& w : written)
    if (w.find("samples_chain_") != std::string::npos) ++logs;
  CHECK(logs == 4);  // one sample log per chain
  CHECK(fs::exists(dir.file("fit/diagnostics.txt")));
  const auto diag_text = read_text_file(dir.file("fit/diagnostics.txt"));
  CHECK(diag_text.find("rhat") != std::string::npos);
  CHECK(diag_text.find("acceptance (chain 3)") != std::string::npos);

  std::vector<std::string> logs_paths;
  for (int c = 1; c <= 4; ++c) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "fit/samples_chain_%02d.tsv", c);
    logs_paths.push_back(dir.file(buf));
  }
  cmd_summarize(fit_cfg, logs_paths, dir.file("summary"), dir.file("data/truth.nwk"));
  CHECK(fs::exists(dir.file("summary/consensus.nwk")));
  CHECK(fs::exists(dir.file("summary/densitree_trees.nwk")));
  CHECK(fs::exists(dir.file("summary/densitree_coords.tsv")));
  const auto report = read_text_file(dir.file("summary/summary.txt"));
  CHECK(report.find("credible_radius") != std::string::npos);
}

TEST_CASE("cmd_summarize corner cases") {
  TempDir dir("sumfail");
  write_text_file(dir.file("empty.tsv"), "# phylnet sample log v1\n");
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(cmd_summarize(cfg, {dir.file("empty.tsv")}, dir.str(), ""),
                       doctest::Contains("empty"), std::runtime_error);

  // identical-tree logs at p = 0.99 return the input tree
  PosteriorSample s;
  s.chain = 0;
  s.iter = 1;
  s.a = s.sigma2 = s.b = 1;
  s.newick = "((A:0.4,B:0.4):0.6,C:1.0);";
  std::vector<PosteriorSample> samples(5, s);
  for (int i = 0; i < 5; ++i) samples[i].iter = i + 1;
  write_text_file(dir.file("same.tsv"), sample_log_to_string(samples));
  cfg.threshold = 0.99;
  cmd_summarize(cfg, {dir.file("same.tsv")}, dir.file("out"), "");
  const auto nwk = read_text_file(dir.file("out/consensus.nwk"));
  const auto back = from_newick(nwk.substr(0, nwk.find('\n')));
  CHECK(rf_distance(back, from_newick(s.newick)) == 0.0);
}

TEST_CASE("cmd_dist on files") {
  TempDir dir("dist");
  write_text_file(dir.file("a.nwk"), "((A:0.5,B:0.5):0.5,(C:0.5,D:0.5):0.5);\n");
  write_text_file(dir.file("b.nwk"), "((A:0.5,C:0.5):0.5,(B:0.5,D:0.5):0.5);\n");
  CHECK(cmd_dist(dir.file("a.nwk"), dir.file("a.nwk")) == 0.0);
  CHECK(cmd_dist(dir.file("a.nwk"), dir.file("b.nwk")) == 1.0);
  write_text_file(dir.file("c.nwk"), "((A:0.5,X:0.5):0.5,(C:0.5,D:0.5):0.5);\n");
  CHECK_THROWS(cmd_dist(dir.file("a.nwk"), dir.file("c.nwk")));
}

TEST_CASE("cli binary smoke test") {
  const char* bin = std::getenv("PHYLNET_BIN");
  REQUIRE(bin != nullptr);
  TempDir dir("bin");
  write_text_file(dir.file("cfg"), "V = 5\nM = 2\nK = 2\nseed = 3\n");
  const std::string cmd = std::string(bin) + " simulate --config " + dir.file("cfg") + " --out " +
                          dir.file("data") + " > " + dir.file("stdout.txt") + " 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir.file("data/network_002.csv")));
  const auto text = read_text_file(dir.file("stdout.txt"));
  CHECK(text.find("density=") != std::string::npos);

  const std::string dist_cmd = std::string(bin) + " dist " + dir.file("data/truth.nwk") + " " +
                               dir.file("data/truth.nwk") + " > " + dir.file("d.txt");
  REQUIRE(std::system(dist_cmd.c_str()) == 0);
  CHECK(read_text_file(dir.file("d.txt")) == "0\n");

  // invalid input exits nonzero with a message
  write_text_file(dir.file("bad.csv"), "0,1\n0,0\n");
  const std::string bad_cmd = std::string(bin) + " fit --out " + dir.file("f") + " " +
                              dir.file("bad.csv") + " 2> " + dir.file("err.txt");
  CHECK(std::system(bad_cmd.c_str()) != 0);
  CHECK(read_text_file(dir.file("err.txt")).find("asymmetric") != std::string::npos);
}
