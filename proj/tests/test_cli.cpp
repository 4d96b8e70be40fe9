#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fbps/analysis.hpp"
#include "fbps/cli.hpp"

using namespace fbps;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fbps-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

const char* kTinyLasso =
    "version = 1\n"
    "regularizer = l1\n"
    "name = tiny\n"
    "m = 24\n"
    "n = 48\n"
    "sparsity = 4\n"
    "seed = 2\n"
    "stop_tol = -1\n";

}  // namespace

TEST_CASE("cmd_run writes the expected files and succeeds") {
  TempDir tmp;
  RunOptions opts;
  opts.config_path = write_file(tmp.path / "run.cfg", kTinyLasso);
  opts.out_dir = (tmp.path / "out").string();
  std::ostringstream out, err;
  CHECK(cmd_run(opts, out, err) == 0);
  CHECK(err.str().empty());
  CHECK(fs::exists(tmp.path / "out" / "tiny.trajectory.csv"));
  CHECK(fs::exists(tmp.path / "out" / "tiny.report.csv"));
  CHECK(fs::exists(tmp.path / "out" / "tiny.svg"));
  CHECK(out.str().find("tiny:") != std::string::npos);

  // --no-plot suppresses the svg
  RunOptions noplot = opts;
  noplot.out_dir = (tmp.path / "out2").string();
  noplot.plot = false;
  std::ostringstream o2, e2;
  CHECK(cmd_run(noplot, o2, e2) == 0);
  CHECK(fs::exists(tmp.path / "out2" / "tiny.trajectory.csv"));
  CHECK_FALSE(fs::exists(tmp.path / "out2" / "tiny.svg"));
}

TEST_CASE("cmd_run outputs are byte-identical across invocations") {
  TempDir tmp;
  RunOptions opts;
  opts.config_path = write_file(tmp.path / "run.cfg", kTinyLasso);
  std::ostringstream out, err;
  opts.out_dir = (tmp.path / "a").string();
  REQUIRE(cmd_run(opts, out, err) == 0);
  opts.out_dir = (tmp.path / "b").string();
  REQUIRE(cmd_run(opts, out, err) == 0);
  CHECK(slurp(tmp.path / "a" / "tiny.trajectory.csv") ==
        slurp(tmp.path / "b" / "tiny.trajectory.csv"));
  CHECK(slurp(tmp.path / "a" / "tiny.report.csv") == slurp(tmp.path / "b" / "tiny.report.csv"));

  // a different seed changes the trajectory
  opts.seed = 3;
  opts.out_dir = (tmp.path / "c").string();
  REQUIRE(cmd_run(opts, out, err) == 0);
  CHECK(slurp(tmp.path / "a" / "tiny.trajectory.csv") !=
        slurp(tmp.path / "c" / "tiny.trajectory.csv"));
}

TEST_CASE("cmd_run error paths") {
  std::ostringstream out, err;
  RunOptions opts;
  CHECK(cmd_run(opts, out, err) == 1);  // neither builtin nor config
  opts.config_path = "/nonexistent/run.cfg";
  CHECK(cmd_run(opts, out, err) == 1);
  RunOptions bad;
  bad.builtin = "nope";
  CHECK(cmd_run(bad, out, err) == 1);
  CHECK(err.str().find("error:") != std::string::npos);
}

TEST_CASE("cmd_certify prints the same margin as the library call") {
  TempDir tmp;
  RunOptions opts;
  opts.config_path = write_file(tmp.path / "run.cfg", kTinyLasso);
  std::ostringstream out, err;
  CHECK(cmd_certify(opts, out, err) == 0);

  // recompute through the library on the identical instance
  ExperimentSpec spec = builtin_spec("lasso-a");
  spec.name = "tiny";
  spec.m = 24;
  spec.n = 48;
  spec.sparsity = 4;
  spec.seed = 2;
  spec.solver.stop_tol = -1.0;
  spec.solver.max_iters = 1;
  ExperimentReport rep = run_experiment(spec);
  const std::string printed = out.str();
  std::ostringstream want;
  want << "nondegeneracy_margin=" << format_double(rep.certificate.nondegeneracy_margin);
  CHECK(printed.find(want.str()) != std::string::npos);
  CHECK(printed.find("restricted_injectivity=1") != std::string::npos);
  CHECK(printed.find("uniqueness_implied=1") != std::string::npos);
}

TEST_CASE("cmd_certify flags a degenerate instance with exit 2") {
  // lambda too small: the recovered block support is dense, dim T > m, so
  // restricted injectivity fails while the margin stays positive
  TempDir tmp;
  RunOptions opts;
  opts.config_path = write_file(tmp.path / "run.cfg",
                                "version = 1\n"
                                "regularizer = group\n"
                                "name = degen\n"
                                "m = 48\n"
                                "n = 128\n"
                                "block_size = 4\n"
                                "active_blocks = 2\n"
                                "seed = 1\n"
                                "stop_tol = -1\n");
  std::ostringstream out, err;
  CHECK(cmd_certify(opts, out, err) == 2);
}

TEST_CASE("cmd_predict reproduces the closed forms exactly") {
  TempDir tmp;
  std::ostringstream out, err;
  const std::string cfg = write_file(tmp.path / "p.cfg",
                                     "version = 1\n"
                                     "regime = quadratic\n"
                                     "sigma_m = 1\n"
                                     "sigma_M = 3\n"
                                     "gamma = 0.5\n");
  CHECK(cmd_predict(cfg, out, err) == 0);
  CHECK(out.str().find("regime=r_quadratic") != std::string::npos);
  CHECK(out.str().find("rho_opt=0.5\n") != std::string::npos);  // (phi-1)/(phi+1), phi=3
  CHECK(out.str().find("gamma_opt=0.5\n") != std::string::npos);

  std::ostringstream out2, err2;
  const std::string cfg2 = write_file(tmp.path / "p2.cfg",
                                      "version = 1\n"
                                      "regime = quadratic\n"
                                      "sigma_m = 2\n"
                                      "sigma_M = 2\n"
                                      "gamma = 0.25\n");
  CHECK(cmd_predict(cfg2, out2, err2) == 0);
  CHECK(out2.str().find("rho_opt=0\n") != std::string::npos);

  // consistency with the library call
  std::ostringstream out3, err3;
  const std::string cfg3 = write_file(tmp.path / "p3.cfg",
                                      "version = 1\n"
                                      "regime = r_subspace\n"
                                      "alpha = 3\n"
                                      "nu = 5\n"
                                      "beta = 5\n"
                                      "gamma = 0.05\n");
  CHECK(cmd_predict(cfg3, out3, err3) == 0);
  RatePrediction p = predict_rate_r_subspace(3.0, 5.0, 5.0, 0.05, 0.05);
  CHECK(out3.str().find("rho=" + format_double(p.rho) + "\n") != std::string::npos);
  CHECK(out3.str().find("rho_opt=" + format_double(p.rho_opt) + "\n") != std::string::npos);

  std::ostringstream out4, err4;
  const std::string bad = write_file(tmp.path / "p4.cfg", "version = 1\nregime = warp\n");
  CHECK(cmd_predict(bad, out4, err4) == 1);
}

TEST_CASE("cmd_plot renders a csv and reports schema errors") {
  TempDir tmp;
  std::ostringstream csv;
  csv << "k,gamma,dist,objective,manifold_dim,identified\n";
  for (int k = 0; k <= 20; ++k)
    csv << k << ",0.1," << std::pow(0.5, k) << ",0,1,0\n";
  const std::string csv_path = write_file(tmp.path / "t.csv", csv.str());

  PlotOptions opts;
  opts.csv_path = csv_path;
  opts.out_path = (tmp.path / "t.svg").string();
  opts.rho = 0.5;
  opts.K = 0;
  std::ostringstream out, err;
  CHECK(cmd_plot(opts, out, err) == 0);
  const std::string svg = slurp(tmp.path / "t.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg") != std::string::npos);

  PlotOptions bad = opts;
  bad.csv_path = write_file(tmp.path / "bad.csv", "k,objective\n1,2\n");
  std::ostringstream out2, err2;
  CHECK(cmd_plot(bad, out2, err2) == 1);
  CHECK(err2.str().find("dist") != std::string::npos);
}
