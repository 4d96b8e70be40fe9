#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fbps/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Forward-Backward splitting with partly smooth regularizers"};
  app.require_subcommand(1);

  fbps::RunOptions run_opts;
  std::uint64_t seed_flag = 0;
  int max_iters_flag = 0;
  std::string gamma_flag;

  auto add_problem_flags = [&](CLI::App* cmd) {
    cmd->add_option("--builtin", run_opts.builtin,
                    "builtin experiment name, or 'all'");
    cmd->add_option("--config", run_opts.config_path, "run configuration file");
    cmd->add_option("--seed", seed_flag, "override the experiment seed");
    cmd->add_option("--max-iters", max_iters_flag, "override the iteration budget");
    cmd->add_option("--gamma", gamma_flag,
                    "step-size policy: 'auto' or a fixed positive value");
  };

  CLI::App* run = app.add_subcommand("run", "run experiments, writing CSV and SVG files");
  add_problem_flags(run);
  run->add_option("--out", run_opts.out_dir, "output directory");
  run->add_flag("--no-plot", "skip the SVG convergence plot");

  CLI::App* certify =
      app.add_subcommand("certify", "print the assumption certificate of a problem");
  add_problem_flags(certify);

  std::string predict_config;
  CLI::App* predict =
      app.add_subcommand("predict", "evaluate a closed-form rate prediction");
  predict->add_option("--config", predict_config, "rate parameter file")->required();

  fbps::PlotOptions plot_opts;
  CLI::App* plot = app.add_subcommand("plot", "render a trajectory CSV as an SVG plot");
  plot->add_option("--csv", plot_opts.csv_path, "trajectory CSV")->required();
  plot->add_option("--out", plot_opts.out_path, "output SVG path")->required();
  plot->add_option("--rho", plot_opts.rho, "predicted rate for the overlay");
  plot->add_option("--identified-k", plot_opts.K, "identification iteration marker");

  CLI11_PARSE(app, argc, argv);

  auto finish_run_opts = [&](const CLI::App* cmd) -> bool {
    if (cmd->count("--seed")) run_opts.seed = seed_flag;
    if (cmd->count("--max-iters")) run_opts.max_iters = max_iters_flag;
    if (cmd->count("--gamma") && gamma_flag != "auto") {
      try {
        run_opts.gamma = std::stod(gamma_flag);
      } catch (const std::exception&) {
        std::cerr << "error: --gamma expects 'auto' or a number\n";
        return false;
      }
    }
    return true;
  };

  if (run->parsed()) {
    run_opts.plot = run->count("--no-plot") == 0;
    if (!finish_run_opts(run)) return 1;
    return fbps::cmd_run(run_opts, std::cout, std::cerr);
  }
  if (certify->parsed()) {
    if (!finish_run_opts(certify)) return 1;
    return fbps::cmd_certify(run_opts, std::cout, std::cerr);
  }
  if (predict->parsed()) return fbps::cmd_predict(predict_config, std::cout, std::cerr);
  if (plot->parsed()) return fbps::cmd_plot(plot_opts, std::cout, std::cerr);
  return 1;
}
