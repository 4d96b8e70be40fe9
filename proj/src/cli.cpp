#include "fbps/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fbps {

namespace {

RunConfig load_config(const RunOptions& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw std::runtime_error("cannot open config: " + opts.config_path);
    cfg = parse_run_config(in);
  } else if (!opts.builtin.empty()) {
    cfg.spec = builtin_spec(opts.builtin);
  } else {
    throw std::runtime_error("either --builtin or --config is required");
  }
  if (opts.seed) cfg.spec.seed = *opts.seed;
  if (opts.max_iters) cfg.spec.solver.max_iters = *opts.max_iters;
  if (opts.gamma) cfg.spec.gamma = *opts.gamma;
  if (opts.out_dir != ".") cfg.out_dir = opts.out_dir;
  cfg.plot = cfg.plot && opts.plot;
  return cfg;
}

void write_outputs(const ExperimentReport& rep, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path base = fs::path(cfg.out_dir) / rep.spec.name;

  const Regularizer J = make_regularizer(rep.spec, rep.lambda_used);
  {
    std::ofstream os(base.string() + ".trajectory.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + base.string() + ".trajectory.csv");
    write_trajectory_csv(os, rep.trajectory, J, rep.identification);
  }
  {
    std::ofstream os(base.string() + ".report.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + base.string() + ".report.csv");
    write_report_csv(os, rep);
  }
  if (cfg.plot && rep.prediction_ok) {
    std::vector<TrajectoryPoint> pts;
    for (const auto& rec : rep.trajectory.records)
      pts.push_back({static_cast<double>(rec.k), rec.dist});
    std::ofstream os(base.string() + ".svg", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + base.string() + ".svg");
    os << render_convergence_svg(pts, rep.prediction.rho_at(rep.gamma_used),
                                 rep.identification.K.value_or(-1));
  }
}

std::string summary_line(const ExperimentReport& rep) {
  std::ostringstream os;
  os << rep.spec.name << ": certificate=" << (rep.certificate_ok ? "pass" : "fail")
     << " identified_k="
     << (rep.identification.K ? std::to_string(*rep.identification.K) : "none");
  if (rep.prediction_ok)
    os << " predicted_rate=" << format_double(rep.prediction.rho_at(rep.gamma_used));
  if (rep.observed_rate >= 0.0) os << " observed_rate=" << format_double(rep.observed_rate);
  os << " iters=" << rep.total_iters << " passed=" << (rep.passed ? 1 : 0);
  return os.str();
}

int run_one(const RunConfig& cfg, std::ostream& out) {
  const ExperimentReport rep = run_experiment(cfg.spec);
  write_outputs(rep, cfg);
  out << summary_line(rep) << '\n';
  return rep.certificate_ok ? 0 : 2;
}

int thread_cap() {
  if (const char* env = std::getenv("FB_PS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::map<std::string, std::string> parse_flat(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    const auto b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t");
      if (x == std::string::npos) return std::string();
      const auto y = s.find_last_not_of(" \t");
      return s.substr(x, y - x + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.builtin == "all") {
      const std::vector<std::string> names = builtin_names();
      std::vector<int> codes(names.size(), 0);
      std::vector<std::string> lines(names.size());
      std::atomic<size_t> next{0};
      std::mutex fail_mu;
      std::string first_error;

      auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < names.size(); i = next.fetch_add(1)) {
          try {
            RunOptions one = opts;
            one.builtin = names[i];
            RunConfig cfg = load_config(one);
            std::ostringstream local;
            codes[i] = run_one(cfg, local);
            lines[i] = local.str();
          } catch (const std::exception& e) {
            codes[i] = 1;
            std::lock_guard<std::mutex> lock(fail_mu);
            if (first_error.empty()) first_error = names[i] + ": " + e.what();
          }
        }
      };
      const int nthreads =
          std::min(thread_cap(), static_cast<int>(names.size()));
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();

      for (const auto& line : lines) out << line;
      if (!first_error.empty()) err << "error: " << first_error << '\n';
      int code = 0;
      for (int c : codes) {
        if (c == 1) return 1;
        code = std::max(code, c);
      }
      return code;
    }
    return run_one(load_config(opts), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_certify(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = load_config(opts);
    // The certificate only needs the reference solution; keep the main run
    // to a single iteration.
    cfg.spec.solver.max_iters = 1;
    const ExperimentReport rep = run_experiment(cfg.spec);
    if (!rep.certificate_error.empty()) {
      err << "error: " << rep.certificate_error << '\n';
      return 1;
    }
    const CertificateReport& c = rep.certificate;
    out << "nondegeneracy_margin=" << format_double(c.nondegeneracy_margin) << '\n'
        << "alpha=" << format_double(c.alpha) << '\n'
        << "restricted_injectivity=" << (c.restricted_injectivity ? 1 : 0) << '\n'
        << "uniqueness_implied=" << (c.uniqueness_implied ? 1 : 0) << '\n'
        << "sigma_m=" << format_double(c.sigma_m) << '\n'
        << "sigma_M=" << format_double(c.sigma_M) << '\n'
        << "sigma_max=" << format_double(c.sigma_max) << '\n'
        << "subspace_dim=" << c.subspace_dim << '\n';
    return rep.certificate_ok ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_predict(const std::string& config_path, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config: " + config_path);
    auto kv = parse_flat(in);

    auto take = [&kv](const std::string& key) -> std::optional<std::string> {
      auto it = kv.find(key);
      if (it == kv.end()) return std::nullopt;
      std::string v = it->second;
      kv.erase(it);
      return v;
    };
    auto need = [&take](const std::string& key) {
      auto v = take(key);
      if (!v) throw std::runtime_error("predict config: missing key '" + key + "'");
      return std::stod(*v);
    };

    const auto version = take("version");
    if (!version || *version != "1")
      throw std::runtime_error("predict config: version = 1 required");
    const auto regime = take("regime");
    if (!regime) throw std::runtime_error("predict config: missing regime");

    double gamma_lo = 0.0, gamma_hi = 0.0;
    if (auto g = take("gamma")) {
      gamma_lo = gamma_hi = std::stod(*g);
    } else {
      gamma_lo = need("gamma_lo");
      gamma_hi = need("gamma_hi");
    }

    RatePrediction pred;
    if (*regime == "q_general") {
      pred = predict_rate_q_general(need("alpha"), need("beta"), gamma_lo, gamma_hi);
    } else if (*regime == "r_subspace") {
      pred = predict_rate_r_subspace(need("alpha"), need("nu"), need("beta"), gamma_lo,
                                     gamma_hi);
    } else if (*regime == "quadratic") {
      SmoothnessClass cls = SmoothnessClass::LinearSubspace;
      if (auto m = take("manifold")) {
        if (*m == "general")
          cls = SmoothnessClass::GeneralManifold;
        else if (*m != "subspace")
          throw std::runtime_error("predict config: manifold must be subspace or general");
      }
      const double sigma_m = need("sigma_m"), sigma_M = need("sigma_M");
      double sigma_max = sigma_M;
      if (auto s = take("sigma_max")) sigma_max = std::stod(*s);
      pred = predict_rate_quadratic(sigma_m, sigma_M, sigma_max, gamma_lo, gamma_hi, cls);
    } else {
      throw std::runtime_error("predict config: unknown regime '" + *regime + "'");
    }
    if (!kv.empty())
      throw std::runtime_error("predict config: unknown key '" + kv.begin()->first + "'");

    const char* regime_name = "?";
    switch (pred.regime) {
      case RateRegime::QGeneral: regime_name = "q_general"; break;
      case RateRegime::RSubspace: regime_name = "r_subspace"; break;
      case RateRegime::QQuadratic: regime_name = "q_quadratic"; break;
      case RateRegime::RQuadratic: regime_name = "r_quadratic"; break;
      case RateRegime::DegeneratePSFLS: regime_name = "degenerate_psfls"; break;
    }
    out << "regime=" << regime_name << '\n'
        << "rho=" << format_double(pred.rho) << '\n'
        << "rho_at_gamma_lo=" << format_double(pred.rho_at(gamma_lo)) << '\n'
        << "rho_at_gamma_hi=" << format_double(pred.rho_at(gamma_hi)) << '\n'
        << "gamma_validity_hi=" << format_double(pred.gamma_validity_hi) << '\n'
        << "gamma_opt=" << format_double(pred.gamma_opt) << '\n'
        << "rho_opt=" << format_double(pred.rho_opt) << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_plot(const PlotOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(opts.csv_path);
    if (!in) throw std::runtime_error("cannot open trajectory csv: " + opts.csv_path);
    const auto pts = read_trajectory_csv(in);
    const std::string svg = render_convergence_svg(pts, opts.rho, opts.K);
    std::ofstream os(opts.out_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + opts.out_path);
    os << svg;
    out << "wrote " << opts.out_path << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fbps
