#include "fbps/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fbps {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Converged:
      return "converged";
    case StopReason::MaxIters:
      return "max_iters";
    case StopReason::NumericalFailure:
      return "numerical_failure";
  }
  return "?";
}

const char* regime_name(RateRegime r) {
  switch (r) {
    case RateRegime::QGeneral:
      return "q_general";
    case RateRegime::RSubspace:
      return "r_subspace";
    case RateRegime::QQuadratic:
      return "q_quadratic";
    case RateRegime::RQuadratic:
      return "r_quadratic";
    case RateRegime::DegeneratePSFLS:
      return "degenerate_psfls";
  }
  return "?";
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Regularizer& J,
                          const IdentificationResult& ident) {
  os << "k,gamma,dist,objective,manifold_dim,identified\n";
  for (const auto& rec : traj.records) {
    const long dim = rec.descriptor ? static_cast<long>(J.subspace_dim(*rec.descriptor)) : -1;
    const int identified = ident.K && rec.k >= *ident.K ? 1 : 0;
    os << rec.k << ',' << format_double(rec.gamma) << ',' << format_double(rec.dist) << ','
       << format_double(rec.objective) << ',' << dim << ',' << identified << '\n';
  }
}

void write_report_csv(std::ostream& os, const ExperimentReport& rep) {
  auto row = [&os](const std::string& key, const std::string& value) {
    os << key << ',' << value << '\n';
  };
  row("key", "value");
  row("name", rep.spec.name);
  row("seed", std::to_string(rep.spec.seed));
  row("m", std::to_string(rep.spec.m));
  row("n", std::to_string(rep.spec.n));
  row("lambda", format_double(rep.lambda_used));
  row("delta", format_double(rep.delta_used));
  row("gamma", format_double(rep.gamma_used));
  row("certificate_ok", rep.certificate_ok ? "1" : "0");
  if (!rep.certificate_error.empty()) row("certificate_error", rep.certificate_error);
  row("nondegeneracy_margin", format_double(rep.certificate.nondegeneracy_margin));
  row("alpha", format_double(rep.certificate.alpha));
  row("restricted_injectivity", rep.certificate.restricted_injectivity ? "1" : "0");
  row("uniqueness_implied", rep.certificate.uniqueness_implied ? "1" : "0");
  row("sigma_m", format_double(rep.certificate.sigma_m));
  row("sigma_M", format_double(rep.certificate.sigma_M));
  row("sigma_max", format_double(rep.certificate.sigma_max));
  row("subspace_dim", std::to_string(rep.certificate.subspace_dim));
  row("identified", rep.identification.K ? "1" : "0");
  row("identification_k", rep.identification.K ? std::to_string(*rep.identification.K) : "-1");
  row("confirming_records", std::to_string(rep.identification.confirming_records));
  row("prediction_ok", rep.prediction_ok ? "1" : "0");
  if (rep.prediction_ok) {
    row("regime", regime_name(rep.prediction.regime));
    row("predicted_rho", format_double(rep.prediction.rho_at(rep.gamma_used)));
    row("gamma_opt", format_double(rep.prediction.gamma_opt));
    row("rho_opt", format_double(rep.prediction.rho_opt));
  }
  row("observed_rate", format_double(rep.observed_rate));
  row("total_iters", std::to_string(rep.total_iters));
  row("stop", stop_reason_name(rep.stop));
  row("final_dist", format_double(rep.final_dist));
  row("reference_polished", rep.reference_polished ? "1" : "0");
  row("identified_ok", rep.identified_ok ? "1" : "0");
  row("rate_ok", rep.rate_ok ? "1" : "0");
  row("passed", rep.passed ? "1" : "0");
}

std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory csv: empty file");
  std::stringstream hs(trim(line));
  std::vector<std::string> cols;
  std::string col;
  while (std::getline(hs, col, ',')) cols.push_back(col);
  int k_col = -1, dist_col = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "k") k_col = static_cast<int>(i);
    if (cols[i] == "dist") dist_col = static_cast<int>(i);
  }
  if (k_col < 0 || dist_col < 0)
    throw std::runtime_error("trajectory csv: header must contain k and dist columns");
  std::vector<TrajectoryPoint> pts;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ls(line);
    std::vector<std::string> fields;
    while (std::getline(ls, col, ',')) fields.push_back(col);
    if (fields.size() != cols.size())
      throw std::runtime_error("trajectory csv: bad field count at line " +
                               std::to_string(lineno));
    TrajectoryPoint p;
    try {
      p.k = std::stod(fields[static_cast<size_t>(k_col)]);
      p.dist = std::stod(fields[static_cast<size_t>(dist_col)]);
    } catch (const std::exception&) {
      throw std::runtime_error("trajectory csv: bad number at line " + std::to_string(lineno));
    }
    pts.push_back(p);
  }
  return pts;
}

std::string render_convergence_svg(const std::vector<TrajectoryPoint>& observed,
                                   double rho, int K) {
  const double width = 640.0, height = 480.0;
  const double ml = 70.0, mr = 20.0, mt = 20.0, mb = 50.0;

  std::vector<TrajectoryPoint> pts;
  for (const auto& p : observed)
    if (p.dist > 0.0) pts.push_back(p);
  if (pts.empty()) throw std::runtime_error("svg: no positive distances to plot");

  double kmin = pts.front().k, kmax = pts.front().k;
  double lmin = std::log10(pts.front().dist), lmax = lmin;
  for (const auto& p : pts) {
    kmin = std::min(kmin, p.k);
    kmax = std::max(kmax, p.k);
    lmin = std::min(lmin, std::log10(p.dist));
    lmax = std::max(lmax, std::log10(p.dist));
  }
  if (kmax == kmin) kmax = kmin + 1.0;
  if (lmax == lmin) lmax = lmin + 1.0;

  auto sx = [&](double k) { return ml + (k - kmin) / (kmax - kmin) * (width - ml - mr); };
  auto sy = [&](double l) {
    return height - mb - (l - lmin) / (lmax - lmin) * (height - mt - mb);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">iteration k</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\">log10 ||x_k - x*||</text>\n";

  // observed series
  svg << "<path fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" d=\"";
  for (size_t i = 0; i < pts.size(); ++i)
    svg << (i == 0 ? 'M' : 'L') << sx(pts[i].k) << ' ' << sy(std::log10(pts[i].dist)) << ' ';
  svg << "\"/>\n";

  // predicted overlay from (K, d_K)
  if (rho > 0.0 && rho < 1.0 && K >= 0) {
    const TrajectoryPoint* at_k = nullptr;
    for (const auto& p : pts)
      if (p.k >= K) {
        at_k = &p;
        break;
      }
    if (at_k) {
      const double l0 = std::log10(at_k->dist);
      const double slope = std::log10(rho);
      const double l_end = l0 + slope * (kmax - at_k->k);
      svg << "<path fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" "
             "stroke-dasharray=\"6 4\" d=\"M"
          << sx(at_k->k) << ' ' << sy(l0) << " L" << sx(kmax) << ' '
          << sy(std::max(l_end, lmin)) << "\"/>\n";
      svg << "<line x1=\"" << sx(K) << "\" y1=\"" << mt << "\" x2=\"" << sx(K) << "\" y2=\""
          << height - mb << "\" stroke=\"#2ca02c\" stroke-dasharray=\"3 3\"/>\n";
      svg << "<text x=\"" << sx(K) + 4 << "\" y=\"" << mt + 14
          << "\" font-size=\"12\" fill=\"#2ca02c\">K=" << K << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

RunConfig parse_run_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (kv.count(key))
      throw std::runtime_error("config: duplicate key '" + key + "'");
    kv[key] = value;
  }

  auto take = [&kv](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_int = [&take](const std::string& key, int dflt) {
    auto v = take(key);
    return v ? std::stoi(*v) : dflt;
  };
  auto take_double = [&take](const std::string& key, double dflt) {
    auto v = take(key);
    return v ? std::stod(*v) : dflt;
  };
  auto take_bool = [&take](const std::string& key, bool dflt) {
    auto v = take(key);
    if (!v) return dflt;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw std::runtime_error("config: boolean expected for '" + key + "'");
  };

  const auto version = take("version");
  if (!version) throw std::runtime_error("config: missing version field");
  if (*version != "1")
    throw std::runtime_error("config: unsupported version " + *version);

  RunConfig cfg;
  ExperimentSpec& s = cfg.spec;
  if (auto b = take("builtin")) {
    s = builtin_spec(*b);
  } else {
    const auto reg = take("regularizer");
    if (!reg) throw std::runtime_error("config: missing regularizer");
    if (*reg == "l1")
      s.kind = RegKind::L1;
    else if (*reg == "group")
      s.kind = RegKind::GroupL1L2;
    else if (*reg == "tv1d")
      s.kind = RegKind::TV1D;
    else if (*reg == "linf")
      s.kind = RegKind::LInf;
    else if (*reg == "nuclear")
      s.kind = RegKind::Nuclear;
    else
      throw std::runtime_error("config: unknown regularizer '" + *reg + "'");
    s.solver.stop_tol = -1.0;
  }
  if (auto v = take("name")) s.name = *v;
  if (s.name.empty()) s.name = "experiment";
  s.m = take_int("m", s.m);
  s.n = take_int("n", s.n);
  s.n1 = take_int("n1", s.n1);
  s.n2 = take_int("n2", s.n2);
  if (s.kind == RegKind::Nuclear && s.n == 0) s.n = s.n1 * s.n2;
  s.sparsity = take_int("sparsity", s.sparsity);
  s.block_size = take_int("block_size", s.block_size);
  s.active_blocks = take_int("active_blocks", s.active_blocks);
  s.rank = take_int("rank", s.rank);
  s.lambda = take_double("lambda", s.lambda);
  s.lambda_mult = take_double("lambda_mult", s.lambda_mult);
  s.delta = take_double("delta", s.delta);
  s.gamma = take_double("gamma", s.gamma);
  if (auto v = take("seed")) s.seed = std::stoull(*v);
  s.solver.max_iters = take_int("max_iters", s.solver.max_iters);
  s.solver.record_every = take_int("record_every", s.solver.record_every);
  s.solver.stop_tol = take_double("stop_tol", s.solver.stop_tol);
  s.solver.zero_tol = take_double("zero_tol", s.solver.zero_tol);
  s.deconvolution = take_bool("deconvolution", s.deconvolution);
  s.kernel_sigma = take_double("kernel_sigma", s.kernel_sigma);
  if (auto v = take("out")) cfg.out_dir = *v;
  cfg.plot = take_bool("plot", cfg.plot);

  if (!kv.empty())
    throw std::runtime_error("config: unknown key '" + kv.begin()->first + "'");
  return cfg;
}

}  // namespace fbps
