#include "fplab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fplab/duality.hpp"
#include "fplab/equilibrium.hpp"
#include "fplab/gibbs.hpp"
#include "fplab/matrixmc.hpp"
#include "fplab/measures.hpp"
#include "fplab/ncpoly.hpp"

namespace fplab {

using nlohmann::json;

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line is not 'key = value': '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key in '" + line + "'");
    if (key == "command")
      cfg.command_ = val;
    else
      cfg.kv_[key] = val;
  }
  if (cfg.command_.empty()) throw ConfigError("config: missing required field 'command'");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::optional<std::string>& def) const {
  auto it = kv_.find(key);
  if (it != kv_.end()) return it->second;
  if (def) return *def;
  throw ConfigError("config: missing required field '" + key + "'");
}

double ExperimentConfig::get_double(const std::string& key, std::optional<double> def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    if (def) return *def;
    throw ConfigError("config: missing required field '" + key + "'");
  }
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: field '" + key + "' is not a number: '" + it->second + "'");
  }
}

long ExperimentConfig::get_long(const std::string& key, std::optional<long> def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    if (def) return *def;
    throw ConfigError("config: missing required field '" + key + "'");
  }
  try {
    size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: field '" + key + "' is not an integer: '" + it->second + "'");
  }
}

uint64_t ExperimentConfig::get_seed(const std::string& key, std::optional<uint64_t> def) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    if (def) return *def;
    throw ConfigError("config: missing required field '" + key + "'");
  }
  try {
    uint64_t v = std::stoull(it->second);
    if (v == 0) throw ConfigError("config: field '" + key + "' must be a positive seed");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config: field '" + key + "' is not a valid seed: '" + it->second + "'");
  }
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key,
                                                const std::string& def) const {
  std::string raw = has(key) ? kv_.at(key) : def;
  if (raw.empty()) throw ConfigError("config: missing required field '" + key + "'");
  std::vector<int> out;
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      int v = std::stoi(tok);
      if (v < 1) throw ConfigError("config: field '" + key + "' must contain positive integers");
      out.push_back(v);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config: field '" + key + "' has a bad entry: '" + tok + "'");
    }
  }
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key,
                                                      const std::string& def) const {
  std::string raw = has(key) ? kv_.at(key) : def;
  if (raw.empty()) throw ConfigError("config: missing required field '" + key + "'");
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("config: field '" + key + "' has a bad entry: '" + tok + "'");
    }
  }
  return out;
}

std::string ExperimentConfig::hash() const {
  // FNV-1a 64 over the canonical "key=value\n" listing
  uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  feed("command=" + command_ + "\n");
  for (const auto& [k, v] : kv_) feed(k + "=" + v + "\n");
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- helpers

namespace {

struct Metric {
  std::string name;
  double value = 0.0;
  double stderr_v = 0.0;
  json diagnostics = json::object();
};

struct RunResult {
  std::vector<Metric> metrics;
  bool diagnostics_ok = true;
};

NCPolynomial parse_poly(std::string text) {
  for (auto& c : text)
    if (c == ';') c = '\n';
  return NCPolynomial::from_text(text);
}

NCPolynomial require_selfadjoint(const NCPolynomial& p, const std::string& field) {
  if (!p.is_selfadjoint())
    throw ConfigError("config: field '" + field + "' must be a selfadjoint polynomial");
  return p;
}

// "arcsine(2)" | "semicircle(0,2)" | "uniform(-1,1)"
DiscreteMeasure parse_measure(const std::string& text, int grid, double enclosing_R) {
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigError("config: bad measure spec '" + text + "'");
  std::string name = text.substr(0, open);
  std::vector<double> params;
  std::stringstream ss(text.substr(open + 1, close - open - 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) params.push_back(std::stod(tok));
  return make_measure(density_kind_from_name(name), params, grid, enclosing_R);
}

// "X1:0,X1.X1:1"
MomentSpec parse_moments(const std::string& text) {
  MomentSpec spec;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto colon = tok.rfind(':');
    if (colon == std::string::npos)
      throw ConfigError("config: bad moment entry '" + tok + "' (expected word:value)");
    Word w = Word::parse(tok.substr(0, colon));
    spec.set(w, std::stod(tok.substr(colon + 1)));
  }
  return spec;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

// ------------------------------------------------------------------ svg

std::string svg_line_plot(const std::string& title, const std::vector<double>& xs,
                          const std::vector<double>& ys, std::optional<double> ref) {
  const int W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
  for (double x : xs) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  for (double y : ys) {
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (ref) {
    ymin = std::min(ymin, *ref);
    ymax = std::max(ymax, *ref);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.08 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  char buf[256];
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
       "viewBox=\"0 0 640 420\">\n";
  s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">%s</text>\n",
                ml, title.c_str());
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", ml, H - mb,
                W - mr, H - mb);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", ml, mt, ml,
                H - mb);
  s += buf;
  for (int k = 0; k <= 4; ++k) {
    double xv = xmin + k * (xmax - xmin) / 4.0;
    double yv = ymin + k * (ymax - ymin) / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\" "
                  "text-anchor=\"middle\">%.4g</text>\n",
                  px(xv), H - mb + 18, xv);
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
                  "text-anchor=\"end\">%.6g</text>\n",
                  ml - 6, py(yv) + 4, yv);
    s += buf;
  }
  if (ref) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#c03030\" "
                  "stroke-dasharray=\"6,4\"/>\n",
                  ml, py(*ref), W - mr, py(*ref));
    s += buf;
  }
  s += "<polyline fill=\"none\" stroke=\"#2060c0\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(xs[i]), py(ys[i]));
    s += buf;
  }
  s += "\"/>\n";
  for (size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#2060c0\"/>\n",
                  px(xs[i]), py(ys[i]));
    s += buf;
  }
  s += "</svg>\n";
  return s;
}

std::string csv_table(const std::vector<std::string>& cols,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  char buf[40];
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out += (i ? "," : "");
      out += buf;
    }
    out += "\n";
  }
  return out;
}

Schedule schedule_from_config(const ExperimentConfig& cfg) {
  Schedule sched;
  const long nodes = cfg.get_long("beta_nodes", 16);
  if (nodes < 16) throw ConfigError("config: field 'beta_nodes' must be >= 16");
  sched.panels = {{0.0, 1.0, static_cast<int>(nodes)}};
  sched.chains = static_cast<int>(cfg.get_long("chains", 2));
  sched.warmup_sweeps = static_cast<int>(cfg.get_long("warmup", 1500));
  sched.sample_sweeps = static_cast<int>(cfg.get_long("samples", 4000));
  sched.thin = static_cast<int>(cfg.get_long("thin", 2));
  if (sched.chains < 1 || sched.warmup_sweeps < 1 || sched.sample_sweeps < 1 || sched.thin < 1)
    throw ConfigError("config: chain budget fields must be positive");
  return sched;
}

// ---------------------------------------------------------------- runners

RunResult run_volume(const ExperimentConfig& cfg, const RunOptions& opt, uint64_t /*seed*/) {
  const double R = cfg.get_double("R", 2.0);
  if (R <= 0.0) throw ConfigError("config: field 'R' must be positive");
  auto ns = cfg.get_int_list("n_list", "4,8,16,32,64");

  RunResult rr;
  std::vector<PerNRecord> recs;
  std::vector<std::vector<double>> rows;
  for (int n : ns) {
    const double n2 = static_cast<double>(n) * n;
    const double scaled = log_ball_volume(n, R) / n2 + 0.5 * std::log(static_cast<double>(n));
    recs.push_back({n, scaled, 0.0});
    Metric m{"scaled_log_volume", scaled, 0.0, json{{"n", n}}};
    rr.metrics.push_back(m);
    rows.push_back({1.0 / n2, scaled, log_ball_volume_limit(R)});
  }
  auto est = extrapolate_pressure(recs);
  rr.metrics.push_back({"volume_extrapolated", est.extrapolated, est.extrapolated_se,
                        json{{"c1", est.c1}, {"fit_residual", est.fit_residual}}});
  rr.metrics.push_back({"volume_limit", log_ball_volume_limit(R), 0.0, json::object()});

  const std::string csv = (std::filesystem::path(opt.out_dir) / "volume.csv").string();
  write_file(csv, csv_table({"x", "y", "ref"}, rows));
  render_svg_from_csv(csv, (std::filesystem::path(opt.out_dir) / "volume.svg").string());
  return rr;
}

RunResult run_equilibrium(const ExperimentConfig& cfg, const RunOptions& opt, uint64_t /*seed*/) {
  const double R = cfg.get_double("R");
  NCPolynomial h = require_selfadjoint(parse_poly(cfg.get_string("h")), "h");
  EquilibriumOptions opts;
  opts.grid = static_cast<int>(cfg.get_long("grid", 800));
  auto res = solve_equilibrium(PotentialFn::from_poly(h, R), opts);

  RunResult rr;
  rr.diagnostics_ok = res.converged;
  json diag{{"iterations", res.iterations}, {"converged", res.converged}};
  rr.metrics.push_back({"pressure", res.pressure, 0.0, diag});
  rr.metrics.push_back({"frostman_constant", res.frostman_constant, 0.0, json::object()});
  rr.metrics.push_back({"residual_on_support", res.residual_on_support, 0.0, json::object()});
  rr.metrics.push_back({"residual_off_support", res.residual_off_support, 0.0, json::object()});
  rr.metrics.push_back({"sigma_m2", moment(res.sigma, 2), 0.0, json::object()});

  write_file((std::filesystem::path(opt.out_dir) / "equilibrium.csv").string(),
             equilibrium_to_csv(res));
  // density plot: weight / cell width against node
  std::vector<std::vector<double>> rows;
  const double dx = res.sigma.cell_width();
  for (size_t i = 0; i < res.sigma.size(); ++i)
    rows.push_back({res.sigma.nodes[i], res.sigma.weights[i] / dx});
  const std::string csv = (std::filesystem::path(opt.out_dir) / "equilibrium_density.csv").string();
  write_file(csv, csv_table({"x", "y"}, rows));
  render_svg_from_csv(csv, (std::filesystem::path(opt.out_dir) / "equilibrium.svg").string());
  return rr;
}

RunResult run_pressure(const ExperimentConfig& cfg, const RunOptions& opt, uint64_t seed) {
  const double R = cfg.get_double("R");
  NCPolynomial h = require_selfadjoint(parse_poly(cfg.get_string("h")), "h");
  const int N = static_cast<int>(cfg.get_long("N", std::max(1, h.nvars())));
  auto ns = cfg.get_int_list("n_list", "8,16,32");
  Schedule sched = schedule_from_config(cfg);
  const bool split = cfg.get_long("split_blocks", 1) != 0;

  RunResult rr;
  std::vector<PerNRecord> recs;
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < ns.size(); ++i) {
    auto res = estimate_micro_pressure(h, N, ns[i], R, sched, derive_seed(seed, i), opt.jobs,
                                       split);
    if (!res.mixing_ok) rr.diagnostics_ok = false;
    recs.push_back({ns[i], res.scaled, res.scaled_se});
    json diag{{"n", ns[i]}, {"mixing_ok", res.mixing_ok}, {"exact", res.exact}};
    rr.metrics.push_back({"scaled_pressure", res.scaled, res.scaled_se, diag});
    rows.push_back({1.0 / (static_cast<double>(ns[i]) * ns[i]), res.scaled, res.scaled_se});
  }
  if (recs.size() >= 3) {
    auto est = extrapolate_pressure(recs);
    rr.metrics.push_back({"pressure_extrapolated", est.extrapolated, est.extrapolated_se,
                          json{{"c1", est.c1}, {"fit_residual", est.fit_residual}}});
  }
  const std::string csv = (std::filesystem::path(opt.out_dir) / "pressure.csv").string();
  write_file(csv, csv_table({"x", "y", "se"}, rows));
  render_svg_from_csv(csv, (std::filesystem::path(opt.out_dir) / "pressure.svg").string());
  return rr;
}

RunResult run_gibbs_entropy(const ExperimentConfig& cfg, const RunOptions& opt, uint64_t seed) {
  const double R = cfg.get_double("R");
  NCPolynomial h0 = require_selfadjoint(parse_poly(cfg.get_string("h0")), "h0");
  const int N = static_cast<int>(cfg.get_long("N", std::max(1, h0.nvars())));
  auto ns = cfg.get_int_list("n_list", "8,16,32");

  EntropyConfig ecfg;
  const long nodes = cfg.get_long("beta_nodes", 16);
  if (nodes < 16) throw ConfigError("config: field 'beta_nodes' must be >= 16");
  ecfg.panels = {{0.0, 1.0, static_cast<int>(nodes)}};
  ecfg.chains = static_cast<int>(cfg.get_long("chains", 2));
  ecfg.warmup_sweeps = static_cast<int>(cfg.get_long("warmup", 1500));
  ecfg.sample_sweeps = static_cast<int>(cfg.get_long("samples", 4000));
  ecfg.thin = static_cast<int>(cfg.get_long("thin", 2));
  ecfg.jobs = opt.jobs;

  RunResult rr;
  std::vector<PerNRecord> recs;
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < ns.size(); ++i) {
    auto res = boltzmann_entropy(h0, N, ns[i], R, ecfg, derive_seed(seed, 40 + i));
    if (!res.mixing_ok) rr.diagnostics_ok = false;
    recs.push_back({ns[i], res.scaled, res.scaled_se});
    json diag{{"n", ns[i]},
              {"pressure", res.pressure},
              {"mu_h0", res.mu_h0},
              {"exact", res.exact},
              {"mixing_ok", res.mixing_ok}};
    rr.metrics.push_back({"scaled_entropy", res.scaled, res.scaled_se, diag});
    rows.push_back({1.0 / (static_cast<double>(ns[i]) * ns[i]), res.scaled, res.scaled_se});
  }
  if (recs.size() >= 3) {
    auto est = extrapolate_pressure(recs);
    rr.metrics.push_back({"entropy_extrapolated", est.extrapolated, est.extrapolated_se,
                          json{{"c1", est.c1}, {"fit_residual", est.fit_residual}}});
  }
  const std::string csv = (std::filesystem::path(opt.out_dir) / "gibbs_entropy.csv").string();
  write_file(csv, csv_table({"x", "y", "se"}, rows));
  render_svg_from_csv(csv, (std::filesystem::path(opt.out_dir) / "gibbs_entropy.svg").string());
  return rr;
}

MomentSpec target_from_config(const ExperimentConfig& cfg) {
  const std::string kind = cfg.get_string("target", "semicircle");
  const int r = static_cast<int>(cfg.get_long("r", 2));
  if (kind == "semicircle") {
    const double var = cfg.get_double("variance", 1.0);
    return free_semicircular_spec(1, r, {var});
  }
  if (kind == "free-semicircle") {
    const int N = static_cast<int>(cfg.get_long("N", 2));
    const double var = cfg.get_double("variance", 1.0);
    return free_semicircular_spec(N, r, std::vector<double>(N, var));
  }
  if (kind == "moments") return parse_moments(cfg.get_string("target_moments"));
  throw ConfigError("config: field 'target' must be semicircle, free-semicircle or moments");
}

RunResult run_chi_penalty(const ExperimentConfig& cfg, const RunOptions& opt, uint64_t seed) {
  const double R = cfg.get_double("R");
  MomentSpec target = target_from_config(cfg);
  ChiPenaltyParams params;
  params.r = static_cast<int>(cfg.get_long("r", 2));
  params.eps = cfg.get_double("eps", 0.25);
  params.betas = cfg.get_double_list("betas", "10");
  params.ns = cfg.get_int_list("n_list", "8,16,32");
  params.panels_per_decade = static_cast<int>(cfg.get_long("panels_per_decade", 2));
  params.nodes_per_panel = static_cast<int>(cfg.get_long("nodes_per_panel", 4));
  params.chains = static_cast<int>(cfg.get_long("chains", 2));
  params.warmup_sweeps = static_cast<int>(cfg.get_long("warmup", 800));
  params.sample_sweeps = static_cast<int>(cfg.get_long("samples", 1500));
  params.thin = static_cast<int>(cfg.get_long("thin", 2));
  params.jobs = opt.jobs;
  if (params.eps <= 0.0) throw ConfigError("config: field 'eps' must be positive");

  auto res = estimate_chi_penalty(target, R, params, seed);
  RunResult rr;
  rr.diagnostics_ok = res.mixing_ok;
  std::vector<std::vector<double>> rows;
  for (const auto& pt : res.points) {
    json diag{{"beta", pt.beta}, {"slack", pt.slack}};
    json per_n = json::array();
    for (const auto& r2 : pt.per_n)
      per_n.push_back(json{{"n", r2.n}, {"scaled", r2.scaled}, {"se", r2.se}});
    diag["per_n"] = per_n;
    rr.metrics.push_back({"chi_hat", pt.chi_hat, pt.se, diag});
    rr.metrics.push_back({"chi_slack", pt.slack, 0.0, json{{"beta", pt.beta}}});
    rows.push_back({pt.beta, pt.chi_hat, pt.se, pt.slack});
  }
  const std::string csv = (std::filesystem::path(opt.out_dir) / "chi_penalty.csv").string();
  write_file(csv, csv_table({"x", "y", "se", "slack"}, rows));
  render_svg_from_csv(csv, (std::filesystem::path(opt.out_dir) / "chi_penalty.svg").string());
  return rr;
}

RunResult run_duality_gap(const ExperimentConfig& cfg, const RunOptions& opt, uint64_t /*seed*/) {
  const double R = cfg.get_double("R");
  NCPolynomial h0 = require_selfadjoint(parse_poly(cfg.get_string("h0")), "h0");
  const int grid = static_cast<int>(cfg.get_long("grid", 800));
  const int degree = static_cast<int>(cfg.get_long("moment_degree", 8));

  std::vector<std::pair<std::string, MomentSpec>> candidates;
  std::stringstream ss(cfg.get_string("candidates"));
  std::string tok;
  while (std::getline(ss, tok, '|')) {
    DiscreteMeasure mu = parse_measure(tok, grid, R);
    candidates.emplace_back(tok, moment_spec_from_measure(mu, degree));
  }
  if (candidates.empty()) throw ConfigError("config: field 'candidates' is empty");

  std::vector<NCPolynomial> extra;
  if (cfg.has("extra_family")) {
    std::stringstream fs(cfg.get_string("extra_family"));
    while (std::getline(fs, tok, '|'))
      extra.push_back(require_selfadjoint(parse_poly(tok), "extra_family"));
  }

  EquilibriumOptions eopts;
  eopts.grid = grid;
  EquilibriumBackend backend(R, std::max(1, h0.nvars()), eopts);
  auto report = duality_gap(h0, candidates, R, backend, extra);

  RunResult rr;
  for (const auto& c : report.candidates) {
    json diag{{"candidate", c.label}, {"eta", c.eta}, {"mu_h0", c.mu_h0}};
    rr.metrics.push_back({"duality_gap", c.gap, c.gap_se, diag});
  }
  rr.metrics.push_back({"pressure_h0", report.pressure_h0, report.pressure_se,
                        json{{"best_candidate", report.candidates[report.best].label}}});
  return rr;
}

RunResult run_microstate(const ExperimentConfig& cfg, const RunOptions& /*opt*/, uint64_t seed) {
  MicrostateSpecParams spec;
  spec.target = target_from_config(cfg);
  spec.eps = cfg.get_double("eps", 0.1);
  spec.R = cfg.get_double("R");
  const int n = static_cast<int>(cfg.get_long("n", 4));
  if (n < 1 || n > 6)
    throw ConfigError("config: field 'n' must be in 1..6 for microstate sampling");
  const long samples = cfg.get_long("samples", 100000);
  if (samples < 1) throw ConfigError("config: field 'samples' must be positive");
  if (spec.eps <= 0.0) throw ConfigError("config: field 'eps' must be positive");

  auto res = microstate_volume(spec, n, samples, seed);
  RunResult rr;
  json diag{{"hits", res.hits},
            {"samples", res.samples},
            {"empty", res.empty},
            {"upper_bound", res.upper_bound}};
  const double reported = res.empty ? res.upper_bound : res.log_volume;
  rr.metrics.push_back({"microstate_log_volume", reported, res.se, diag});
  rr.metrics.push_back(
      {"hit_count", static_cast<double>(res.hits), std::sqrt(static_cast<double>(res.hits)),
       json::object()});
  return rr;
}

using Runner = RunResult (*)(const ExperimentConfig&, const RunOptions&, uint64_t);

Runner find_runner(const std::string& command) {
  if (command == "volume") return run_volume;
  if (command == "equilibrium") return run_equilibrium;
  if (command == "pressure") return run_pressure;
  if (command == "gibbs-entropy") return run_gibbs_entropy;
  if (command == "chi-penalty") return run_chi_penalty;
  if (command == "duality-gap") return run_duality_gap;
  if (command == "microstate") return run_microstate;
  return nullptr;
}

json metric_to_json(const Metric& m, const std::string& hash) {
  return json{{"type", "metric"},       {"config_hash", hash}, {"metric", m.name},
              {"value", m.value},       {"stderr", m.stderr_v}, {"diagnostics", m.diagnostics}};
}

}  // namespace

int run_experiment(const ExperimentConfig& config_in, const RunOptions& options) {
  ExperimentConfig config = config_in;
  uint64_t seed = 0;
  try {
    Runner runner = find_runner(config.command());
    if (!runner)
      throw ConfigError("config: unknown command '" + config.command() +
                        "' (volume, pressure, equilibrium, gibbs-entropy, chi-penalty, "
                        "duality-gap, microstate)");
    seed = options.seed_override ? *options.seed_override : config.get_seed("seed", 1);
    config.set("seed", std::to_string(seed));
    config.set("schema_version", std::to_string(kConfigSchemaVersion));

    std::filesystem::create_directories(options.out_dir);
    RunResult rr = runner(config, options, seed);

    const std::string hash = config.hash();
    json header{{"type", "header"},
                {"schema", kConfigSchemaVersion},
                {"artifact_version", kArtifactVersion},
                {"command", config.command()},
                {"config", json(config.entries())},
                {"config_hash", hash},
                {"seed", seed},
                {"jobs", options.jobs},
                {"timestamp", iso_timestamp()}};
    std::ofstream out(std::filesystem::path(options.out_dir) / "metrics.jsonl",
                      std::ios::app);
    out << header.dump() << "\n";
    for (const auto& m : rr.metrics) out << metric_to_json(m, hash).dump() << "\n";
    return rr.diagnostics_ok ? 0 : 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
}

void render_svg_from_csv(const std::string& csv_path, const std::string& svg_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("render_svg_from_csv: cannot open " + csv_path);
  std::string line;
  std::vector<double> xs, ys;
  std::optional<double> ref;
  bool header = true;
  bool has_ref = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      has_ref = line.rfind("x,y,ref", 0) == 0;
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    if (row.size() < 2) continue;
    xs.push_back(row[0]);
    ys.push_back(row[1]);
    if (has_ref && row.size() >= 3 && !ref) ref = row[2];
  }
  if (xs.empty()) throw std::runtime_error("render_svg_from_csv: no data rows in " + csv_path);
  write_file(svg_path, svg_line_plot(std::filesystem::path(csv_path).stem().string(), xs, ys, ref));
}

int replay_results(const ReplayOptions& options) {
  std::ifstream in(options.results_path);
  if (!in) {
    std::fprintf(stderr, "replay: cannot open '%s'\n", options.results_path.c_str());
    return 2;
  }

  struct Run {
    json header;
    std::vector<json> metrics;
  };
  std::vector<Run> runs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      std::fprintf(stderr, "replay: malformed JSONL line\n");
      return 2;
    }
    if (j.value("type", "") == "header") {
      runs.push_back({j, {}});
    } else if (j.value("type", "") == "metric") {
      if (runs.empty()) {
        std::fprintf(stderr, "replay: metric before any header\n");
        return 2;
      }
      runs.back().metrics.push_back(j);
    }
  }

  int failures = 0;
  bool matched_any = false;
  for (const auto& run : runs) {
    const std::string stored_hash = run.header.value("config_hash", "");
    if (options.config_hash && *options.config_hash != stored_hash) continue;
    matched_any = true;

    ExperimentConfig cfg;
    cfg.set_command(run.header.value("command", ""));
    for (auto it = run.header["config"].begin(); it != run.header["config"].end(); ++it)
      cfg.set(it.key(), it.value().get<std::string>());
    if (cfg.hash() != stored_hash) {
      std::fprintf(stderr, "replay: config hash mismatch for run %s\n", stored_hash.c_str());
      return 2;
    }

    const bool same_seed = !options.seed_override;
    RunOptions ropt;
    ropt.out_dir = options.out_dir;
    ropt.jobs = options.jobs;
    ropt.seed_override = options.seed_override;
    std::filesystem::create_directories(options.out_dir);
    // rerun into a scratch metrics file, then compare
    const std::string scratch = options.out_dir + "/rerun_" + stored_hash;
    std::filesystem::create_directories(scratch);
    ropt.out_dir = scratch;
    std::filesystem::remove(std::filesystem::path(scratch) / "metrics.jsonl");
    int rc = run_experiment(cfg, ropt);
    if (rc == 2) return 2;

    std::ifstream rein(std::filesystem::path(scratch) / "metrics.jsonl");
    std::vector<json> new_metrics;
    while (std::getline(rein, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      if (j.value("type", "") == "metric") new_metrics.push_back(j);
    }

    if (new_metrics.size() != run.metrics.size()) {
      std::printf("replay %s: FAIL metric count %zu vs %zu\n", stored_hash.c_str(),
                  new_metrics.size(), run.metrics.size());
      ++failures;
      continue;
    }
    for (size_t i = 0; i < new_metrics.size(); ++i) {
      const double v0 = run.metrics[i].value("value", 0.0);
      const double v1 = new_metrics[i].value("value", 0.0);
      const double e0 = run.metrics[i].value("stderr", 0.0);
      const double e1 = new_metrics[i].value("stderr", 0.0);
      bool ok;
      if (same_seed) {
        ok = (v0 == v1) && (e0 == e1);
      } else {
        const double tol = 3.0 * std::sqrt(e0 * e0 + e1 * e1);
        ok = (e0 == 0.0 && e1 == 0.0) ? (v0 == v1) : std::abs(v0 - v1) <= std::max(tol, 1e-12);
      }
      if (!ok) {
        std::printf("replay %s: FAIL metric %s value %.17g vs %.17g\n", stored_hash.c_str(),
                    run.metrics[i].value("metric", "?").c_str(), v0, v1);
        ++failures;
      }
    }
    std::printf("replay %s: %s (%zu metrics, %s)\n", stored_hash.c_str(),
                failures == 0 ? "ok" : "mismatch", new_metrics.size(),
                same_seed ? "exact" : "3-sigma");
  }

  if (!matched_any) {
    std::fprintf(stderr, "replay: no run matches the requested hash\n");
    return 2;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace fplab
