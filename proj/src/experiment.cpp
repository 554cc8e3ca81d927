#include "bmlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bmlab/catalog.hpp"
#include "bmlab/constructions.hpp"
#include "bmlab/dimcalc.hpp"
#include "bmlab/fiber.hpp"

namespace bmlab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vec parse_vec(const std::string& s) {
  auto parts = split_list(s);
  Vec v(long(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) v[long(i)] = std::stod(parts[i]);
  return v;
}

bool is_stochastic(const std::string& kind) {
  return kind == "bm_check" || kind == "fiber_suite" || kind == "optimize";
}

struct KindInfo {
  const char* name;
  const char* summary;
  const char* params;
};

const KindInfo kKinds[] = {
    {"bm_check",
     "inequality report for one or more (X, Y) box pairs",
     "group, levels, samples, seed, exponent?, x_lo/x_hi/y_lo/y_hi (comma vectors) "
     "or pairs=N for seeded random boxes"},
    {"tube_sharpness",
     "product ratio mu(D^2)/mu(D) of tubes around the maximal compact subgroup",
     "group (sl2r or r:d), delta, levels, tu_scale (grid unit per delta, default 2)"},
    {"slab_sharpness",
     "thickened kernel slab on aff: sharpness of the exponent 1/n - eps",
     "eps_tilde, width, eps (exponent offset, default 0.1), levels"},
    {"collapse",
     "measure-collapse pair on aff: mu(XY) close to mu(Y)",
     "s, alpha, beta, levels"},
    {"stability",
     "nested tubes X, X1 with mu(X1 X) < (2+eps)^n mu(X)",
     "group, eps_tilde, delta, levels"},
    {"fiber_suite",
     "quotient integral, layer cake and spillover convexity on one split",
     "group, fiber_axes (comma list), x_lo/x_hi, levels, samples, seed, n1, n2, "
     "grid_points"},
    {"dim_eval",
     "symbolic dimension calculus of a group expression",
     "expr (grammar: atom | prod | ext_lie | ext_rpos | quot_compact | open_sub)"},
    {"optimize",
     "derivative-free search over a parametric family",
     "group, family (box|tube|collapse), budget, restarts, seed, level, samples"},
};

}  // namespace

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = true;
      for (char ch : line)
        if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
      if (blank) continue;
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not `key = value`");
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "experiment") {
    experiment = value;
  } else if (key == "group") {
    group = value;
  } else if (key == "levels") {
    levels.clear();
    for (const auto& tok : split_list(value)) levels.push_back(std::stoi(tok));
  } else if (key == "samples") {
    samples = std::stoull(value);
  } else if (key == "seed") {
    seed = std::stoull(value);
    seed_set = true;
  } else if (key == "threads") {
    threads = std::stoi(value);
  } else if (key == "strict") {
    strict = value == "1" || value == "true";
  } else if (key == "out") {
    out = value;
  } else {
    extra[key] = value;
  }
}

double ExperimentConfig::num(const std::string& key, double fallback) const {
  auto it = extra.find(key);
  return it == extra.end() ? fallback : std::stod(it->second);
}

long ExperimentConfig::integer(const std::string& key, long fallback) const {
  auto it = extra.find(key);
  return it == extra.end() ? fallback : std::stol(it->second);
}

std::string ExperimentConfig::str(const std::string& key,
                                  const std::string& fallback) const {
  auto it = extra.find(key);
  return it == extra.end() ? fallback : it->second;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "experiment=" << experiment << "\ngroup=" << group << "\nlevels=";
  for (size_t i = 0; i < levels.size(); ++i) os << (i ? "," : "") << levels[i];
  os << "\nsamples=" << samples << "\nseed=" << seed << "\nstrict=" << strict << "\n";
  for (const auto& [k, v] : extra) os << k << "=" << v << "\n";
  return os.str();
}

namespace {

struct Table {
  std::string header;
  std::vector<std::string> rows;
  std::vector<bool> passes;
  bool all_pass() const {
    for (bool p : passes)
      if (!p) return false;
    return true;
  }
};

// ------------------------------------------------------------ bm_check --

Table run_bm_check(const ExperimentConfig& cfg) {
  Table t;
  t.header = "pair," + BMReport::csv_header();
  ChartPtr chart = parse_group(cfg.group);
  long pairs = cfg.integer("pairs", 0);
  std::optional<int> exponent;
  if (cfg.extra.count("exponent")) exponent = int(cfg.integer("exponent", 0));

  for (int level : cfg.levels) {
    std::vector<std::pair<CellSet, CellSet>> instances;
    if (pairs > 0) {
      std::mt19937_64 rng(cfg.seed);
      auto u01 = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
      auto random_box = [&]() {
        Vec lo(chart->dim), hi(chart->dim);
        for (int k = 0; k < chart->dim; ++k) {
          const Axis& ax = chart->axes[k];
          double base = std::isfinite(ax.lo) ? ax.lo + 0.5 : -1.5;
          double pos = base + 2.0 * u01();
          double w = 0.25 + 1.0 * u01();
          lo[k] = pos;
          hi[k] = pos + w;
        }
        return from_box(chart, lo, hi, level);
      };
      for (long i = 0; i < pairs; ++i) {
        CellSet X = random_box();
        instances.emplace_back(std::move(X), random_box());
      }
    } else {
      Vec xlo = parse_vec(cfg.str("x_lo", "0,0"));
      Vec xhi = parse_vec(cfg.str("x_hi", "1,1"));
      Vec ylo = parse_vec(cfg.str("y_lo", cfg.str("x_lo", "0,0")));
      Vec yhi = parse_vec(cfg.str("y_hi", cfg.str("x_hi", "1,1")));
      instances.emplace_back(from_box(chart, xlo, xhi, level),
                             from_box(chart, ylo, yhi, level));
    }
    int pair_id = 0;
    for (auto& [X, Y] : instances) {
      CheckOptions opts;
      opts.exponent = exponent;
      opts.samples = cfg.samples;
      opts.seed = cfg.seed + uint64_t(pair_id);
      opts.product.strict = cfg.strict;
      opts.product.threads = cfg.threads;
      BMReport r = check_bm(X, Y, opts);
      t.rows.push_back(std::to_string(pair_id) + "," + r.csv_row());
      t.passes.push_back(r.pass);
      ++pair_id;
    }
  }
  return t;
}

// ------------------------------------------------------ tube_sharpness --

Table run_tube(const ExperimentConfig& cfg) {
  Table t;
  t.header =
      "level,delta,mu_X,mu_X_err,mu_XX,mu_XX_err,ratio,oracle,allowance,verdict";
  ChartPtr chart = parse_group(cfg.group);
  double delta = cfg.num("delta", 0.1);
  double tu_scale = cfg.num("tu_scale", 2.0);
  double oracle;
  if (chart->name == "sl2r") {
    oracle = (std::cosh(2.0 * delta) - 1.0) / (std::cosh(delta) - 1.0);
  } else {
    oracle = std::pow(2.0, chart->profile.bm_exponent());
  }
  for (int level : cfg.levels) {
    Vec scale;
    if (chart->name == "sl2r") {
      scale.resize(3);
      scale << 2.0 * std::numbers::pi, tu_scale * delta, tu_scale * delta;
    } else {
      scale = Vec::Constant(chart->dim, tu_scale * delta);
    }
    TubeSpec spec{chart, delta, level, scale};
    CellSet X = tube(spec);
    ProductOptions po;
    po.strict = cfg.strict;
    CellSet XX = product_set(X, X, level, po);
    Measured mX = measure(X, Side::left);
    Measured mXX = measure(XX, Side::left);
    double ratio = mXX.value / mX.value;
    double allowance = ratio * (boundary_fraction(X, Side::left) +
                                boundary_fraction(XX, Side::left)) +
                       mX.error / mX.value + mXX.error / mXX.value;
    bool pass = ratio >= oracle - allowance && ratio <= oracle + allowance;
    t.rows.push_back(std::to_string(level) + "," + fmt(delta) + "," + fmt(mX.value) +
                     "," + fmt(mX.error) + "," + fmt(mXX.value) + "," + fmt(mXX.error) +
                     "," + fmt(ratio) + "," + fmt(oracle) + "," + fmt(allowance) + "," +
                     (pass ? "PASS" : "FAIL"));
    t.passes.push_back(pass);
  }
  return t;
}

// ------------------------------------------------------ slab_sharpness --

Table run_slab(const ExperimentConfig& cfg) {
  Table t;
  t.header =
      "level,eps_tilde,width,exp_used,mu_X,nu_X,mu_X2,nu_X2,lhs_sharp,lhs_closed,verdict";
  double eps_tilde = cfg.num("eps_tilde", 0.05);
  double width = cfg.num("width", 1.0);
  double eps = cfg.num("eps", 0.1);
  double expo = 1.0 / 2.0 - eps;  // aff has n = 2
  SlabClosedForm closed = slab_closed_form(eps_tilde, width);
  double lhs_closed = std::pow(closed.nu_X / closed.nu_X2, expo) +
                      std::pow(closed.mu_X / closed.mu_X2, expo);
  for (int level : cfg.levels) {
    SlabSpec spec{eps_tilde, width, level, {}};
    CellSet X = slab(spec);
    ProductOptions po;
    po.strict = cfg.strict;
    CellSet XX = product_set(X, X, level, po);
    double mu_X = measure(X, Side::left).value;
    double nu_X = measure(X, Side::right).value;
    double mu_X2 = measure(XX, Side::left).value;
    double nu_X2 = measure(XX, Side::right).value;
    double lhs = std::pow(nu_X / nu_X2, expo) + std::pow(mu_X / mu_X2, expo);
    bool pass = lhs > 1.0;
    t.rows.push_back(std::to_string(level) + "," + fmt(eps_tilde) + "," + fmt(width) +
                     "," + fmt(expo) + "," + fmt(mu_X) + "," + fmt(nu_X) + "," +
                     fmt(mu_X2) + "," + fmt(nu_X2) + "," + fmt(lhs) + "," +
                     fmt(lhs_closed) + "," + (pass ? "PASS" : "FAIL"));
    t.passes.push_back(pass);
  }
  return t;
}

// ------------------------------------------------------------ collapse --

Table run_collapse(const ExperimentConfig& cfg) {
  Table t;
  t.header =
      "level,s,alpha,beta,ratio_closed,C,mu_Y_grid,mu_XY_grid,ratio_grid,allowance,"
      "verdict";
  double s = cfg.num("s", 0.05);
  double alpha = cfg.num("alpha", 1.0);
  double beta = cfg.num("beta", 1.0);
  for (int level : cfg.levels) {
    CollapsePair cp = collapse_pair(s, alpha, beta, level);
    ProductOptions po;
    po.strict = cfg.strict;
    CellSet XY = product_set(cp.X, cp.Y, level, po);
    double mu_Y = measure(cp.Y, Side::left).value;
    double mu_XY = measure(XY, Side::left).value;
    double ratio_grid = mu_XY / mu_Y;
    double allowance = boundary_fraction(XY, Side::left) +
                       boundary_fraction(cp.Y, Side::left);
    bool pass = ratio_grid <= cp.ratio_bound * (1.0 + allowance) &&
                mu_XY >= mu_Y * (1.0 - 1e-9);
    t.rows.push_back(std::to_string(level) + "," + fmt(s) + "," + fmt(alpha) + "," +
                     fmt(beta) + "," + fmt(cp.ratio_bound) + "," + fmt(cp.C) + "," +
                     fmt(mu_Y) + "," + fmt(mu_XY) + "," + fmt(ratio_grid) + "," +
                     fmt(allowance) + "," + (pass ? "PASS" : "FAIL"));
    t.passes.push_back(pass);
  }
  return t;
}

// ----------------------------------------------------------- stability --

Table run_stability(const ExperimentConfig& cfg) {
  Table t;
  t.header = "level,group,eps_tilde,delta,delta1,achieved,bound,verdict";
  ChartPtr chart = parse_group(cfg.group);
  double eps_tilde = cfg.num("eps_tilde", 0.5);
  double delta = cfg.num("delta", 0.1);
  for (int level : cfg.levels) {
    Vec scale;
    if (chart->name == "sl2r") {
      scale.resize(3);
      scale << 2.0 * std::numbers::pi, 2.0 * delta, 2.0 * delta;
    } else {
      scale = Vec::Constant(chart->dim, 2.0 * delta);
    }
    StabilityPair sp = stability_pair(chart, eps_tilde, delta, level, scale);
    t.rows.push_back(std::to_string(level) + "," + cfg.group + "," + fmt(eps_tilde) +
                     "," + fmt(sp.delta) + "," + fmt(sp.delta1) + "," +
                     fmt(sp.achieved) + "," + fmt(sp.bound) + "," +
                     (sp.feasible ? "PASS" : "FAIL"));
    t.passes.push_back(sp.feasible);
  }
  return t;
}

// --------------------------------------------------------- fiber_suite --

Table run_fiber(const ExperimentConfig& cfg) {
  Table t;
  t.header =
      "level,qint_err_box,qint_err_sq,layer_r1,layer_r2,layer_r3,convexity_margin,"
      "verdict";
  ChartPtr chart = parse_group(cfg.group);
  std::vector<int> axes;
  for (const auto& tok : split_list(cfg.str("fiber_axes", "2")))
    axes.push_back(std::stoi(tok));
  FiberSplit split = make_split(chart, axes);
  Vec xlo = parse_vec(cfg.str("x_lo", "0,0,0"));
  Vec xhi = parse_vec(cfg.str("x_hi", "1,1,1"));
  int n1 = int(cfg.integer("n1", 1));
  int n2 = int(cfg.integer("n2", 2));
  int grid_points = int(cfg.integer("grid_points", 50));
  for (int level : cfg.levels) {
    CellSet X = from_box(chart, xlo, xhi, level);
    CellSet XX = product_set(X, X, level);
    double e_box = quotient_integral_check(split, X);
    double e_sq = quotient_integral_check(split, XX);
    FiberProfile prof = fiber_profile(split, XX);
    double l1 = layer_cake_error(prof, 1);
    double l2 = layer_cake_error(prof, 2);
    double l3 = layer_cake_error(prof, 3);
    ConvexityResult conv = spillover_convexity_check(split, X, X, n1, n2, grid_points,
                                                     cfg.samples, cfg.seed);
    bool pass = e_box < 0.01 && e_sq < 0.01 && l1 < 0.01 && l2 < 0.01 && l3 < 0.01 &&
                conv.worst_margin >= -0.02;
    t.rows.push_back(std::to_string(level) + "," + fmt(e_box) + "," + fmt(e_sq) + "," +
                     fmt(l1) + "," + fmt(l2) + "," + fmt(l3) + "," +
                     fmt(conv.worst_margin) + "," + (pass ? "PASS" : "FAIL"));
    t.passes.push_back(pass);
  }
  return t;
}

// ------------------------------------------------------------ dim_eval --

Table run_dim_eval(const ExperimentConfig& cfg) {
  Table t;
  t.header = "expr,supported,d,m,h,n,exponent,helix_bound_ok,reason";
  std::string text = cfg.str("expr", cfg.group);
  dimcalc::ExprPtr e = dimcalc::parse_expr(text);
  dimcalc::EvalResult r = dimcalc::eval_profile(e);
  std::string row = "\"" + text + "\",";
  if (r.supported) {
    bool bound = r.profile.h <= r.profile.n / 3;
    row += "1," + std::to_string(r.profile.d) + "," + std::to_string(r.profile.m) +
           "," + std::to_string(r.profile.h) + "," + std::to_string(r.profile.n) +
           "," + std::to_string(r.profile.bm_exponent()) + "," +
           (bound ? "1" : "0") + ",";
  } else {
    row += "0,,,,";
    row += r.partial_n ? std::to_string(*r.partial_n) : "";
    row += ",,,\"" + r.reason + "\"";
  }
  t.rows.push_back(row);
  t.passes.push_back(true);  // evaluation itself succeeded; outcome is data
  return t;
}

// ------------------------------------------------------------ optimize --

Table run_optimize(const ExperimentConfig& cfg) {
  Table t;
  t.header = "family,restart,best_objective,evals,params";
  ChartPtr chart = parse_group(cfg.group);
  std::string family_kind = cfg.str("family", "box");
  int level = cfg.levels.empty() ? 6 : cfg.levels.front();
  ParamFamily fam = make_family(family_kind, chart, level, cfg.samples, cfg.seed);
  int budget = int(cfg.integer("budget", 400));
  int restarts = int(cfg.integer("restarts", 3));
  OptimizeResult res = minimize_product(fam, budget, restarts, cfg.seed);
  std::string params;
  for (int k = 0; k < res.best_params.size(); ++k)
    params += (k ? ";" : "") + fmt(res.best_params[k]);
  for (size_t i = 0; i < res.trail.size(); ++i) {
    t.rows.push_back(family_kind + "," + std::to_string(i) + "," +
                     fmt(res.best_objective) + "," + std::to_string(res.evals) + ",\"" +
                     params + "\"");
  }
  t.passes.assign(res.trail.size(), !res.trail.empty());
  return t;
}

}  // namespace

std::vector<std::string> list_experiments() {
  std::vector<std::string> out;
  for (const auto& k : kKinds) out.push_back(k.name);
  return out;
}

std::string describe(const std::string& kind) {
  for (const auto& k : kKinds) {
    if (kind == k.name)
      return std::string(k.name) + ": " + k.summary + "\n  parameters: " + k.params;
  }
  throw std::invalid_argument("unknown experiment kind: " + kind +
                              " (see `list` for the available kinds)");
}

RunResult run(const ExperimentConfig& config) {
  if (config.experiment.empty()) {
    std::string kinds;
    for (const auto& k : kKinds) kinds += std::string(k.name) + " ";
    throw std::invalid_argument("config: `experiment` is required; one of " + kinds);
  }
  if (config.levels.empty())
    throw std::invalid_argument("config: `levels` must be a nonempty increasing list");
  for (size_t i = 1; i < config.levels.size(); ++i)
    if (config.levels[i] <= config.levels[i - 1])
      throw std::invalid_argument("config: `levels` must be strictly increasing");
  if (is_stochastic(config.experiment) && !config.seed_set)
    throw std::invalid_argument(
        "config: `seed` is mandatory for stochastic experiment " + config.experiment);

  auto t0 = std::chrono::steady_clock::now();
  Table table;
  if (config.experiment == "bm_check") table = run_bm_check(config);
  else if (config.experiment == "tube_sharpness") table = run_tube(config);
  else if (config.experiment == "slab_sharpness") table = run_slab(config);
  else if (config.experiment == "collapse") table = run_collapse(config);
  else if (config.experiment == "stability") table = run_stability(config);
  else if (config.experiment == "fiber_suite") table = run_fiber(config);
  else if (config.experiment == "dim_eval") table = run_dim_eval(config);
  else if (config.experiment == "optimize") table = run_optimize(config);
  else
    throw std::invalid_argument("unknown experiment kind: " + config.experiment);
  auto t1 = std::chrono::steady_clock::now();

  RunResult res;
  res.csv_body = table.header + "\n";
  for (const auto& row : table.rows) res.csv_body += row + "\n";
  res.exit_code = table.all_pass() ? 0 : 1;

  res.csv_path = config.out + ".csv";
  res.json_path = config.out + ".json";
  {
    std::ofstream csv(res.csv_path, std::ios::binary);
    csv << res.csv_body;
  }
  nlohmann::ordered_json meta;
  meta["experiment"] = config.experiment;
  meta["config"] = config.canonical();
  meta["input_hash_fnv1a64"] = fnv1a64(config.canonical());
  meta["rows"] = table.rows.size();
  meta["all_pass"] = table.all_pass();
  meta["elapsed_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  meta["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  {
    std::ofstream js(res.json_path, std::ios::binary);
    js << meta.dump(2) << "\n";
  }
  return res;
}

}  // namespace bmlab
