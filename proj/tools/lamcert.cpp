// lamcert: threshold, laminate, build, certify and sweep subcommands.
//
// Exit codes: 0 success, 1 validation failure, 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lamcert/flux.hpp"
#include "lamcert/io.hpp"
#include "lamcert/laminate.hpp"
#include "lamcert/realization.hpp"
#include "lamcert/threshold.hpp"
#include "lamcert/verification.hpp"

namespace {

using namespace lamcert;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::optional<double> p;
  std::optional<double> r;
  double Lambda = 2.0;
  std::string b = "auto";
  std::string N;
  std::string delta = "auto";
  double eta = 0.05;
  int stripes = 32;
  std::string domain = "square";
  std::uint64_t seed = 20240917;
  std::string out;
  std::string csv;
  std::string svg;
  std::string config;
  std::string p_list;  // sweep only
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(a, e - a + 1);
}

// key=value lines become "--key value" pairs placed before the user's own
// flags; with take-last option policy the flags then win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;

  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::vector<std::string> extra;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") {
      throw UsageError(path + ":" + std::to_string(lineno) + ": invalid key '" + key + "'");
    }
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

double require_p(const RunConfig& c) {
  if (!c.p) throw UsageError("--p is required");
  if (!(*c.p > 1.0)) throw UsageError("p must satisfy p > 1");
  return *c.p;
}

int parse_int(const std::string& s, const char* what) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw UsageError(std::string(what) + ": expected an integer, got '" + s + "'");
  }
  return static_cast<int>(v);
}

double parse_double(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw UsageError(std::string(what) + ": expected a number, got '" + s + "'");
  }
  return v;
}

int require_order(const RunConfig& c, int fallback) {
  const int N = c.N.empty() ? fallback : parse_int(c.N, "--N");
  if (N < 1) throw UsageError("--N must be at least 1");
  return N;
}

void check_r(double p, double r) {
  const double lo = lower_exponent(p);
  const double q1 = q1_threshold(p).q1;
  if (!(lo < r && r < q1)) {
    std::ostringstream os;
    os << std::setprecision(10) << "r = " << r
       << " is outside the admissible range r in (max{p-1,1}, q1) = (" << lo << ", " << q1 << ")";
    throw UsageError(os.str());
  }
}

// "auto" picks b from the optimizer at the midpoint exponent: (r + q1)/2 when r
// is given, otherwise the middle of (max(p-1,1), q1).
double resolve_b(const RunConfig& c, double p) {
  if (c.b != "auto") return parse_double(c.b, "--b");
  const double q1 = q1_threshold(p).q1;
  const double q_bar = c.r ? 0.5 * (*c.r + q1) : 0.5 * (lower_exponent(p) + q1);
  return choose_b(p, q_bar);
}

double resolve_delta(const RunConfig& c, const Laminate& lam) {
  if (c.delta == "auto") return min_support_distance(lam) / 4.0;
  const double d = parse_double(c.delta, "--delta");
  if (!(d > 0.0)) throw UsageError("--delta must be positive");
  return d;
}

DomainKind resolve_domain(const RunConfig& c) {
  try {
    return parse_domain(c.domain);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

template <class F>
void write_output(const std::string& path, F&& writer) {
  std::ostringstream os;
  writer(os);
  write_file(path, os.str());
}

std::string fixed(double x, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(6) << x;
  return os.str();
}

int cmd_threshold(const RunConfig& c) {
  const double p = require_p(c);
  const Threshold th = q1_threshold(p);
  const double lo = lower_exponent(p);
  std::cout << "p = " << format_double(p) << '\n'
            << "q1 = " << fixed(th.q1, 6) << '\n'
            << "b* = " << fixed(th.b_star, 6) << '\n'
            << "max(p-1, 1) = " << fixed(lo, 6) << '\n';
  if (p == 2.0) {
    std::cout << "p = 2: q1 = 1, no admissible r\n";
  } else if (p > 2.0) {
    std::cout << "p > 2: q1 > p-1 (margin " << fixed(th.q1 - lo, 6) << ")\n";
  } else {
    std::cout << "1 < p < 2: q1 > 1 (margin " << fixed(th.q1 - lo, 6) << ")\n";
  }
  if (!c.csv.empty()) {
    write_output(c.csv, [&](std::ostream& os) { write_threshold_csv(os, {{p, th.q1, th.b_star, lo}}); });
  }
  return kOk;
}

void print_report(const char* what, const ValidationReport& rep) {
  std::cout << what << ": " << (rep.ok() ? "ok" : "FAILED") << " (" << rep.checks << " checks)\n";
  std::size_t shown = 0;
  for (const Violation& v : rep.violations) {
    if (++shown > 10) break;
    std::cout << "  " << to_string(v.kind) << " at " << v.index << ": " << v.message << '\n';
  }
}

int cmd_laminate(const RunConfig& c) {
  const double p = require_p(c);
  if (c.r) check_r(p, *c.r);
  const double b = resolve_b(c, p);
  require_params(p, b);
  const int N = require_order(c, 2);

  const LaminateBuild lb = build_laminate(N, p, b);
  const Laminate& lam = lb.laminate;
  std::cout << "laminate N = " << N << ", p = " << format_double(p) << ", b = " << format_double(b)
            << ", " << lam.atoms.size() << " atoms\n";
  std::cout << std::left << std::setw(8) << "atom" << std::setw(16) << "weight" << std::setw(16)
            << "log weight" << "matrix\n";
  const std::size_t max_rows = 24;
  for (std::size_t k = 0; k < lam.atoms.size() && k < max_rows; ++k) {
    const Atom& a = lam.atoms[k];
    std::cout << std::setw(8) << a.label.str() << std::setw(16) << sci(a.weight) << std::setw(16)
              << fixed(a.log_weight, 6) << "[" << format_double(a.matrix.m11) << ", "
              << format_double(a.matrix.m12) << "; " << format_double(a.matrix.m21) << ", "
              << format_double(a.matrix.m22) << "]\n";
  }
  if (lam.atoms.size() > max_rows) std::cout << "... " << lam.atoms.size() - max_rows << " more\n";
  std::cout << std::right;
  const double log_gb = log_gamma_tail(N, p, b);
  std::cout << "Gamma_bar_N = " << sci(gamma_tail(N, p, b)) << " (log " << fixed(log_gb, 6) << ")\n"
            << "total weight - 1 = " << sci(lam.total_weight() - 1.0) << '\n';
  if (c.r) {
    const Integrals I = measure_integrals(lam, *c.r);
    std::cout << "I_grad = " << sci(I.grad) << ", I_flux = " << sci(I.flux) << ", ratio = " << sci(I.ratio())
              << '\n';
  }

  const ValidationReport lr = validate_laminate(lam);
  const ValidationReport tr = validate_split_tree(lb.tree, lam);
  print_report("laminate invariants", lr);
  print_report("split tree", tr);
  if (!c.out.empty()) write_output(c.out, [&](std::ostream& os) { write_laminate_json(os, lb); });
  return lr.ok() && tr.ok() ? kOk : kInvalid;
}

int cmd_build(const RunConfig& c) {
  const double p = require_p(c);
  const double b = resolve_b(c, p);
  require_params(p, b);
  const int N = require_order(c, 2);
  if (N < 2) throw UsageError("build needs --N >= 2");
  if (!(c.eta > 0.0 && c.eta < 1.0)) throw UsageError("--eta must lie in (0, 1)");
  if (c.stripes < 1) throw UsageError("--stripes must be positive");
  const DomainKind kind = resolve_domain(c);

  const LaminateBuild lb = build_laminate(N, p, b);
  const double delta = resolve_delta(c, lb.laminate);
  RealizeStats stats;
  PWAffineMap map;
  try {
    map = realize_laminate(make_domain(kind), kind, lb.tree, lb.laminate, delta, c.eta, c.stripes, {}, &stats);
  } catch (const InfeasibleBudget& e) {
    std::cerr << "infeasible budget: " << e.what() << "\n";
    if (std::isfinite(e.achievable_eta)) {
      std::cerr << "achievable eta ~ " << format_double(e.achievable_eta) << '\n';
    } else {
      std::cerr << "no eta below 0.5 is achievable with these stripes and cell cap\n";
    }
    return kInvalid;
  } catch (const InsufficientStripes& e) {
    std::cerr << e.what() << "; need at least " << e.minimal_stripes << " stripes\n";
    return kInvalid;
  }

  std::cout << "map: " << map.cells.size() << " cells on " << to_string(kind) << ", delta = "
            << format_double(delta) << ", eta = " << format_double(c.eta) << ", stripes = " << c.stripes
            << '\n';
  const Histogram h = gradient_histogram(map, lb.laminate, delta);
  std::cout << std::left << std::setw(8) << "atom" << std::setw(16) << "weight" << std::setw(16) << "area"
            << "difference\n";
  for (std::size_t k = 0; k < h.labels.size(); ++k) {
    const double w = lb.laminate.atoms[k].weight;
    std::cout << std::setw(8) << h.labels[k].str() << std::setw(16) << sci(w) << std::setw(16)
              << sci(h.fractions[k]) << sci(h.fractions[k] - w) << '\n';
  }
  std::cout << std::setw(8) << "trans" << std::setw(16) << "-" << std::setw(16) << sci(h.transition) << "\n"
            << std::right;

  const MapReport mr = validate_map(map, &lb.laminate);
  std::cout << "validate_map: " << (mr.ok() ? "ok" : "FAILED") << " (" << mr.checks << " checks"
            << ", area error " << sci(mr.area_error) << ", continuity " << sci(mr.continuity_defect) << ")\n";
  std::size_t shown = 0;
  for (const MapViolation& v : mr.violations) {
    if (++shown > 10) break;
    std::cout << "  " << to_string(v.kind) << " cell " << v.cell << ": " << v.message << '\n';
  }
  if (!c.out.empty()) write_output(c.out, [&](std::ostream& os) { write_map_json(os, map); });
  if (!c.svg.empty()) write_output(c.svg, [&](std::ostream& os) { write_map_svg(os, map, lb.laminate); });
  return mr.ok() ? kOk : kInvalid;
}

std::string summary_path(const std::string& json_path) {
  const auto slash = json_path.find_last_of('/');
  const auto dot = json_path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return json_path.substr(0, dot) + ".txt";
  }
  return json_path + ".txt";
}

int cmd_certify(const RunConfig& c) {
  const double p = require_p(c);
  if (!c.r) throw UsageError("--r is required");
  CertificateBudget budget;
  budget.max_order = require_order(c, budget.max_order);
  budget.eta = c.eta;
  budget.stripes = c.stripes;
  budget.domain = resolve_domain(c);
  budget.seed = c.seed;
  if (c.delta != "auto") {
    budget.delta = parse_double(c.delta, "--delta");
    if (!(budget.delta > 0.0)) throw UsageError("--delta must be positive");
  }
  if (c.b != "auto") std::cerr << "note: certify picks b itself; --b is ignored\n";

  CertificateReport rep;
  try {
    rep = certificate(p, *c.r, c.Lambda, budget);
  } catch (const std::domain_error& e) {
    throw UsageError(e.what());
  }
  const std::string text = certificate_summary(rep);
  std::cout << text;
  if (!c.out.empty()) {
    write_output(c.out, [&](std::ostream& os) { write_certificate_json(os, rep); });
    write_file(summary_path(c.out), text);
  }
  return rep.passed() ? kOk : kInvalid;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), what));
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

// "lo:hi:count" for log-spaced orders, otherwise a comma list.
std::vector<int> parse_order_list(const std::string& s) {
  std::vector<int> out;
  if (std::count(s.begin(), s.end(), ':') == 2) {
    const auto a = s.find(':');
    const auto b = s.find(':', a + 1);
    const int lo = parse_int(s.substr(0, a), "--N");
    const int hi = parse_int(s.substr(a + 1, b - a - 1), "--N");
    const int n = parse_int(s.substr(b + 1), "--N");
    if (lo < 2 || hi < lo || n < 1) throw UsageError("--N lo:hi:count needs 2 <= lo <= hi, count >= 1");
    return log_spaced(lo, hi, n);
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(trim(item), "--N"));
  if (out.empty()) throw UsageError("--N: empty list");
  for (int N : out) {
    if (N < 2) throw UsageError("--N entries must be >= 2");
  }
  return out;
}

int cmd_sweep(const RunConfig& c) {
  std::ostringstream csv;
  if (!c.N.empty()) {
    const double p = require_p(c);
    if (!c.r) throw UsageError("an N-sweep needs --r");
    check_r(p, *c.r);
    const double b = resolve_b(c, p);
    require_params(p, b);
    const double qt = q_tilde(b, p);
    const std::vector<int> Ns = parse_order_list(c.N);
    RatioGrowth g;
    try {
      g = ratio_growth(p, *c.r, qt, b, Ns);
    } catch (const std::domain_error& e) {
      throw UsageError(e.what());
    }
    write_ratio_csv(csv, g);
    std::cerr << "b = " << format_double(b) << ", q_tilde = " << format_double(qt) << ", ratio slope = "
              << format_double(g.slope) << ", flux slope = " << format_double(g.flux_slope)
              << ", q_tilde - r = " << format_double(qt - *c.r) << '\n';
  } else {
    if (c.p_list.empty()) throw UsageError("sweep needs --N (with --p, --r) or a --p list");
    std::vector<ThresholdRow> rows;
    for (double p : parse_double_list(c.p_list, "--p")) {
      if (!(p > 1.0)) throw UsageError("p must satisfy p > 1");
      const Threshold th = q1_threshold(p);
      rows.push_back({p, th.q1, th.b_star, lower_exponent(p)});
    }
    write_threshold_csv(csv, rows);
  }
  if (c.csv.empty())
    std::cout << csv.str();
  else
    write_file(c.csv, csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Laminate construction, realization and certificates for the reverse p-Laplacian estimate"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) { s->add_option("--config", cfg.config, "key=value file; flags override it"); };
  auto p_opt = [&](CLI::App* s) { s->add_option("--p", cfg.p, "exponent p > 1"); };
  auto b_opt = [&](CLI::App* s) { s->add_option("--b", cfg.b, "laminate parameter, or auto"); };
  auto r_opt = [&](CLI::App* s) { s->add_option("--r", cfg.r, "integrability exponent"); };
  auto mesh_opts = [&](CLI::App* s) {
    s->add_option("--delta", cfg.delta, "tagging radius, or auto (min support distance / 4)");
    s->add_option("--eta", cfg.eta, "transition area budget");
    s->add_option("--stripes", cfg.stripes, "sawtooth periods of the first splitting");
    s->add_option("--domain", cfg.domain, "square or disk64");
    s->add_option("--seed", cfg.seed, "seed of the random test functions");
  };

  auto* threshold = app.add_subcommand("threshold", "q1(p) and the optimal b");
  p_opt(threshold);
  threshold->add_option("--csv", cfg.csv, "CSV output");
  common(threshold);

  auto* laminate = app.add_subcommand("laminate", "build the laminate of order N and check its invariants");
  p_opt(laminate);
  b_opt(laminate);
  r_opt(laminate);
  laminate->add_option("--N", cfg.N, "order");
  laminate->add_option("--out", cfg.out, "laminate JSON");
  common(laminate);

  auto* build = app.add_subcommand("build", "realize the laminate as a piecewise affine map");
  p_opt(build);
  b_opt(build);
  build->add_option("--N", cfg.N, "order");
  mesh_opts(build);
  build->add_option("--out", cfg.out, "mesh JSON");
  build->add_option("--svg", cfg.svg, "mesh SVG");
  common(build);

  auto* certify = app.add_subcommand("certify", "oracle and mesh certificate for ratio >= Lambda");
  p_opt(certify);
  r_opt(certify);
  b_opt(certify);
  certify->add_option("--lambda", cfg.Lambda, "ratio to reach");
  certify->add_option("--N", cfg.N, "largest order to realize");
  mesh_opts(certify);
  certify->add_option("--out", cfg.out, "certificate JSON; the summary goes next to it as .txt");
  common(certify);

  auto* sweep = app.add_subcommand("sweep", "CSV over N (ratio growth) or over p (thresholds)");
  sweep->add_option("--p", cfg.p_list, "p, or a comma list for a threshold table");
  b_opt(sweep);
  r_opt(sweep);
  sweep->add_option("--N", cfg.N, "comma list or lo:hi:count (log-spaced)");
  sweep->add_option("--csv", cfg.csv, "CSV output (stdout if absent)");
  common(sweep);

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*threshold) return cmd_threshold(cfg);
    if (*laminate) return cmd_laminate(cfg);
    if (*build) return cmd_build(cfg);
    if (*certify) return cmd_certify(cfg);
    if (*sweep) {
      if (cfg.p_list.find(',') == std::string::npos && !cfg.p_list.empty()) {
        cfg.p = parse_double(cfg.p_list, "--p");
      }
      return cmd_sweep(cfg);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kUsage;
}
