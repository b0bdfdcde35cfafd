// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lamcert/flux.hpp"
#include "lamcert/io.hpp"
#include "lamcert/laminate.hpp"
#include "lamcert/realization.hpp"
#include "lamcert/threshold.hpp"
#include "lamcert/verification.hpp"

using namespace lamcert;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [" << what << "]";
    }
  }
};

std::string g(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

double q_bar_mid(double p) { return 0.5 * (lower_exponent(p) + q1_threshold(p).q1); }

// ---------------------------------------------------------------------------

void c1_splitting_algebra(Outcome& o) {
  double worst_sum = 0.0, worst_id = 0.0;
  for (double p : {1.5, 2.5, 3.0, 4.0}) {
    const double b = choose_b(p, q_bar_mid(p));
    for (int i = 1; i <= 10000; ++i) {
      const SplitCoefficients s = split_coefficients(i, p, b);
      worst_sum = std::max(worst_sum, std::abs(s.alpha + s.beta + s.gamma - 1.0));
      const Mat2 A = matrix_family({AtomKind::A, i, Sign::Plus}, p, b);
      const Mat2 mix = matrix_family({AtomKind::B, i + 1, Sign::Plus}, p, b) * s.alpha +
                       matrix_family({AtomKind::C, i + 1, Sign::Plus}, p, b) * s.beta +
                       matrix_family({AtomKind::A, i + 1, Sign::Plus}, p, b) * s.gamma;
      // Entries grow like i^(p-1); compare relative to the largest.
      const double scale = std::max(1.0, max_abs_entry(matrix_family({AtomKind::A, i + 1, Sign::Plus}, p, b)));
      worst_id = std::max(worst_id, max_abs_entry(mix - A) / scale);
    }
  }
  o.detail << "max|a+b+g-1| = " << g(worst_sum) << ", max identity error = " << g(worst_id);
  o.require(worst_sum <= 1e-12, "weight sum");
  o.require(worst_id <= 1e-10, "matrix identity");
}

void c2_laminate_invariants(Outcome& o) {
  double worst_w = 0.0, worst_bary = 0.0;
  bool counts = true, tree = true;
  for (double p : {1.5, 3.0, 4.0}) {
    const double b = choose_b(p, q_bar_mid(p));
    for (int N : {2, 10, 100, 1000, 10000}) {
      const LaminateBuild lb = build_laminate(N, p, b);
      worst_w = std::max(worst_w, std::abs(lb.laminate.total_weight() - 1.0));
      worst_bary = std::max(worst_bary, max_abs_entry(lb.laminate.barycenter()));
      counts &= lb.laminate.atoms.size() == static_cast<std::size_t>(4 * (N - 1) + 2);
      const ValidationReport r = validate_split_tree(lb.tree, lb.laminate);
      tree &= r.ok();
    }
  }
  o.detail << "max|sum w - 1| = " << g(worst_w) << ", max|barycenter| = " << g(worst_bary)
           << ", atom counts " << (counts ? "ok" : "wrong") << ", split trees " << (tree ? "rank-one" : "FAILED");
  o.require(worst_w <= 1e-12, "weights");
  o.require(worst_bary <= 1e-12, "barycenter");
  o.require(counts, "atom count");
  o.require(tree, "split tree");
}

void c3_threshold(Outcome& o) {
  const double q2 = q1_threshold(2.0).q1;
  o.detail << "q1(2) = " << g(q2);
  o.require(std::abs(q2 - 1.0) <= 1e-6, "q1(2)");
  for (double p : {2.5, 3.0, 4.0}) {
    const double q = q1_threshold(p).q1;
    o.detail << ", q1(" << p << ") - (p-1) = " << g(q - (p - 1));
    o.require(q >= p - 1 + 0.05, "margin at p = " + g(p));
  }
  for (double p : {1.2, 1.5}) {
    const double q = q1_threshold(p).q1;
    o.detail << ", q1(" << p << ") - 1 = " << g(q - 1);
    o.require(q >= 1.02, "margin at p = " + g(p));
  }
}

void c4_decay(Outcome& o) {
  const std::vector<int> Ns = log_spaced(1000, 10000, 20);
  bool first = true;
  for (double p : {3.0, 4.0, 1.5}) {
    const double b = q1_threshold(p).b_star;
    std::vector<double> x, y;
    for (int N : Ns) {
      x.push_back(std::log(static_cast<double>(N)));
      y.push_back(log_gamma_tail(N, p, b));
    }
    const double slope = least_squares_slope(x, y);
    const double qt = q_tilde(b, p);
    o.detail << (first ? "" : ", ") << "p=" << p << " b=" << g(b) << ": slope " << g(slope) << " vs -q~ "
             << g(-qt);
    first = false;
    o.require(std::abs(slope + qt) <= 0.05, "slope at p = " + g(p));
  }
}

void c5_kernel(Outcome& o) {
  long nonzero = 0, checked = 0;
  for (double p : {1.5, 3.0, 4.0}) {
    const double b = q1_threshold(p).b_star;
    for (int i = 1; i <= 1000; ++i) {
      for (AtomKind k : {AtomKind::B, AtomKind::C}) {
        if (k == AtomKind::B && i < 2) continue;
        for (Sign s : {Sign::Plus, Sign::Minus}) {
          const Vec2 f = residual_field(matrix_family({k, i, s}, p, b), p);
          ++checked;
          if (f.x != 0.0 || f.y != 0.0) ++nonzero;
        }
      }
    }
  }
  o.detail << checked << " atoms, " << nonzero << " non-zero residuals";
  o.require(nonzero == 0, "residual");
}

// Criteria 6, 8 and 10 share the realized maps.
struct Realized {
  int N = 0;
  LaminateBuild lb;
  double delta = 0.0;
  PWAffineMap map;
};

constexpr double kP = 4.0;
constexpr double kR = 3.05;

Realized realize(int N) {
  Realized out;
  out.N = N;
  const double b = choose_b(kP, kR);
  out.lb = build_laminate(N, kP, b);
  out.delta = min_support_distance(out.lb.laminate) / 4.0;
  out.map = realize_laminate(unit_square(), DomainKind::Square, out.lb.tree, out.lb.laminate, out.delta, 0.05, 32);
  return out;
}

struct Digests {
  std::map<std::string, std::uint64_t> d;
  bool operator==(const Digests&) const = default;
};

void digest_map(Digests& dg, const Realized& r) {
  HashStream js;
  write_map_json(js.stream(), r.map);
  dg.d["mesh" + std::to_string(r.N) + ".json"] = js.digest();
  HashStream svg;
  write_map_svg(svg.stream(), r.map, r.lb.laminate);
  dg.d["mesh" + std::to_string(r.N) + ".svg"] = svg.digest();
}

void c6_oracle_equivalence(Outcome& o, std::vector<Realized>& maps) {
  for (int N : {2, 3, 4}) {
    Realized r = realize(N);
    const MapReport mr = validate_map(r.map, &r.lb.laminate);
    const MeshAgreement ag = compare_with_laminate(r.map, r.lb.laminate, kR, r.delta);
    o.detail << (N == 2 ? "" : "; ") << "N=" << N << " cells=" << r.map.cells.size()
             << " trans=" << g(mr.transition_fraction) << " grad " << g(ag.grad_discrepancy) << "/"
             << g(ag.grad_bound) << " flux " << g(ag.flux_discrepancy) << "/" << g(ag.flux_bound)
             << " hist " << g(ag.histogram_deviation);
    const std::string n = " N=" + std::to_string(N);
    o.require(mr.ok(), "map invalid" + n);
    o.require(ag.grad_discrepancy <= ag.grad_bound, "grad above bound" + n);
    o.require(ag.flux_discrepancy <= ag.flux_bound, "flux above bound" + n);
    o.require(ag.grad_discrepancy <= 0.05, "grad > 5%" + n);
    o.require(ag.flux_discrepancy <= 0.05, "flux > 5%" + n);
    o.require(ag.histogram_deviation <= 0.05, "histogram" + n);
    maps.push_back(std::move(r));
  }
}

struct Growth {
  RatioGrowth growth;
  CertificateReport report;
};

void c7_ratio_growth(Outcome& o, Growth& out) {
  const double b = choose_b(kP, kR);
  const double qt = q_tilde(b, kP);
  const RatioGrowth growth = ratio_growth(kP, kR, qt, b, log_spaced(1000, 100000, 20));
  o.detail << "b=" << g(b) << " slope " << g(growth.slope) << " vs q~-r " << g(qt - kR);
  o.require(std::abs(growth.slope - (qt - kR)) <= 0.05, "slope");
  const CertificateReport rep = certificate(kP, kR, 2.0);
  o.detail << "; certificate N=" << (rep.oracle_N ? std::to_string(*rep.oracle_N) : "none") << " ratio "
           << g(rep.oracle_ratio) << " verdicts " << rep.verdict_oracle << rep.verdict_agreement
           << rep.verdict_structure;
  o.require(rep.passed(), "certificate");
  o.require(rep.oracle_N.has_value(), "no N reported");
  out = {growth, rep};
}

Digests digest_all(const std::vector<Realized>& maps, const Growth& gr) {
  Digests dg;
  for (const Realized& r : maps) digest_map(dg, r);
  HashStream csv;
  write_ratio_csv(csv.stream(), gr.growth);
  dg.d["ratio.csv"] = csv.digest();
  HashStream js;
  write_certificate_json(js.stream(), gr.report);
  dg.d["certificate.json"] = js.digest();
  return dg;
}

void c8_distributional(Outcome& o, const std::vector<Realized>& maps) {
  for (const Realized& r : maps) {
    const auto tests = default_test_functions(r.map);
    const double scale = residual_scale(r.map);
    const double res = weak_divergence_residual(r.map, tests);
    // Continuity fault: shift grad v on the right half so v jumps across x = 1/2.
    PWAffineMap bad = r.map;
    for (auto& c : bad.cells) {
      if (centroid(c.region).x > 0.5) c.gradient.m22 += 0.05 * bad.lipschitz_bound;
    }
    const double res_bad = weak_divergence_residual(bad, tests);
    o.detail << (r.N == 2 ? "" : "; ") << "N=" << r.N << " residual/scale " << g(res / scale) << ", faulted "
             << g(res_bad / scale);
    const std::string n = " N=" + std::to_string(r.N);
    o.require(res <= 1e-6 * scale, "residual" + n);
    o.require(res_bad > 1e-3 * scale, "fault undetected" + n);
  }
}

struct Run {
  int status = -1;
  std::string output;
};

Run run(const std::string& cmd) {
  Run r;
  FILE* f = popen((cmd + " 2>&1").c_str(), "r");
  if (!f) return r;
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), buf.size(), f)) r.output += buf.data();
  const int st = pclose(f);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

void c9_guard_rails(Outcome& o, const std::string& cli) {
  const double q1 = q1_threshold(kP).q1;
  std::vector<std::pair<double, double>> cases{{2.0, 1.5}, {kP, q1}, {kP, 3.2}, {kP, 5.0}, {3.0, 2.1}};
  for (const auto& [p, r] : cases) {
    const Run res = run(cli + " certify --p " + format_double(p) + " --r " + format_double(r));
    const bool quoted = res.output.find("admissible range") != std::string::npos;
    o.detail << "(p=" << p << ", r=" << g(r) << ") exit " << res.status << (quoted ? " quoted; " : " unquoted; ");
    o.require(res.status == 2 && quoted, "p=" + g(p) + " r=" + g(r));
  }
}

// Digests the first run's outputs, then repeats criteria 6 and 7 from scratch.
void c10_determinism(Outcome& o, const std::vector<Realized>& maps1, const Growth& growth1) {
  const Digests first = digest_all(maps1, growth1);
  Outcome scratch;
  std::vector<Realized> maps2;
  c6_oracle_equivalence(scratch, maps2);
  Growth growth2;
  c7_ratio_growth(scratch, growth2);
  const Digests second = digest_all(maps2, growth2);
  std::size_t same = 0;
  for (const auto& [name, h] : first.d) {
    auto it = second.d.find(name);
    if (it != second.d.end() && it->second == h) ++same;
  }
  o.detail << same << "/" << first.d.size() << " outputs byte-identical across two runs";
  o.require(first == second && !first.d.empty(), "digests differ");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli = "lamcert";
  app.add_option("--cli", cli, "path to the lamcert executable");
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto criterion = [&](int id, double limit_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0) o.require(secs < limit_s, "runtime " + g(secs) + " s >= " + g(limit_s) + " s");
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << g(secs) << " s) "
              << o.detail.str() << std::endl;
    failures += !o.pass;
  };

  std::vector<Realized> maps;
  Growth growth;
  criterion(1, 5, c1_splitting_algebra);
  criterion(2, 5, c2_laminate_invariants);
  criterion(3, 2, c3_threshold);
  criterion(4, 5, c4_decay);
  criterion(5, 1, c5_kernel);
  criterion(6, 60, [&](Outcome& o) { c6_oracle_equivalence(o, maps); });
  criterion(7, 10, [&](Outcome& o) { c7_ratio_growth(o, growth); });
  criterion(8, 30, [&](Outcome& o) { c8_distributional(o, maps); });
  criterion(9, 1, [&](Outcome& o) { c9_guard_rails(o, cli); });
  criterion(10, 0, [&](Outcome& o) { c10_determinism(o, maps, growth); });

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
