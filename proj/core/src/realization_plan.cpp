#include "realization_plan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "realization_split.hpp"

namespace lamcert::detail {

std::vector<Round> group_rounds(const SplitTree& tree) {
  std::vector<Round> rounds;
  const auto& steps = tree.steps;
  std::size_t k = 0;
  while (k < steps.size()) {
    Round r;
    r.steps.push_back(k);
    const AtomLabel& p = steps[k].parent_label;
    if (k + 1 < steps.size() && steps[k + 1].parent_label == p.negated() &&
        !(p.kind == AtomKind::A && p.index == 0)) {
      r.steps.push_back(k + 1);
    }
    k += r.steps.size();
    rounds.push_back(r);
  }
  return rounds;
}

namespace {

struct ClassModel {
  double count = 0.0;
  double d[2] = {0.0, 0.0};
  double area = 0.0;  // fraction of the domain
  int prev_axis = -1;
};

struct Outcome {
  double transition = 0.0;
  double cells = 0.0;
};

int axis_of(const Vec2& n) { return std::abs(n.x) >= std::abs(n.y) ? 0 : 1; }

void merge(std::map<AtomLabel, ClassModel>& classes, const AtomLabel& label, const ClassModel& c) {
  auto it = classes.find(label);
  if (it == classes.end()) {
    classes.emplace(label, c);
    return;
  }
  ClassModel& m = it->second;
  const double total = m.count + c.count;
  for (int i = 0; i < 2; ++i) m.d[i] = (m.d[i] * m.count + c.d[i] * c.count) / total;
  m.count = total;
  m.area += c.area;
}

Outcome evaluate(const SplitTree& tree, const std::vector<Round>& rounds, const Box& box,
                 int stripes, double K, const std::vector<double>& f) {
  std::map<AtomLabel, ClassModel> classes;
  ClassModel root;
  root.count = 1.0;
  root.d[0] = box.hi.x - box.lo.x;
  root.d[1] = box.hi.y - box.lo.y;
  root.area = 1.0;
  classes.emplace(tree.root_label, root);

  Outcome out;
  out.cells = 1.0;
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    const Round& round = rounds[r];
    for (std::size_t s : round.steps) {
      const SplitStep& step = tree.steps[s];
      auto it = classes.find(step.parent_label);
      if (it == classes.end()) continue;
      const ClassModel x = it->second;
      classes.erase(it);
      const int k = axis_of(step.direction.n);
      const double dn = x.d[k];
      const double dt = x.d[1 - k];
      const double lam = step.lambda;
      const double lf = std::max(lam * (1.0 - lam), 1e-300);

      const bool anchored = r == 0 || x.prev_axis == k;
      const double pf = anchored ? 2.0 * dn : 2.0 * (dn + dt);
      const double acell = std::max(dn * dt, 1e-300);
      double eps = r == 0 ? dn / stripes : 2.0 * K * f[r] * acell / (lf * pf);
      const double m = std::max(1.0, std::ceil(dn / eps));
      eps = dn / m;
      const double frac = std::min(1.0, lf * eps * pf / (2.0 * K * acell));
      const double pieces = x.count * m * (anchored ? 6.0 : 6.0 + 2.0 / m);
      out.transition += x.area * frac;
      out.cells += pieces - x.count;

      ClassModel cb;
      cb.count = x.count * m;
      cb.d[k] = lam * eps;
      cb.d[1 - k] = dt;
      cb.area = x.area * lam * (1.0 - frac);
      cb.prev_axis = k;
      ClassModel cc = cb;
      cc.d[k] = (1.0 - lam) * eps;
      cc.area = x.area * (1.0 - lam) * (1.0 - frac);
      merge(classes, step.childB_label, cb);
      merge(classes, step.childC_label, cc);
    }
  }
  return out;
}

// Uniform double in [0, 1) from the raw 64-bit stream, so the plan does not
// depend on the standard library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& rng) {
  const double u1 = std::max(unit(rng), 1e-300);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

Plan plan_rounds(const SplitTree& tree, const std::vector<Round>& rounds, const Box& domain_box,
                 int stripes, double K, double target) {
  const std::size_t nr = rounds.size();
  const double lo = std::log(1e-5);
  const double hi = std::log(0.5);
  std::mt19937_64 rng(0x6c616d63657274ULL);

  auto score = [&](const std::vector<double>& logf, Outcome& o) {
    std::vector<double> f(nr);
    for (std::size_t r = 0; r < nr; ++r) f[r] = std::exp(logf[r]);
    o = evaluate(tree, rounds, domain_box, stripes, K, f);
    return o.transition <= target ? o.cells : std::numeric_limits<double>::infinity();
  };

  std::vector<double> best(nr, std::log(0.01));
  Outcome best_out;
  double best_score = score(best, best_out);
  std::vector<double> least = best;  // smallest transition seen, for infeasible targets
  Outcome least_out = best_out;

  std::vector<double> cand(nr);
  Outcome o;
  for (int t = 0; t < 1500; ++t) {
    for (std::size_t r = 0; r < nr; ++r) cand[r] = lo + (hi - lo) * unit(rng);
    const double s = score(cand, o);
    if (s < best_score) {
      best_score = s;
      best = cand;
      best_out = o;
    }
    if (o.transition < least_out.transition) {
      least = cand;
      least_out = o;
    }
  }
  double step = 0.5;
  for (int t = 0; t < 4000; ++t) {
    if (t % 1000 == 999) step *= 0.5;
    const std::vector<double>& base = std::isfinite(best_score) ? best : least;
    for (std::size_t r = 0; r < nr; ++r) cand[r] = std::clamp(base[r] + step * normal(rng), lo, hi);
    const double s = score(cand, o);
    if (s < best_score) {
      best_score = s;
      best = cand;
      best_out = o;
    }
    if (o.transition < least_out.transition) {
      least = cand;
      least_out = o;
    }
  }

  Plan plan;
  plan.feasible = std::isfinite(best_score);
  const std::vector<double>& chosen = plan.feasible ? best : least;
  const Outcome& chosen_out = plan.feasible ? best_out : least_out;
  plan.fractions.resize(nr);
  for (std::size_t r = 0; r < nr; ++r) plan.fractions[r] = std::exp(chosen[r]);
  plan.transition = chosen_out.transition;
  plan.cells = chosen_out.cells;
  return plan;
}

}  // namespace lamcert::detail
