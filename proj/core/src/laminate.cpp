#include "lamcert/laminate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lamcert {

namespace {

constexpr double kStructuralTol = 1e-10;
constexpr double kArithmeticTol = 1e-12;

double scale_of(const Mat2& a, const Mat2& b, const Mat2& c) {
  return std::max({1.0, max_abs_entry(a), max_abs_entry(b), max_abs_entry(c)});
}

}  // namespace

char kind_char(AtomKind kind) {
  switch (kind) {
    case AtomKind::A: return 'A';
    case AtomKind::B: return 'B';
    case AtomKind::C: return 'C';
    case AtomKind::D: return 'D';
    case AtomKind::E: return 'E';
  }
  return '?';
}

AtomKind kind_from_char(char c) {
  switch (c) {
    case 'A': return AtomKind::A;
    case 'B': return AtomKind::B;
    case 'C': return AtomKind::C;
    case 'D': return AtomKind::D;
    case 'E': return AtomKind::E;
    default: throw std::invalid_argument(std::string("unknown atom kind '") + c + "'");
  }
}

std::string AtomLabel::str() const {
  std::string s;
  s += sign == Sign::Plus ? '+' : '-';
  s += kind_char(kind);
  s += std::to_string(index);
  return s;
}

AtomLabel AtomLabel::parse(const std::string& text) {
  if (text.size() < 3 || (text[0] != '+' && text[0] != '-')) {
    throw std::invalid_argument("malformed atom label '" + text + "'");
  }
  AtomLabel label;
  label.sign = text[0] == '+' ? Sign::Plus : Sign::Minus;
  label.kind = kind_from_char(text[1]);
  std::size_t used = 0;
  label.index = std::stoi(text.substr(2), &used);
  if (used != text.size() - 2 || label.index < 0) {
    throw std::invalid_argument("malformed atom label '" + text + "'");
  }
  return label;
}

void require_params(double p, double b) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw std::domain_error("exponent p must satisfy p > 1");
  }
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw std::domain_error("parameter b must satisfy b > 0");
  }
  if (b == 1.0) {
    throw std::domain_error("parameter b must differ from 1 (support matrices collide)");
  }
}

Mat2 matrix_family(const AtomLabel& label, double p, double b) {
  require_params(p, b);
  const int i = label.index;
  const double q = p - 1.0;
  Mat2 m;
  switch (label.kind) {
    case AtomKind::A:
      if (i < 0) throw std::domain_error("A_i requires i >= 0");
      m = Mat2::diag(b * i, std::pow(static_cast<double>(i), q));
      break;
    case AtomKind::B: {
      if (i < 1) throw std::domain_error("B_i requires i >= 1");
      const double u = b * (i - 1);
      m = Mat2::diag(u, -std::pow(u, q));
      break;
    }
    case AtomKind::C:
      if (i < 1) throw std::domain_error("C_i requires i >= 1");
      m = Mat2::diag(-static_cast<double>(i), std::pow(static_cast<double>(i), q));
      break;
    case AtomKind::D:
      if (i < 1) throw std::domain_error("D_i requires i >= 1");
      m = Mat2::diag(b * i, std::pow(static_cast<double>(i + 1), q));
      break;
    case AtomKind::E:
      if (i != 0) throw std::domain_error("E carries index 0");
      m = Mat2::diag(b, 0.0);
      break;
  }
  // A_0 is the zero matrix for either sign, keep it +0.
  if (label.sign == Sign::Minus && !(label.kind == AtomKind::A && i == 0)) {
    m = -m;
  }
  return m;
}

SplitCoefficients split_coefficients(int i, double p, double b) {
  require_params(p, b);
  if (i < 1) {
    throw std::domain_error("split_coefficients requires i >= 1; the root uses initial_split");
  }
  const double q = p - 1.0;
  const double bq = std::pow(b, q);
  // (1 + 1/i)^(p-1) - 1 without cancellation.
  const double c = q * std::log1p(1.0 / i);
  const double grow = std::expm1(c);
  const double denom = grow + 1.0 + bq;
  SplitCoefficients s;
  s.alpha = grow / denom;
  const double keep = (1.0 + bq) / denom;  // 1 - alpha
  s.beta = keep * second_split_weight(i, b);
  s.gamma = 1.0 - s.alpha - s.beta;
  return s;
}

double second_split_weight(int i, double b) {
  return b / ((b + 1.0) * (i + 1.0));
}

double log_gamma_factor(int i, double p, double b) {
  const double q = p - 1.0;
  const double bq = std::pow(b, q);
  const double grow = std::expm1(q * std::log1p(1.0 / i));
  return -std::log1p(grow / (1.0 + bq)) + std::log1p(-second_split_weight(i, b));
}

double initial_split_weight(double p, double b) {
  require_params(p, b);
  return 1.0 / (1.0 + std::pow(b, p - 1.0));
}

std::vector<WeightedLabel> initial_split(double p, double b) {
  const double mu = initial_split_weight(p, b);
  const double wb = 0.5 * mu;
  const double wa = 0.5 * (1.0 - mu);
  return {
      {wb, {AtomKind::B, 2, Sign::Plus}},
      {wb, {AtomKind::B, 2, Sign::Minus}},
      {wa, {AtomKind::A, 1, Sign::Plus}},
      {wa, {AtomKind::A, 1, Sign::Minus}},
  };
}

namespace {

// log of the weight b^q / (2 (1 + b^q)) reaching each of +-A1.
double log_a1_weight(double p, double b) {
  return -std::log(2.0) - std::log1p(std::exp(-(p - 1.0) * std::log(b)));
}

}  // namespace

double Laminate::total_weight() const {
  // Compensated sum; the tail weights span many orders of magnitude.
  double sum = 0.0;
  double comp = 0.0;
  for (const auto& atom : atoms) {
    const double y = atom.weight - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

Mat2 Laminate::barycenter() const {
  Mat2 acc;
  for (const auto& atom : atoms) acc += atom.matrix * atom.weight;
  return acc;
}

const Atom* Laminate::find(const AtomLabel& label) const {
  for (const auto& atom : atoms) {
    if (atom.label == label) return &atom;
  }
  return nullptr;
}

std::optional<RankOneDirection> rank_one_connection(const Mat2& M1, const Mat2& M2) {
  const Mat2 d = M1 - M2;
  const double f = frobenius(d);
  if (!(f > 1e-12)) return std::nullopt;
  if (std::abs(d.det()) > kStructuralTol * f * f) return std::nullopt;
  const Vec2 r1 = d.row1();
  const Vec2 r2 = d.row2();
  Vec2 n = norm(r1) >= norm(r2) ? r1 : r2;
  n = n * (1.0 / norm(n));
  const double tiny = 1e-14;
  if (n.x < -tiny || (std::abs(n.x) <= tiny && n.y < 0.0)) n = -n;
  if (std::abs(n.x) <= tiny) n.x = 0.0;
  if (std::abs(n.y) <= tiny) n.y = 0.0;
  return RankOneDirection{d * n, n};
}

namespace {

SplitStep make_step(const AtomLabel& parent, double lambda, const AtomLabel& b_label,
                    const AtomLabel& c_label, double p, double b) {
  SplitStep step;
  step.parent_label = parent;
  step.childB_label = b_label;
  step.childC_label = c_label;
  step.parent = matrix_family(parent, p, b);
  step.childB = matrix_family(b_label, p, b);
  step.childC = matrix_family(c_label, p, b);
  step.lambda = lambda;
  auto dir = rank_one_connection(step.childB, step.childC);
  if (!dir) throw std::logic_error("splitting " + parent.str() + " is not rank-one");
  step.direction = *dir;
  return step;
}

}  // namespace

LaminateBuild build_laminate(int N, double p, double b) {
  require_params(p, b);
  if (N < 2) throw std::domain_error("laminate order N must satisfy N >= 2");

  LaminateBuild out;
  Laminate& lam = out.laminate;
  lam.p = p;
  lam.b = b;
  lam.order = N;
  lam.atoms.reserve(4 * static_cast<std::size_t>(N - 1) + 2);

  SplitTree& tree = out.tree;
  tree.root = Mat2{};
  tree.steps.reserve(3 + 4 * static_cast<std::size_t>(N - 1));

  const AtomLabel root{AtomKind::A, 0, Sign::Plus};
  const AtomLabel e_plus{AtomKind::E, 0, Sign::Plus};
  const double mu = initial_split_weight(p, b);
  tree.steps.push_back(make_step(root, 0.5, e_plus, e_plus.negated(), p, b));
  for (Sign s : {Sign::Plus, Sign::Minus}) {
    tree.steps.push_back(make_step({AtomKind::E, 0, s}, mu, {AtomKind::B, 2, s},
                                   {AtomKind::A, 1, s}, p, b));
  }

  // Cumulative weight carried by each of +-A_{i} (Gamma bar), starting at A_1.
  // Replay arithmetic: 0.5 * (1 - mu).
  double gamma_bar = 0.5 * (1.0 - mu);
  double log_gamma_bar = log_a1_weight(p, b);
  for (int i = 1; i < N; ++i) {
    const SplitCoefficients c = split_coefficients(i, p, b);
    const double beta_prime = second_split_weight(i, b);
    const int j = i + 1;
    // Same arithmetic as replaying the two splittings, so a replay of the tree
    // reproduces these weights bit for bit.
    double a_weight = gamma_bar * c.alpha;
    if (j == 2) a_weight += 0.5 * mu;  // B_2 also receives mass from the root splitting
    const double d_weight = gamma_bar * (1.0 - c.alpha);
    const double b_weight = d_weight * beta_prime;
    const double log_a = j == 2 ? std::log(a_weight) : log_gamma_bar + std::log(c.alpha);
    const double log_b = log_gamma_bar + std::log(c.beta);
    const double log_next = log_gamma_bar + log_gamma_factor(i, p, b);

    for (Sign s : {Sign::Plus, Sign::Minus}) {
      const AtomLabel bl{AtomKind::B, j, s};
      lam.atoms.push_back({a_weight, log_a, matrix_family(bl, p, b), bl});
    }
    for (Sign s : {Sign::Plus, Sign::Minus}) {
      const AtomLabel cl{AtomKind::C, j, s};
      lam.atoms.push_back({b_weight, log_b, matrix_family(cl, p, b), cl});
    }
    for (Sign s : {Sign::Plus, Sign::Minus}) {
      tree.steps.push_back(make_step({AtomKind::A, i, s}, c.alpha, {AtomKind::B, j, s},
                                     {AtomKind::D, i, s}, p, b));
    }
    for (Sign s : {Sign::Plus, Sign::Minus}) {
      tree.steps.push_back(make_step({AtomKind::D, i, s}, beta_prime, {AtomKind::C, j, s},
                                     {AtomKind::A, j, s}, p, b));
    }
    gamma_bar = d_weight * (1.0 - beta_prime);
    log_gamma_bar = log_next;
  }
  for (Sign s : {Sign::Plus, Sign::Minus}) {
    const AtomLabel al{AtomKind::A, N, s};
    lam.atoms.push_back({gamma_bar, log_gamma_bar, matrix_family(al, p, b), al});
  }
  return out;
}

double log_gamma_tail(int N, double p, double b) {
  require_params(p, b);
  if (N < 2) throw std::domain_error("gamma_tail requires N >= 2");
  double acc = log_a1_weight(p, b);
  for (int i = 1; i < N; ++i) acc += log_gamma_factor(i, p, b);
  return acc;
}

double gamma_tail(int N, double p, double b) { return std::exp(log_gamma_tail(N, p, b)); }

double min_support_distance(const Laminate& lam) {
  std::vector<Mat2> pts;
  pts.reserve(lam.atoms.size());
  for (const auto& a : lam.atoms) pts.push_back(a.matrix);
  if (pts.size() < 2) return 0.0;
  std::sort(pts.begin(), pts.end(), [](const Mat2& l, const Mat2& r) { return l.m11 < r.m11; });
  // Sweep along m11; any closer pair must lie within `best` in that coordinate.
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (pts[j].m11 - pts[i].m11 >= best) break;
      best = std::min(best, frobenius(pts[j] - pts[i]));
    }
  }
  return best;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Convexity: return "convexity";
    case ViolationKind::RankOne: return "rank-one";
    case ViolationKind::Direction: return "direction";
    case ViolationKind::LambdaRange: return "lambda-range";
    case ViolationKind::Replay: return "replay";
    case ViolationKind::Weight: return "weight";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate_split_tree(const SplitTree& tree, const Laminate& lam) {
  ValidationReport report;
  auto flag = [&](ViolationKind kind, long index, const std::string& msg) {
    report.violations.push_back({kind, index, msg});
  };

  std::map<AtomLabel, double> measure{{tree.root_label, 1.0}};
  for (std::size_t k = 0; k < tree.steps.size(); ++k) {
    const SplitStep& s = tree.steps[k];
    const long idx = static_cast<long>(k);
    const double scale = scale_of(s.parent, s.childB, s.childC);

    ++report.checks;
    if (!(s.lambda >= 0.0 && s.lambda <= 1.0)) {
      flag(ViolationKind::LambdaRange, idx, "lambda outside [0,1]");
    }
    ++report.checks;
    const Mat2 mix = s.childB * s.lambda + s.childC * (1.0 - s.lambda);
    const double conv_err = max_abs_entry(mix - s.parent);
    if (conv_err > kStructuralTol * scale) {
      std::ostringstream os;
      os << "parent differs from lambda*B + (1-lambda)*C by " << conv_err;
      flag(ViolationKind::Convexity, idx, os.str());
    }
    ++report.checks;
    const Mat2 diff = s.childB - s.childC;
    const double f = frobenius(diff);
    if (!(f > 1e-12) || std::abs(diff.det()) > kStructuralTol * f * f) {
      std::ostringstream os;
      os << "B - C is not rank one (det " << diff.det() << ")";
      flag(ViolationKind::RankOne, idx, os.str());
    }
    ++report.checks;
    const double dir_err = max_abs_entry(Mat2::outer(s.direction.a, s.direction.n) - diff);
    if (dir_err > kStructuralTol * scale || std::abs(norm(s.direction.n) - 1.0) > kStructuralTol) {
      flag(ViolationKind::Direction, idx, "stored direction does not reproduce B - C");
    }

    ++report.checks;
    auto it = measure.find(s.parent_label);
    if (it == measure.end()) {
      flag(ViolationKind::Replay, idx, "parent " + s.parent_label.str() + " not in the measure");
      continue;
    }
    const double w = it->second;
    measure.erase(it);
    measure[s.childB_label] += w * s.lambda;
    measure[s.childC_label] += w * (1.0 - s.lambda);
  }

  ++report.checks;
  if (measure.size() != lam.atoms.size()) {
    flag(ViolationKind::Replay, -1,
         "replay yields " + std::to_string(measure.size()) + " atoms, laminate has " +
             std::to_string(lam.atoms.size()));
  }
  for (const auto& atom : lam.atoms) {
    ++report.checks;
    auto it = measure.find(atom.label);
    if (it == measure.end()) {
      flag(ViolationKind::Replay, -1, "atom " + atom.label.str() + " missing from replay");
      continue;
    }
    if (std::abs(it->second - atom.weight) > kArithmeticTol * std::max(atom.weight, 1e-300) &&
        std::abs(it->second - atom.weight) > 1e-300) {
      std::ostringstream os;
      os.precision(17);
      os << "atom " << atom.label.str() << " replay weight " << it->second << " vs "
         << atom.weight;
      flag(ViolationKind::Replay, -1, os.str());
    }
  }
  return report;
}

ValidationReport validate_laminate(const Laminate& lam) {
  ValidationReport report;
  auto flag = [&](ViolationKind kind, const std::string& msg) {
    report.violations.push_back({kind, -1, msg});
  };

  ++report.checks;
  const double total = lam.total_weight();
  if (std::abs(total - 1.0) > kArithmeticTol) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << total;
    flag(ViolationKind::Weight, os.str());
  }
  ++report.checks;
  const double bary = frobenius(lam.barycenter());
  if (bary > kArithmeticTol) {
    std::ostringstream os;
    os << "barycenter norm " << bary;
    flag(ViolationKind::Weight, os.str());
  }
  ++report.checks;
  const std::size_t expected = 4 * static_cast<std::size_t>(lam.order - 1) + 2;
  if (lam.atoms.size() != expected) {
    flag(ViolationKind::Weight, "atom count " + std::to_string(lam.atoms.size()) + " != " +
                                    std::to_string(expected));
  }
  std::vector<AtomLabel> labels;
  labels.reserve(lam.atoms.size());
  for (const auto& atom : lam.atoms) {
    ++report.checks;
    if (!(atom.weight > 0.0) && !std::isfinite(atom.log_weight)) {
      flag(ViolationKind::Weight, "atom " + atom.label.str() + " has non-positive weight");
    }
    if (!atom.matrix.finite() || !(atom.matrix == matrix_family(atom.label, lam.p, lam.b))) {
      flag(ViolationKind::Weight, "atom " + atom.label.str() + " matrix differs from closed form");
    }
    labels.push_back(atom.label);
  }
  std::sort(labels.begin(), labels.end());
  ++report.checks;
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    flag(ViolationKind::Weight, "duplicate atom labels");
  }
  ++report.checks;
  if (lam.atoms.size() >= 2 && !(min_support_distance(lam) > 0.0)) {
    flag(ViolationKind::Weight, "support matrices are not distinct");
  }
  return report;
}

}  // namespace lamcert
