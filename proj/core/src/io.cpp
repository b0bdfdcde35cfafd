#include "lamcert/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <streambuf>

#include "json.hpp"

namespace lamcert {

namespace {

using nlohmann::json;

json label_json(const AtomLabel& l) { return l.str(); }

json mat_json(const Mat2& m) { return json::array({m.m11, m.m12, m.m21, m.m22}); }

json vec_json(const Vec2& v) { return json::array({v.x, v.y}); }

// nlohmann writes non-finite numbers as null; keep that explicit for optional values.
json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json integrals_json(const Integrals& I) {
  return {{"grad", num_or_null(I.grad)}, {"flux", num_or_null(I.flux)}, {"ratio", num_or_null(I.ratio())}};
}

// Appends doubles without going through iostream formatting.
class NumberWriter {
 public:
  explicit NumberWriter(std::ostream& os) : os_(os) {}

  void shortest(double x) {
    if (!std::isfinite(x)) {
      os_ << "null";
      return;
    }
    auto [end, ec] = std::to_chars(buf_, buf_ + sizeof buf_, x);
    os_.write(buf_, end - buf_);
  }

  void fixed(double x, int digits) {
    if (x == 0.0) x = 0.0;  // no "-0.000"
    auto [end, ec] = std::to_chars(buf_, buf_ + sizeof buf_, x, std::chars_format::fixed, digits);
    // Trim trailing zeros so the output stays small.
    char* e = end;
    if (digits > 0) {
      while (e[-1] == '0') --e;
      if (e[-1] == '.') --e;
    }
    if (e - buf_ == 2 && buf_[0] == '-' && buf_[1] == '0') {
      os_ << '0';
      return;
    }
    os_.write(buf_, e - buf_);
  }

 private:
  std::ostream& os_;
  char buf_[64];
};

struct Hsl {
  double h, s, l;
};

Hsl atom_color(const AtomLabel& label) {
  // Golden-angle hue spacing keeps neighbouring indices apart.
  const double hue = std::fmod(label.index * 137.50776405, 360.0);
  double light = 50.0;
  switch (label.kind) {
    case AtomKind::A: light = 42.0; break;
    case AtomKind::B: light = 32.0; break;
    case AtomKind::C: light = 64.0; break;
    case AtomKind::D: light = 52.0; break;
    case AtomKind::E: light = 76.0; break;
  }
  const double sat = label.sign == Sign::Plus ? 85.0 : 35.0;
  return {hue, sat, light};
}

void write_hsl(std::ostream& os, NumberWriter& nw, const Hsl& c) {
  os << "hsl(";
  nw.fixed(c.h, 1);
  os << ',';
  nw.fixed(c.s, 0);
  os << "%,";
  nw.fixed(c.l, 0);
  os << "%)";
}

constexpr const char* kTransitionGray = "#9e9e9e";

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

void write_laminate_json(std::ostream& os, const LaminateBuild& build) {
  const Laminate& lam = build.laminate;
  json atoms = json::array();
  for (const Atom& a : lam.atoms) {
    atoms.push_back({{"kind", std::string(1, kind_char(a.label.kind))},
                     {"index", a.label.index},
                     {"sign", a.label.sign == Sign::Plus ? "+" : "-"},
                     {"weight", a.weight},
                     {"log_weight", a.log_weight},
                     {"matrix", mat_json(a.matrix)}});
  }
  json steps = json::array();
  for (const SplitStep& s : build.tree.steps) {
    steps.push_back({{"parent", label_json(s.parent_label)},
                     {"parent_matrix", mat_json(s.parent)},
                     {"lambda", s.lambda},
                     {"childB", label_json(s.childB_label)},
                     {"childB_matrix", mat_json(s.childB)},
                     {"childC", label_json(s.childC_label)},
                     {"childC_matrix", mat_json(s.childC)},
                     {"a", vec_json(s.direction.a)},
                     {"n", vec_json(s.direction.n)}});
  }
  json doc = {{"p", lam.p},
              {"b", lam.b},
              {"N", lam.order},
              {"gamma_bar", gamma_tail(lam.order, lam.p, lam.b)},
              {"log_gamma_bar", log_gamma_tail(lam.order, lam.p, lam.b)},
              {"root", label_json(build.tree.root_label)},
              {"atoms", std::move(atoms)},
              {"steps", std::move(steps)}};
  os << doc.dump(1) << '\n';
}

// Hand-streamed: meshes reach millions of cells and a DOM would double peak memory.
void write_map_json(std::ostream& os, const PWAffineMap& map) {
  NumberWriter nw(os);
  auto point = [&](const Vec2& v) {
    os << '[';
    nw.shortest(v.x);
    os << ',';
    nw.shortest(v.y);
    os << ']';
  };
  os << "{\"domain\":\"" << to_string(map.domain_kind) << "\",\"delta\":";
  nw.shortest(map.delta);
  os << ",\"eta\":";
  nw.shortest(map.eta);
  os << ",\"stripes\":" << map.stripes << ",\"lipschitz_bound\":";
  nw.shortest(map.lipschitz_bound);
  os << ",\"boundary\":[";
  for (std::size_t i = 0; i < map.domain.size(); ++i) {
    if (i) os << ',';
    point(map.domain[i]);
  }
  os << "],\n\"cells\":[";
  for (std::size_t c = 0; c < map.cells.size(); ++c) {
    const AffineCell& cell = map.cells[c];
    os << (c ? ",\n" : "\n") << "{\"vertices\":[";
    for (std::size_t i = 0; i < cell.region.size(); ++i) {
      if (i) os << ',';
      point(cell.region[i]);
    }
    os << "],\"gradient\":[";
    nw.shortest(cell.gradient.m11);
    os << ',';
    nw.shortest(cell.gradient.m12);
    os << ',';
    nw.shortest(cell.gradient.m21);
    os << ',';
    nw.shortest(cell.gradient.m22);
    os << "],\"offset\":";
    point(cell.offset);
    os << ",\"tag\":";
    if (cell.tag)
      os << '"' << cell.tag->str() << '"';
    else
      os << "null";
    os << '}';
  }
  os << "\n]}\n";
}

void write_map_svg(std::ostream& os, const PWAffineMap& map, const Laminate& lam, const SvgOptions& opts) {
  const Box box = bounding_box(map.domain);
  const double w = box.hi.x - box.lo.x;
  const double h = box.hi.y - box.lo.y;
  if (!(w > 0.0 && h > 0.0)) throw std::invalid_argument("write_map_svg: degenerate domain");
  const double scale = opts.width / w;
  const double plot_h = h * scale;

  const Histogram hist = gradient_histogram(map, lam, map.delta);
  const std::size_t max_legend = 32;
  const std::size_t legend_rows =
      opts.legend ? std::min(hist.labels.size(), max_legend) + 1 + (hist.labels.size() > max_legend) : 0;
  const double row_h = 16.0;
  const double legend_w = opts.legend ? 300.0 : 0.0;
  const double total_w = opts.width + legend_w;
  const double total_h = std::max(plot_h, legend_rows * row_h + 16.0);

  NumberWriter nw(os);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  nw.fixed(total_w, 0);
  os << "\" height=\"";
  nw.fixed(total_h, 0);
  os << "\" viewBox=\"0 0 ";
  nw.fixed(total_w, 3);
  os << ' ';
  nw.fixed(total_h, 3);
  os << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  os << "<g stroke=\"none\">\n";
  for (const AffineCell& cell : map.cells) {
    os << "<path d=\"";
    for (std::size_t i = 0; i < cell.region.size(); ++i) {
      os << (i ? 'L' : 'M');
      nw.fixed((cell.region[i].x - box.lo.x) * scale, 3);
      os << ' ';
      nw.fixed((box.hi.y - cell.region[i].y) * scale, 3);
    }
    os << "Z\" fill=\"";
    if (cell.tag)
      write_hsl(os, nw, atom_color(*cell.tag));
    else
      os << kTransitionGray;
    os << "\"/>\n";
  }
  os << "</g>\n";

  os << "<path d=\"";
  for (std::size_t i = 0; i < map.domain.size(); ++i) {
    os << (i ? 'L' : 'M');
    nw.fixed((map.domain[i].x - box.lo.x) * scale, 3);
    os << ' ';
    nw.fixed((box.hi.y - map.domain[i].y) * scale, 3);
  }
  os << "Z\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  if (opts.legend) {
    const double x0 = opts.width + 12.0;
    os << "<g font-family=\"monospace\" font-size=\"11\">\n";
    auto swatch = [&](double y) {
      os << "<rect x=\"";
      nw.fixed(x0, 3);
      os << "\" y=\"";
      nw.fixed(y - 10.0, 3);
      os << "\" width=\"12\" height=\"12\" fill=\"";
    };
    auto text = [&](double y) {
      os << "\"/><text x=\"";
      nw.fixed(x0 + 18.0, 3);
      os << "\" y=\"";
      nw.fixed(y, 3);
      os << "\">";
    };
    double y = 20.0;
    for (std::size_t k = 0; k < std::min(hist.labels.size(), max_legend); ++k) {
      const AtomLabel& label = hist.labels[k];
      const Atom* atom = lam.find(label);
      swatch(y);
      write_hsl(os, nw, atom_color(label));
      text(y);
      os << label.str() << " w=";
      nw.fixed(atom ? atom->weight : 0.0, 5);
      os << " area=";
      nw.fixed(hist.fractions[k], 5);
      os << "</text>\n";
      y += row_h;
    }
    if (hist.labels.size() > max_legend) {
      os << "<text x=\"";
      nw.fixed(x0, 3);
      os << "\" y=\"";
      nw.fixed(y, 3);
      os << "\">(" << hist.labels.size() - max_legend << " more atoms)</text>\n";
      y += row_h;
    }
    swatch(y);
    os << kTransitionGray;
    text(y);
    os << "transition area=";
    nw.fixed(hist.transition, 5);
    os << "</text>\n</g>\n";
  }
  os << "</svg>\n";
}

void write_certificate_json(std::ostream& os, const CertificateReport& rep) {
  json doc = {
      {"p", rep.p},
      {"r", rep.r},
      {"Lambda", rep.Lambda},
      {"q1", rep.q1},
      {"q_bar", rep.q_bar},
      {"b", rep.b},
      {"q_tilde", rep.q_tilde},
      {"oracle",
       {{"scan_limit", rep.scan_limit},
        {"N", rep.oracle_N ? json(*rep.oracle_N) : json(nullptr)},
        {"ratio", num_or_null(rep.oracle_ratio)},
        {"ratio_slope", rep.ratio_slope},
        {"flux_slope", rep.flux_slope},
        {"monotone_from", rep.monotone_from}}},
      {"realization",
       {{"N", rep.realized_N},
        {"domain", rep.domain},
        {"delta", rep.delta},
        {"eta", rep.eta},
        {"stripes", rep.stripes},
        {"cells", rep.cells},
        {"transition", rep.transition},
        {"mesh", integrals_json(rep.mesh)},
        {"oracle", integrals_json(rep.oracle)},
        {"grad_discrepancy", num_or_null(rep.grad_discrepancy)},
        {"flux_discrepancy", num_or_null(rep.flux_discrepancy)},
        {"grad_bound", num_or_null(rep.grad_bound)},
        {"flux_bound", num_or_null(rep.flux_bound)},
        {"grad_tolerance", rep.grad_tolerance},
        {"flux_tolerance", rep.flux_tolerance},
        {"histogram_deviation", rep.histogram_deviation},
        {"map_valid", rep.map_valid},
        {"map_violations", rep.map_violations},
        {"weak_residual", rep.weak_residual},
        {"residual_scale", rep.residual_scale},
        {"transition_flux_max", rep.transition_flux_max},
        {"transition_delta_bound", rep.transition_delta_bound}}},
      {"verdicts",
       {{"oracle", rep.verdict_oracle},
        {"agreement", rep.verdict_agreement},
        {"structure", rep.verdict_structure},
        {"passed", rep.passed()}}},
      {"notes", rep.notes}};
  os << doc.dump(1) << '\n';
}

std::string certificate_summary(const CertificateReport& rep) {
  std::ostringstream s;
  auto f = [](double x) { return format_double(x); };
  auto yn = [](bool v) { return v ? "pass" : "FAIL"; };
  s << "certificate p=" << f(rep.p) << " r=" << f(rep.r) << " Lambda=" << f(rep.Lambda) << '\n'
    << "  q1=" << f(rep.q1) << " q_bar=" << f(rep.q_bar) << " b=" << f(rep.b)
    << " q_tilde=" << f(rep.q_tilde) << '\n';
  s << "  oracle: ";
  if (rep.oracle_N)
    s << "N=" << *rep.oracle_N << " ratio=" << f(rep.oracle_ratio);
  else
    s << "not reached by N=" << rep.scan_limit << " (ratio " << f(rep.oracle_ratio) << ")";
  s << " slope=" << f(rep.ratio_slope) << " flux_slope=" << f(rep.flux_slope)
    << " monotone_from=" << rep.monotone_from << '\n';
  s << "  mesh: N=" << rep.realized_N << " domain=" << rep.domain << " cells=" << rep.cells
    << " transition=" << f(rep.transition) << " eta=" << f(rep.eta) << '\n'
    << "    grad mesh=" << f(rep.mesh.grad) << " oracle=" << f(rep.oracle.grad)
    << " rel=" << f(rep.grad_discrepancy) << " bound=" << f(rep.grad_bound) << '\n'
    << "    flux mesh=" << f(rep.mesh.flux) << " oracle=" << f(rep.oracle.flux)
    << " rel=" << f(rep.flux_discrepancy) << " bound=" << f(rep.flux_bound) << '\n'
    << "    histogram deviation=" << f(rep.histogram_deviation) << " map "
    << (rep.map_valid ? "valid" : "INVALID") << " (" << rep.map_violations << " violations)\n"
    << "    weak residual=" << f(rep.weak_residual) << " scale=" << f(rep.residual_scale) << '\n'
    << "    transition |f| max=" << f(rep.transition_flux_max)
    << " delta bound=" << f(rep.transition_delta_bound) << '\n';
  s << "  verdicts: oracle " << yn(rep.verdict_oracle) << ", agreement " << yn(rep.verdict_agreement)
    << ", structure " << yn(rep.verdict_structure) << '\n';
  for (const std::string& n : rep.notes) s << "  note: " << n << '\n';
  return s.str();
}

void write_ratio_csv(std::ostream& os, const RatioGrowth& growth) {
  NumberWriter nw(os);
  os << "N,I_grad,I_flux,ratio\n";
  for (std::size_t k = 0; k < growth.N.size(); ++k) {
    os << growth.N[k] << ',';
    nw.shortest(growth.grad[k]);
    os << ',';
    nw.shortest(growth.flux[k]);
    os << ',';
    nw.shortest(growth.ratio[k]);
    os << '\n';
  }
}

void write_threshold_csv(std::ostream& os, const std::vector<ThresholdRow>& rows) {
  NumberWriter nw(os);
  os << "p,q1,b_star,lower,margin\n";
  for (const ThresholdRow& r : rows) {
    nw.shortest(r.p);
    os << ',';
    nw.shortest(r.q1);
    os << ',';
    nw.shortest(r.b_star);
    os << ',';
    nw.shortest(r.lower);
    os << ',';
    nw.shortest(r.q1 - r.lower);
    os << '\n';
  }
}

struct HashStream::Buf : std::streambuf {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::uint64_t n = 0;

  int_type overflow(int_type c) override {
    if (!traits_type::eq_int_type(c, traits_type::eof())) mix(traits_type::to_char_type(c));
    return traits_type::not_eof(c);
  }
  std::streamsize xsputn(const char* s, std::streamsize count) override {
    for (std::streamsize i = 0; i < count; ++i) mix(s[i]);
    return count;
  }
  void mix(char c) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
    ++n;
  }
};

HashStream::HashStream() : buf_(std::make_unique<Buf>()), os_(std::make_unique<std::ostream>(buf_.get())) {}
HashStream::~HashStream() = default;

std::ostream& HashStream::stream() { return *os_; }
std::uint64_t HashStream::digest() const {
  os_->flush();
  return buf_->h;
}
std::uint64_t HashStream::bytes() const {
  os_->flush();
  return buf_->n;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace lamcert
