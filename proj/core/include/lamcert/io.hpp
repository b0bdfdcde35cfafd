#pragma once

// Serialization. Doubles are written in shortest round-trip form, so every
// output is a pure function of its input.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lamcert/laminate.hpp"
#include "lamcert/realization.hpp"
#include "lamcert/verification.hpp"

namespace lamcert {

void write_laminate_json(std::ostream& os, const LaminateBuild& build);
void write_map_json(std::ostream& os, const PWAffineMap& map);
void write_certificate_json(std::ostream& os, const CertificateReport& rep);
std::string certificate_summary(const CertificateReport& rep);

struct SvgOptions {
  double width = 800.0;  // pixels; height follows the domain's aspect ratio
  bool legend = true;
};

/// Cells filled by atom: hue from the atom index, lightness from its kind,
/// saturation from its sign; transition cells gray.
void write_map_svg(std::ostream& os, const PWAffineMap& map, const Laminate& lam,
                   const SvgOptions& opts = {});

/// Columns N, I_grad, I_flux, ratio.
void write_ratio_csv(std::ostream& os, const RatioGrowth& growth);

struct ThresholdRow {
  double p = 0.0;
  double q1 = 0.0;
  double b_star = 0.0;
  double lower = 0.0;  // max(p-1, 1)
};
/// Columns p, q1, b_star, lower, margin.
void write_threshold_csv(std::ostream& os, const std::vector<ThresholdRow>& rows);

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

/// FNV-1a over everything written to it; for determinism checks without files.
class HashStream {
 public:
  HashStream();
  ~HashStream();
  HashStream(const HashStream&) = delete;
  HashStream& operator=(const HashStream&) = delete;
  std::ostream& stream();
  std::uint64_t digest() const;
  std::uint64_t bytes() const;

 private:
  struct Buf;
  std::unique_ptr<Buf> buf_;
  std::unique_ptr<std::ostream> os_;
};

void write_file(const std::string& path, const std::string& content);

}  // namespace lamcert
