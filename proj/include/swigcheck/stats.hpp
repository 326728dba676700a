#pragma once

#include <cmath>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swigcheck/error.hpp"

namespace swigcheck {

/// Counts a (exposed, diseased), b (exposed, healthy), c (unexposed,
/// diseased), d (unexposed, healthy).
struct TwoByTwo {
  double a = 0, b = 0, c = 0, d = 0;
  double total() const { return a + b + c + d; }
  bool operator==(const TwoByTwo&) const = default;
};

struct TableStats {
  std::optional<double> rd, rr, odds_ratio;  // empty when undefined
  double chi_square = 0;
  double chi_square_p = 1;
};

/// Survival function of the chi-square distribution with one degree of freedom.
inline double chi_square_1df_sf(double x) { return x <= 0 ? 1.0 : std::erfc(std::sqrt(x / 2.0)); }

/// Two-sided p-value of a standard normal statistic.
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Pearson chi-square with one degree of freedom and point estimates. The
/// Yates correction is off by default.
inline TableStats two_by_two_stats(const TwoByTwo& t, bool yates = false) {
  for (double v : {t.a, t.b, t.c, t.d})
    if (!(v >= 0) || !std::isfinite(v)) throw DegenerateTable("counts must be finite and nonnegative");
  const double n = t.total();
  const double r1 = t.a + t.b, r2 = t.c + t.d, c1 = t.a + t.c, c2 = t.b + t.d;
  if (!(n > 0) || r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) throw DegenerateTable("table has a zero margin");

  TableStats s;
  const double p1 = t.a / r1, p0 = t.c / r2;
  s.rd = p1 - p0;
  if (p0 > 0) s.rr = p1 / p0;
  if (t.b > 0 && t.c > 0) s.odds_ratio = (t.a * t.d) / (t.b * t.c);
  double diff = std::abs(t.a * t.d - t.b * t.c);
  if (yates) diff = std::max(0.0, diff - n / 2.0);
  s.chi_square = n * diff * diff / (r1 * r2 * c1 * c2);
  s.chi_square_p = chi_square_1df_sf(s.chi_square);
  return s;
}

struct RrTest {
  double log_rr = 0;
  double se = 0;
  double z = 0;
  double p = 1;
};

/// Wald test of log RR against log rr0, variance 1/a - 1/(a+b) + 1/c - 1/(c+d).
inline RrTest rr_fixed_null_test(const TwoByTwo& t, double rr0) {
  if (!(t.a > 0 && t.b > 0 && t.c > 0 && t.d > 0)) throw DegenerateTable("every count must be positive");
  if (!(rr0 > 0)) throw InvalidValue("rr0 must be positive");
  RrTest r;
  r.log_rr = std::log((t.a / (t.a + t.b)) / (t.c / (t.c + t.d)));
  r.se = std::sqrt(1 / t.a - 1 / (t.a + t.b) + 1 / t.c - 1 / (t.c + t.d));
  r.z = (r.log_rr - std::log(rr0)) / r.se;
  r.p = normal_two_sided_p(r.z);
  return r;
}

inline TwoByTwo scale_table(const TwoByTwo& t, double k) {
  if (!(k > 0)) throw InvalidValue("scale factor must be positive");
  return {t.a * k, t.b * k, t.c * k, t.d * k};
}

/// Parses "a,b,c,d" (four comma-separated numbers).
inline TwoByTwo parse_counts(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw InvalidValue("bad count '" + cell + "'");
    }
    while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\r')) ++used;
    if (used != cell.size()) throw InvalidValue("bad count '" + cell + "'");
    v.push_back(x);
  }
  if (v.size() != 4) throw InvalidValue("expected four counts a,b,c,d");
  return {v[0], v[1], v[2], v[3]};
}

/// Reads a table from CSV with header `a,b,c,d` and one data row.
inline TwoByTwo read_counts_csv(std::istream& in) {
  std::string header, row;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "a,b,c,d") throw InvalidValue("CSV header must be a,b,c,d");
  if (!std::getline(in, row)) throw InvalidValue("CSV has no data row");
  return parse_counts(row);
}

}  // namespace swigcheck
