#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "swigcheck/format.hpp"
#include "swigcheck/inference.hpp"

namespace swigcheck {

inline constexpr std::size_t kDefaultGrid = 101;

struct SweepPoint {
  double p = 0;  // P(C = 1)
  double odds_ratio = 0;
  double risk_ratio = 0;
  double odds_ratio_null = 0;
  double risk_ratio_null = 0;
};

/// Risk among the treated implied by an untreated risk and a stratum effect.
inline double treated_risk(double r0, MeasureScale scale, double value) {
  double r1 = 0;
  switch (scale) {
    case MeasureScale::RiskDifference: r1 = r0 + value; break;
    case MeasureScale::RiskRatio: r1 = r0 * value; break;
    case MeasureScale::OddsRatio: {
      const double odds = r0 / (1 - r0) * value;
      r1 = odds / (1 + odds);
      break;
    }
  }
  if (!(r1 > 0 && r1 < 1)) throw UndefinedMeasure("treated risk " + format_number(r1) + " falls outside (0, 1)");
  return r1;
}

/// Randomized trial over C ~ Bernoulli(p), X ~ Bernoulli(0.5) independent of
/// C, and D | X, C with untreated risks (r0_c0, r0_c1) and a common stratum
/// effect on `scale`.
inline DiscreteModel trial_model(double p, double r0_c0, double r0_c1, MeasureScale scale, double value) {
  Dag g("Trial");
  g.add_node("C");
  g.add_node("X", Role::treatment());
  g.add_node("D", Role::outcome());
  g.add_edge("C", "D");
  g.add_edge("X", "D", true);
  DiscreteModel m(g);
  m.set("C", {}, p);
  m.set("X", {}, 0.5);
  m.set("D", {{"C", 0}, {"X", 0}}, r0_c0);
  m.set("D", {{"C", 1}, {"X", 0}}, r0_c1);
  m.set("D", {{"C", 0}, {"X", 1}}, treated_risk(r0_c0, scale, value));
  m.set("D", {{"C", 1}, {"X", 1}}, treated_risk(r0_c1, scale, value));
  return m;
}

/// Marginal OR and RR of the trial across P(C = 1), with the same quantities
/// when the effect is removed.
inline std::vector<SweepPoint> trial_sweep(double r0_c0, double r0_c1, MeasureScale scale, double value,
                                           std::size_t grid = kDefaultGrid) {
  for (double r : {r0_c0, r0_c1})
    if (!(r > 0 && r < 1)) throw InvalidValue("untreated risks must lie in (0, 1)");
  if (grid < 2) throw InvalidValue("grid needs at least 2 points");
  const double null_value = scale == MeasureScale::RiskDifference ? 0.0 : 1.0;
  std::vector<SweepPoint> out;
  out.reserve(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(grid - 1);
    auto t = joint(trial_model(p, r0_c0, r0_c1, scale, value));
    auto tn = joint(trial_model(p, r0_c0, r0_c1, scale, null_value));
    out.push_back({p, measure(t, "X", "D", MeasureScale::OddsRatio).marginal,
                   measure(t, "X", "D", MeasureScale::RiskRatio).marginal,
                   measure(tn, "X", "D", MeasureScale::OddsRatio).marginal,
                   measure(tn, "X", "D", MeasureScale::RiskRatio).marginal});
  }
  return out;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& pts) {
  out << "p,or,rr,or_null,rr_null\n";
  for (const auto& s : pts)
    out << format_number(s.p) << ',' << format_number(s.odds_ratio) << ',' << format_number(s.risk_ratio) << ','
        << format_number(s.odds_ratio_null) << ',' << format_number(s.risk_ratio_null) << '\n';
}

struct LabbePoint {
  double p0 = 0;
  double p1 = 0;
};

/// Locus of constant effect on the L'Abbé square, sampled at `resolution`
/// evenly spaced untreated risks over the range where the treated risk stays
/// inside [0, 1].
inline std::vector<LabbePoint> labbe_curves(MeasureScale scale, double value, std::size_t resolution) {
  if (resolution < 2) throw InvalidValue("resolution must be at least 2");
  double lo = 0, hi = 1;
  switch (scale) {
    case MeasureScale::RiskDifference:
      if (!(value > -1 && value < 1)) throw InvalidValue("risk difference must lie in (-1, 1)");
      if (value >= 0) hi = 1 - value;
      else lo = -value;
      break;
    case MeasureScale::RiskRatio:
      if (!(value > 0) || !std::isfinite(value)) throw InvalidValue("risk ratio must be positive");
      if (value > 1) hi = 1 / value;
      break;
    case MeasureScale::OddsRatio:
      if (!(value > 0) || !std::isfinite(value)) throw InvalidValue("odds ratio must be positive");
      break;
  }
  std::vector<LabbePoint> out;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double p0 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
    double p1 = 0;
    switch (scale) {
      case MeasureScale::RiskDifference: p1 = p0 + value; break;
      case MeasureScale::RiskRatio: p1 = p0 * value; break;
      case MeasureScale::OddsRatio: p1 = value * p0 / (1 - p0 + value * p0); break;
    }
    out.push_back({p0, std::clamp(p1, 0.0, 1.0)});
  }
  return out;
}

struct LabbeCurve {
  std::string name;
  MeasureScale scale;
  double value;
  std::vector<LabbePoint> points;
};

/// Null diagonal plus RD +-0.5, RR 2 and 1/2, OR 2 and 1/2.
inline std::vector<LabbeCurve> labbe_figure(std::size_t resolution = kDefaultGrid) {
  struct Spec {
    const char* name;
    MeasureScale scale;
    double value;
  };
  const Spec specs[] = {{"null", MeasureScale::RiskDifference, 0.0},
                        {"rd+0.5", MeasureScale::RiskDifference, 0.5},
                        {"rd-0.5", MeasureScale::RiskDifference, -0.5},
                        {"rr2", MeasureScale::RiskRatio, 2.0},
                        {"rr0.5", MeasureScale::RiskRatio, 0.5},
                        {"or2", MeasureScale::OddsRatio, 2.0},
                        {"or0.5", MeasureScale::OddsRatio, 0.5}};
  std::vector<LabbeCurve> out;
  for (const auto& s : specs) out.push_back({s.name, s.scale, s.value, labbe_curves(s.scale, s.value, resolution)});
  return out;
}

inline void write_labbe_csv(std::ostream& out, const std::vector<LabbeCurve>& curves) {
  out << "curve,scale,value,p0,p1\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.name << ',' << to_string(c.scale) << ',' << format_number(c.value) << ',' << format_number(p.p0) << ','
          << format_number(p.p1) << '\n';
}

}  // namespace swigcheck
