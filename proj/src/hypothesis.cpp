#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "snls/dynamics.hpp"

namespace snls {
namespace {

struct PowerTerm {
  double exponent;  // power of y = 1 + m
  double coef;
};

double kappa(Hypothesis id, double p) {
  return id == Hypothesis::H5 ? 0.5 : 0.5 * (1.0 - p);
}

// The residual as a sum of powers of y = 1 + m, equal exponents merged,
// zero coefficients dropped, sorted by exponent.
std::vector<PowerTerm> residual_terms(Hypothesis id, const NoiseSpec& spec,
                                      const EquationParams& params, double K, double p) {
  std::vector<PowerTerm> raw = {
      {2.0 * params.sigma, std::abs(params.alpha) * K},
      {2.0 * spec.d_exp, 0.5 * spec.c * spec.c},
      {2.0 * spec.b, -kappa(id, p) * spec.a * spec.a},
  };
  std::sort(raw.begin(), raw.end(),
            [](const PowerTerm& x, const PowerTerm& y) { return x.exponent < y.exponent; });
  std::vector<PowerTerm> merged;
  for (const PowerTerm& t : raw) {
    if (!merged.empty() && std::abs(merged.back().exponent - t.exponent) < 1e-12) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const PowerTerm& t) { return t.coef == 0.0; });
  return merged;
}

// Smallest Y >= 1 beyond which the residual is strictly decreasing, given a
// negative leading coefficient: each positive lower-order term's derivative is
// dominated by its share of the leading term's.
double monotone_tail_start(const std::vector<PowerTerm>& terms) {
  const PowerTerm& lead = terms.back();
  int positives = 0;
  for (const PowerTerm& t : terms) positives += t.coef > 0.0 ? 1 : 0;
  double start = 1.0;
  for (const PowerTerm& t : terms) {
    if (t.coef <= 0.0) continue;
    const double ratio = positives * t.coef * t.exponent / (-lead.coef * lead.exponent);
    start = std::max(start, std::pow(ratio, 1.0 / (lead.exponent - t.exponent)));
  }
  return start;
}

bool family_case_supported(const NoiseSpec& spec, const EquationParams& params) {
  return spec.b >= params.sigma && (spec.c == 0.0 || spec.b >= spec.d_exp);
}

}  // namespace

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::H5: return "H5";
    case Hypothesis::H5Prime: return "H5'";
    case Hypothesis::H5DoublePrime: return "H5''";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::Refuted: return "refuted";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

Hypothesis parse_hypothesis(const std::string& name) {
  if (name == "H5") return Hypothesis::H5;
  if (name == "H5'" || name == "H5p" || name == "H5prime") return Hypothesis::H5Prime;
  if (name == "H5''" || name == "H5pp" || name == "H5doubleprime") return Hypothesis::H5DoublePrime;
  throw std::invalid_argument("unknown hypothesis '" + name + "'");
}

double hypothesis_residual(Hypothesis id, const NoiseSpec& spec, const EquationParams& params,
                           double K, double p, double m) {
  const double y = 1.0 + m;
  return std::abs(params.alpha) * K * std::pow(y, 2.0 * params.sigma) +
         0.5 * spec.c * spec.c * std::pow(y, 2.0 * spec.d_exp) -
         kappa(id, p) * spec.a * spec.a * std::pow(y, 2.0 * spec.b);
}

HypothesisReport check_hypothesis(Hypothesis id, const NoiseSpec& spec,
                                  const EquationParams& params, double K, double p,
                                  double scan_max) {
  spec.validate();
  params.validate();
  const bool needs_p = id != Hypothesis::H5;
  if (needs_p && !(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (!(K > 0.0)) throw std::invalid_argument("K must be positive");
  if (!(scan_max > 0.0)) throw std::invalid_argument("scan_max must be positive");

  HypothesisReport report;
  report.hypothesis = id;
  report.K_used = K;
  report.p_used = needs_p ? std::optional<double>(p) : std::nullopt;
  report.spec = spec;
  report.params = params;

  if (!family_case_supported(spec, params)) {
    report.verdict = Verdict::Inconclusive;
    report.margin = std::numeric_limits<double>::quiet_NaN();
    report.note = "exponents outside b >= sigma, b >= d; tail not certified";
    return report;
  }

  const auto terms = residual_terms(id, spec, params, K, p);
  if (!terms.empty() && terms.back().coef > 0.0) {
    report.verdict = Verdict::Refuted;
    report.margin = -std::numeric_limits<double>::infinity();
    report.worst_x = std::numeric_limits<double>::infinity();
    report.note = "leading power has positive coefficient; residual unbounded";
    return report;
  }
  if (!terms.empty() && terms.back().coef < 0.0) {
    const double tail = monotone_tail_start(terms);
    if (tail > 1.0 + scan_max) {
      report.verdict = Verdict::Inconclusive;
      report.margin = std::numeric_limits<double>::quiet_NaN();
      report.note = "residual not yet monotone at scan_max; extend the scan";
      return report;
    }
  }

  auto g = [&](double m) { return hypothesis_residual(id, spec, params, K, p, m); };

  // Geometric scan in y = 1 + m, then golden-section refinement of the best cell.
  constexpr int kScan = 4001;
  const double log_top = std::log1p(scan_max);
  std::vector<double> ms(kScan);
  for (int i = 0; i < kScan; ++i) ms[static_cast<std::size_t>(i)] = std::expm1(log_top * i / (kScan - 1));
  ms.front() = 0.0;

  std::size_t best = 0;
  double best_val = g(0.0);
  for (std::size_t i = 1; i < ms.size(); ++i) {
    const double v = g(ms[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double worst = ms[best];
  if (best > 0 && best + 1 < ms.size()) {
    double lo = ms[best - 1];
    double hi = ms[best + 1];
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
      const double x1 = hi - ratio * (hi - lo);
      const double x2 = lo + ratio * (hi - lo);
      if (g(x1) < g(x2)) lo = x1; else hi = x2;
    }
    const double cand = 0.5 * (lo + hi);
    if (g(cand) > best_val) {
      best_val = g(cand);
      worst = cand;
    }
  }

  report.margin = -best_val;
  report.worst_x = worst;
  if (id == Hypothesis::H5) {
    report.verdict = Verdict::Certified;
    report.note = "residual bounded above by B = " + std::to_string(best_val);
  } else if (report.margin >= kMarginTolerance) {
    report.verdict = Verdict::Certified;
  } else if (report.margin <= -kMarginTolerance) {
    report.verdict = Verdict::Refuted;
    report.note = "sup of residual is nonnegative";
  } else {
    report.verdict = Verdict::Inconclusive;
    report.note = "margin within tolerance of zero";
  }
  return report;
}

}  // namespace snls
