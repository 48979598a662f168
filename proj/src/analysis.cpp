#include "snls/analysis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace snls {

void LyapunovSpec::validate() const {
  if (!(R > 0.0)) throw std::invalid_argument("lyapunov R must be positive");
  if (!(a_floor > 0.0)) throw std::invalid_argument("lyapunov floor must be positive");
  if (variant == LyapunovVariant::Log) {
    if (!(R > 0.5)) throw std::invalid_argument("log lyapunov requires R > 1/2");
    if (!(a_floor < std::log(2.0 * R))) {
      throw std::invalid_argument("log lyapunov floor must be below log(2R)");
    }
  } else {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("lyapunov p must lie in (0, 1)");
    if (!(a_floor < std::pow(2.0 * R, p))) {
      throw std::invalid_argument("power lyapunov floor must be below (2R)^p");
    }
  }
}

LyapunovProfile::LyapunovProfile(const LyapunovSpec& spec) : spec_(spec) {
  spec_.validate();
  const double R = spec_.R;
  const double rho = 2.0 * R;
  double value = 0.0, slope = 0.0, curv = 0.0;
  if (spec_.variant == LyapunovVariant::Log) {
    value = std::log(rho);
    slope = 1.0 / rho;
    curv = -1.0 / (rho * rho);
  } else {
    const double p = spec_.p;
    value = std::pow(rho, p);
    slope = p * std::pow(rho, p - 1.0);
    curv = -p * (1.0 - p) * std::pow(rho, p - 2.0);
  }
  // Left end: value a_floor, zero slope and curvature. Derivatives are scaled
  // to the unit variable t = (rho - R) / R.
  const double h = R;
  const double jump = value - spec_.a_floor;
  const double dslope = slope * h;
  const double dcurv = curv * h * h;
  bridge_ = {spec_.a_floor,
             0.0,
             0.0,
             10.0 * jump - 4.0 * dslope + 0.5 * dcurv,
             -15.0 * jump + 7.0 * dslope - dcurv,
             6.0 * jump - 3.0 * dslope + 0.5 * dcurv};
}

double LyapunovProfile::outer(double rho) const {
  return spec_.variant == LyapunovVariant::Log ? std::log(rho) : std::pow(rho, spec_.p);
}

double LyapunovProfile::operator()(double rho) const {
  if (rho < spec_.R) return spec_.a_floor;
  if (rho > 2.0 * spec_.R) return outer(rho);
  const double t = (rho - spec_.R) / spec_.R;
  double acc = 0.0;
  for (auto it = bridge_.rbegin(); it != bridge_.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double lyapunov_value(const SpectralField& u, const LyapunovSpec& lspec, double s) {
  return LyapunovProfile(lspec)(sobolev_norm(u, s));
}

double generator_drift(const SpectralField& u, const LyapunovSpec& lspec,
                       const EquationParams& params, const NoiseSpec& spec, double K) {
  lspec.validate();
  const double hs = sobolev_norm(u, params.s);
  if (!(hs > 2.0 * lspec.R)) {
    throw std::invalid_argument("generator drift bound needs |u|_s > 2R");
  }
  const double m = sup_norm(u);
  const cplx f = spec.multiplier(m);
  const double nonlinear = std::abs(params.alpha) * K * std::pow(m, 2.0 * params.sigma);
  if (lspec.variant == LyapunovVariant::Log) {
    return nonlinear + 0.5 * std::norm(f) - f.real() * f.real();
  }
  const double p = lspec.p;
  return p * std::pow(hs, p) *
         (nonlinear + 0.5 * std::norm(f) - 0.5 * (2.0 - p) * f.real() * f.real());
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("wilson interval of zero trials");
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
  const double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double high = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {low, high};
}

EnsembleEstimate build_ensemble(std::span<const Trajectory> trajectories, double p) {
  if (trajectories.empty()) throw std::invalid_argument("empty ensemble");
  EnsembleEstimate ens;
  ens.p = p;
  ens.paths = trajectories.size();

  const Trajectory* longest = &trajectories.front();
  for (const Trajectory& tr : trajectories) {
    if (tr.size() > longest->size()) longest = &tr;
    ens.blowup_times.push_back(detect_blowup(tr));
  }
  ens.times = longest->times;

  for (std::size_t j = 0; j < ens.times.size(); ++j) {
    const double t = ens.times[j];
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (const Trajectory& tr : trajectories) {
      if (j >= tr.size() || tr.times[j] != t || tr.hs_norm[j] >= tr.threshold) continue;
      const double v = std::pow(tr.hs_norm[j], p);
      sum += v;
      sum_sq += v * v;
      ++count;
    }
    double mean = 0.0, half = 0.0;
    if (count > 0) {
      const double n = static_cast<double>(count);
      mean = sum / n;
      const double var = count > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
      half = kZ95 * std::sqrt(var / n);
    }
    ens.mean_p_moment.push_back(mean);
    ens.ci_low.push_back(mean - half);
    ens.ci_high.push_back(mean + half);
    ens.samples.push_back(count);

    std::size_t crossed = 0;
    for (const auto& bt : ens.blowup_times) crossed += (bt && *bt <= t) ? 1 : 0;
    const Interval w = wilson_interval(crossed, ens.paths);
    ens.exit_fraction.push_back(static_cast<double>(crossed) / static_cast<double>(ens.paths));
    ens.exit_ci_low.push_back(w.low);
    ens.exit_ci_high.push_back(w.high);
  }
  return ens;
}

DecayTestReport supermartingale_decay_test(const EnsembleEstimate& ens, double lambda, double p) {
  if (ens.paths == 0 || ens.times.empty()) throw std::invalid_argument("empty ensemble");
  DecayTestReport report;
  report.test = "supermartingale_decay";
  report.lambda = lambda;
  report.p = p;
  report.passed = true;
  for (std::size_t j = 1; j < ens.times.size(); ++j) {
    const double before = std::exp(lambda * ens.times[j - 1]) * ens.mean_p_moment[j - 1];
    const double growth = std::exp(lambda * ens.times[j]);
    const double after = growth * ens.mean_p_moment[j];
    const double slack = growth * (ens.ci_high[j] - ens.ci_low[j]);
    if (after > before + slack) {
      report.passed = false;
      report.first_violation_t = ens.times[j];
      std::ostringstream os;
      os << "e^{lambda t} m(t) rose from " << before << " to " << after << " (slack " << slack
         << ") at t = " << ens.times[j];
      report.details = os.str();
      return report;
    }
  }
  report.details = "non-increasing over " + std::to_string(ens.times.size()) + " records";
  return report;
}

DecayFit fit_decay_rate(const EnsembleEstimate& ens, double t_lo, double t_hi) {
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < ens.times.size(); ++j) {
    const double t = ens.times[j];
    if (t < t_lo || t > t_hi) continue;
    if (!(ens.mean_p_moment[j] > 0.0)) {
      return {std::numeric_limits<double>::infinity(), 0.0};
    }
    xs.push_back(t);
    ys.push_back(std::log(ens.mean_p_moment[j]));
  }
  if (xs.size() < 2) throw std::invalid_argument("decay window holds fewer than two records");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    rss += r * r;
  }
  const double se = xs.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return {-slope, se};
}

ExitEstimate exit_probability(const EnsembleEstimate& ens, double t) {
  if (ens.paths == 0) throw std::invalid_argument("empty ensemble");
  ExitEstimate out;
  out.paths = ens.paths;
  for (const auto& bt : ens.blowup_times) out.crossed += (bt && *bt <= t) ? 1 : 0;
  out.p_hat = static_cast<double>(out.crossed) / static_cast<double>(out.paths);
  out.ci = wilson_interval(out.crossed, out.paths);
  return out;
}

double time_average_moment(const Trajectory& traj, double p, std::optional<double> t_end) {
  if (detect_blowup(traj)) throw std::invalid_argument("time average of a blown-up path");
  if (traj.size() < 2) throw std::invalid_argument("time average needs two records");
  const double stop = t_end.value_or(traj.times.back()) * (1.0 + 1e-12) + 1e-12;
  double integral = 0.0;
  double prev_t = traj.times.front();
  double prev_v = std::pow(traj.hs_norm.front(), p);
  for (std::size_t i = 1; i < traj.size() && traj.times[i] <= stop; ++i) {
    const double v = std::pow(traj.hs_norm[i], p);
    integral += 0.5 * (v + prev_v) * (traj.times[i] - prev_t);
    prev_t = traj.times[i];
    prev_v = v;
  }
  const double span = prev_t - traj.times.front();
  if (!(span > 0.0)) throw std::invalid_argument("time average over an empty window");
  return integral / span;
}

}  // namespace snls
