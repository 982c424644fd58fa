#include "sections/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sections {

namespace {

// Sorted values + weight prefix sums: measure of {y : value[y] < r} in
// O(log n) per radius.
struct WeightedProfile {
  std::vector<double> values;
  std::vector<double> prefix;  // prefix[i] = sum of weights of the first i entries

  double measure_below(double r) const {
    const auto it = std::lower_bound(values.begin(), values.end(), r);
    return prefix[static_cast<std::size_t>(it - values.begin())];
  }
};

WeightedProfile weighted_profile(std::vector<double> values, const std::vector<double>& weights) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  WeightedProfile p;
  p.values.reserve(values.size());
  p.prefix.reserve(values.size() + 1);
  p.prefix.push_back(0);
  for (std::size_t i : order) {
    p.values.push_back(values[i]);
    p.prefix.push_back(p.prefix.back() + weights[i]);
  }
  return p;
}

WeightedProfile projected_measure_profile(const FiniteMetricSpace& space,
                                          const QuotientStructure& quotient, PointId x) {
  return weighted_profile(fiber_distance_profile(space, quotient, x), quotient.measures());
}

WeightedProfile image_measure_profile(const FiniteMetricSpace& space,
                                      const QuotientStructure& quotient,
                                      const SectionSample& section, PointId center) {
  std::vector<double> values(section.base_count());
  for (BaseId y = 0; y < section.base_count(); ++y)
    values[y] = space.dist(center, section.point_for(y));
  return weighted_profile(std::move(values), quotient.measures());
}

struct LineFit {
  double slope = 0, intercept = 0;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(den > 0)) throw PreconditionError("regularity fit needs at least two distinct radii");
  LineFit fit;
  fit.slope = num / den;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

std::vector<double> sorted_radii(std::span<const double> radii) {
  std::vector<double> r(radii.begin(), radii.end());
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  if (r.size() < 2) throw PreconditionError("radius grid needs at least two distinct radii");
  if (!(r.front() > 0)) throw PreconditionError("radii must be positive");
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// fit_regularity
// ---------------------------------------------------------------------------

RegularityReport fit_regularity(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, std::span<const BaseId> centers,
                                std::span<const double> radii, const FitOptions& options) {
  if (centers.empty()) throw PreconditionError("regularity fit needs at least one center");
  const std::vector<double> grid = sorted_radii(radii);

  RegularityReport report;
  report.r_min = grid.front();
  report.r_max = grid.back();
  report.interior_guard = !options.interior_radius.empty();

  std::vector<BaseId> kept;
  for (BaseId y : centers) {
    if (report.interior_guard && options.interior_radius[y] < report.r_max) {
      report.excluded_centers.push_back(y);
    } else {
      kept.push_back(y);
    }
  }
  if (kept.empty())
    throw PreconditionError(
        "all centers sit within the largest radius of the sample boundary; shrink the radius "
        "window or pick interior centers");

  struct PerCenterSamples {
    BaseId base;
    std::vector<double> log_r, log_m;
  };
  std::vector<PerCenterSamples> center_samples;
  std::vector<double> xs, ys;
  for (BaseId y : kept) {
    const PointId center = section.point_for(y);
    const WeightedProfile profile = image_measure_profile(space, quotient, section, center);
    PerCenterSamples local{y, {}, {}};
    for (double r : grid) {
      const double m = profile.measure_below(r);
      if (!(m > 0)) {
        ++report.dropped_samples;
        continue;
      }
      report.samples.push_back({y, center, r, m});
      local.log_r.push_back(std::log(r));
      local.log_m.push_back(std::log(m));
    }
    if (!local.log_r.empty()) center_samples.push_back(std::move(local));
  }
  if (report.samples.empty())
    throw PreconditionError("every (center, radius) sample had zero measure");

  for (const auto& c : center_samples) {
    xs.insert(xs.end(), c.log_r.begin(), c.log_r.end());
    ys.insert(ys.end(), c.log_m.begin(), c.log_m.end());
  }
  const LineFit fit = least_squares(xs, ys);
  report.exponent_q = fit.slope;
  report.intercept = fit.intercept;
  if (!(report.exponent_q > 0))
    throw PreconditionError("regularity fit produced a nonpositive exponent");

  report.c_lower = std::numeric_limits<double>::infinity();
  report.c_upper = 0;
  for (const RegularitySample& s : report.samples) {
    const double ratio = s.measure / std::pow(s.radius, report.exponent_q);
    report.c_lower = std::min(report.c_lower, ratio);
    report.c_upper = std::max(report.c_upper, ratio);
    const double predicted = fit.intercept + report.exponent_q * std::log(s.radius);
    const double dev = std::abs(std::log(s.measure) - predicted) / std::max(std::abs(predicted), 1.0);
    report.residual = std::max(report.residual, dev);
  }

  for (const auto& c : center_samples) {
    CenterFit cf;
    cf.base = c.base;
    cf.samples = c.log_r.size();
    cf.c_lower = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.log_r.size(); ++i) {
      const double ratio = std::exp(c.log_m[i] - report.exponent_q * c.log_r[i]);
      cf.c_lower = std::min(cf.c_lower, ratio);
      cf.c_upper = std::max(cf.c_upper, ratio);
      const double predicted = fit.intercept + report.exponent_q * c.log_r[i];
      cf.residual = std::max(cf.residual,
                             std::abs(c.log_m[i] - predicted) / std::max(std::abs(predicted), 1.0));
    }
    if (c.log_r.size() >= 2) cf.local_q = least_squares(c.log_r, c.log_m).slope;
    report.per_center.push_back(cf);
  }
  return report;
}

// ---------------------------------------------------------------------------
// comparability_constant
// ---------------------------------------------------------------------------

double comparability_constant(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                              std::span<const std::pair<PointId, PointId>> fiber_pairs,
                              std::span<const double> radii, ComparabilityWitness* witness) {
  if (fiber_pairs.empty()) throw PreconditionError("comparability needs at least one fiber pair");
  const std::vector<double> grid = sorted_radii(radii);

  double best = 1.0;
  ComparabilityWitness w{fiber_pairs.front().first, fiber_pairs.front().second, grid.front(), 1.0};
  for (const auto& [x, x_prime] : fiber_pairs) {
    if (quotient.fiber_of(x) != quotient.fiber_of(x_prime))
      throw PreconditionError("comparability pairs must share a fiber");
    const WeightedProfile a = projected_measure_profile(space, quotient, x);
    const WeightedProfile b = projected_measure_profile(space, quotient, x_prime);
    for (double r : grid) {
      const double ma = a.measure_below(r);
      const double mb = b.measure_below(r);
      // mu(pi(B(x, r))) >= mu(pi(x)) > 0 for r > 0, so the ratios are finite.
      const double ratio = std::max(ma / mb, mb / ma);
      if (ratio > best) {
        best = ratio;
        w = {x, x_prime, r, ratio};
      }
    }
  }
  if (witness) *witness = w;
  return best;
}

// ---------------------------------------------------------------------------
// check_ball_inclusion
// ---------------------------------------------------------------------------

InclusionVerdict check_ball_inclusion(const FiniteMetricSpace& space,
                                      const QuotientStructure& quotient,
                                      const SectionSample& section, double ell_eta,
                                      std::span<const PointId> centers,
                                      std::span<const double> radii, std::size_t max_report) {
  if (!(ell_eta > 0)) throw PreconditionError("ball inclusion needs a positive ell_eta");
  if (centers.empty()) throw PreconditionError("ball inclusion needs at least one center");
  const std::vector<double> grid = [&] {
    std::vector<double> r(radii.begin(), radii.end());
    std::sort(r.begin(), r.end());
    if (r.empty() || !(r.front() > 0)) throw PreconditionError("radii must be positive");
    return r;
  }();

  InclusionVerdict verdict;
  verdict.ell_eta = ell_eta;
  for (const PointId p : centers) {
    if (!on_section(quotient, section, p))
      throw PreconditionError("ball inclusion centers must lie on the section image");
    const std::vector<double> fiber_dist = fiber_distance_profile(space, quotient, p);
    std::vector<double> image_dist(section.base_count());
    for (BaseId y = 0; y < section.base_count(); ++y)
      image_dist[y] = space.dist(p, section.point_for(y));

    for (const double r : grid) {
      ++verdict.checks;
      const double inflated = ell_eta * r;
      for (BaseId y = 0; y < section.base_count(); ++y) {
        // first inclusion: y in pi(B(p, r)) must appear in pi(B(p, ell r) cap phi(Y))
        if (fiber_dist[y] < r && !(image_dist[y] < inflated)) {
          verdict.pass = false;
          if (verdict.violations.size() < max_report)
            verdict.violations.push_back({p, r, y, 1, fiber_dist[y], image_dist[y]});
        }
        // second inclusion: set-theoretic, fiber_dist <= image_dist always
        if (image_dist[y] < inflated && !(fiber_dist[y] < inflated)) {
          verdict.pass = false;
          if (verdict.violations.size() < max_report)
            verdict.violations.push_back({p, r, y, 2, fiber_dist[y], image_dist[y]});
        }
      }
    }
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// check_theorem_chain
// ---------------------------------------------------------------------------

ChainVerdict check_theorem_chain(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                 const SectionSample& phi, const SectionSample& psi,
                                 const Modulus& eta, std::span<const BaseId> centers,
                                 std::span<const double> radii, const ChainOptions& options) {
  // Hypotheses first: both sections must verify quasi-symmetry under eta.
  const TripleScan phi_scan = enumerate_triples(space, quotient, phi, options.triple_bases);
  const TripleScan psi_scan = enumerate_triples(space, quotient, psi, options.triple_bases);
  const QsVerdict phi_qs = check_quasi_symmetry(phi_scan.records, eta, options.qs_slack);
  if (!phi_qs.pass)
    throw PreconditionError("reference section fails quasi-symmetry under the supplied modulus");
  const QsVerdict psi_qs = check_quasi_symmetry(psi_scan.records, eta, options.qs_slack);
  if (!psi_qs.pass)
    throw PreconditionError("test section fails quasi-symmetry under the supplied modulus");

  ChainVerdict verdict;
  verdict.tau = options.tau;
  verdict.reference = fit_regularity(space, quotient, phi, centers, radii, options.fit_options);
  verdict.test = fit_regularity(space, quotient, psi, centers, radii, options.fit_options);

  std::span<const BaseId> comp_bases =
      options.comparability_bases.empty() ? centers : options.comparability_bases;
  std::vector<std::pair<PointId, PointId>> pairs;
  pairs.reserve(comp_bases.size());
  for (BaseId y : comp_bases) pairs.emplace_back(phi.point_for(y), psi.point_for(y));
  verdict.comparability = comparability_constant(space, quotient, pairs, radii);

  const EllEtaResult ell =
      compute_ell_eta(space, quotient, psi, eta, options.ell_probes, options.ell_options);
  if (ell.diverged)
    throw PreconditionError("ell_eta diverged; the transfer needs a finite inflation factor");
  verdict.ell_eta = ell.value;

  const double q = verdict.reference.exponent_q;
  const double inflation = std::pow(verdict.ell_eta, q);
  verdict.predicted_lower = verdict.reference.c_lower / (verdict.comparability * inflation);
  verdict.predicted_upper = verdict.reference.c_upper * verdict.comparability * inflation;

  // Empirical constants of the test section at the reference exponent: the
  // predicted interval only means something against r^Q with the same Q.
  verdict.empirical_lower = std::numeric_limits<double>::infinity();
  verdict.empirical_upper = 0;
  for (const RegularitySample& s : verdict.test.samples) {
    const double ratio = s.measure / std::pow(s.radius, q);
    verdict.empirical_lower = std::min(verdict.empirical_lower, ratio);
    verdict.empirical_upper = std::max(verdict.empirical_upper, ratio);
  }

  verdict.pass = verdict.predicted_lower <= verdict.empirical_lower * (1.0 + options.tau) &&
                 verdict.empirical_upper <= verdict.predicted_upper * (1.0 + options.tau);
  return verdict;
}

}  // namespace sections
