#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sections/metric_core.hpp"
#include "sections/section_analysis.hpp"

namespace sections {

// ---------------------------------------------------------------------------
// Ahlfors-David regularity fit for a section image under the pushforward
// measure: Q from pooled least squares of log measure against log radius,
// (c_lower, c_upper) the tightest constants so that
//   c_lower * r^Q <= measure <= c_upper * r^Q
// at every kept (center, radius) sample.
// ---------------------------------------------------------------------------

struct RegularitySample {
  BaseId center_base = 0;
  PointId center = 0;
  double radius = 0;
  double measure = 0;
};

struct CenterFit {
  BaseId base = 0;
  double c_lower = 0, c_upper = 0;  // at the pooled exponent
  double local_q = 0;
  double residual = 0;
  std::size_t samples = 0;
};

struct RegularityReport {
  double exponent_q = 0;
  double c_lower = 0, c_upper = 0;
  double r_min = 0, r_max = 0;
  double intercept = 0;
  double residual = 0;  // max relative deviation of log measure from the fit
  std::vector<CenterFit> per_center;
  std::vector<RegularitySample> samples;
  std::vector<BaseId> excluded_centers;  // boundary-effect guard casualties
  std::size_t dropped_samples = 0;       // zero-measure samples
  bool interior_guard = false;
};

struct FitOptions {
  // Per-base margin to the sampled region's edge; centers with margin below
  // the largest radius are excluded. Empty disables the guard.
  std::span<const double> interior_radius;
};

RegularityReport fit_regularity(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, std::span<const BaseId> centers,
                                std::span<const double> radii, const FitOptions& options = {});

// ---------------------------------------------------------------------------
// Comparability constant between projected ball measures at fiber mates:
// max over pairs, radii and both orders of
//   mu(pi(B(x, r))) / mu(pi(B(x', r))).
// Always >= 1.
// ---------------------------------------------------------------------------

struct ComparabilityWitness {
  PointId x = 0, x_prime = 0;
  double radius = 0;
  double ratio = 0;
};

double comparability_constant(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                              std::span<const std::pair<PointId, PointId>> fiber_pairs,
                              std::span<const double> radii,
                              ComparabilityWitness* witness = nullptr);

// ---------------------------------------------------------------------------
// Ball-inclusion check:
//   pi(B(p, r))  subseteq  pi(B(p, ell*r) cap phi(Y))  subseteq  pi(B(p, ell*r))
// verified as exact finite-set inclusions at every (center, radius).
// ---------------------------------------------------------------------------

struct InclusionViolation {
  PointId center = 0;
  double radius = 0;
  BaseId base = 0;
  int which = 1;  // 1: first inclusion, 2: second inclusion
  double fiber_dist = 0;
  double image_dist = 0;
};

struct InclusionVerdict {
  bool pass = true;
  double ell_eta = 0;
  std::size_t checks = 0;  // (center, radius) pairs examined
  std::vector<InclusionViolation> violations;
};

InclusionVerdict check_ball_inclusion(const FiniteMetricSpace& space,
                                      const QuotientStructure& quotient,
                                      const SectionSample& section, double ell_eta,
                                      std::span<const PointId> centers,
                                      std::span<const double> radii,
                                      std::size_t max_report = 100);

// ---------------------------------------------------------------------------
// Regularity transfer chain: from a reference section's regularity
// (c1, c2, Q), the comparability constant C over {(phi(y), psi(y))} and
// ell_eta for psi, predict c3 = c1 * C^-1 * ell^-Q and c4 = c2 * C * ell^Q,
// then check the test section's empirical constants at the reference
// exponent fall inside.
// ---------------------------------------------------------------------------

struct ChainOptions {
  double tau = 0.05;  // relative slack on the predicted interval
  double qs_slack = kDefaultSlack;
  std::span<const BaseId> triple_bases;        // for the quasi-symmetry precondition
  std::span<const PointId> ell_probes;         // probes for ell_eta (required)
  EllEtaOptions ell_options;
  FitOptions fit_options;
  std::span<const BaseId> comparability_bases;  // defaults to the fit centers
};

struct ChainVerdict {
  double comparability = 0;  // C
  double ell_eta = 0;
  RegularityReport reference;  // phi
  RegularityReport test;       // psi, fitted with its own exponent
  double predicted_lower = 0, predicted_upper = 0;  // c3, c4
  double empirical_lower = 0, empirical_upper = 0;  // c3*, c4* at reference Q
  bool pass = false;
  double tau = 0;
};

ChainVerdict check_theorem_chain(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                 const SectionSample& phi, const SectionSample& psi,
                                 const Modulus& eta, std::span<const BaseId> centers,
                                 std::span<const double> radii, const ChainOptions& options);

}  // namespace sections
