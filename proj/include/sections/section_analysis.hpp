#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sections/metric_core.hpp"

namespace sections {

// ---------------------------------------------------------------------------
// MonotoneModulus: a nondecreasing function on (0, inf) stored as a fitted
// envelope. Constant below the first breakpoint, constant above the last,
// linear in between. A finite sample only pins a monotone envelope down, not
// a homeomorphism; post-composing with t -> value + c*t for tiny c > 0 gives
// a strictly increasing surjection without changing any sample verdict.
// ---------------------------------------------------------------------------

class MonotoneModulus {
 public:
  // breakpoints strictly increasing and positive; values positive and
  // nondecreasing.
  MonotoneModulus(std::vector<double> breakpoints, std::vector<double> values);

  // Skips the monotonicity validation. Meant for perturbation experiments
  // (e.g. lowering one fitted value to probe envelope minimality).
  static MonotoneModulus unchecked(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double t) const;
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  MonotoneModulus() = default;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// General nondecreasing modulus accepted by the verifiers: either a power law
// coefficient * t^exponent (covers L*t and L*eps^(a-1)*t^a) or a fitted
// envelope.
class Modulus {
 public:
  static Modulus power(double coefficient, double exponent);
  static Modulus envelope(MonotoneModulus env);

  double operator()(double t) const;
  bool is_power() const noexcept { return !env_.has_value(); }
  double coefficient() const noexcept { return coefficient_; }
  double exponent() const noexcept { return exponent_; }
  const MonotoneModulus* envelope_data() const noexcept { return env_ ? &*env_ : nullptr; }

 private:
  Modulus() = default;
  double coefficient_ = 1;
  double exponent_ = 1;
  std::optional<MonotoneModulus> env_;
};

// ---------------------------------------------------------------------------
// Triple records: one per ordered triple of distinct bases.
//   ratio_t = d(phi(y2), fiber(y1)) / d(phi(y3), fiber(y1))
//   ratio_r = d(phi(y1), phi(y2)) / d(phi(y1), phi(y3))
// ---------------------------------------------------------------------------

struct TripleRecord {
  BaseId y1 = 0, y2 = 0, y3 = 0;
  double ratio_t = 0;
  double ratio_r = 0;
};

struct TripleScan {
  std::vector<TripleRecord> records;
  std::size_t skipped = 0;        // degenerate denominators / fiber coincidences
  std::vector<BaseId> bases;      // bases actually enumerated
};

// Enumerates ordered triples of distinct bases (all bases when `bases` is
// empty). Triples whose fiber distances or image distances fall below the
// denominator floor are skipped and counted, never silently dropped.
TripleScan enumerate_triples(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                             const SectionSample& section, std::span<const BaseId> bases = {});

// ---------------------------------------------------------------------------
// Quasi-symmetry verdicts and the envelope fitter
// ---------------------------------------------------------------------------

struct QsViolation {
  TripleRecord record;
  double eta_t = 0;
};

struct QsVerdict {
  bool pass = true;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::vector<QsViolation> violations;  // first <= max_report offenders
};

// pass iff ratio_r <= eta(ratio_t) * (1 + slack) for every record.
QsVerdict check_quasi_symmetry(std::span<const TripleRecord> records, const Modulus& eta,
                               double slack = kDefaultSlack, std::size_t max_report = 100);

// Least nondecreasing envelope dominating the records: per-t maxima scanned
// in increasing t, keeping the strict running-max increases (so every kept
// breakpoint value is attained by a source record).
MonotoneModulus fit_eta(std::span<const TripleRecord> records);

// ---------------------------------------------------------------------------
// Minimal constants for the named section classes
// ---------------------------------------------------------------------------

struct PairWitness {
  BaseId y1 = 0, y2 = 0;
  double value = 0;
};

// max over ordered base pairs of d(phi(y1), phi(y2)) / d(phi(y1), fiber(y2)).
double minimal_lipschitz_constant(const FiniteMetricSpace& space,
                                  const QuotientStructure& quotient, const SectionSample& section,
                                  std::span<const BaseId> bases = {},
                                  PairWitness* witness = nullptr,
                                  std::size_t* degenerate_pairs = nullptr);

struct HolderFit {
  double constant = 0;    // L
  double separation = 0;  // eps = min pairwise image distance
  double alpha = 0;
  Modulus implied_modulus() const;  // L * eps^(alpha-1) * t^alpha
};

HolderFit minimal_holder_constant(const FiniteMetricSpace& space,
                                  const QuotientStructure& quotient, const SectionSample& section,
                                  double alpha, std::span<const BaseId> bases = {});

// ---------------------------------------------------------------------------
// ell_eta: sup over probes q (g = phi(pi(q))) and bases ybar with g, q off
// that fiber, of eta(d(g, fiber(ybar)) / d(q, fiber(ybar))). This follows the
// ball-inclusion proof; the literal same-fiber-pair reading degenerates to
// eta(1) on a section image and is reported alongside.
// ---------------------------------------------------------------------------

struct EllEtaOptions {
  double ceiling = 1e6;             // divergence flag threshold
  std::span<const BaseId> bases;    // bases scanned for the sup; empty = all
};

struct EllEtaResult {
  double value = 0;
  bool diverged = false;
  PointId witness_probe = 0;
  BaseId witness_base = 0;
  double eta_at_one = 0;            // literal degenerate reading
  std::size_t probes_used = 0;
  std::size_t bases_used = 0;
  std::size_t skipped = 0;          // (probe, base) pairs on the fiber
  // sup restricted to each scanned base, aligned with the base list; the
  // quantifier over ybar is resolved as "all sampled bases", so the per-base
  // breakdown is kept visible.
  std::vector<double> per_base_sup;
};

EllEtaResult compute_ell_eta(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                             const SectionSample& section, const Modulus& eta,
                             std::span<const PointId> probes, const EllEtaOptions& options = {});

// ---------------------------------------------------------------------------
// Eccentricity of the image of a fiber-distance ball
// ---------------------------------------------------------------------------

struct EccentricityRecord {
  BaseId base = 0;
  double radius = 0;
  double sup_image = 0;   // L: sup d(phi(ybar), phi(y)) over fiber-dist <= r
  double inf_image = 0;   // l: inf d(phi(ybar), phi(y)) over fiber-dist >= r
  double ratio = 0;       // H = L / l when both sides are defined
  bool sup_defined = false;
  bool inf_defined = false;
};

EccentricityRecord eccentricity(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, BaseId ybar, double r);

// ---------------------------------------------------------------------------
// Discrete quasi-conformality surrogate. For each base y1,
//   S(y1) = sup eta(d(x, fiber(y1)) / d(x', fiber(y1)))
// over ordered probe pairs x, x' on a common fiber != y1 with 0 < d(x,x') <=
// delta. Passes iff ratio_r <= S(y1) * (1+slack) and S(y1) <= bound * (1+slack)
// for every record. Fibers with no delta-pair are flagged and the verdict
// marked incomplete.
// ---------------------------------------------------------------------------

struct QcVerdict {
  bool pass = true;
  bool incomplete = false;
  double delta = 0;
  double bound = 0;
  std::vector<BaseId> unsampled_fibers;
  std::vector<QsViolation> violations;   // eta_t carries S(y1)
  double max_fiber_sup = 0;              // max S over bases with data
  std::size_t pairs_used = 0;
};

QcVerdict check_quasi_conformal(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, const Modulus& eta, double bound,
                                double delta, std::span<const PointId> probes,
                                double slack = kDefaultSlack,
                                std::span<const BaseId> triple_bases = {});

}  // namespace sections
