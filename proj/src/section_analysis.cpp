#include "sections/section_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace sections {

// ---------------------------------------------------------------------------
// MonotoneModulus / Modulus
// ---------------------------------------------------------------------------

MonotoneModulus::MonotoneModulus(std::vector<double> breakpoints, std::vector<double> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size())
    throw PreconditionError("envelope needs matching nonempty breakpoint/value arrays");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > 0)) throw PreconditionError("envelope breakpoints must be positive");
    if (!(values[i] > 0)) throw PreconditionError("envelope values must be positive");
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
      throw PreconditionError("envelope breakpoints must be strictly increasing");
    if (i > 0 && values[i] < values[i - 1])
      throw PreconditionError("envelope values must be nondecreasing");
  }
  breakpoints_ = std::move(breakpoints);
  values_ = std::move(values);
}

MonotoneModulus MonotoneModulus::unchecked(std::vector<double> breakpoints,
                                           std::vector<double> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size())
    throw PreconditionError("envelope needs matching nonempty breakpoint/value arrays");
  MonotoneModulus m;
  m.breakpoints_ = std::move(breakpoints);
  m.values_ = std::move(values);
  return m;
}

double MonotoneModulus::operator()(double t) const {
  if (t <= breakpoints_.front()) return values_.front();
  if (t >= breakpoints_.back()) return values_.back();
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - breakpoints_.begin());
  const std::size_t lo = hi - 1;
  const double span = breakpoints_[hi] - breakpoints_[lo];
  const double w = (t - breakpoints_[lo]) / span;
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

Modulus Modulus::power(double coefficient, double exponent) {
  if (!(coefficient > 0)) throw PreconditionError("modulus coefficient must be positive");
  if (exponent < 0) throw PreconditionError("modulus exponent must be nonnegative");
  Modulus m;
  m.coefficient_ = coefficient;
  m.exponent_ = exponent;
  return m;
}

Modulus Modulus::envelope(MonotoneModulus env) {
  Modulus m;
  m.env_ = std::move(env);
  return m;
}

double Modulus::operator()(double t) const {
  if (env_) return (*env_)(t);
  if (exponent_ == 1.0) return coefficient_ * t;
  if (exponent_ == 0.0) return coefficient_;
  return coefficient_ * std::pow(t, exponent_);
}

// ---------------------------------------------------------------------------
// Pairwise scan scaffolding shared by the verifiers
// ---------------------------------------------------------------------------

namespace {

std::vector<BaseId> all_bases(const QuotientStructure& quotient) {
  std::vector<BaseId> bases(quotient.base_count());
  std::iota(bases.begin(), bases.end(), 0u);
  return bases;
}

// image[i][j] = d(phi(b_i), phi(b_j)); fiber[i][j] = d(phi(b_i), fiber(b_j)).
struct PairTables {
  std::vector<BaseId> bases;
  std::vector<double> image;
  std::vector<double> fiber;
  std::size_t n = 0;

  double img(std::size_t i, std::size_t j) const { return image[i * n + j]; }
  double fib(std::size_t i, std::size_t j) const { return fiber[i * n + j]; }
};

PairTables build_pair_tables(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                             const SectionSample& section, std::span<const BaseId> bases) {
  PairTables t;
  t.bases = bases.empty() ? all_bases(quotient) : std::vector<BaseId>(bases.begin(), bases.end());
  t.n = t.bases.size();
  t.image.resize(t.n * t.n);
  t.fiber.resize(t.n * t.n);
  for (std::size_t i = 0; i < t.n; ++i) {
    const PointId p = section.point_for(t.bases[i]);
    for (std::size_t j = 0; j < t.n; ++j) {
      t.image[i * t.n + j] = space.dist(p, section.point_for(t.bases[j]));
      t.fiber[i * t.n + j] = fiber_distance(space, quotient, p, t.bases[j]);
    }
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// enumerate_triples
// ---------------------------------------------------------------------------

TripleScan enumerate_triples(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                             const SectionSample& section, std::span<const BaseId> bases) {
  PairTables t = build_pair_tables(space, quotient, section, bases);
  if (t.n < 3) throw PreconditionError("triple enumeration needs at least three bases");
  if (t.n * (t.n - 1) * (t.n - 2) > std::size_t{50'000'000})
    throw PreconditionError(
        "triple scan over " + std::to_string(t.n) +
        " bases would materialize more than 5e7 records; pass a capped base subset");

  TripleScan scan;
  scan.bases = t.bases;
  scan.records.reserve(t.n * (t.n - 1) * (t.n - 2));
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = 0; j < t.n; ++j) {
      if (j == i) continue;
      const double fd2 = t.fib(j, i);  // d(phi(y2), fiber(y1))
      const double d12 = t.img(i, j);
      for (std::size_t k = 0; k < t.n; ++k) {
        if (k == i || k == j) continue;
        const double fd3 = t.fib(k, i);
        const double d13 = t.img(i, k);
        if (fd2 < kDenominatorFloor || fd3 < kDenominatorFloor || d13 < kDenominatorFloor ||
            d12 < kDenominatorFloor) {
          ++scan.skipped;
          continue;
        }
        scan.records.push_back({t.bases[i], t.bases[j], t.bases[k], fd2 / fd3, d12 / d13});
      }
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// check_quasi_symmetry / fit_eta
// ---------------------------------------------------------------------------

QsVerdict check_quasi_symmetry(std::span<const TripleRecord> records, const Modulus& eta,
                               double slack, std::size_t max_report) {
  QsVerdict verdict;
  verdict.checked = records.size();
  for (const TripleRecord& rec : records) {
    const double bound = eta(rec.ratio_t);
    if (rec.ratio_r > bound * (1.0 + slack)) {
      verdict.pass = false;
      if (verdict.violations.size() < max_report) verdict.violations.push_back({rec, bound});
    }
  }
  return verdict;
}

MonotoneModulus fit_eta(std::span<const TripleRecord> records) {
  if (records.empty()) throw PreconditionError("envelope fit needs at least one record");

  // Per-t maxima (equal breakpoints merged by taking the max)...
  std::map<double, double> per_t;
  for (const TripleRecord& rec : records) {
    auto [it, inserted] = per_t.emplace(rec.ratio_t, rec.ratio_r);
    if (!inserted && rec.ratio_r > it->second) it->second = rec.ratio_r;
  }
  // ...then the running maximum, keeping only strict increases so that every
  // stored value is attained by a record at its own breakpoint.
  std::vector<double> breakpoints, values;
  double run = -std::numeric_limits<double>::infinity();
  for (const auto& [t, v] : per_t) {
    if (v > run) {
      run = v;
      breakpoints.push_back(t);
      values.push_back(v);
    }
  }
  return MonotoneModulus(std::move(breakpoints), std::move(values));
}

// ---------------------------------------------------------------------------
// minimal constants
// ---------------------------------------------------------------------------

double minimal_lipschitz_constant(const FiniteMetricSpace& space,
                                  const QuotientStructure& quotient, const SectionSample& section,
                                  std::span<const BaseId> bases, PairWitness* witness,
                                  std::size_t* degenerate_pairs) {
  PairTables t = build_pair_tables(space, quotient, section, bases);
  if (t.n < 2) throw PreconditionError("Lipschitz constant needs at least two bases");
  double best = 0;
  std::size_t degenerate = 0;
  PairWitness w;
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = 0; j < t.n; ++j) {
      if (j == i) continue;
      const double fd = t.fib(i, j);
      if (fd < kDenominatorFloor) {
        ++degenerate;  // numerically on the foreign fiber; impossible in exact arithmetic
        continue;
      }
      const double ratio = t.img(i, j) / fd;
      if (ratio > best) {
        best = ratio;
        w = {t.bases[i], t.bases[j], ratio};
      }
    }
  }
  if (witness) *witness = w;
  if (degenerate_pairs) *degenerate_pairs = degenerate;
  return best;
}

Modulus HolderFit::implied_modulus() const {
  return Modulus::power(constant * std::pow(separation, alpha - 1.0), alpha);
}

HolderFit minimal_holder_constant(const FiniteMetricSpace& space,
                                  const QuotientStructure& quotient, const SectionSample& section,
                                  double alpha, std::span<const BaseId> bases) {
  if (!(alpha > 0) || !(alpha < 1))
    throw PreconditionError("Holder exponent must lie in (0, 1)");
  PairTables t = build_pair_tables(space, quotient, section, bases);
  if (t.n < 2) throw PreconditionError("Holder constant needs at least two bases");

  HolderFit fit;
  fit.alpha = alpha;
  fit.separation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = 0; j < t.n; ++j) {
      if (j == i) continue;
      const double d = t.img(i, j);
      fit.separation = std::min(fit.separation, d);
      const double fd = t.fib(i, j);
      if (fd < kDenominatorFloor) continue;
      fit.constant = std::max(fit.constant, d / std::pow(fd, alpha));
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// compute_ell_eta
// ---------------------------------------------------------------------------

EllEtaResult compute_ell_eta(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                             const SectionSample& section, const Modulus& eta,
                             std::span<const PointId> probes, const EllEtaOptions& options) {
  if (probes.empty()) throw PreconditionError("ell_eta needs a nonempty probe set");
  const std::vector<BaseId> bases =
      options.bases.empty() ? all_bases(quotient)
                            : std::vector<BaseId>(options.bases.begin(), options.bases.end());

  EllEtaResult result;
  result.eta_at_one = eta(1.0);
  result.probes_used = probes.size();
  result.bases_used = bases.size();
  result.value = -std::numeric_limits<double>::infinity();
  result.per_base_sup.assign(bases.size(), -std::numeric_limits<double>::infinity());

  // d(phi(yq), fiber(ybar)) depends on the probe only through its base;
  // cache those rows.
  std::vector<std::vector<double>> g_rows(quotient.base_count());
  auto g_row = [&](BaseId yq) -> const std::vector<double>& {
    auto& row = g_rows[yq];
    if (row.empty()) {
      const PointId g = section.point_for(yq);
      row.reserve(bases.size());
      for (BaseId ybar : bases) row.push_back(fiber_distance(space, quotient, g, ybar));
    }
    return row;
  };

  for (const PointId q : probes) {
    const BaseId yq = quotient.fiber_of(q);
    const std::vector<double>& gfd = g_row(yq);
    for (std::size_t k = 0; k < bases.size(); ++k) {
      const BaseId ybar = bases[k];
      if (ybar == yq) {
        ++result.skipped;  // g and q both sit on this fiber
        continue;
      }
      const double fq = fiber_distance(space, quotient, q, ybar);
      const double fg = gfd[k];
      if (fq < kDenominatorFloor || fg < kDenominatorFloor) {
        ++result.skipped;
        continue;
      }
      const double value = eta(fg / fq);
      if (value > result.per_base_sup[k]) result.per_base_sup[k] = value;
      if (value > result.value) {
        result.value = value;
        result.witness_probe = q;
        result.witness_base = ybar;
        if (result.value > options.ceiling) {
          result.diverged = true;
          return result;
        }
      }
    }
  }
  if (!std::isfinite(result.value)) {
    // every (probe, base) pair was skipped; nothing to take a sup over
    throw PreconditionError("ell_eta: all probe/base pairs were degenerate");
  }
  return result;
}

// ---------------------------------------------------------------------------
// eccentricity
// ---------------------------------------------------------------------------

EccentricityRecord eccentricity(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, BaseId ybar, double r) {
  if (!(r > 0)) throw PreconditionError("eccentricity radius must be positive");
  const PointId p = section.point_for(ybar);
  EccentricityRecord rec;
  rec.base = ybar;
  rec.radius = r;
  double sup = 0;
  double inf = std::numeric_limits<double>::infinity();
  for (BaseId y = 0; y < section.base_count(); ++y) {
    if (y == ybar) continue;
    const double fd = fiber_distance(space, quotient, p, y);
    const double d = space.dist(p, section.point_for(y));
    if (fd <= r) {
      sup = std::max(sup, d);
      rec.sup_defined = true;
    }
    if (fd >= r) {
      inf = std::min(inf, d);
      rec.inf_defined = true;
    }
  }
  if (rec.sup_defined) rec.sup_image = sup;
  if (rec.inf_defined) rec.inf_image = inf;
  if (rec.sup_defined && rec.inf_defined && inf > 0) rec.ratio = sup / inf;
  return rec;
}

// ---------------------------------------------------------------------------
// check_quasi_conformal
// ---------------------------------------------------------------------------

QcVerdict check_quasi_conformal(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, const Modulus& eta, double bound,
                                double delta, std::span<const PointId> probes, double slack,
                                std::span<const BaseId> triple_bases) {
  if (!(delta > 0)) throw PreconditionError("quasi-conformal delta must be positive");
  if (!(bound > 0)) throw PreconditionError("quasi-conformal bound must be positive");
  if (probes.empty()) throw PreconditionError("quasi-conformal check needs probe points");

  QcVerdict verdict;
  verdict.delta = delta;
  verdict.bound = bound;

  // Ordered probe pairs on a common fiber within delta.
  std::vector<std::vector<PointId>> by_fiber(quotient.base_count());
  for (PointId p : probes) by_fiber[quotient.fiber_of(p)].push_back(p);

  struct Pair {
    PointId x, x_prime;
    BaseId fiber;
  };
  std::vector<Pair> pairs;
  for (BaseId y = 0; y < quotient.base_count(); ++y) {
    bool sampled = false;
    const auto& pts = by_fiber[y];
    for (std::size_t a = 0; a < pts.size(); ++a) {
      for (std::size_t b = 0; b < pts.size(); ++b) {
        if (a == b) continue;
        const double d = space.dist(pts[a], pts[b]);
        if (d > 0 && d <= delta) {
          pairs.push_back({pts[a], pts[b], y});
          sampled = true;
        }
      }
    }
    if (!sampled) {
      verdict.unsampled_fibers.push_back(y);
      verdict.incomplete = true;
    }
  }
  verdict.pairs_used = pairs.size();

  const TripleScan scan = enumerate_triples(space, quotient, section, triple_bases);

  // Fiber-distance rows for every point that participates in a pair.
  std::vector<std::vector<double>> profile_cache(quotient.point_count());
  auto profile = [&](PointId p) -> const std::vector<double>& {
    auto& row = profile_cache[p];
    if (row.empty()) row = fiber_distance_profile(space, quotient, p);
    return row;
  };

  // S(y1) over the bases that occur as y1 in the records.
  std::vector<double> fiber_sup(quotient.base_count(),
                                -std::numeric_limits<double>::infinity());
  std::vector<bool> sup_known(quotient.base_count(), false);
  auto ratio_sup = [&](BaseId y1) {
    if (sup_known[y1]) return fiber_sup[y1];
    double s = -std::numeric_limits<double>::infinity();
    for (const Pair& pr : pairs) {
      if (pr.fiber == y1) continue;  // x, x' must avoid fiber(y1)
      const double fx = profile(pr.x)[y1];
      const double fxp = profile(pr.x_prime)[y1];
      if (fx < kDenominatorFloor || fxp < kDenominatorFloor) continue;
      s = std::max(s, eta(fx / fxp));
    }
    sup_known[y1] = true;
    fiber_sup[y1] = s;
    return s;
  };

  for (const TripleRecord& rec : scan.records) {
    const double s = ratio_sup(rec.y1);
    if (!std::isfinite(s)) {
      verdict.incomplete = true;
      continue;
    }
    verdict.max_fiber_sup = std::max(verdict.max_fiber_sup, s);
    const bool below_sup = rec.ratio_r <= s * (1.0 + slack);
    const bool sup_bounded = s <= bound * (1.0 + slack);
    if (!below_sup || !sup_bounded) {
      verdict.pass = false;
      if (verdict.violations.size() < 100) verdict.violations.push_back({rec, s});
    }
  }
  return verdict;
}

}  // namespace sections
