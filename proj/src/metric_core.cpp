#include "sections/metric_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sections {

std::array<double, 3> heisenberg_multiply(const std::array<double, 3>& p,
                                          const std::array<double, 3>& q) {
  return {p[0] + q[0], p[1] + q[1], p[2] + q[2] + 0.5 * (p[0] * q[1] - p[1] * q[0])};
}

std::array<double, 3> heisenberg_inverse(const std::array<double, 3>& p) {
  return {-p[0], -p[1], -p[2]};
}

double koranyi_gauge(const std::array<double, 3>& p) {
  const double h = p[0] * p[0] + p[1] * p[1];
  return std::sqrt(std::sqrt(h * h + p[2] * p[2]));
}

double koranyi_distance(const std::array<double, 3>& p, const std::array<double, 3>& q) {
  return koranyi_gauge(heisenberg_multiply(heisenberg_inverse(q), p));
}

// ---------------------------------------------------------------------------
// FiniteMetricSpace
// ---------------------------------------------------------------------------

FiniteMetricSpace FiniteMetricSpace::from_matrix(std::size_t count, std::vector<double> matrix) {
  if (count == 0) throw PreconditionError("metric space needs at least one point");
  if (matrix.size() != count * count)
    throw PreconditionError("distance matrix size does not match point count");
  FiniteMetricSpace s(Backend::kMatrix, count);
  s.data_ = std::move(matrix);
  return s;
}

FiniteMetricSpace FiniteMetricSpace::euclidean(std::size_t dim, std::vector<double> coords) {
  if (dim == 0 || coords.empty() || coords.size() % dim != 0)
    throw PreconditionError("coordinate array does not match dimension");
  FiniteMetricSpace s(Backend::kEuclidean, coords.size() / dim);
  s.dim_ = dim;
  s.data_ = std::move(coords);
  return s;
}

FiniteMetricSpace FiniteMetricSpace::koranyi(std::vector<double> coords) {
  if (coords.empty() || coords.size() % 3 != 0)
    throw PreconditionError("Koranyi points need 3 coordinates each");
  FiniteMetricSpace s(Backend::kKoranyi, coords.size() / 3);
  s.dim_ = 3;
  s.data_ = std::move(coords);
  return s;
}

FiniteMetricSpace FiniteMetricSpace::custom(std::size_t count,
                                            std::function<double(PointId, PointId)> fn) {
  if (count == 0) throw PreconditionError("metric space needs at least one point");
  FiniteMetricSpace s(Backend::kCustom, count);
  s.fn_ = std::move(fn);
  return s;
}

double FiniteMetricSpace::dist(PointId a, PointId b) const {
  switch (backend_) {
    case Backend::kMatrix:
      return data_[static_cast<std::size_t>(a) * count_ + b];
    case Backend::kEuclidean: {
      const double* pa = data_.data() + static_cast<std::size_t>(a) * dim_;
      const double* pb = data_.data() + static_cast<std::size_t>(b) * dim_;
      double acc = 0;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double d = pa[i] - pb[i];
        acc += d * d;
      }
      return std::sqrt(acc);
    }
    case Backend::kKoranyi: {
      const double* pa = data_.data() + static_cast<std::size_t>(a) * 3;
      const double* pb = data_.data() + static_cast<std::size_t>(b) * 3;
      return koranyi_distance({pa[0], pa[1], pa[2]}, {pb[0], pb[1], pb[2]});
    }
    case Backend::kCustom:
      return fn_(a, b);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// validate_metric
// ---------------------------------------------------------------------------

MetricVerdict validate_metric(const FiniteMetricSpace& space, double rel_tol,
                              std::size_t max_report, std::span<const PointId> sample) {
  if (space.size() == 0) throw PreconditionError("validate_metric: empty space");

  std::vector<PointId> ids;
  if (sample.empty()) {
    ids.resize(space.size());
    std::iota(ids.begin(), ids.end(), 0u);
  } else {
    ids.assign(sample.begin(), sample.end());
  }
  const std::size_t n = ids.size();

  MetricVerdict verdict;
  verdict.points_checked = n;
  auto report = [&](MetricViolation v) {
    verdict.ok = false;
    if (verdict.violations.size() < max_report) verdict.violations.push_back(std::move(v));
  };

  // Cache the sampled distance matrix; scans below are cubic in n.
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] = space.dist(ids[i], ids[j]);

  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(d[i * n + i]) > rel_tol)
      report({"identity", ids[i], ids[i], ids[i], d[i * n + i], 0.0});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dij = d[i * n + j];
      const double dji = d[j * n + i];
      if (!(dij > 0))
        report({"positivity", ids[i], ids[j], ids[j], dij, 0.0});
      if (std::abs(dij - dji) > rel_tol * std::max({std::abs(dij), std::abs(dji), 1.0}))
        report({"symmetry", ids[i], ids[j], ids[j], dij, dji});
    }
  }

  for (std::size_t a = 0; a < n && verdict.violations.size() < max_report; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      const double* row_a = d.data() + a * n;
      const double* row_b = d.data() + b * n;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == a || c == b) continue;
        ++verdict.triples_checked;
        const double lhs = row_a[c];
        const double rhs = row_a[b] + row_b[c];
        if (lhs > rhs * (1.0 + rel_tol)) {
          report({"triangle", ids[a], ids[b], ids[c], lhs, rhs});
          if (verdict.violations.size() >= max_report) return verdict;
        }
      }
    }
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// QuotientStructure
// ---------------------------------------------------------------------------

QuotientStructure::QuotientStructure(std::vector<BaseId> fiber_of, std::size_t base_count,
                                     std::vector<double> measure)
    : fiber_of_(std::move(fiber_of)) {
  if (base_count == 0) throw PreconditionError("quotient needs at least one base element");
  if (fiber_of_.empty()) throw PreconditionError("quotient needs at least one point");
  fiber_points_.resize(base_count);
  for (PointId p = 0; p < fiber_of_.size(); ++p) {
    const BaseId y = fiber_of_[p];
    if (y >= base_count) throw PreconditionError("fiber_of refers to an unknown base id");
    fiber_points_[y].push_back(p);
  }
  for (std::size_t y = 0; y < base_count; ++y)
    if (fiber_points_[y].empty()) throw PreconditionError("a fiber is empty; fibers must partition the points");

  if (measure.empty()) {
    measure_.assign(base_count, 1.0);
  } else {
    if (measure.size() != base_count)
      throw PreconditionError("measure size does not match base count");
    for (double w : measure)
      if (!(w > 0)) throw PreconditionError("measure weights must be positive");
    measure_ = std::move(measure);
  }
  total_measure_ = std::accumulate(measure_.begin(), measure_.end(), 0.0);
}

BaseId QuotientStructure::fiber_of(PointId p) const {
  if (p >= fiber_of_.size()) throw PreconditionError("unknown point id");
  return fiber_of_[p];
}

const std::vector<PointId>& QuotientStructure::fiber_points(BaseId y) const {
  if (y >= fiber_points_.size()) throw PreconditionError("unknown base id");
  return fiber_points_[y];
}

double QuotientStructure::measure(BaseId y) const {
  if (y >= measure_.size()) throw PreconditionError("unknown base id");
  return measure_[y];
}

QuotientStructure QuotientStructure::with_measure(std::vector<double> measure) const {
  return QuotientStructure(fiber_of_, fiber_points_.size(), std::move(measure));
}

// ---------------------------------------------------------------------------
// SectionSample
// ---------------------------------------------------------------------------

SectionSample::SectionSample(const QuotientStructure& quotient, std::vector<PointId> assignment)
    : assignment_(std::move(assignment)) {
  if (assignment_.size() != quotient.base_count())
    throw PreconditionError("section must assign exactly one point per base");
  for (BaseId y = 0; y < assignment_.size(); ++y) {
    if (quotient.fiber_of(assignment_[y]) != y)
      throw PreconditionError("section property violated: assigned point is not on its fiber");
  }
}

PointId SectionSample::point_for(BaseId y) const {
  if (y >= assignment_.size()) throw PreconditionError("unknown base id");
  return assignment_[y];
}

bool on_section(const QuotientStructure& quotient, const SectionSample& section, PointId p,
                BaseId* base_out) {
  const BaseId y = quotient.fiber_of(p);
  if (section.point_for(y) != p) return false;
  if (base_out) *base_out = y;
  return true;
}

// ---------------------------------------------------------------------------
// Balls
// ---------------------------------------------------------------------------

namespace {

void check_ball(const FiniteMetricSpace& space, const Ball& ball) {
  if (ball.center >= space.size()) throw PreconditionError("ball center is not a point of the space");
  if (!(ball.radius > 0)) throw PreconditionError("ball radius must be positive");
}

}  // namespace

double fiber_distance(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                      PointId x, BaseId y) {
  if (x >= space.size()) throw PreconditionError("unknown point id");
  double best = std::numeric_limits<double>::infinity();
  for (PointId p : quotient.fiber_points(y)) best = std::min(best, space.dist(x, p));
  return best;
}

std::vector<double> fiber_distance_profile(const FiniteMetricSpace& space,
                                           const QuotientStructure& quotient, PointId x) {
  if (x >= space.size()) throw PreconditionError("unknown point id");
  std::vector<double> profile(quotient.base_count(), std::numeric_limits<double>::infinity());
  for (PointId p = 0; p < quotient.point_count(); ++p) {
    const double d = space.dist(x, p);
    double& slot = profile[quotient.fiber_of(p)];
    if (d < slot) slot = d;
  }
  return profile;
}

std::vector<PointId> ball_points(const FiniteMetricSpace& space, const Ball& ball) {
  check_ball(space, ball);
  std::vector<PointId> out;
  for (PointId p = 0; p < space.size(); ++p)
    if (space.dist(ball.center, p) < ball.radius) out.push_back(p);
  return out;
}

double pushforward_ball_measure(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, const Ball& ball) {
  check_ball(space, ball);
  if (!on_section(quotient, section, ball.center))
    throw PreconditionError("pushforward ball measure needs a center on the section image");
  double total = 0;
  for (BaseId y = 0; y < section.base_count(); ++y)
    if (space.dist(ball.center, section.point_for(y)) < ball.radius) total += quotient.measure(y);
  return total;
}

std::vector<BaseId> project_ball(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                 const Ball& ball, const std::vector<PointId>* restrict_to) {
  check_ball(space, ball);
  std::vector<BaseId> out;
  if (restrict_to == nullptr) {
    const std::vector<double> profile = fiber_distance_profile(space, quotient, ball.center);
    for (BaseId y = 0; y < profile.size(); ++y)
      if (profile[y] < ball.radius) out.push_back(y);
    return out;  // already sorted and unique
  }
  for (PointId p : *restrict_to)
    if (space.dist(ball.center, p) < ball.radius) out.push_back(quotient.fiber_of(p));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace sections
