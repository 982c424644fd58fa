#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sections/errors.hpp"

namespace sections {

using PointId = std::uint32_t;
using BaseId = std::uint32_t;

// Relative slack absorbed by all metric comparisons in verifiers.
inline constexpr double kDefaultSlack = 1e-9;
// Absolute floor below which a denominator is treated as a fiber coincidence.
inline constexpr double kDenominatorFloor = 1e-12;

// ---------------------------------------------------------------------------
// Heisenberg / Korányi primitives (also one of the ingestion metric kinds).
// Group law: (x,y,t)·(x',y',t') = (x+x', y+y', t+t'+(xy'-yx')/2).
// Gauge: ||(x,y,t)|| = ((x^2+y^2)^2 + t^2)^(1/4).
// ---------------------------------------------------------------------------

std::array<double, 3> heisenberg_multiply(const std::array<double, 3>& p,
                                          const std::array<double, 3>& q);
std::array<double, 3> heisenberg_inverse(const std::array<double, 3>& p);
double koranyi_gauge(const std::array<double, 3>& p);
double koranyi_distance(const std::array<double, 3>& p, const std::array<double, 3>& q);

// ---------------------------------------------------------------------------
// FiniteMetricSpace: point ids 0..size()-1 plus a total symmetric distance.
// Geometry lives only in the distance backend; ids are opaque.
// Immutable after construction.
// ---------------------------------------------------------------------------

class FiniteMetricSpace {
 public:
  // Dense full matrix, row-major, size count*count.
  static FiniteMetricSpace from_matrix(std::size_t count, std::vector<double> matrix);
  // Flat coordinates, `dim` per point.
  static FiniteMetricSpace euclidean(std::size_t dim, std::vector<double> coords);
  // Flat (x, y, t) coordinates, 3 per point, Korányi gauge distance.
  static FiniteMetricSpace koranyi(std::vector<double> coords);
  static FiniteMetricSpace custom(std::size_t count, std::function<double(PointId, PointId)> fn);

  std::size_t size() const noexcept { return count_; }
  double dist(PointId a, PointId b) const;

 private:
  enum class Backend { kMatrix, kEuclidean, kKoranyi, kCustom };

  FiniteMetricSpace(Backend backend, std::size_t count) : backend_(backend), count_(count) {}

  Backend backend_;
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::function<double(PointId, PointId)> fn_;
};

// ---------------------------------------------------------------------------
// Metric validation
// ---------------------------------------------------------------------------

struct MetricViolation {
  std::string kind;  // "identity" | "positivity" | "symmetry" | "triangle"
  PointId a = 0, b = 0, c = 0;
  double lhs = 0, rhs = 0;
};

struct MetricVerdict {
  bool ok = true;
  std::size_t points_checked = 0;
  std::size_t triples_checked = 0;
  std::vector<MetricViolation> violations;  // first <= max_report offenders
};

// Checks identity-of-indiscernibles, symmetry and the triangle inequality on
// all triples of `sample` (defaults to every point) within relative slack.
MetricVerdict validate_metric(const FiniteMetricSpace& space, double rel_tol = kDefaultSlack,
                              std::size_t max_report = 100, std::span<const PointId> sample = {});

// ---------------------------------------------------------------------------
// QuotientStructure: fiber partition of the point set plus a measure on the
// base. Realizes the quotient map as a base-id lookup.
// ---------------------------------------------------------------------------

class QuotientStructure {
 public:
  // fiber_of[p] = base id of p. Empty measure means counting measure.
  QuotientStructure(std::vector<BaseId> fiber_of, std::size_t base_count,
                    std::vector<double> measure = {});

  std::size_t base_count() const noexcept { return fiber_points_.size(); }
  std::size_t point_count() const noexcept { return fiber_of_.size(); }
  BaseId fiber_of(PointId p) const;
  const std::vector<PointId>& fiber_points(BaseId y) const;
  double measure(BaseId y) const;
  double total_measure() const noexcept { return total_measure_; }
  const std::vector<double>& measures() const noexcept { return measure_; }

  QuotientStructure with_measure(std::vector<double> measure) const;

 private:
  std::vector<BaseId> fiber_of_;
  std::vector<std::vector<PointId>> fiber_points_;
  std::vector<double> measure_;
  double total_measure_ = 0;
};

// ---------------------------------------------------------------------------
// SectionSample: one chosen point per base, pi(assignment(y)) = y.
// ---------------------------------------------------------------------------

class SectionSample {
 public:
  SectionSample(const QuotientStructure& quotient, std::vector<PointId> assignment);

  PointId point_for(BaseId y) const;
  std::size_t base_count() const noexcept { return assignment_.size(); }
  const std::vector<PointId>& assignment() const noexcept { return assignment_; }

 private:
  std::vector<PointId> assignment_;
};

// Returns the base id if `p` is on the section image.
bool on_section(const QuotientStructure& quotient, const SectionSample& section, PointId p,
                BaseId* base_out = nullptr);

// ---------------------------------------------------------------------------
// Balls and fiber distances
// ---------------------------------------------------------------------------

struct Ball {
  PointId center = 0;
  double radius = 0;  // > 0; balls are open throughout
};

// min over a in fiber(y) of dist(x, a); the fiber is finite so the inf is a min.
double fiber_distance(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                      PointId x, BaseId y);

// fiber_distance(x, y) for every base y, in one pass over the points.
std::vector<double> fiber_distance_profile(const FiniteMetricSpace& space,
                                           const QuotientStructure& quotient, PointId x);

// Open ball {p : dist(center, p) < radius}.
std::vector<PointId> ball_points(const FiniteMetricSpace& space, const Ball& ball);

// Sum of measure(y) over bases whose section point lies in the ball.
// Requires ball.center to be on the section image.
double pushforward_ball_measure(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                const SectionSample& section, const Ball& ball);

// {fiber_of(p) : p in ball, p in restrict_to}; restrict_to null means all
// points. Returned sorted ascending, duplicates removed.
std::vector<BaseId> project_ball(const FiniteMetricSpace& space, const QuotientStructure& quotient,
                                 const Ball& ball,
                                 const std::vector<PointId>* restrict_to = nullptr);

}  // namespace sections
