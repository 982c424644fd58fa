#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sections/metric_core.hpp"
#include "sections/model_spaces.hpp"

using namespace sections;

namespace {

FiniteMetricSpace line_space(std::vector<double> positions) {
  std::vector<double> coords = std::move(positions);
  return FiniteMetricSpace::euclidean(1, std::move(coords));
}

}  // namespace

TEST_CASE("validate_metric accepts collinear points") {
  const FiniteMetricSpace space = line_space({0, 1, 2});
  const MetricVerdict verdict = validate_metric(space);
  CHECK(verdict.ok);
  CHECK(verdict.violations.empty());
  CHECK(verdict.triples_checked == 6);
}

TEST_CASE("validate_metric reports asymmetry") {
  const FiniteMetricSpace space = FiniteMetricSpace::custom(
      2, [](PointId a, PointId b) { return a == b ? 0.0 : (a < b ? 1.0 : 2.0); });
  const MetricVerdict verdict = validate_metric(space);
  CHECK_FALSE(verdict.ok);
  REQUIRE_FALSE(verdict.violations.empty());
  CHECK(verdict.violations.front().kind == "symmetry");
}

TEST_CASE("validate_metric reports a triangle violation") {
  // d(a,b) = d(b,c) = 1 but d(a,c) = 3
  std::vector<double> m = {0, 1, 3,  //
                           1, 0, 1,  //
                           3, 1, 0};
  const FiniteMetricSpace space = FiniteMetricSpace::from_matrix(3, m);
  const MetricVerdict verdict = validate_metric(space);
  CHECK_FALSE(verdict.ok);
  bool triangle = false;
  for (const auto& v : verdict.violations) triangle |= v.kind == "triangle";
  CHECK(triangle);
}

TEST_CASE("fiber distance in a plane foliation is the horizontal offset") {
  std::vector<double> bases(11);
  std::iota(bases.begin(), bases.end(), -5.0);
  std::vector<double> heights(21);
  std::iota(heights.begin(), heights.end(), -10.0);
  const ModelBundle bundle = build_euclidean_foliation(bases, heights);

  // point (0, 0): base index 5, height index 10
  const PointId x = static_cast<PointId>(5 * 21 + 10);
  const BaseId fiber_at_3 = 8;  // base coordinate 3
  CHECK(fiber_distance(bundle.space, bundle.quotient, x, fiber_at_3) == 3.0);
  CHECK(fiber_distance(bundle.space, bundle.quotient, x, 5) == 0.0);

  SUBCASE("profile agrees with per-base scans and the minimum is attained") {
    const std::vector<double> profile = fiber_distance_profile(bundle.space, bundle.quotient, x);
    for (BaseId y = 0; y < bundle.quotient.base_count(); ++y) {
      CHECK(profile[y] == fiber_distance(bundle.space, bundle.quotient, x, y));
      bool attained = false;
      for (PointId p : bundle.quotient.fiber_points(y)) {
        CHECK(profile[y] <= bundle.space.dist(x, p));
        attained |= bundle.space.dist(x, p) == profile[y];
      }
      CHECK(attained);
    }
  }
}

TEST_CASE("Heisenberg center-coset fiber distance") {
  const ModelBundle bundle =
      build_heisenberg({{0, 0}, {1, 0}}, {-5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5});
  // point (1, 0, 0) is base 1 at center index 5
  const PointId p = static_cast<PointId>(1 * 11 + 5);
  CHECK(fiber_distance(bundle.space, bundle.quotient, p, 0) == 1.0);
}

TEST_CASE("Koranyi gauge distances") {
  CHECK(koranyi_distance({1, 0, 0}, {0, 0, 0}) == 1.0);
  CHECK(koranyi_distance({0, 0, 1}, {0, 0, 0}) == 1.0);
  // (0,1,0)^-1 * (1,0,0) = (1,-1,1/2); gauge^4 = (1+1)^2 + 1/4 = 4.25
  const double expected = std::pow(4.25, 0.25);
  CHECK(koranyi_distance({1, 0, 0}, {0, 1, 0}) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(koranyi_distance({1, 0, 0}, {0, 1, 0}) ==
        koranyi_distance({0, 1, 0}, {1, 0, 0}));
}

TEST_CASE("ball_points on a line") {
  std::vector<double> bases(10);
  std::iota(bases.begin(), bases.end(), 0.0);
  const ModelBundle bundle = build_euclidean_foliation(bases, {0.0});

  const auto points = ball_points(bundle.space, {5, 2.5});
  CHECK(points == std::vector<PointId>{3, 4, 5, 6, 7});
  CHECK(ball_points(bundle.space, {5, 0.5}) == std::vector<PointId>{5});
  CHECK(ball_points(bundle.space, {5, 100.0}).size() == 10);
}

TEST_CASE("pushforward ball measure") {
  std::vector<double> bases(10);
  std::iota(bases.begin(), bases.end(), 0.0);
  const ModelBundle bundle = build_euclidean_foliation(bases, {0.0});
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;

  const PointId center = section.point_for(5);
  CHECK(pushforward_ball_measure(bundle.space, bundle.quotient, section, {center, 2.5}) == 5.0);
  CHECK(pushforward_ball_measure(bundle.space, bundle.quotient, section, {center, 0.5}) == 1.0);

  SUBCASE("linearity in the measure") {
    const QuotientStructure weighted = bundle.quotient.with_measure(std::vector<double>(10, 2.0));
    const SectionSample s2(weighted, section.assignment());
    CHECK(pushforward_ball_measure(bundle.space, weighted, s2, {center, 2.5}) == 10.0);
  }

  SUBCASE("monotone in the radius") {
    double last = 0;
    for (double r : {0.5, 1.5, 2.5, 3.5, 7.5, 20.0}) {
      const double m = pushforward_ball_measure(bundle.space, bundle.quotient, section, {center, r});
      CHECK(m >= last);
      last = m;
    }
  }

  SUBCASE("center must be on the section image") {
    const ModelBundle thick = build_euclidean_foliation(bases, {0.0, 1.0});
    const SectionSample s = generate_section(thick, SectionSpec{}).section;
    const PointId off = thick.fiber_axis[5][1].point;  // height 1, not on the zero graph
    CHECK_THROWS_AS(pushforward_ball_measure(thick.space, thick.quotient, s, {off, 1.0}),
                    PreconditionError);
  }
}

TEST_CASE("project_ball in the plane") {
  std::vector<double> grid(11);
  std::iota(grid.begin(), grid.end(), -5.0);
  const ModelBundle bundle = build_euclidean_foliation(grid, grid);
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;

  const PointId origin = static_cast<PointId>(5 * 11 + 5);  // (0, 0)
  CHECK(project_ball(bundle.space, bundle.quotient, {origin, 1.0}) == std::vector<BaseId>{5});

  const std::vector<PointId>& image = section.assignment();
  CHECK(project_ball(bundle.space, bundle.quotient, {origin, 1.0}, &image) ==
        std::vector<BaseId>{5});
  CHECK(project_ball(bundle.space, bundle.quotient, {origin, 1000.0}).size() ==
        bundle.quotient.base_count());

  SUBCASE("restriction shrinks the projection") {
    for (double r : {0.7, 1.3, 2.9, 6.2}) {
      const auto full = project_ball(bundle.space, bundle.quotient, {origin, r});
      const auto restricted = project_ball(bundle.space, bundle.quotient, {origin, r}, &image);
      CHECK(std::includes(full.begin(), full.end(), restricted.begin(), restricted.end()));
    }
  }
}

TEST_CASE("section distance dominates fiber distance") {
  std::vector<double> bases(9);
  std::iota(bases.begin(), bases.end(), -4.0);
  std::vector<double> heights(9);
  std::iota(heights.begin(), heights.end(), 0.0);
  const ModelBundle bundle = build_euclidean_foliation(bases, heights);
  SectionSpec spec;
  spec.graph = SectionSpec::Graph::kAbs;
  const SectionSample section = generate_section(bundle, spec).section;

  for (BaseId y1 = 0; y1 < section.base_count(); ++y1)
    for (BaseId y2 = 0; y2 < section.base_count(); ++y2) {
      if (y1 == y2) continue;
      const double fd = fiber_distance(bundle.space, bundle.quotient, section.point_for(y1), y2);
      CHECK(fd <= bundle.space.dist(section.point_for(y1), section.point_for(y2)));
    }
}

TEST_CASE("quotient and section invariants are enforced") {
  CHECK_THROWS_AS(QuotientStructure({0, 0, 1}, 3), PreconditionError);  // fiber 2 empty
  CHECK_THROWS_AS(QuotientStructure({0, 1}, 2, {1.0, 0.0}), PreconditionError);
  CHECK_THROWS_AS(QuotientStructure({0, 5}, 2), PreconditionError);

  const QuotientStructure q({0, 0, 1}, 2);
  CHECK_THROWS_AS(SectionSample(q, {2, 1}), PreconditionError);  // point 2 lies on fiber 1
  const SectionSample ok(q, {1, 2});
  CHECK(ok.point_for(0) == 1);
}
