#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "sections/model_spaces.hpp"
#include "sections/regularity.hpp"
#include "sections/util.hpp"

using namespace sections;

namespace {

ModelBundle line_model(int n, std::vector<double> heights = {0.0}) {
  std::vector<double> bases(n);
  std::iota(bases.begin(), bases.end(), 0.0);
  return build_euclidean_foliation(bases, std::move(heights));
}

std::vector<BaseId> interior_centers(const ModelBundle& bundle, double r_max, std::size_t cap) {
  std::vector<BaseId> eligible;
  for (BaseId y = 0; y < bundle.quotient.base_count(); ++y)
    if (bundle.interior_radius[y] >= r_max) eligible.push_back(y);
  std::vector<BaseId> out;
  for (std::uint32_t i : strided_subset(eligible.size(), cap)) out.push_back(eligible[i]);
  return out;
}

std::vector<PointId> all_points(const ModelBundle& bundle) {
  std::vector<PointId> out(bundle.quotient.point_count());
  std::iota(out.begin(), out.end(), 0u);
  return out;
}

}  // namespace

TEST_CASE("comparability constant") {
  SUBCASE("vertical foliations give exactly one") {
    const ModelBundle bundle = line_model(20, {-3, -2, -1, 0, 1, 2, 3});
    std::vector<std::pair<PointId, PointId>> pairs;
    for (BaseId y = 0; y < bundle.quotient.base_count(); y += 4) {
      const auto& pts = bundle.quotient.fiber_points(y);
      pairs.emplace_back(pts.front(), pts.back());
    }
    const std::vector<double> radii = {0.9, 1.7, 3.3};
    ComparabilityWitness witness;
    CHECK(comparability_constant(bundle.space, bundle.quotient, pairs, radii, &witness) == 1.0);
    CHECK(witness.ratio == 1.0);
  }

  SUBCASE("identical points give exactly one") {
    const ModelBundle bundle = line_model(5);
    const std::vector<std::pair<PointId, PointId>> pairs = {{2, 2}};
    const std::vector<double> radii = {1.5, 2.5};
    CHECK(comparability_constant(bundle.space, bundle.quotient, pairs, radii) == 1.0);
  }

  SUBCASE("Heisenberg center pair is finite and at least one") {
    std::vector<std::array<double, 2>> base;
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) base.push_back({double(a), double(b)});
    std::vector<double> center(11);
    std::iota(center.begin(), center.end(), -5.0);
    const ModelBundle bundle = build_heisenberg(base, center);
    // base (0,0) has index 12; center coordinates 0 and 4 sit at offsets 5 and 9
    const PointId x = 12 * 11 + 5;
    const PointId x_prime = 12 * 11 + 9;
    const std::vector<std::pair<PointId, PointId>> pairs = {{x, x_prime}};
    const std::vector<double> radii = {0.8, 1.3, 1.9};
    ComparabilityWitness witness;
    const double c = comparability_constant(bundle.space, bundle.quotient, pairs, radii, &witness);
    CHECK(c >= 1.0);
    CHECK(std::isfinite(c));
    CHECK(std::find(radii.begin(), radii.end(), witness.radius) != radii.end());
  }

  SUBCASE("pairs off a common fiber are rejected") {
    const ModelBundle bundle = line_model(5);
    const std::vector<std::pair<PointId, PointId>> pairs = {{0, 1}};
    const std::vector<double> radii = {1.5, 2.5};
    CHECK_THROWS_AS(comparability_constant(bundle.space, bundle.quotient, pairs, radii),
                    PreconditionError);
  }
}

TEST_CASE("regularity fit on the line") {
  const ModelBundle bundle = line_model(1000);
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;
  const std::vector<double> radii = geometric_radii(2.2, 62.0, 12);
  const std::vector<BaseId> centers = interior_centers(bundle, radii.back(), 48);
  REQUIRE_FALSE(centers.empty());

  FitOptions options;
  options.interior_radius = bundle.interior_radius;
  const RegularityReport report =
      fit_regularity(bundle.space, bundle.quotient, section, centers, radii, options);

  CHECK(report.exponent_q > 0.9);
  CHECK(report.exponent_q < 1.1);
  CHECK(report.c_lower <= report.c_upper);
  CHECK(report.interior_guard);
  CHECK(report.dropped_samples == 0);

  SUBCASE("measures agree with a brute-force count") {
    std::vector<double> bases(1000), h(1000, 0.0);
    std::iota(bases.begin(), bases.end(), 0.0);
    for (const RegularitySample& s : report.samples) {
      const std::size_t expected =
          oracle::plane_ball_count(bases, h, s.center_base, s.radius);
      CHECK(s.measure == double(expected));
    }
  }

  SUBCASE("the constants bound every sample by construction") {
    for (const RegularitySample& s : report.samples) {
      const double rq = std::pow(s.radius, report.exponent_q);
      CHECK(report.c_lower * rq <= s.measure * (1 + 1e-12));
      CHECK(s.measure <= report.c_upper * rq * (1 + 1e-12));
    }
  }

  SUBCASE("scaling the measure scales the constants and fixes the exponent") {
    const QuotientStructure doubled =
        bundle.quotient.with_measure(std::vector<double>(1000, 2.0));
    const SectionSample s2(doubled, section.assignment());
    const RegularityReport scaled =
        fit_regularity(bundle.space, doubled, s2, centers, radii, options);
    CHECK(scaled.exponent_q == doctest::Approx(report.exponent_q).epsilon(1e-9));
    CHECK(scaled.c_lower == doctest::Approx(2 * report.c_lower).epsilon(1e-9));
    CHECK(scaled.c_upper == doctest::Approx(2 * report.c_upper).epsilon(1e-9));
  }
}

TEST_CASE("regularity fit on the plane grid") {
  std::vector<std::vector<double>> base;
  for (int x = 0; x < 32; ++x)
    for (int y = 0; y < 32; ++y) base.push_back({double(x), double(y)});
  const ModelBundle bundle = build_euclidean_foliation(base, {0.0});
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;
  const std::vector<double> radii = geometric_radii(2.12, 7.78, 9);
  const std::vector<BaseId> centers = interior_centers(bundle, radii.back(), 48);
  REQUIRE_FALSE(centers.empty());

  FitOptions options;
  options.interior_radius = bundle.interior_radius;
  const RegularityReport report =
      fit_regularity(bundle.space, bundle.quotient, section, centers, radii, options);
  CHECK(report.exponent_q > 1.8);
  CHECK(report.exponent_q < 2.2);
}

TEST_CASE("regularity fit domain errors") {
  const ModelBundle bundle = line_model(50);
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;
  const std::vector<BaseId> centers = {25};
  SUBCASE("a slope needs two radii") {
    const std::vector<double> single = {4.0};
    CHECK_THROWS_AS(
        fit_regularity(bundle.space, bundle.quotient, section, centers, single, {}),
        PreconditionError);
  }
  SUBCASE("boundary centers are excluded and listed") {
    const std::vector<double> radii = {2.2, 4.4, 8.8};
    const std::vector<BaseId> mixed = {0, 25};
    FitOptions options;
    options.interior_radius = bundle.interior_radius;
    const RegularityReport report =
        fit_regularity(bundle.space, bundle.quotient, section, mixed, radii, options);
    CHECK(report.excluded_centers == std::vector<BaseId>{0});
  }
}

TEST_CASE("ball inclusion lemma") {
  SUBCASE("identity graph with ell = 1 holds with equality") {
    const ModelBundle bundle = line_model(30, {-2, -1, 0, 1, 2});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    std::vector<PointId> centers;
    for (BaseId y = 0; y < bundle.quotient.base_count(); y += 3)
      centers.push_back(section.point_for(y));
    const std::vector<double> radii = {0.8, 1.7, 3.4, 6.9};
    const InclusionVerdict verdict =
        check_ball_inclusion(bundle.space, bundle.quotient, section, 1.0, centers, radii);
    CHECK(verdict.pass);
    CHECK(verdict.checks == centers.size() * radii.size());
  }

  SUBCASE("abs graph passes with the fitted ell and fails with half of it") {
    std::vector<double> bases;
    for (int i = -8; i <= 8; ++i) bases.push_back(i);
    std::vector<double> heights;
    for (int i = 0; i <= 8; ++i) heights.push_back(i);
    const ModelBundle bundle = build_euclidean_foliation(bases, heights);
    SectionSpec spec;
    spec.graph = SectionSpec::Graph::kAbs;
    const SectionSample section = generate_section(bundle, spec).section;

    const Modulus eta = Modulus::envelope(
        fit_eta(enumerate_triples(bundle.space, bundle.quotient, section).records));
    const EllEtaResult ell =
        compute_ell_eta(bundle.space, bundle.quotient, section, eta, all_points(bundle));
    CHECK(ell.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    std::vector<PointId> centers;
    for (BaseId y = 0; y < bundle.quotient.base_count(); ++y)
      centers.push_back(section.point_for(y));
    const std::vector<double> radii = {0.9, 1.7, 2.6, 4.3, 7.9};

    const InclusionVerdict good = check_ball_inclusion(bundle.space, bundle.quotient, section,
                                                       ell.value, centers, radii);
    CHECK(good.pass);

    const InclusionVerdict bad = check_ball_inclusion(bundle.space, bundle.quotient, section,
                                                      ell.value / 2, centers, radii);
    CHECK_FALSE(bad.pass);
    REQUIRE_FALSE(bad.violations.empty());
    for (const InclusionViolation& v : bad.violations) CHECK(v.which == 1);
  }

  SUBCASE("centers off the section are rejected") {
    const ModelBundle bundle = line_model(6, {0, 1});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    const PointId off = bundle.fiber_axis[2][1].point;
    const std::vector<PointId> centers = {off};
    const std::vector<double> radii = {1.0};
    CHECK_THROWS_AS(
        check_ball_inclusion(bundle.space, bundle.quotient, section, 1.0, centers, radii),
        PreconditionError);
  }
}

TEST_CASE("theorem chain") {
  SUBCASE("identity against itself is exact") {
    const ModelBundle bundle = line_model(200);
    const SectionSample phi = generate_section(bundle, SectionSpec{}).section;
    const Modulus eta = Modulus::envelope(
        fit_eta(enumerate_triples(bundle.space, bundle.quotient, phi,
                                  strided_subset(bundle.quotient.base_count(), 40))
                    .records));

    const std::vector<double> radii = geometric_radii(2.2, 13.9, 8);
    const std::vector<BaseId> centers = interior_centers(bundle, radii.back(), 32);
    const std::vector<PointId> probes = all_points(bundle);
    const std::vector<BaseId> triple_bases = strided_subset(bundle.quotient.base_count(), 40);

    ChainOptions options;
    options.triple_bases = triple_bases;
    options.ell_probes = probes;
    options.fit_options.interior_radius = bundle.interior_radius;
    const ChainVerdict verdict = check_theorem_chain(bundle.space, bundle.quotient, phi, phi, eta,
                                                     centers, radii, options);
    CHECK(verdict.pass);
    CHECK(verdict.comparability == 1.0);
    CHECK(verdict.ell_eta == 1.0);
    CHECK(verdict.predicted_lower == verdict.reference.c_lower);
    CHECK(verdict.predicted_upper == verdict.reference.c_upper);
    CHECK(verdict.empirical_lower == verdict.reference.c_lower);
    CHECK(verdict.empirical_upper == verdict.reference.c_upper);
  }

  SUBCASE("identity against the abs graph passes with slack") {
    std::vector<double> bases(200);
    std::iota(bases.begin(), bases.end(), 0.0);
    std::vector<double> heights(101);
    std::iota(heights.begin(), heights.end(), 0.0);
    const ModelBundle bundle = build_euclidean_foliation(bases, heights);

    const SectionSample phi = generate_section(bundle, SectionSpec{}).section;
    SectionSpec abs_spec;
    abs_spec.graph = SectionSpec::Graph::kAbs;
    abs_spec.center = {100.0};
    const SectionSample psi = generate_section(bundle, abs_spec).section;

    const std::vector<BaseId> triple_bases = strided_subset(bundle.quotient.base_count(), 40);
    TripleScan merged = enumerate_triples(bundle.space, bundle.quotient, phi, triple_bases);
    const TripleScan psi_scan = enumerate_triples(bundle.space, bundle.quotient, psi, triple_bases);
    merged.records.insert(merged.records.end(), psi_scan.records.begin(), psi_scan.records.end());
    const Modulus eta = Modulus::envelope(fit_eta(merged.records));
    CHECK(eta(1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    const std::vector<double> radii = geometric_radii(2.2, 13.9, 8);
    const std::vector<BaseId> centers = interior_centers(bundle, radii.back(), 32);
    const std::vector<PointId> probes = strided_subset(bundle.quotient.point_count(), 3000);

    ChainOptions options;
    options.triple_bases = triple_bases;
    options.ell_probes = probes;
    options.fit_options.interior_radius = bundle.interior_radius;
    const ChainVerdict verdict = check_theorem_chain(bundle.space, bundle.quotient, phi, psi, eta,
                                                     centers, radii, options);
    CHECK(verdict.pass);
    CHECK(verdict.comparability == 1.0);
    CHECK(verdict.ell_eta == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(verdict.predicted_lower <= verdict.empirical_lower * 1.05);
    CHECK(verdict.empirical_upper <= verdict.predicted_upper * 1.05);
    CHECK(verdict.test.exponent_q > 0.9);
    CHECK(verdict.test.exponent_q < 1.1);
  }

  SUBCASE("a test section violating quasi-symmetry is a precondition error") {
    std::vector<double> bases;
    for (int i = -10; i <= 10; ++i) bases.push_back(i);
    std::vector<double> heights;
    for (int i = 0; i <= 10; ++i) heights.push_back(i);
    const ModelBundle bundle = build_euclidean_foliation(bases, heights);
    const SectionSample phi = generate_section(bundle, SectionSpec{}).section;
    SectionSpec abs_spec;
    abs_spec.graph = SectionSpec::Graph::kAbs;
    const SectionSample psi = generate_section(bundle, abs_spec).section;

    const std::vector<double> radii = {1.3, 2.6, 5.1};
    const std::vector<BaseId> centers = interior_centers(bundle, radii.back(), 16);
    ChainOptions options;
    options.ell_probes = all_points(bundle);
    options.fit_options.interior_radius = bundle.interior_radius;
    // eta(t) = t admits the identity graph but not the abs graph
    CHECK_THROWS_AS(check_theorem_chain(bundle.space, bundle.quotient, phi, psi,
                                        Modulus::power(1, 1), centers, radii, options),
                    PreconditionError);
  }
}
