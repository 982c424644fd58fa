#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sections/model_spaces.hpp"
#include "sections/section_analysis.hpp"

using namespace sections;

namespace {

ModelBundle line_model(int n_bases, std::vector<double> heights) {
  std::vector<double> bases(n_bases);
  std::iota(bases.begin(), bases.end(), 0.0);
  return build_euclidean_foliation(bases, std::move(heights));
}

ModelBundle symmetric_model(int half, std::vector<double> heights) {
  std::vector<double> bases;
  for (int i = -half; i <= half; ++i) bases.push_back(i);
  return build_euclidean_foliation(bases, std::move(heights));
}

SectionSample abs_section(const ModelBundle& bundle) {
  SectionSpec spec;
  spec.graph = SectionSpec::Graph::kAbs;
  return generate_section(bundle, spec).section;
}

std::vector<PointId> all_points(const ModelBundle& bundle) {
  std::vector<PointId> out(bundle.quotient.point_count());
  std::iota(out.begin(), out.end(), 0u);
  return out;
}

}  // namespace

TEST_CASE("triple enumeration on the identity graph") {
  const ModelBundle bundle = line_model(3, {0.0});
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;
  const TripleScan scan = enumerate_triples(bundle.space, bundle.quotient, section);
  CHECK(scan.records.size() == 6);
  CHECK(scan.skipped == 0);

  for (const TripleRecord& rec : scan.records) {
    if (rec.y1 == 0 && rec.y2 == 1 && rec.y3 == 2) {
      CHECK(rec.ratio_t == 0.5);
      CHECK(rec.ratio_r == 0.5);
    }
    if (rec.y1 == 0 && rec.y2 == 2 && rec.y3 == 1) {
      CHECK(rec.ratio_t == 2.0);
      CHECK(rec.ratio_r == 2.0);
    }
  }

  SUBCASE("swapping y2 and y3 inverts both ratios") {
    for (const TripleRecord& rec : scan.records) {
      for (const TripleRecord& mirror : scan.records) {
        if (mirror.y1 == rec.y1 && mirror.y2 == rec.y3 && mirror.y3 == rec.y2) {
          CHECK(rec.ratio_t * mirror.ratio_t == doctest::Approx(1.0).epsilon(1e-12));
          CHECK(rec.ratio_r * mirror.ratio_r == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
  }

  SUBCASE("fewer than three bases is a domain error") {
    const ModelBundle tiny = line_model(2, {0.0});
    const SectionSample s = generate_section(tiny, SectionSpec{}).section;
    CHECK_THROWS_AS(enumerate_triples(tiny.space, tiny.quotient, s), PreconditionError);
  }
}

TEST_CASE("quasi-symmetry verdicts") {
  const ModelBundle bundle = line_model(6, {0.0});
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;
  const TripleScan scan = enumerate_triples(bundle.space, bundle.quotient, section);

  CHECK(check_quasi_symmetry(scan.records, Modulus::power(1, 1)).pass);

  const QsVerdict fail = check_quasi_symmetry(scan.records, Modulus::power(0.5, 1), 1e-9,
                                              scan.records.size());
  CHECK_FALSE(fail.pass);
  CHECK(fail.violations.size() == scan.records.size());  // R = t > t/2 everywhere

  CHECK(check_quasi_symmetry(scan.records, Modulus::envelope(fit_eta(scan.records))).pass);
}

TEST_CASE("fit_eta on the identity graph gives the linear envelope") {
  const ModelBundle bundle = line_model(3, {0.0});
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;
  const MonotoneModulus env =
      fit_eta(enumerate_triples(bundle.space, bundle.quotient, section).records);
  CHECK(env.breakpoints() == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(env.values() == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(env(1.0) == 1.0);
  CHECK(env(0.1) == 0.5);   // constant-left extension
  CHECK(env(10.0) == 2.0);  // constant-right extension
  CHECK(env(1.5) == doctest::Approx(1.5));
}

TEST_CASE("single-record envelope is constant") {
  const std::vector<TripleRecord> records = {{0, 1, 2, 1.0, 3.0}};
  const MonotoneModulus env = fit_eta(records);
  CHECK(env.breakpoints() == std::vector<double>{1.0});
  CHECK(env(0.5) == 3.0);
  CHECK(env(7.0) == 3.0);
}

TEST_CASE("abs-graph envelope sits below sqrt(2) * t and matches the oracle") {
  std::vector<double> bases = {-2, -1, 0, 1, 2};
  std::vector<double> heights = {0, 1, 2};
  const ModelBundle bundle = build_euclidean_foliation(bases, heights);
  const SectionSample section = abs_section(bundle);
  const TripleScan scan = enumerate_triples(bundle.space, bundle.quotient, section);
  const MonotoneModulus env = fit_eta(scan.records);

  const double root2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < env.breakpoints().size(); ++i)
    CHECK(env.values()[i] <= root2 * env.breakpoints()[i] * (1 + 1e-9));

  std::vector<double> section_heights = {2, 1, 0, 1, 2};
  std::vector<double> bp, vals;
  oracle::envelope(oracle::plane_records(bases, heights, section_heights), bp, vals);
  CHECK(env.breakpoints() == bp);
  CHECK(env.values() == vals);
}

TEST_CASE("envelope soundness and minimality on random records") {
  std::mt19937_64 rng(99);
  auto uniform = [&] { return double(rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TripleRecord> records;
    const std::size_t count = 5 + rng() % 200;
    for (std::size_t i = 0; i < count; ++i)
      records.push_back({0, 1, 2, 0.05 + 4 * uniform(), 0.05 + 3 * uniform()});

    const MonotoneModulus env = fit_eta(records);
    CHECK(check_quasi_symmetry(records, Modulus::envelope(env)).pass);

    for (std::size_t i = 0; i < env.breakpoints().size(); ++i) {
      std::vector<double> lowered = env.values();
      lowered[i] *= 0.99;
      const Modulus damaged =
          Modulus::envelope(MonotoneModulus::unchecked(env.breakpoints(), lowered));
      CHECK_FALSE(check_quasi_symmetry(records, damaged).pass);
    }
  }
}

TEST_CASE("minimal Lipschitz constants") {
  SUBCASE("identity graph") {
    const ModelBundle bundle = line_model(10, {0.0});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    CHECK(minimal_lipschitz_constant(bundle.space, bundle.quotient, section) == 1.0);
  }
  SUBCASE("abs graph on a symmetric grid") {
    const ModelBundle bundle = symmetric_model(2, {0, 1, 2});
    const SectionSample section = abs_section(bundle);
    PairWitness witness;
    const double constant =
        minimal_lipschitz_constant(bundle.space, bundle.quotient, section, {}, &witness);
    CHECK(constant == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(witness.value == constant);
  }
  SUBCASE("slope-two graph on two bases") {
    const ModelBundle bundle = line_model(2, {0, 1, 2});
    SectionSpec spec;
    spec.graph = SectionSpec::Graph::kLinear;
    spec.coefficient = 2.0;
    const SectionSample section = generate_section(bundle, spec).section;
    CHECK(minimal_lipschitz_constant(bundle.space, bundle.quotient, section) ==
          doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
  }
}

TEST_CASE("minimal Holder constants") {
  SUBCASE("two bases") {
    const ModelBundle bundle = line_model(2, {0.0});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    const HolderFit fit = minimal_holder_constant(bundle.space, bundle.quotient, section, 0.5);
    CHECK(fit.constant == 1.0);
    CHECK(fit.separation == 1.0);
    const Modulus eta = fit.implied_modulus();
    CHECK(eta(4.0) == doctest::Approx(2.0));  // sqrt(t)
  }
  SUBCASE("three bases pick up the offset-two pair") {
    const ModelBundle bundle = line_model(3, {0.0});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    const HolderFit fit = minimal_holder_constant(bundle.space, bundle.quotient, section, 0.5);
    CHECK(fit.constant == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("separation feeds the implied modulus") {
    const ModelBundle bundle = build_euclidean_foliation(std::vector<double>{0, 2, 4}, {0.0});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    const HolderFit fit = minimal_holder_constant(bundle.space, bundle.quotient, section, 0.5);
    CHECK(fit.separation == 2.0);
    const Modulus eta = fit.implied_modulus();
    CHECK(eta(1.0) == doctest::Approx(fit.constant / std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("alpha outside (0,1) is a domain error") {
    const ModelBundle bundle = line_model(3, {0.0});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    CHECK_THROWS_AS(minimal_holder_constant(bundle.space, bundle.quotient, section, 1.0),
                    PreconditionError);
  }
}

TEST_CASE("ell_eta on vertical foliations") {
  const ModelBundle bundle = line_model(10, {-3, -2, -1, 0, 1, 2, 3});
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;

  std::vector<PointId> off_section;
  for (PointId p = 0; p < bundle.quotient.point_count(); ++p)
    if (!on_section(bundle.quotient, section, p)) off_section.push_back(p);

  SUBCASE("identity modulus gives exactly one") {
    const EllEtaResult r =
        compute_ell_eta(bundle.space, bundle.quotient, section, Modulus::power(1, 1), off_section);
    CHECK(r.value == 1.0);
    CHECK(r.eta_at_one == 1.0);
    CHECK_FALSE(r.diverged);
  }
  SUBCASE("scaling the modulus scales the sup") {
    const EllEtaResult r =
        compute_ell_eta(bundle.space, bundle.quotient, section, Modulus::power(5, 1), off_section);
    CHECK(r.value == 5.0);
  }
  SUBCASE("monotone in the modulus") {
    const EllEtaResult small =
        compute_ell_eta(bundle.space, bundle.quotient, section, Modulus::power(1, 1), off_section);
    const EllEtaResult big =
        compute_ell_eta(bundle.space, bundle.quotient, section, Modulus::power(2, 1), off_section);
    CHECK(small.value <= big.value);
  }
  SUBCASE("divergence flag") {
    EllEtaOptions options;
    options.ceiling = 3.0;
    const EllEtaResult r = compute_ell_eta(bundle.space, bundle.quotient, section,
                                           Modulus::power(5, 1), off_section, options);
    CHECK(r.diverged);
  }
  SUBCASE("fitted modulus on the abs graph evaluates at one") {
    const ModelBundle v = symmetric_model(4, {0, 1, 2, 3, 4});
    const SectionSample s = abs_section(v);
    const Modulus eta =
        Modulus::envelope(fit_eta(enumerate_triples(v.space, v.quotient, s).records));
    const std::vector<PointId> probes = all_points(v);
    const EllEtaResult r = compute_ell_eta(v.space, v.quotient, s, eta, probes);
    CHECK(r.value >= eta(1.0));
    CHECK(r.value == eta(1.0));  // exact on vertical foliations
    CHECK(r.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("eccentricity records") {
  SUBCASE("identity graph, both sides defined") {
    const ModelBundle bundle = line_model(10, {0.0});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    const EccentricityRecord rec = eccentricity(bundle.space, bundle.quotient, section, 5, 2.0);
    CHECK(rec.sup_defined);
    CHECK(rec.inf_defined);
    CHECK(rec.sup_image == 2.0);
    CHECK(rec.inf_image == 2.0);
    CHECK(rec.ratio == 1.0);
  }
  SUBCASE("radius below the base gap empties the sup side") {
    const ModelBundle bundle = line_model(10, {0.0});
    const SectionSample section = generate_section(bundle, SectionSpec{}).section;
    const EccentricityRecord rec = eccentricity(bundle.space, bundle.quotient, section, 5, 0.5);
    CHECK_FALSE(rec.sup_defined);
    CHECK(rec.inf_defined);
  }
  SUBCASE("abs graph at the kink") {
    const ModelBundle bundle = symmetric_model(2, {0, 1, 2});
    const SectionSample section = abs_section(bundle);
    const EccentricityRecord rec = eccentricity(bundle.space, bundle.quotient, section, 2, 1.0);
    // bases +-1 are at fiber distance 1 and image distance sqrt(2); bases +-2
    // are farther on both counts, so sup = inf = sqrt(2).
    CHECK(rec.sup_image == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(rec.inf_image == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(rec.ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("discrete quasi-conformality surrogate") {
  const ModelBundle bundle = line_model(4, {-2, -1, 0, 1, 2});
  const SectionSample section = generate_section(bundle, SectionSpec{}).section;
  const std::vector<PointId> probes = all_points(bundle);
  const Modulus eta = Modulus::power(1, 1);

  SUBCASE("fiber suprema are exactly one on vertical foliations") {
    const QcVerdict verdict = check_quasi_conformal(bundle.space, bundle.quotient, section, eta,
                                                    1.0 + 1e-9, 1.0, probes);
    CHECK_FALSE(verdict.incomplete);
    CHECK(verdict.max_fiber_sup == 1.0);
    // records with R > 1 exist whenever |Y| >= 3, and they violate R <= S
    CHECK_FALSE(verdict.pass);
    const TripleScan scan = enumerate_triples(bundle.space, bundle.quotient, section);
    std::size_t above_one = 0;
    for (const TripleRecord& rec : scan.records)
      if (rec.ratio_r > 1.0 + 1e-9) ++above_one;
    CHECK(verdict.violations.size() == above_one);
  }

  SUBCASE("delta below the fiber spacing leaves every fiber unsampled") {
    const QcVerdict verdict = check_quasi_conformal(bundle.space, bundle.quotient, section, eta,
                                                    1.0, 0.5, probes);
    CHECK(verdict.incomplete);
    CHECK(verdict.unsampled_fibers.size() == bundle.quotient.base_count());
  }
}
