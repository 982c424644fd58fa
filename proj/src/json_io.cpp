#include "sections/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "sections/errors.hpp"

namespace sections {

json envelope_to_json(const MonotoneModulus& envelope) {
  return json{{"breakpoints", envelope.breakpoints()}, {"values", envelope.values()}};
}

MonotoneModulus envelope_from_json(const json& j) {
  if (!j.contains("breakpoints") || !j.contains("values"))
    throw ConfigError("envelope JSON needs breakpoints and values arrays");
  return MonotoneModulus(j.at("breakpoints").get<std::vector<double>>(),
                         j.at("values").get<std::vector<double>>());
}

json modulus_to_json(const Modulus& eta) {
  if (eta.is_power())
    return json{{"kind", "power"}, {"coefficient", eta.coefficient()}, {"exponent", eta.exponent()}};
  return json{{"kind", "envelope"}, {"envelope", envelope_to_json(*eta.envelope_data())}};
}

json metric_verdict_to_json(const MetricVerdict& verdict) {
  json violations = json::array();
  for (const MetricViolation& v : verdict.violations)
    violations.push_back({{"kind", v.kind},
                          {"points", {v.a, v.b, v.c}},
                          {"lhs", v.lhs},
                          {"rhs", v.rhs}});
  return json{{"ok", verdict.ok},
              {"points_checked", verdict.points_checked},
              {"triples_checked", verdict.triples_checked},
              {"violations", violations}};
}

namespace {

json qs_violations_to_json(const std::vector<QsViolation>& violations) {
  json out = json::array();
  for (const QsViolation& v : violations)
    out.push_back({{"triple", {v.record.y1, v.record.y2, v.record.y3}},
                   {"t", v.record.ratio_t},
                   {"R", v.record.ratio_r},
                   {"eta_t", v.eta_t}});
  return out;
}

}  // namespace

json qs_verdict_to_json(const QsVerdict& verdict, std::size_t skipped_triples) {
  return json{{"pass", verdict.pass},
              {"checked", verdict.checked},
              {"violations", qs_violations_to_json(verdict.violations)},
              {"skipped", skipped_triples}};
}

json ell_eta_to_json(const EllEtaResult& result) {
  json per_base = json::array();
  for (double s : result.per_base_sup)
    per_base.push_back(std::isfinite(s) ? json(s) : json());  // null: base never probed
  return json{{"value", result.value},
              {"diverged", result.diverged},
              {"eta_at_one", result.eta_at_one},
              {"witness", {{"probe", result.witness_probe}, {"base", result.witness_base}}},
              {"probes_used", result.probes_used},
              {"bases_used", result.bases_used},
              {"skipped", result.skipped},
              {"per_base_sup", per_base}};
}

json eccentricity_to_json(const EccentricityRecord& record) {
  json out{{"base", record.base},
           {"radius", record.radius},
           {"sup_defined", record.sup_defined},
           {"inf_defined", record.inf_defined}};
  out["sup"] = record.sup_defined ? json(record.sup_image) : json();
  out["inf"] = record.inf_defined ? json(record.inf_image) : json();
  out["ratio"] = (record.sup_defined && record.inf_defined) ? json(record.ratio) : json();
  return out;
}

json qc_verdict_to_json(const QcVerdict& verdict) {
  return json{{"pass", verdict.pass},
              {"incomplete", verdict.incomplete},
              {"delta", verdict.delta},
              {"bound", verdict.bound},
              {"unsampled_fibers", verdict.unsampled_fibers},
              {"violations", qs_violations_to_json(verdict.violations)},
              {"max_fiber_sup", verdict.max_fiber_sup},
              {"pairs_used", verdict.pairs_used}};
}

json regularity_report_to_json(const RegularityReport& report) {
  json per_center = json::array();
  for (const CenterFit& c : report.per_center)
    per_center.push_back({{"base", c.base},
                          {"c_lower", c.c_lower},
                          {"c_upper", c.c_upper},
                          {"local_q", c.local_q},
                          {"residual", c.residual},
                          {"samples", c.samples}});
  return json{{"q", report.exponent_q},
              {"c_lower", report.c_lower},
              {"c_upper", report.c_upper},
              {"r_min", report.r_min},
              {"r_max", report.r_max},
              {"intercept", report.intercept},
              {"residual", report.residual},
              {"per_center", per_center},
              {"excluded_centers", report.excluded_centers},
              {"dropped_samples", report.dropped_samples},
              {"interior_guard", report.interior_guard},
              {"sample_count", report.samples.size()}};
}

json comparability_to_json(double constant, const ComparabilityWitness& witness,
                           std::size_t pairs) {
  return json{{"constant", constant},
              {"pairs", pairs},
              {"witness",
               {{"x", witness.x},
                {"x_prime", witness.x_prime},
                {"radius", witness.radius},
                {"ratio", witness.ratio}}}};
}

json inclusion_verdict_to_json(const InclusionVerdict& verdict) {
  json violations = json::array();
  for (const InclusionViolation& v : verdict.violations)
    violations.push_back({{"center", v.center},
                          {"radius", v.radius},
                          {"base", v.base},
                          {"which", v.which},
                          {"fiber_dist", v.fiber_dist},
                          {"image_dist", v.image_dist}});
  return json{{"pass", verdict.pass},
              {"ell_eta", verdict.ell_eta},
              {"checks", verdict.checks},
              {"violations", violations}};
}

json chain_verdict_to_json(const ChainVerdict& verdict) {
  return json{{"pass", verdict.pass},
              {"tau", verdict.tau},
              {"comparability", verdict.comparability},
              {"ell_eta", verdict.ell_eta},
              {"reference", regularity_report_to_json(verdict.reference)},
              {"test", regularity_report_to_json(verdict.test)},
              {"predicted_lower", verdict.predicted_lower},
              {"predicted_upper", verdict.predicted_upper},
              {"empirical_lower", verdict.empirical_lower},
              {"empirical_upper", verdict.empirical_upper}};
}

// ---------------------------------------------------------------------------
// Explicit space ingestion
// ---------------------------------------------------------------------------

namespace {

std::string label_of(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ConfigError("point and base labels must be strings or integers");
}

std::vector<double> flat_coords(const json& coords, std::size_t expected_dim, std::size_t n) {
  if (!coords.is_array() || coords.size() != n)
    throw ConfigError("metric coords must list one vector per point");
  std::size_t dim = expected_dim;
  std::vector<double> flat;
  for (const json& row : coords) {
    if (!row.is_array() || row.empty()) throw ConfigError("metric coords rows must be arrays");
    if (dim == 0) dim = row.size();
    if (row.size() != dim) throw ConfigError("metric coords rows must share one dimension");
    for (const json& v : row) flat.push_back(v.get<double>());
  }
  return flat;
}

}  // namespace

ExplicitSpace parse_explicit_space(const json& j) {
  if (!j.contains("points") || !j.at("points").is_array() || j.at("points").empty())
    throw ConfigError("explicit space needs a nonempty points array");
  if (!j.contains("fibers") || !j.at("fibers").is_object() || j.at("fibers").empty())
    throw ConfigError("explicit space needs a fibers object");
  if (!j.contains("metric") || !j.at("metric").is_object())
    throw ConfigError("explicit space needs a metric object");

  std::vector<std::string> point_labels;
  std::unordered_map<std::string, PointId> point_index;
  for (const json& p : j.at("points")) {
    std::string label = label_of(p);
    if (point_index.count(label)) throw ConfigError("duplicate point label: " + label);
    point_index.emplace(label, static_cast<PointId>(point_labels.size()));
    point_labels.push_back(std::move(label));
  }
  const std::size_t n = point_labels.size();

  // Base order: lexicographic over the fiber keys (nlohmann objects iterate sorted).
  std::vector<std::string> base_labels;
  std::vector<BaseId> fiber_of(n, static_cast<BaseId>(-1));
  for (const auto& [base_label, members] : j.at("fibers").items()) {
    const BaseId y = static_cast<BaseId>(base_labels.size());
    base_labels.push_back(base_label);
    if (!members.is_array() || members.empty())
      throw ConfigError("fiber " + base_label + " must be a nonempty array of point labels");
    for (const json& m : members) {
      const std::string label = label_of(m);
      auto it = point_index.find(label);
      if (it == point_index.end())
        throw ConfigError("fiber " + base_label + " references unknown point " + label);
      if (fiber_of[it->second] != static_cast<BaseId>(-1))
        throw ConfigError("point " + label + " appears in more than one fiber");
      fiber_of[it->second] = y;
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    if (fiber_of[p] == static_cast<BaseId>(-1))
      throw ConfigError("point " + point_labels[p] + " belongs to no fiber");
  const std::size_t bases = base_labels.size();

  std::vector<double> measure;
  if (j.contains("measure")) {
    measure.assign(bases, 0.0);
    if (!j.at("measure").is_object()) throw ConfigError("measure must map base labels to weights");
    for (const auto& [base_label, w] : j.at("measure").items()) {
      const auto it = std::find(base_labels.begin(), base_labels.end(), base_label);
      if (it == base_labels.end()) throw ConfigError("measure references unknown base " + base_label);
      measure[static_cast<std::size_t>(it - base_labels.begin())] = w.get<double>();
    }
    for (std::size_t y = 0; y < bases; ++y)
      if (!(measure[y] > 0))
        throw ConfigError("measure must assign a positive weight to every base (missing: " +
                          base_labels[y] + ")");
  }

  const json& metric = j.at("metric");
  const std::string kind = metric.value("kind", "");
  FiniteMetricSpace space = [&]() -> FiniteMetricSpace {
    if (kind == "explicit") {
      const auto tri = metric.at("distances").get<std::vector<double>>();
      if (tri.size() != n * (n + 1) / 2)
        throw ConfigError("explicit metric needs n(n+1)/2 lower-triangular entries (diagonal included)");
      std::vector<double> full(n * n, 0.0);
      std::size_t idx = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t jj = 0; jj <= i; ++jj, ++idx) {
          if (i == jj && tri[idx] != 0.0)
            throw ConfigError("explicit metric diagonal entries must be zero");
          full[i * n + jj] = tri[idx];
          full[jj * n + i] = tri[idx];
        }
      }
      return FiniteMetricSpace::from_matrix(n, std::move(full));
    }
    if (kind == "euclidean")
      return FiniteMetricSpace::euclidean(metric.at("coords").front().size(),
                                          flat_coords(metric.at("coords"), 0, n));
    if (kind == "koranyi") return FiniteMetricSpace::koranyi(flat_coords(metric.at("coords"), 3, n));
    throw ConfigError("metric kind must be explicit, euclidean or koranyi");
  }();

  QuotientStructure quotient(std::move(fiber_of), bases, std::move(measure));

  auto parse_section = [&](const char* key) -> std::optional<SectionSample> {
    if (!j.contains(key)) return std::nullopt;
    if (!j.at(key).is_object()) throw ConfigError(std::string(key) + " must map bases to points");
    std::vector<PointId> assignment(bases, 0);
    std::vector<bool> seen(bases, false);
    for (const auto& [base_label, point_label] : j.at(key).items()) {
      const auto it = std::find(base_labels.begin(), base_labels.end(), base_label);
      if (it == base_labels.end())
        throw ConfigError(std::string(key) + " references unknown base " + base_label);
      const auto pit = point_index.find(label_of(point_label));
      if (pit == point_index.end())
        throw ConfigError(std::string(key) + " references an unknown point");
      const std::size_t y = static_cast<std::size_t>(it - base_labels.begin());
      assignment[y] = pit->second;
      seen[y] = true;
    }
    for (std::size_t y = 0; y < bases; ++y)
      if (!seen[y]) throw ConfigError(std::string(key) + " misses base " + base_labels[y]);
    return SectionSample(quotient, std::move(assignment));
  };

  std::optional<SectionSample> section = parse_section("section");
  std::optional<SectionSample> section_b = parse_section("section_b");

  // Synthetic fiber axes (position index as coordinate) keep seeded `random`
  // sections usable on explicit spaces; graph sections need real geometry.
  std::vector<std::vector<FiberSample>> axis(bases);
  for (BaseId y = 0; y < bases; ++y) {
    const auto& pts = quotient.fiber_points(y);
    for (std::size_t i = 0; i < pts.size(); ++i)
      axis[y].push_back({static_cast<double>(i), pts[i]});
  }

  ExplicitSpace out{ModelBundle{std::move(space), std::move(quotient), "explicit",
                                {}, std::move(axis), {}, 0.0, {}, 0},
                    std::move(section), std::move(section_b), std::move(point_labels),
                    std::move(base_labels)};
  return out;
}

}  // namespace sections
