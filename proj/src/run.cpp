#include "sections/run.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "sections/json_io.hpp"
#include "sections/util.hpp"
#include "sections/version.hpp"

namespace sections {

namespace {

constexpr const char* kEtaRepresentationNote =
    "eta is a fitted monotone envelope, not a homeomorphism; post-compose with +c*t for "
    "arbitrarily small c > 0 to obtain a strictly increasing surjection without changing any "
    "verdict at the sampled ratios";

const std::vector<std::string>& canonical_order() {
  static const std::vector<std::string> order = {
      "validate",     "triples", "fit-eta",       "lipschitz", "holder", "eccentricity",
      "ell-eta",      "qc-check", "comparability", "ahlfors",   "lemma",  "chain"};
  return order;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError("config field '" + field + "': " + message);
}

double require_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

std::vector<double> parse_grid_1d(const json& j, const std::string& field) {
  if (j.is_array()) {
    if (j.empty()) fail(field, "grid array must be nonempty");
    std::vector<double> values;
    for (const json& v : j) values.push_back(require_number(v, field));
    return values;
  }
  if (j.is_object()) {
    const double start = require_number(j.value("start", json()), field + ".start");
    const double step = require_number(j.value("step", json()), field + ".step");
    const json count_j = j.value("count", json());
    if (!count_j.is_number_integer()) fail(field + ".count", "expected an integer");
    const long long count = count_j.get<long long>();
    if (count < 1) fail(field + ".count", "must be >= 1");
    std::vector<double> values(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) values[i] = start + static_cast<double>(i) * step;
    return values;
  }
  fail(field, "expected an array or a {start, step, count} object");
}

std::vector<std::vector<double>> parse_base_grid(const json& j, const std::string& field) {
  if (j.is_array()) {
    if (j.empty()) fail(field, "grid array must be nonempty");
    std::vector<std::vector<double>> out;
    if (j.front().is_array()) {
      for (const json& row : j) {
        std::vector<double> v;
        for (const json& x : row) v.push_back(require_number(x, field));
        if (v.empty()) fail(field, "base vectors must be nonempty");
        out.push_back(std::move(v));
      }
    } else {
      for (const json& x : j) out.push_back({require_number(x, field)});
    }
    return out;
  }
  if (j.is_object()) {
    const json& start = j.value("start", json());
    if (start.is_number()) {
      std::vector<std::vector<double>> out;
      for (double v : parse_grid_1d(j, field)) out.push_back({v});
      return out;
    }
    // product grid: start/step/count are arrays, one entry per dimension
    if (!start.is_array()) fail(field + ".start", "expected a number or an array");
    const json& step = j.value("step", json());
    const json& count = j.value("count", json());
    if (!step.is_array() || !count.is_array() || step.size() != start.size() ||
        count.size() != start.size())
      fail(field, "product grid needs start/step/count arrays of equal length");
    const std::size_t d = start.size();
    std::vector<std::size_t> counts(d);
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) {
      const long long c = count[i].get<long long>();
      if (c < 1) fail(field + ".count", "entries must be >= 1");
      counts[i] = static_cast<std::size_t>(c);
      total *= counts[i];
    }
    std::vector<std::vector<double>> out;
    out.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t k = 0; k < total; ++k) {
      std::vector<double> v(d);
      for (std::size_t i = 0; i < d; ++i)
        v[i] = start[i].get<double>() + static_cast<double>(idx[i]) * step[i].get<double>();
      out.push_back(std::move(v));
      for (std::size_t i = d; i-- > 0;) {  // last dimension fastest
        if (++idx[i] < counts[i]) break;
        idx[i] = 0;
      }
    }
    return out;
  }
  fail(field, "expected an array or grid object");
}

void validate_section_spec(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  const std::string kind = j.value("kind", "");
  if (kind == "graph_of_function") {
    const std::string fn = j.value("function", "");
    if (fn != "zero" && fn != "abs" && fn != "linear" && fn != "table")
      fail(field + ".function", "expected zero, abs, linear or table");
    if (fn == "table" && !j.contains("heights")) fail(field + ".heights", "table graphs need heights");
  } else if (kind == "perturbed") {
    if (j.contains("scale") && !(j.at("scale").get<double>() > 0))
      fail(field + ".scale", "must be positive");
  } else if (kind != "random") {
    fail(field + ".kind", "expected graph_of_function, perturbed or random");
  }
}

}  // namespace

RunConfig parse_run_config(const json& document) {
  if (!document.is_object()) throw ConfigError("config document must be a JSON object");

  static const std::set<std::string> known_keys = {
      "model",   "section",   "section_b", "analyses",  "tau",           "chain_tau",
      "alpha",   "eta",       "qc_h",      "delta",     "radius_grid",   "seed",
      "caps",    "ell_ceiling", "lemma_ell_eta", "emit_csv",
      // flat model form: grids or space data sit beside a string "model"
      "base_grid", "fiber_grid", "center_grid", "points", "metric", "fibers", "measure"};
  for (const auto& [key, value] : document.items())
    if (!known_keys.count(key)) fail(key, "unknown configuration field");

  RunConfig cfg;
  bool sections_lifted = false;
  if (!document.contains("model")) fail("model", "required");
  if (document.at("model").is_string()) {
    // flat form: lift the model-level keys into a model block
    cfg.model = json{{"kind", document.at("model").get<std::string>()}};
    for (const char* key :
         {"base_grid", "fiber_grid", "center_grid", "points", "metric", "fibers", "measure"})
      if (document.contains(key)) cfg.model[key] = document.at(key);
    if (cfg.model.value("kind", "") == "explicit") {
      // the space document shape keeps its section tables beside the metric
      for (const char* key : {"section", "section_b"})
        if (document.contains(key)) cfg.model[key] = document.at(key);
      sections_lifted = true;
    }
  } else if (document.at("model").is_object()) {
    for (const char* key :
         {"base_grid", "fiber_grid", "center_grid", "points", "metric", "fibers", "measure"})
      if (document.contains(key)) fail(key, "belongs inside the model block when model is an object");
    cfg.model = document.at("model");
  } else {
    fail("model", "expected a model name or a model object");
  }
  const std::string kind = cfg.model.value("kind", "");
  if (kind != "euclidean" && kind != "heisenberg" && kind != "explicit")
    fail("model.kind", "expected euclidean, heisenberg or explicit");

  if (!document.contains("analyses") || !document.at("analyses").is_array() ||
      document.at("analyses").empty())
    fail("analyses", "required nonempty array");
  std::set<std::string> seen;
  for (const json& a : document.at("analyses")) {
    const std::string name = a.get<std::string>();
    if (std::find(canonical_order().begin(), canonical_order().end(), name) ==
        canonical_order().end())
      fail("analyses", "unknown analysis '" + name + "'");
    if (seen.insert(name).second) cfg.analyses.push_back(name);
  }
  std::sort(cfg.analyses.begin(), cfg.analyses.end());

  auto has = [&](const char* name) {
    return std::find(cfg.analyses.begin(), cfg.analyses.end(), name) != cfg.analyses.end();
  };

  if (kind == "explicit") {
    if (!sections_lifted && (document.contains("section") || document.contains("section_b")))
      fail("section", "explicit spaces carry their sections inside the model block");
    if (!cfg.model.contains("section") &&
        (has("triples") || has("fit-eta") || has("lipschitz") || has("holder") ||
         has("eccentricity") || has("ell-eta") || has("qc-check") || has("ahlfors") ||
         has("lemma") || has("chain")))
      fail("model.section", "the selected analyses need a section");
    if (has("chain") && !cfg.model.contains("section_b"))
      fail("model.section_b", "chain needs two sections");
  } else {
    if (!document.contains("section")) fail("section", "required for generated models");
    validate_section_spec(document.at("section"), "section");
    cfg.section = document.at("section");
    if (document.contains("section_b")) {
      validate_section_spec(document.at("section_b"), "section_b");
      cfg.section_b = document.at("section_b");
    }
    if (has("chain") && !cfg.section_b) fail("section_b", "chain needs two sections");
    // grids must parse
    if (kind == "euclidean") {
      parse_base_grid(cfg.model.value("base_grid", json()), "model.base_grid");
      parse_grid_1d(cfg.model.value("fiber_grid", json()), "model.fiber_grid");
    } else {
      parse_base_grid(cfg.model.value("base_grid", json()), "model.base_grid");
      parse_grid_1d(cfg.model.value("center_grid", json()), "model.center_grid");
    }
  }

  cfg.tau = document.value("tau", 1e-9);
  if (!(cfg.tau > 0)) fail("tau", "must be positive");
  cfg.chain_tau = document.value("chain_tau", 0.05);
  if (!(cfg.chain_tau > 0)) fail("chain_tau", "must be positive");
  cfg.alpha = document.value("alpha", 0.5);
  if (has("holder") && !(cfg.alpha > 0 && cfg.alpha < 1)) fail("alpha", "must lie in (0, 1)");

  if (document.contains("eta")) {
    const json& eta = document.at("eta");
    if (!eta.is_object() || eta.value("kind", "") != "power")
      fail("eta", "only {\"kind\": \"power\", ...} moduli can be supplied directly");
    const double c = require_number(eta.value("coefficient", json()), "eta.coefficient");
    const double e = require_number(eta.value("exponent", json()), "eta.exponent");
    if (!(c > 0) || e < 0) fail("eta", "needs coefficient > 0 and exponent >= 0");
    cfg.eta_power = std::make_pair(c, e);
  }

  if (document.contains("qc_h")) cfg.qc_h = require_number(document.at("qc_h"), "qc_h");
  if (has("qc-check")) {
    if (!cfg.qc_h) fail("qc_h", "required when qc-check is selected");
    if (!(*cfg.qc_h > 0)) fail("qc_h", "must be positive");
  }
  if (document.contains("delta")) {
    cfg.delta = require_number(document.at("delta"), "delta");
    if (!(*cfg.delta > 0)) fail("delta", "must be positive");
  }

  const bool needs_radii =
      has("eccentricity") || has("comparability") || has("ahlfors") || has("lemma") || has("chain");
  if (document.contains("radius_grid")) {
    const json& rg = document.at("radius_grid");
    cfg.has_radius_grid = true;
    if (rg.is_array()) {
      for (const json& v : rg) cfg.radius_grid.explicit_values.push_back(require_number(v, "radius_grid"));
      if (cfg.radius_grid.explicit_values.size() < 2) fail("radius_grid", "needs at least two radii");
      for (double r : cfg.radius_grid.explicit_values)
        if (!(r > 0)) fail("radius_grid", "radii must be positive");
    } else if (rg.is_object()) {
      cfg.radius_grid.min = require_number(rg.value("min", json()), "radius_grid.min");
      cfg.radius_grid.max = require_number(rg.value("max", json()), "radius_grid.max");
      const json count = rg.value("count", json());
      if (!count.is_number_integer()) fail("radius_grid.count", "expected an integer");
      cfg.radius_grid.count = static_cast<int>(count.get<long long>());
      if (!(cfg.radius_grid.min > 0) || !(cfg.radius_grid.max > cfg.radius_grid.min) ||
          cfg.radius_grid.count < 2)
        fail("radius_grid", "needs 0 < min < max and count >= 2");
    } else {
      fail("radius_grid", "expected an array or {min, max, count}");
    }
  } else if (needs_radii) {
    fail("radius_grid", "required by the selected analyses");
  }

  cfg.seed = document.value("seed", 0ull);
  cfg.ell_ceiling = document.value("ell_ceiling", 1e6);
  if (!(cfg.ell_ceiling > 0)) fail("ell_ceiling", "must be positive");
  if (document.contains("lemma_ell_eta")) {
    cfg.lemma_ell_eta = require_number(document.at("lemma_ell_eta"), "lemma_ell_eta");
    if (!(*cfg.lemma_ell_eta > 0)) fail("lemma_ell_eta", "must be positive");
  }
  cfg.emit_csv = document.value("emit_csv", true);

  if (document.contains("caps")) {
    const json& caps = document.at("caps");
    if (!caps.is_object()) fail("caps", "expected an object");
    auto cap = [&](const char* name, std::size_t fallback) -> std::size_t {
      if (!caps.contains(name)) return fallback;
      const long long v = caps.at(name).get<long long>();
      if (v < 1) fail(std::string("caps.") + name, "must be >= 1");
      return static_cast<std::size_t>(v);
    };
    cfg.caps.triple_bases = cap("triple_bases", cfg.caps.triple_bases);
    cfg.caps.pair_bases = cap("pair_bases", cfg.caps.pair_bases);
    cfg.caps.probe_points = cap("probe_points", cfg.caps.probe_points);
    cfg.caps.ell_bases = cap("ell_bases", cfg.caps.ell_bases);
    cfg.caps.centers = cap("centers", cfg.caps.centers);
    cfg.caps.validate_points = cap("validate_points", cfg.caps.validate_points);
    cfg.caps.eccentricity_bases = cap("eccentricity_bases", cfg.caps.eccentricity_bases);
    cfg.caps.comparability_pairs = cap("comparability_pairs", cfg.caps.comparability_pairs);
    cfg.caps.qc_probe_points = cap("qc_probe_points", cfg.caps.qc_probe_points);
  }
  return cfg;
}

json resolved_config_json(const RunConfig& cfg) {
  json caps{{"triple_bases", cfg.caps.triple_bases},
            {"pair_bases", cfg.caps.pair_bases},
            {"probe_points", cfg.caps.probe_points},
            {"ell_bases", cfg.caps.ell_bases},
            {"centers", cfg.caps.centers},
            {"validate_points", cfg.caps.validate_points},
            {"eccentricity_bases", cfg.caps.eccentricity_bases},
            {"comparability_pairs", cfg.caps.comparability_pairs},
            {"qc_probe_points", cfg.caps.qc_probe_points}};
  json radius_grid;
  if (cfg.has_radius_grid) {
    if (!cfg.radius_grid.explicit_values.empty())
      radius_grid = cfg.radius_grid.explicit_values;
    else
      radius_grid = json{{"min", cfg.radius_grid.min},
                         {"max", cfg.radius_grid.max},
                         {"count", cfg.radius_grid.count}};
  }
  json eta;
  if (cfg.eta_power)
    eta = json{{"kind", "power"}, {"coefficient", cfg.eta_power->first},
               {"exponent", cfg.eta_power->second}};
  return json{{"model", cfg.model},
              {"section", cfg.section.is_null() ? json() : cfg.section},
              {"section_b", cfg.section_b ? *cfg.section_b : json()},
              {"analyses", cfg.analyses},
              {"tau", cfg.tau},
              {"chain_tau", cfg.chain_tau},
              {"alpha", cfg.alpha},
              {"eta", eta},
              {"qc_h", cfg.qc_h ? json(*cfg.qc_h) : json()},
              {"delta", cfg.delta ? json(*cfg.delta) : json()},
              {"radius_grid", radius_grid},
              {"seed", cfg.seed},
              {"caps", caps},
              {"ell_ceiling", cfg.ell_ceiling},
              {"lemma_ell_eta", cfg.lemma_ell_eta ? json(*cfg.lemma_ell_eta) : json()},
              {"emit_csv", cfg.emit_csv},
              {"version", kVersion},
              {"rng", kRngVersion}};
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

SectionSpec section_spec_from_json(const json& j, std::uint64_t default_seed) {
  SectionSpec spec;
  const std::string kind = j.value("kind", "");
  if (kind == "graph_of_function") {
    spec.kind = SectionSpec::Kind::kGraphOfFunction;
    const std::string fn = j.value("function", "zero");
    if (fn == "zero") spec.graph = SectionSpec::Graph::kZero;
    if (fn == "abs") spec.graph = SectionSpec::Graph::kAbs;
    if (fn == "linear") spec.graph = SectionSpec::Graph::kLinear;
    if (fn == "table") {
      spec.graph = SectionSpec::Graph::kTable;
      spec.table = j.at("heights").get<std::vector<double>>();
    }
    spec.coefficient = j.value("coefficient", 1.0);
    if (j.contains("center")) {
      if (j.at("center").is_array())
        spec.center = j.at("center").get<std::vector<double>>();
      else
        spec.center = {j.at("center").get<double>()};
    }
  } else if (kind == "perturbed") {
    spec.kind = SectionSpec::Kind::kPerturbed;
    spec.scale = j.value("scale", 1.0);
    spec.seed = j.value("seed", default_seed);
  } else {
    spec.kind = SectionSpec::Kind::kRandom;
    spec.seed = j.value("seed", default_seed);
  }
  return spec;
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Ctx {
  explicit Ctx(const RunConfig& c) : cfg(c), resolved(resolved_config_json(c)) {}

  const RunConfig& cfg;
  json resolved;
  std::string hash;
  std::optional<ModelBundle> bundle;
  std::optional<SectionSample> section, section_b;
  json section_info = json::object();

  std::vector<double> radii;
  std::vector<BaseId> triple_bases, pair_bases, ell_bases, ecc_bases, centers;
  std::vector<PointId> probes, qc_probes;

  std::optional<TripleScan> triples;
  std::optional<MonotoneModulus> fitted;
  std::optional<Modulus> eta;
  std::optional<EllEtaResult> ell;
};

std::vector<PointId> strided_points(std::size_t n, std::size_t cap) {
  return strided_subset(n, cap);
}

void build_context(Ctx& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::string kind = cfg.model.value("kind", "");
  if (kind == "explicit") {
    ExplicitSpace parsed = parse_explicit_space(cfg.model);
    ctx.section = std::move(parsed.section);
    ctx.section_b = std::move(parsed.section_b);
    ctx.bundle.emplace(std::move(parsed.bundle));
    ctx.section_info["kind"] = "inline";
  } else {
    if (kind == "euclidean") {
      ctx.bundle.emplace(build_euclidean_foliation(
          parse_base_grid(cfg.model.at("base_grid"), "model.base_grid"),
          parse_grid_1d(cfg.model.at("fiber_grid"), "model.fiber_grid")));
    } else {
      std::vector<std::array<double, 2>> base;
      for (const auto& v : parse_base_grid(cfg.model.at("base_grid"), "model.base_grid")) {
        if (v.size() != 2) throw ConfigError("heisenberg base grid entries must be (a, b) pairs");
        base.push_back({v[0], v[1]});
      }
      ctx.bundle.emplace(
          build_heisenberg(base, parse_grid_1d(cfg.model.at("center_grid"), "model.center_grid")));
    }
    const SectionGenResult primary =
        generate_section(*ctx.bundle, section_spec_from_json(cfg.section, cfg.seed));
    ctx.section = primary.section;
    ctx.section_info["primary"] = {{"max_snap_error", primary.max_snap_error},
                                   {"snapped", primary.snapped_count}};
    if (cfg.section_b) {
      const SectionGenResult secondary =
          generate_section(*ctx.bundle, section_spec_from_json(*cfg.section_b, cfg.seed + 1));
      ctx.section_b = secondary.section;
      ctx.section_info["secondary"] = {{"max_snap_error", secondary.max_snap_error},
                                       {"snapped", secondary.snapped_count}};
    }
  }

  if (cfg.has_radius_grid) {
    ctx.radii = cfg.radius_grid.explicit_values.empty()
                    ? geometric_radii(cfg.radius_grid.min, cfg.radius_grid.max, cfg.radius_grid.count)
                    : cfg.radius_grid.explicit_values;
    std::sort(ctx.radii.begin(), ctx.radii.end());
  }

  const std::size_t bases = ctx.bundle->quotient.base_count();
  const std::size_t points = ctx.bundle->quotient.point_count();
  ctx.triple_bases = strided_subset(bases, cfg.caps.triple_bases);
  ctx.pair_bases = strided_subset(bases, cfg.caps.pair_bases);
  ctx.ell_bases = strided_subset(bases, cfg.caps.ell_bases);
  ctx.ecc_bases = strided_subset(bases, cfg.caps.eccentricity_bases);
  ctx.probes = strided_points(points, cfg.caps.probe_points);
  ctx.qc_probes = strided_points(points, cfg.caps.qc_probe_points);

  if (!ctx.radii.empty()) {
    const auto& interior = ctx.bundle->interior_radius;
    std::vector<BaseId> eligible;
    if (interior.empty()) {
      eligible = strided_subset(bases, bases);  // no guard information
    } else {
      for (BaseId y = 0; y < bases; ++y)
        if (interior[y] >= ctx.radii.back()) eligible.push_back(y);
    }
    const std::vector<std::uint32_t> pick = strided_subset(eligible.size(), cfg.caps.centers);
    for (std::uint32_t i : pick) ctx.centers.push_back(eligible[i]);
  }

  if (cfg.eta_power) ctx.eta = Modulus::power(cfg.eta_power->first, cfg.eta_power->second);
}

// Deterministic decimal CSV rows.
void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << double_to_string(row[i]);
    }
    out << "\n";
  }
}

}  // namespace

RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir, bool quiet) {
  RunResult result;
  Ctx ctx(cfg);
  ctx.hash = hex16(fnv1a64(ctx.resolved.dump()));
  result.bundle_dir = out_dir / ctx.hash;

  auto note = [&](const std::string& line) {
    result.log.push_back(line);
    (void)quiet;
  };

  try {
    build_context(ctx);
  } catch (const ConfigError& e) {
    result.exit_code = 2;
    note(std::string("config error: ") + e.what());
    return result;
  } catch (const PreconditionError& e) {
    result.exit_code = 2;
    note(std::string("config error: ") + e.what());
    return result;
  }

  std::error_code ec;
  std::filesystem::create_directories(result.bundle_dir, ec);
  if (ec) {
    result.exit_code = 4;
    note("cannot create bundle directory: " + result.bundle_dir.string());
    return result;
  }

  // Dependency closure.
  std::set<std::string> selected(cfg.analyses.begin(), cfg.analyses.end());
  const std::set<std::string> requested = selected;
  if (selected.count("chain")) {
    selected.insert({"triples", "fit-eta", "ahlfors", "ell-eta", "comparability"});
  }
  if (selected.count("lemma") && !cfg.lemma_ell_eta) selected.insert("ell-eta");
  if ((selected.count("ell-eta") || selected.count("qc-check")) && !cfg.eta_power)
    selected.insert("fit-eta");
  if (selected.count("fit-eta")) selected.insert("triples");

  const FiniteMetricSpace& space = ctx.bundle->space;
  const QuotientStructure& quotient = ctx.bundle->quotient;

  auto need_section = [&]() -> const SectionSample& {
    if (!ctx.section) throw PreconditionError("this analysis needs a section");
    return *ctx.section;
  };

  std::map<std::string, std::function<json(std::filesystem::path&)>> analyses;

  analyses["validate"] = [&](std::filesystem::path&) {
    const std::vector<PointId> sample =
        strided_points(quotient.point_count(), cfg.caps.validate_points);
    const MetricVerdict verdict = validate_metric(space, cfg.tau, 100, sample);
    json out{{"metric", metric_verdict_to_json(verdict)},
             {"sampled", sample.size() < quotient.point_count()}};
    if (ctx.bundle->kind == "heisenberg") {
      out["left_invariance"] = {
          {"max_rel_dev",
           heisenberg_left_invariance_deviation(ctx.bundle->point_coords, cfg.seed, 1000)},
          {"trials", 1000},
          {"tolerance", cfg.tau}};
      if (ctx.section)
        out["fiber_scan_boundary_hits"] =
            fiber_scan_boundary_hits(space, *ctx.bundle, *ctx.section);
    }
    out["fiber_spacing"] = ctx.bundle->fiber_spacing;
    return out;
  };

  analyses["triples"] = [&](std::filesystem::path& csv) {
    ctx.triples = enumerate_triples(space, quotient, need_section(), ctx.triple_bases);
    const TripleScan& scan = *ctx.triples;
    double t_min = 0, t_max = 0, r_min = 0, r_max = 0;
    if (!scan.records.empty()) {
      t_min = t_max = scan.records.front().ratio_t;
      r_min = r_max = scan.records.front().ratio_r;
      for (const TripleRecord& rec : scan.records) {
        t_min = std::min(t_min, rec.ratio_t);
        t_max = std::max(t_max, rec.ratio_t);
        r_min = std::min(r_min, rec.ratio_r);
        r_max = std::max(r_max, rec.ratio_r);
      }
    }
    if (cfg.emit_csv) {
      std::vector<std::vector<double>> rows;
      rows.reserve(scan.records.size());
      for (const TripleRecord& rec : scan.records)
        rows.push_back({static_cast<double>(rec.y1), static_cast<double>(rec.y2),
                        static_cast<double>(rec.y3), rec.ratio_t, rec.ratio_r});
      csv = result.bundle_dir / "triples.csv";
      write_csv(csv, "y1,y2,y3,t,R", rows);
    }
    return json{{"count", scan.records.size()},
                {"skipped", scan.skipped},
                {"bases_used", scan.bases.size()},
                {"t_min", t_min},
                {"t_max", t_max},
                {"R_min", r_min},
                {"R_max", r_max}};
  };

  analyses["fit-eta"] = [&](std::filesystem::path&) {
    if (!ctx.triples) throw PreconditionError("prerequisite triples unavailable");
    ctx.fitted = fit_eta(ctx.triples->records);
    if (!ctx.eta) ctx.eta = Modulus::envelope(*ctx.fitted);
    const QsVerdict verdict = check_quasi_symmetry(ctx.triples->records, *ctx.eta, cfg.tau);
    return json{{"envelope", envelope_to_json(*ctx.fitted)},
                {"records", ctx.triples->records.size()},
                {"skipped", ctx.triples->skipped},
                {"self_check", qs_verdict_to_json(verdict, ctx.triples->skipped)},
                {"eta_representation", kEtaRepresentationNote}};
  };

  analyses["lipschitz"] = [&](std::filesystem::path&) {
    PairWitness witness;
    std::size_t degenerate = 0;
    const double constant = minimal_lipschitz_constant(space, quotient, need_section(),
                                                       ctx.pair_bases, &witness, &degenerate);
    return json{{"constant", constant},
                {"witness", {{"y1", witness.y1}, {"y2", witness.y2}}},
                {"bases_used", ctx.pair_bases.size()},
                {"degenerate_pairs", degenerate}};
  };

  analyses["holder"] = [&](std::filesystem::path&) {
    const HolderFit fit =
        minimal_holder_constant(space, quotient, need_section(), cfg.alpha, ctx.pair_bases);
    return json{{"alpha", fit.alpha},
                {"constant", fit.constant},
                {"separation", fit.separation},
                {"modulus", modulus_to_json(fit.implied_modulus())},
                {"bases_used", ctx.pair_bases.size()}};
  };

  analyses["eccentricity"] = [&](std::filesystem::path&) {
    json records = json::array();
    for (BaseId y : ctx.ecc_bases)
      for (double r : ctx.radii)
        records.push_back(eccentricity_to_json(eccentricity(space, quotient, need_section(), y, r)));
    return json{{"records", records}};
  };

  analyses["ell-eta"] = [&](std::filesystem::path&) {
    if (!ctx.eta) throw PreconditionError("prerequisite eta unavailable");
    EllEtaOptions options;
    options.ceiling = cfg.ell_ceiling;
    options.bases = ctx.ell_bases;
    ctx.ell = compute_ell_eta(space, quotient, need_section(), *ctx.eta, ctx.probes, options);
    json out = ell_eta_to_json(*ctx.ell);
    out["ceiling"] = cfg.ell_ceiling;
    out["eta"] = modulus_to_json(*ctx.eta);
    out["eta_representation"] = kEtaRepresentationNote;
    return out;
  };

  analyses["qc-check"] = [&](std::filesystem::path&) {
    if (!ctx.eta) throw PreconditionError("prerequisite eta unavailable");
    double delta = cfg.delta ? *cfg.delta : 1.5 * ctx.bundle->fiber_spacing;
    if (!(delta > 0))
      throw PreconditionError("no delta configured and the model has no fiber spacing");
    // two scales expose the discretization sensitivity of the limsup surrogate
    const QcVerdict coarse = check_quasi_conformal(space, quotient, need_section(), *ctx.eta,
                                                   *cfg.qc_h, delta, ctx.qc_probes, cfg.tau,
                                                   ctx.triple_bases);
    const QcVerdict fine = check_quasi_conformal(space, quotient, need_section(), *ctx.eta,
                                                 *cfg.qc_h, delta / 2, ctx.qc_probes, cfg.tau,
                                                 ctx.triple_bases);
    return json{{"h", *cfg.qc_h},
                {"runs", {qc_verdict_to_json(coarse), qc_verdict_to_json(fine)}},
                {"eta", modulus_to_json(*ctx.eta)},
                {"eta_representation", kEtaRepresentationNote}};
  };

  analyses["comparability"] = [&](std::filesystem::path&) {
    std::vector<std::pair<PointId, PointId>> pairs;
    if (ctx.section && ctx.section_b) {
      for (std::uint32_t y :
           strided_subset(quotient.base_count(), cfg.caps.comparability_pairs))
        pairs.emplace_back(ctx.section->point_for(y), ctx.section_b->point_for(y));
    } else {
      for (std::uint32_t y :
           strided_subset(quotient.base_count(), cfg.caps.comparability_pairs)) {
        const auto& pts = quotient.fiber_points(y);
        if (pts.size() >= 2) pairs.emplace_back(pts.front(), pts.back());
      }
    }
    if (pairs.empty())
      throw PreconditionError("no comparability pairs available (all fibers are singletons)");
    ComparabilityWitness witness;
    const double constant = comparability_constant(space, quotient, pairs, ctx.radii, &witness);
    return comparability_to_json(constant, witness, pairs.size());
  };

  analyses["ahlfors"] = [&](std::filesystem::path& csv) {
    if (ctx.centers.empty())
      throw PreconditionError(
          "no interior centers available for the radius window; shrink radius_grid.max");
    FitOptions options;
    options.interior_radius = ctx.bundle->interior_radius;
    const RegularityReport report =
        fit_regularity(space, quotient, need_section(), ctx.centers, ctx.radii, options);
    if (cfg.emit_csv) {
      std::vector<std::vector<double>> rows;
      rows.reserve(report.samples.size());
      for (const RegularitySample& s : report.samples)
        rows.push_back({static_cast<double>(s.center_base), static_cast<double>(s.center),
                        s.radius, s.measure});
      csv = result.bundle_dir / "ahlfors.csv";
      write_csv(csv, "center_base,center_point,radius,measure", rows);
    }
    return regularity_report_to_json(report);
  };

  analyses["lemma"] = [&](std::filesystem::path&) {
    double ell = 0;
    if (cfg.lemma_ell_eta) {
      ell = *cfg.lemma_ell_eta;
    } else {
      if (!ctx.ell) throw PreconditionError("prerequisite ell-eta unavailable");
      ell = ctx.ell->value;
    }
    std::vector<PointId> centers;
    for (std::uint32_t y : strided_subset(quotient.base_count(), cfg.caps.centers))
      centers.push_back(need_section().point_for(y));
    const InclusionVerdict verdict =
        check_ball_inclusion(space, quotient, need_section(), ell, centers, ctx.radii);
    json out = inclusion_verdict_to_json(verdict);
    out["centers_used"] = centers.size();
    out["eta_representation"] = kEtaRepresentationNote;
    return out;
  };

  analyses["chain"] = [&](std::filesystem::path&) {
    if (!ctx.section_b) throw PreconditionError("chain needs two sections");
    const SectionSample& phi = need_section();
    const SectionSample& psi = *ctx.section_b;

    Modulus eta = [&]() {
      if (cfg.eta_power) return *ctx.eta;
      TripleScan phi_scan = enumerate_triples(space, quotient, phi, ctx.triple_bases);
      const TripleScan psi_scan = enumerate_triples(space, quotient, psi, ctx.triple_bases);
      phi_scan.records.insert(phi_scan.records.end(), psi_scan.records.begin(),
                              psi_scan.records.end());
      return Modulus::envelope(fit_eta(phi_scan.records));
    }();

    ChainOptions options;
    options.tau = cfg.chain_tau;
    options.qs_slack = cfg.tau;
    options.triple_bases = ctx.triple_bases;
    options.ell_probes = ctx.probes;
    options.ell_options.ceiling = cfg.ell_ceiling;
    options.ell_options.bases = ctx.ell_bases;
    options.fit_options.interior_radius = ctx.bundle->interior_radius;
    if (ctx.centers.empty())
      throw PreconditionError(
          "no interior centers available for the radius window; shrink radius_grid.max");
    const ChainVerdict verdict =
        check_theorem_chain(space, quotient, phi, psi, eta, ctx.centers, ctx.radii, options);
    json out = chain_verdict_to_json(verdict);
    out["eta"] = modulus_to_json(eta);
    out["eta_representation"] = kEtaRepresentationNote;
    out["centers_used"] = ctx.centers.size();
    return out;
  };

  // Execute in canonical order, record one manifest entry per analysis.
  json manifest_entries = json::array();
  bool any_precondition = false;
  bool any_internal = false;
  for (const std::string& name : canonical_order()) {
    if (!selected.count(name)) continue;
    json entry{{"name", name}, {"requested", requested.count(name) > 0}};
    std::filesystem::path csv_path;
    try {
      const json body = analyses.at(name)(csv_path);
      const std::string filename = name + ".json";
      json document{{"analysis", name},
                    {"version", kVersion},
                    {"seed", cfg.seed},
                    {"config_hash", ctx.hash},
                    {"config", ctx.resolved},
                    {"result", body}};
      std::ofstream out(result.bundle_dir / filename, std::ios::binary);
      out << document.dump(2) << "\n";
      entry["status"] = "ok";
      entry["file"] = filename;
      if (!csv_path.empty()) entry["csv"] = csv_path.filename().string();
      note("wrote " + (result.bundle_dir / filename).string());
    } catch (const PreconditionError& e) {
      entry["status"] = "precondition_failed";
      entry["message"] = e.what();
      any_precondition = true;
      note(name + ": precondition failed: " + e.what());
    } catch (const std::exception& e) {
      entry["status"] = "internal_error";
      entry["message"] = e.what();
      any_internal = true;
      note(name + ": internal error: " + e.what());
    }
    manifest_entries.push_back(std::move(entry));
  }

  json manifest{{"version", kVersion},
                {"config_hash", ctx.hash},
                {"generated_at", iso_timestamp()},
                {"seed", cfg.seed},
                {"model",
                 {{"kind", ctx.bundle->kind},
                  {"points", quotient.point_count()},
                  {"bases", quotient.base_count()},
                  {"fiber_spacing", ctx.bundle->fiber_spacing}}},
                {"sections", ctx.section_info},
                {"analyses", manifest_entries}};
  {
    std::ofstream out(result.bundle_dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
  }

  result.exit_code = any_internal ? 4 : (any_precondition ? 3 : 0);
  return result;
}

}  // namespace sections
