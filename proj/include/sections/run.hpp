#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sections {

// Sampling caps for the quadratic/cubic scans; every resolved value is
// embedded in the reports so results remain interpretable.
struct SamplingCaps {
  std::size_t triple_bases = 40;
  std::size_t pair_bases = 400;       // lipschitz / holder scans
  std::size_t probe_points = 4000;    // ell_eta probes
  std::size_t ell_bases = 200;        // bases scanned by the ell_eta sup
  std::size_t centers = 48;           // regularity fit centers
  std::size_t validate_points = 2000;
  std::size_t eccentricity_bases = 8;
  std::size_t comparability_pairs = 32;
  std::size_t qc_probe_points = 2000;
};

struct RadiusGridSpec {
  double min = 0, max = 0;
  int count = 0;
  std::vector<double> explicit_values;  // wins when nonempty
};

struct RunConfig {
  nlohmann::json model;                       // resolved model block
  nlohmann::json section;                     // generated-section spec (empty for explicit)
  std::optional<nlohmann::json> section_b;
  std::vector<std::string> analyses;          // as requested, validated
  double tau = 1e-9;
  double chain_tau = 0.05;
  double alpha = 0.5;
  std::optional<std::pair<double, double>> eta_power;  // coefficient, exponent
  std::optional<double> qc_h;
  std::optional<double> delta;
  RadiusGridSpec radius_grid;
  bool has_radius_grid = false;
  std::uint64_t seed = 0;
  SamplingCaps caps;
  double ell_ceiling = 1e6;
  std::optional<double> lemma_ell_eta;        // manual override for experiments
  bool emit_csv = true;
};

// Throws ConfigError on schema or static-precondition problems.
RunConfig parse_run_config(const nlohmann::json& document);

// Canonical resolved form: defaults materialized, keys sorted on dump.
nlohmann::json resolved_config_json(const RunConfig& config);

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 config, 3 precondition, 4 internal
  std::filesystem::path bundle_dir;
  std::vector<std::string> log;
};

// Executes the selected analyses (plus dependency closure) and writes the
// report bundle under out_dir/<config-hash>/. Report bodies are byte-stable
// across reruns of the same resolved config; the manifest alone carries a
// timestamp.
RunResult run(const RunConfig& config, const std::filesystem::path& out_dir, bool quiet = false);

}  // namespace sections
