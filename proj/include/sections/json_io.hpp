#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sections/metric_core.hpp"
#include "sections/model_spaces.hpp"
#include "sections/regularity.hpp"
#include "sections/section_analysis.hpp"

namespace sections {

using nlohmann::json;

// Report serialization. Shapes follow the documented interfaces:
// envelopes as {"breakpoints": [...], "values": [...]}, verdicts as
// {"pass": ..., "violations": [{"triple": [y1,y2,y3], "t":, "R":, "eta_t":}],
// "skipped": ...}. All reals are emitted in shortest round-trip decimal form.
json envelope_to_json(const MonotoneModulus& envelope);
MonotoneModulus envelope_from_json(const json& j);

json modulus_to_json(const Modulus& eta);
json metric_verdict_to_json(const MetricVerdict& verdict);
json qs_verdict_to_json(const QsVerdict& verdict, std::size_t skipped_triples);
json ell_eta_to_json(const EllEtaResult& result);
json eccentricity_to_json(const EccentricityRecord& record);
json qc_verdict_to_json(const QcVerdict& verdict);
json regularity_report_to_json(const RegularityReport& report);
json comparability_to_json(double constant, const ComparabilityWitness& witness,
                           std::size_t pairs);
json inclusion_verdict_to_json(const InclusionVerdict& verdict);
json chain_verdict_to_json(const ChainVerdict& verdict);

// ---------------------------------------------------------------------------
// Explicit space ingestion:
// {
//   "points": ["p0", ...],
//   "metric": {"kind": "explicit", "distances": [lower-triangular incl. diagonal]}
//           | {"kind": "euclidean", "coords": [[...], ...]}
//           | {"kind": "koranyi",  "coords": [[x, y, t], ...]},
//   "fibers": {"b0": ["p0", "p1"], ...},
//   "measure": {"b0": 1.5, ...},          // optional, counting measure default
//   "section": {"b0": "p0", ...},          // optional
//   "section_b": {...}                     // optional
// }
// Base ids follow the lexicographic order of the fiber keys; point ids follow
// the points array.
// ---------------------------------------------------------------------------

struct ExplicitSpace {
  ModelBundle bundle;
  std::optional<SectionSample> section;
  std::optional<SectionSample> section_b;
  std::vector<std::string> point_labels;
  std::vector<std::string> base_labels;
};

ExplicitSpace parse_explicit_space(const json& j);

}  // namespace sections
