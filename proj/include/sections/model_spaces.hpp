#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sections/metric_core.hpp"

namespace sections {

// One sampled fiber point together with its coordinate along the fiber
// (height for Euclidean vertical lines, center coordinate s for Heisenberg).
struct FiberSample {
  double coordinate = 0;
  PointId point = 0;
};

// A concrete model space: the metric space, its quotient structure, and the
// bookkeeping the generators know but the core types deliberately do not
// (grid geometry, fiber axes, boundary margins).
struct ModelBundle {
  FiniteMetricSpace space;
  QuotientStructure quotient;
  std::string kind;                                  // "euclidean" | "heisenberg" | "explicit"
  std::vector<std::vector<double>> base_coords;      // per base
  std::vector<std::vector<FiberSample>> fiber_axis;  // per base, ascending coordinate
  std::vector<double> interior_radius;               // per base; empty when unknown
  double fiber_spacing = 0;                          // min positive gap along fibers
  std::vector<double> point_coords;                  // flat, point_dim per point
  std::size_t point_dim = 0;
};

// Product foliation of R^(d+1): fibers are vertical lines over base_grid,
// sampled at the shared fiber_grid heights, Euclidean ambient metric,
// counting measure on the base.
ModelBundle build_euclidean_foliation(const std::vector<std::vector<double>>& base_grid,
                                      std::vector<double> fiber_grid);
ModelBundle build_euclidean_foliation(const std::vector<double>& base_grid,
                                      std::vector<double> fiber_grid);

// First Heisenberg group under the Korányi gauge; fibers are center cosets
// {(a, b, s) : s in center_grid} over base (a, b), counting measure.
ModelBundle build_heisenberg(const std::vector<std::array<double, 2>>& base_grid,
                             std::vector<double> center_grid);

// ---------------------------------------------------------------------------
// Section generation
// ---------------------------------------------------------------------------

struct SectionSpec {
  enum class Kind { kGraphOfFunction, kPerturbed, kRandom };
  enum class Graph { kZero, kAbs, kLinear, kTable };

  Kind kind = Kind::kGraphOfFunction;
  Graph graph = Graph::kZero;
  double coefficient = 1.0;       // scale for kAbs / kLinear
  std::vector<double> center;     // kAbs: height = coefficient * |y - center|
  std::vector<double> table;      // kTable: target height per base
  double scale = 1.0;             // kPerturbed: heights in scale * [-1, 1)
  std::uint64_t seed = 0;         // kPerturbed / kRandom
};

struct SectionGenResult {
  SectionSample section;
  double max_snap_error = 0;    // worst |target - chosen fiber coordinate|
  std::size_t snapped_count = 0;  // bases whose target missed the fiber grid
};

// Builds a valid section by snapping target heights to the nearest fiber
// sample. Deterministic for a fixed seed (see kRngVersion).
SectionGenResult generate_section(const ModelBundle& bundle, const SectionSpec& spec);

// ---------------------------------------------------------------------------
// Model diagnostics
// ---------------------------------------------------------------------------

// Max relative deviation of d(g.p, g.q) from d(p, q) over `trials` seeded
// draws of (g, p, q) from the given flat (x, y, t) coordinates.
double heisenberg_left_invariance_deviation(std::span<const double> coords, std::uint64_t seed,
                                            int trials);

// Counts (section point, foreign base) pairs whose nearest fiber sample sits
// at an end of that fiber's axis: the minimizer is likely truncated by the
// grid, so reported fiber distances are upper bounds there.
std::size_t fiber_scan_boundary_hits(const FiniteMetricSpace& space, const ModelBundle& bundle,
                                     const SectionSample& section);

}  // namespace sections
