#include "sections/model_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sections {

namespace {

double min_positive_gap(const std::vector<double>& sorted) {
  double gap = 0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double g = sorted[i] - sorted[i - 1];
    if (g > 0 && (gap == 0 || g < gap)) gap = g;
  }
  return gap;
}

// Distance from a base coordinate to the bounding box of the base grid,
// the margin used by the boundary-effect guard in regularity fits.
std::vector<double> box_interior_radii(const std::vector<std::vector<double>>& base_coords) {
  const std::size_t d = base_coords.front().size();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& y : base_coords)
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], y[i]);
      hi[i] = std::max(hi[i], y[i]);
    }
  std::vector<double> interior(base_coords.size());
  for (std::size_t b = 0; b < base_coords.size(); ++b) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) m = std::min({m, base_coords[b][i] - lo[i], hi[i] - base_coords[b][i]});
    interior[b] = m;
  }
  return interior;
}

std::vector<double> sorted_unique(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

ModelBundle build_euclidean_foliation(const std::vector<std::vector<double>>& base_grid,
                                      std::vector<double> fiber_grid) {
  if (base_grid.empty() || fiber_grid.empty())
    throw PreconditionError("foliation grids must be nonempty");
  const std::size_t d = base_grid.front().size();
  if (d == 0) throw PreconditionError("base coordinates need at least one dimension");
  for (const auto& y : base_grid)
    if (y.size() != d) throw PreconditionError("base grid vectors must share one dimension");

  const std::vector<double> heights = sorted_unique(std::move(fiber_grid));
  const std::size_t bases = base_grid.size();
  const std::size_t per_fiber = heights.size();
  const std::size_t n = bases * per_fiber;

  std::vector<double> coords(n * (d + 1));
  std::vector<BaseId> fiber_of(n);
  std::vector<std::vector<FiberSample>> axis(bases);
  for (std::size_t b = 0; b < bases; ++b) {
    axis[b].reserve(per_fiber);
    for (std::size_t j = 0; j < per_fiber; ++j) {
      const PointId p = static_cast<PointId>(b * per_fiber + j);
      double* c = coords.data() + static_cast<std::size_t>(p) * (d + 1);
      for (std::size_t i = 0; i < d; ++i) c[i] = base_grid[b][i];
      c[d] = heights[j];
      fiber_of[p] = static_cast<BaseId>(b);
      axis[b].push_back({heights[j], p});
    }
  }

  ModelBundle bundle{FiniteMetricSpace::euclidean(d + 1, coords),
                     QuotientStructure(std::move(fiber_of), bases),
                     "euclidean",
                     base_grid,
                     std::move(axis),
                     box_interior_radii(base_grid),
                     min_positive_gap(heights),
                     std::move(coords),
                     d + 1};
  return bundle;
}

ModelBundle build_euclidean_foliation(const std::vector<double>& base_grid,
                                      std::vector<double> fiber_grid) {
  std::vector<std::vector<double>> vectors;
  vectors.reserve(base_grid.size());
  for (double y : base_grid) vectors.push_back({y});
  return build_euclidean_foliation(vectors, std::move(fiber_grid));
}

ModelBundle build_heisenberg(const std::vector<std::array<double, 2>>& base_grid,
                             std::vector<double> center_grid) {
  if (base_grid.empty() || center_grid.empty())
    throw PreconditionError("Heisenberg grids must be nonempty");
  const std::vector<double> levels = sorted_unique(std::move(center_grid));
  const std::size_t bases = base_grid.size();
  const std::size_t per_fiber = levels.size();
  const std::size_t n = bases * per_fiber;

  std::vector<double> coords(n * 3);
  std::vector<BaseId> fiber_of(n);
  std::vector<std::vector<FiberSample>> axis(bases);
  std::vector<std::vector<double>> base_coords(bases);
  for (std::size_t b = 0; b < bases; ++b) {
    base_coords[b] = {base_grid[b][0], base_grid[b][1]};
    axis[b].reserve(per_fiber);
    for (std::size_t j = 0; j < per_fiber; ++j) {
      const PointId p = static_cast<PointId>(b * per_fiber + j);
      double* c = coords.data() + static_cast<std::size_t>(p) * 3;
      c[0] = base_grid[b][0];
      c[1] = base_grid[b][1];
      c[2] = levels[j];
      fiber_of[p] = static_cast<BaseId>(b);
      axis[b].push_back({levels[j], p});
    }
  }

  // Korányi balls extend ~r horizontally and ~r^2 along the center, so the
  // usable interior margin is capped by the sampled center span as well.
  std::vector<double> interior = box_interior_radii(base_coords);
  const double s_lo = levels.front(), s_hi = levels.back();
  const double vertical = std::sqrt(std::max(0.0, std::min(-s_lo, s_hi)));
  for (double& m : interior) m = std::min(m, vertical);

  ModelBundle bundle{FiniteMetricSpace::koranyi(coords),
                     QuotientStructure(std::move(fiber_of), bases),
                     "heisenberg",
                     std::move(base_coords),
                     std::move(axis),
                     std::move(interior),
                     min_positive_gap(levels),
                     std::move(coords),
                     3};
  return bundle;
}

// ---------------------------------------------------------------------------
// Section generation
// ---------------------------------------------------------------------------

namespace {

// Nearest fiber sample by coordinate; ties resolve to the lower sample.
const FiberSample& snap_to_axis(const std::vector<FiberSample>& axis, double target) {
  auto it = std::lower_bound(axis.begin(), axis.end(), target,
                             [](const FiberSample& s, double t) { return s.coordinate < t; });
  if (it == axis.begin()) return *it;
  if (it == axis.end()) return axis.back();
  const auto& above = *it;
  const auto& below = *(it - 1);
  return (above.coordinate - target < target - below.coordinate) ? above : below;
}

double graph_target(const ModelBundle& bundle, const SectionSpec& spec, BaseId y) {
  const std::vector<double>& coords = bundle.base_coords.at(y);
  switch (spec.graph) {
    case SectionSpec::Graph::kZero:
      return 0.0;
    case SectionSpec::Graph::kAbs: {
      double acc = 0;
      for (std::size_t i = 0; i < coords.size(); ++i) {
        const double c = i < spec.center.size() ? spec.center[i] : 0.0;
        const double d = coords[i] - c;
        acc += d * d;
      }
      return spec.coefficient * std::sqrt(acc);
    }
    case SectionSpec::Graph::kLinear:
      return spec.coefficient * coords.front();
    case SectionSpec::Graph::kTable:
      if (spec.table.size() != bundle.quotient.base_count())
        throw PreconditionError("section table must provide one height per base");
      return spec.table[y];
  }
  return 0.0;
}

}  // namespace

SectionGenResult generate_section(const ModelBundle& bundle, const SectionSpec& spec) {
  const std::size_t bases = bundle.quotient.base_count();
  if (bundle.fiber_axis.size() != bases)
    throw PreconditionError("model bundle carries no fiber axes; supply the section explicitly");

  std::vector<PointId> assignment(bases);
  double max_err = 0;
  std::size_t snapped = 0;
  std::mt19937_64 rng(spec.seed);

  for (BaseId y = 0; y < bases; ++y) {
    const auto& axis = bundle.fiber_axis[y];
    if (spec.kind == SectionSpec::Kind::kRandom) {
      assignment[y] = axis[static_cast<std::size_t>(rng() % axis.size())].point;
      continue;
    }
    double target = 0;
    if (spec.kind == SectionSpec::Kind::kPerturbed) {
      target = spec.scale * (2.0 * unit_double(rng) - 1.0);
    } else {
      target = graph_target(bundle, spec, y);
    }
    const FiberSample& chosen = snap_to_axis(axis, target);
    assignment[y] = chosen.point;
    const double err = std::abs(chosen.coordinate - target);
    if (err > 0) ++snapped;
    max_err = std::max(max_err, err);
  }
  return {SectionSample(bundle.quotient, std::move(assignment)), max_err, snapped};
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

double heisenberg_left_invariance_deviation(std::span<const double> coords, std::uint64_t seed,
                                            int trials) {
  if (coords.size() < 6 || coords.size() % 3 != 0)
    throw PreconditionError("left-invariance check needs at least two (x, y, t) points");
  const std::size_t n = coords.size() / 3;
  auto point = [&](std::size_t i) {
    return std::array<double, 3>{coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]};
  };
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int k = 0; k < trials; ++k) {
    const auto g = point(rng() % n);
    const auto p = point(rng() % n);
    const auto q = point(rng() % n);
    const double base = koranyi_distance(p, q);
    if (!(base > 0)) continue;  // p == q draws carry no information
    const double moved = koranyi_distance(heisenberg_multiply(g, p), heisenberg_multiply(g, q));
    worst = std::max(worst, std::abs(moved - base) / base);
  }
  return worst;
}

std::size_t fiber_scan_boundary_hits(const FiniteMetricSpace& space, const ModelBundle& bundle,
                                     const SectionSample& section) {
  std::size_t hits = 0;
  for (BaseId y = 0; y < section.base_count(); ++y) {
    const PointId p = section.point_for(y);
    for (BaseId target = 0; target < bundle.fiber_axis.size(); ++target) {
      if (target == y) continue;
      const auto& axis = bundle.fiber_axis[target];
      if (axis.size() < 2) continue;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_idx = 0;
      for (std::size_t j = 0; j < axis.size(); ++j) {
        const double d = space.dist(p, axis[j].point);
        if (d < best) {
          best = d;
          best_idx = j;
        }
      }
      if (best_idx == 0 || best_idx + 1 == axis.size()) ++hits;
    }
  }
  return hits;
}

}  // namespace sections
