#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "reacher/raster.hpp"
#include "reacher/rng.hpp"

namespace reacher {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Simple polygon, counter-clockwise, >= 3 vertices, signed area > 0.
using Polygon = std::vector<Vec2>;

double signed_area(const Polygon& poly);
bool is_ccw(const Polygon& poly);
Vec2 polygon_centroid(const Polygon& poly);

struct BBox {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};
BBox polygon_bbox(const Polygon& poly);

enum class ToolKind { stick, hook };
enum class HookSide { none, left, right };

// Parametric stick/hook description; ground truth for dataset tools.
struct ToolSpec {
  ToolKind kind = ToolKind::stick;
  double handle_length = 0.0;
  double handle_width = 0.0;
  double hook_length = 0.0;  // 0 for stick
  HookSide hook_side = HookSide::none;
};

// Throws std::invalid_argument when the invariants do not hold.
void validate(const ToolSpec& spec);

enum class ScnType { A, B, C, D, E };

std::string to_string(ScnType t);
ScnType scn_type_from_string(const std::string& s);

// One reaching task. The robot region is y <= boundary_y; the target sits
// above it; obstacles are disjoint simple polygons inside the unit square.
struct Scenario {
  ScnType type = ScnType::A;
  double boundary_y = 0.0;
  Vec2 target;
  std::vector<Polygon> obstacles;
};

void validate(const Scenario& scn);

struct OracleConfig {
  int n_interior_points = 100;
  double rotation_min_deg = -60.0;
  double rotation_max_deg = 60.0;
  int rotation_steps = 25;
  uint64_t seed = 0;
};

// Canonical tool polygon: handle axis along +y, handle base centered at the
// origin. A hook extends perpendicular from the handle tip toward hook_side,
// sharing a handle_width x handle_width corner square with the handle.
Polygon make_tool_polygon(const ToolSpec& spec);

// Rotation by theta about pivot, then translation by t.
Polygon rigid_transform(const Polygon& poly, double theta, Vec2 t, Vec2 pivot);

// Closed containment: true when p is strictly inside or on the boundary.
bool point_in_polygon(Vec2 p, const Polygon& poly);

// Closed-region intersection: edge crossings, containment, or touching.
bool polygons_intersect(const Polygon& a, const Polygon& b);

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

// Exactly n points inside the polygon, by rejection sampling in the
// bounding box. Deterministic given the rng state.
std::vector<Vec2> sample_interior_points(const Polygon& poly, int n, Rng& rng);

// Ground-truth feasibility: some sampled interior point, overlaid on the
// target and rotated within the configured range, poses the tool so that it
// touches the region y <= boundary_y without intersecting any obstacle.
bool feasible(const Scenario& scn, const ToolSpec& spec, const OracleConfig& cfg);

struct RasterVerdict {
  bool feasible = false;
  bool empty_tool = false;  // no occupied pixels
};

// The same decision procedure run on a binarized silhouette: occupied pixel
// centers stand in for the polygon, both as candidate anchor points and as
// the collision probes.
RasterVerdict raster_feasible(const Scenario& scn, const Raster& tool, const OracleConfig& cfg);

}  // namespace reacher
