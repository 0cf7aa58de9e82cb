#include "reacher/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace reacher {

namespace {

constexpr double kEps = 1e-12;

double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  if (std::abs(orient(a, b, p)) > kEps) return false;
  return p.x >= std::min(a.x, b.x) - kEps && p.x <= std::max(a.x, b.x) + kEps &&
         p.y >= std::min(a.y, b.y) - kEps && p.y <= std::max(a.y, b.y) + kEps;
}

int sign_of(double v) { return (v > kEps) - (v < -kEps); }

}  // namespace

double signed_area(const Polygon& poly) {
  double a = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

bool is_ccw(const Polygon& poly) { return signed_area(poly) > 0.0; }

Vec2 polygon_centroid(const Polygon& poly) {
  double cx = 0, cy = 0, a = 0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    double w = p.x * q.y - q.x * p.y;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
    a += w;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

BBox polygon_bbox(const Polygon& poly) {
  BBox b{poly[0].x, poly[0].y, poly[0].x, poly[0].y};
  for (const Vec2& v : poly) {
    b.min_x = std::min(b.min_x, v.x);
    b.min_y = std::min(b.min_y, v.y);
    b.max_x = std::max(b.max_x, v.x);
    b.max_y = std::max(b.max_y, v.y);
  }
  return b;
}

void validate(const ToolSpec& spec) {
  if (!(spec.handle_length > spec.handle_width && spec.handle_width > 0))
    throw std::invalid_argument("tool spec: need handle_length > handle_width > 0");
  if (spec.kind == ToolKind::stick) {
    if (spec.hook_length != 0.0 || spec.hook_side != HookSide::none)
      throw std::invalid_argument("tool spec: stick must have no hook");
  } else {
    if (spec.hook_length < spec.handle_width)
      throw std::invalid_argument("tool spec: hook_length must be >= handle_width");
    if (spec.hook_side == HookSide::none)
      throw std::invalid_argument("tool spec: hook needs a side");
  }
}

std::string to_string(ScnType t) {
  switch (t) {
    case ScnType::A: return "A";
    case ScnType::B: return "B";
    case ScnType::C: return "C";
    case ScnType::D: return "D";
    case ScnType::E: return "E";
  }
  return "?";
}

ScnType scn_type_from_string(const std::string& s) {
  if (s == "A") return ScnType::A;
  if (s == "B") return ScnType::B;
  if (s == "C") return ScnType::C;
  if (s == "D") return ScnType::D;
  if (s == "E") return ScnType::E;
  throw std::invalid_argument("unknown scenario type: " + s);
}

void validate(const Scenario& scn) {
  if (!(scn.target.y > scn.boundary_y))
    throw std::invalid_argument("scenario: target must be above the boundary");
  auto in_unit = [](Vec2 p) {
    return p.x >= -kEps && p.x <= 1 + kEps && p.y >= -kEps && p.y <= 1 + kEps;
  };
  if (!in_unit(scn.target)) throw std::invalid_argument("scenario: target outside unit square");
  for (const Polygon& obs : scn.obstacles) {
    if (obs.size() < 3 || !is_ccw(obs))
      throw std::invalid_argument("scenario: obstacle must be CCW with >= 3 vertices");
    for (const Vec2& v : obs)
      if (!in_unit(v)) throw std::invalid_argument("scenario: obstacle vertex outside unit square");
    if (point_in_polygon(scn.target, obs))
      throw std::invalid_argument("scenario: target inside an obstacle");
  }
  for (size_t i = 0; i < scn.obstacles.size(); ++i)
    for (size_t j = i + 1; j < scn.obstacles.size(); ++j)
      if (polygons_intersect(scn.obstacles[i], scn.obstacles[j]))
        throw std::invalid_argument("scenario: obstacles overlap");
}

Polygon make_tool_polygon(const ToolSpec& spec) {
  validate(spec);
  const double L = spec.handle_length;
  const double w = spec.handle_width;
  const double h = spec.hook_length;
  const double x0 = -0.5 * w, x1 = 0.5 * w;
  if (spec.kind == ToolKind::stick) return {{x0, 0}, {x1, 0}, {x1, L}, {x0, L}};
  if (h - w < kEps)  // hook bar coincides with the tip square
    return {{x0, 0}, {x1, 0}, {x1, L}, {x0, L}};
  if (spec.hook_side == HookSide::right)
    return {{x0, 0}, {x1, 0}, {x1, L - w}, {x0 + h, L - w}, {x0 + h, L}, {x0, L}};
  return {{x0, 0}, {x1, 0}, {x1, L}, {x1 - h, L}, {x1 - h, L - w}, {x0, L - w}};
}

Polygon rigid_transform(const Polygon& poly, double theta, Vec2 t, Vec2 pivot) {
  const double c = std::cos(theta), s = std::sin(theta);
  Polygon out;
  out.reserve(poly.size());
  for (const Vec2& v : poly) {
    const double dx = v.x - pivot.x, dy = v.y - pivot.y;
    out.push_back({pivot.x + c * dx - s * dy + t.x, pivot.y + s * dx + c * dy + t.y});
  }
  return out;
}

bool point_in_polygon(Vec2 p, const Polygon& poly) {
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i)
    if (on_segment(p, poly[i], poly[(i + 1) % n])) return true;
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int d1 = sign_of(orient(c, d, a));
  const int d2 = sign_of(orient(c, d, b));
  const int d3 = sign_of(orient(a, b, c));
  const int d4 = sign_of(orient(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

bool polygons_intersect(const Polygon& a, const Polygon& b) {
  const BBox ba = polygon_bbox(a), bb = polygon_bbox(b);
  if (ba.max_x < bb.min_x - kEps || bb.max_x < ba.min_x - kEps ||
      ba.max_y < bb.min_y - kEps || bb.max_y < ba.min_y - kEps)
    return false;
  const size_t na = a.size(), nb = b.size();
  for (size_t i = 0; i < na; ++i)
    for (size_t j = 0; j < nb; ++j)
      if (segments_intersect(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb])) return true;
  // No edge crossings: regions intersect only by full containment.
  return point_in_polygon(a[0], b) || point_in_polygon(b[0], a);
}

std::vector<Vec2> sample_interior_points(const Polygon& poly, int n, Rng& rng) {
  if (signed_area(poly) <= kEps) throw std::invalid_argument("sample_interior_points: degenerate polygon");
  const BBox bb = polygon_bbox(poly);
  std::vector<Vec2> pts;
  pts.reserve(n);
  long budget = static_cast<long>(n) * 100000 + 1000;
  while (static_cast<int>(pts.size()) < n) {
    if (--budget < 0) throw std::runtime_error("sample_interior_points: rejection budget exhausted");
    Vec2 p{rng.uniform(bb.min_x, bb.max_x), rng.uniform(bb.min_y, bb.max_y)};
    if (point_in_polygon(p, poly)) pts.push_back(p);
  }
  return pts;
}

namespace {

std::vector<double> rotation_grid(const OracleConfig& cfg) {
  std::vector<double> thetas(cfg.rotation_steps);
  const double lo = cfg.rotation_min_deg * M_PI / 180.0;
  const double hi = cfg.rotation_max_deg * M_PI / 180.0;
  if (cfg.rotation_steps == 1) {
    thetas[0] = lo;
    return thetas;
  }
  for (int i = 0; i < cfg.rotation_steps; ++i)
    thetas[i] = lo + (hi - lo) * i / (cfg.rotation_steps - 1);
  return thetas;
}

bool bbox_overlap(const BBox& a, const BBox& b) {
  return !(a.max_x < b.min_x - kEps || b.max_x < a.min_x - kEps ||
           a.max_y < b.min_y - kEps || b.max_y < a.min_y - kEps);
}

}  // namespace

bool feasible(const Scenario& scn, const ToolSpec& spec, const OracleConfig& cfg) {
  validate(scn);
  const Polygon tool = make_tool_polygon(spec);
  Rng rng(cfg.seed);
  const std::vector<Vec2> anchors = sample_interior_points(tool, cfg.n_interior_points, rng);
  const std::vector<double> thetas = rotation_grid(cfg);
  std::vector<BBox> obs_bb;
  obs_bb.reserve(scn.obstacles.size());
  for (const Polygon& o : scn.obstacles) obs_bb.push_back(polygon_bbox(o));

  for (const Vec2& p : anchors) {
    for (double theta : thetas) {
      const Polygon posed = rigid_transform(tool, theta, scn.target - p, p);
      double min_y = posed[0].y;
      for (const Vec2& v : posed) min_y = std::min(min_y, v.y);
      if (min_y > scn.boundary_y) continue;  // does not reach behind the line
      bool collides = false;
      const BBox pb = polygon_bbox(posed);
      for (size_t k = 0; k < scn.obstacles.size() && !collides; ++k)
        if (bbox_overlap(pb, obs_bb[k]) && polygons_intersect(posed, scn.obstacles[k])) collides = true;
      if (!collides) return true;
    }
  }
  return false;
}

RasterVerdict raster_feasible(const Scenario& scn, const Raster& tool, const OracleConfig& cfg) {
  validate(scn);
  std::vector<Vec2> cells;
  for (int y = 0; y < tool.height; ++y)
    for (int x = 0; x < tool.width; ++x)
      if (tool.at(0, y, x) >= 0.5) cells.push_back({pixel_center_x(x, tool.width), pixel_center_y(y, tool.height)});
  if (cells.empty()) return {false, true};

  // Candidate anchors: a seeded sample of occupied-pixel centers.
  Rng rng(cfg.seed);
  std::vector<size_t> idx(cells.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  const size_t n_anchor = std::min<size_t>(cfg.n_interior_points, cells.size());
  for (size_t i = 0; i < n_anchor; ++i)
    std::swap(idx[i], idx[i + rng.next_u64() % (idx.size() - i)]);

  const std::vector<double> thetas = rotation_grid(cfg);
  std::vector<BBox> obs_bb;
  obs_bb.reserve(scn.obstacles.size());
  for (const Polygon& o : scn.obstacles) obs_bb.push_back(polygon_bbox(o));

  for (size_t ai = 0; ai < n_anchor; ++ai) {
    const Vec2 p = cells[idx[ai]];
    for (double theta : thetas) {
      const double c = std::cos(theta), s = std::sin(theta);
      bool reaches = false, collides = false;
      for (const Vec2& q : cells) {
        const double dx = q.x - p.x, dy = q.y - p.y;
        const Vec2 posed{scn.target.x + c * dx - s * dy, scn.target.y + s * dx + c * dy};
        if (posed.y <= scn.boundary_y) reaches = true;
        for (size_t k = 0; k < scn.obstacles.size(); ++k) {
          const BBox& ob = obs_bb[k];
          if (posed.x < ob.min_x - kEps || posed.x > ob.max_x + kEps ||
              posed.y < ob.min_y - kEps || posed.y > ob.max_y + kEps)
            continue;
          if (point_in_polygon(posed, scn.obstacles[k])) {
            collides = true;
            break;
          }
        }
        if (collides) break;
      }
      if (reaches && !collides) return {true, false};
    }
  }
  return {false, false};
}

}  // namespace reacher
