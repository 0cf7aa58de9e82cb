#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "reacher/geometry.hpp"

using namespace reacher;

namespace {

// Test-local shoelace, kept separate from the library implementation.
double shoelace(const Polygon& poly) {
  double a = 0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Test-local ray-casting containment (open rule, no boundary tolerance).
bool ray_cast_inside(Vec2 p, const Polygon& poly) {
  bool in = false;
  for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if ((poly[i].y > p.y) != (poly[j].y > p.y) &&
        p.x < poly[i].x + (p.y - poly[i].y) / (poly[j].y - poly[i].y) * (poly[j].x - poly[i].x))
      in = !in;
  }
  return in;
}

// Test-local convex-polygon overlap via separating axis, used as an
// independent oracle for collision checks on rectangles.
bool sat_convex_overlap(const Polygon& a, const Polygon& b) {
  auto axes_separate = [](const Polygon& p, const Polygon& q) {
    for (size_t i = 0; i < p.size(); ++i) {
      Vec2 e = p[(i + 1) % p.size()] - p[i];
      Vec2 n{-e.y, e.x};
      double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
      for (const Vec2& v : p) {
        pmin = std::min(pmin, dot(n, v));
        pmax = std::max(pmax, dot(n, v));
      }
      for (const Vec2& v : q) {
        qmin = std::min(qmin, dot(n, v));
        qmax = std::max(qmax, dot(n, v));
      }
      if (pmax < qmin || qmax < pmin) return true;
    }
    return false;
  };
  return !axes_separate(a, b) && !axes_separate(b, a);
}

Polygon unit_square_at(double x, double y, double side = 1.0) {
  return {{x, y}, {x + side, y}, {x + side, y + side}, {x, y + side}};
}

// Dense brute force over poses for obstacle-free stick reach: anchor grid
// over the stick body, 1-degree rotations.
bool brute_force_stick_reaches(double length, double width, double target_above_boundary) {
  for (double ay = 0.0; ay <= length; ay += length / 200.0) {
    for (double ax = -width / 2; ax <= width / 2; ax += width / 8) {
      for (int deg = -60; deg <= 60; ++deg) {
        double th = deg * M_PI / 180.0;
        double c = std::cos(th), s = std::sin(th);
        // lowest corner of the posed stick relative to the anchor-on-target
        double min_dy = 1e300;
        for (Vec2 v : Polygon{{-width / 2, 0}, {width / 2, 0}, {width / 2, length}, {-width / 2, length}}) {
          double dy = s * (v.x - ax) + c * (v.y - ay);
          min_dy = std::min(min_dy, dy);
        }
        if (min_dy <= -target_above_boundary) return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST_CASE("tool polygon construction") {
  ToolSpec stick{ToolKind::stick, 0.4, 0.05, 0.0, HookSide::none};
  Polygon p = make_tool_polygon(stick);
  CHECK(p.size() == 4);
  CHECK(shoelace(p) == doctest::Approx(0.020).epsilon(1e-12));
  CHECK(is_ccw(p));

  ToolSpec hook{ToolKind::hook, 0.4, 0.05, 0.15, HookSide::right};
  Polygon hp = make_tool_polygon(hook);
  CHECK(hp.size() == 6);
  CHECK(shoelace(hp) == doctest::Approx(0.4 * 0.05 + 0.15 * 0.05 - 0.05 * 0.05).epsilon(1e-12));
  CHECK(is_ccw(hp));

  ToolSpec hl = hook;
  hl.hook_side = HookSide::left;
  Polygon lp = make_tool_polygon(hl);
  CHECK(shoelace(lp) == doctest::Approx(shoelace(hp)).epsilon(1e-12));
  // mirror image: reflected vertex sets match
  for (Vec2 v : hp) {
    bool found = false;
    for (Vec2 u : lp)
      if (std::abs(u.x + v.x) < 1e-12 && std::abs(u.y - v.y) < 1e-12) found = true;
    CHECK(found);
  }

  CHECK_THROWS_AS(make_tool_polygon(ToolSpec{ToolKind::stick, 0.05, 0.4, 0, HookSide::none}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_tool_polygon(ToolSpec{ToolKind::hook, 0.4, 0.05, 0.01, HookSide::left}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_tool_polygon(ToolSpec{ToolKind::stick, 0.4, 0.05, 0.1, HookSide::left}),
                  std::invalid_argument);
}

TEST_CASE("rigid transform") {
  Polygon sq = unit_square_at(0, 0);
  Polygon same = rigid_transform(sq, 0.0, {0, 0}, {0.3, 0.7});
  for (size_t i = 0; i < 4; ++i) {
    CHECK(same[i].x == doctest::Approx(sq[i].x).epsilon(1e-15));
    CHECK(same[i].y == doctest::Approx(sq[i].y).epsilon(1e-15));
  }

  Rng rng(7);
  for (int it = 0; it < 50; ++it) {
    ToolSpec spec{ToolKind::hook, rng.uniform(0.2, 0.6), rng.uniform(0.02, 0.1),
                  rng.uniform(0.1, 0.25), HookSide::left};
    Polygon p = make_tool_polygon(spec);
    Polygon q = rigid_transform(p, rng.uniform(-3, 3), {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                {rng.uniform(-1, 1), rng.uniform(-1, 1)});
    CHECK(std::abs(shoelace(q) - shoelace(p)) < 1e-9);
    CHECK(q.size() == p.size());
    CHECK(is_ccw(q));
  }

  // quarter turn about the center permutes the square's vertices
  Polygon rot = rigid_transform(sq, M_PI / 2, {0, 0}, {0.5, 0.5});
  for (const Vec2& v : rot) {
    bool found = false;
    for (const Vec2& u : sq)
      if (std::abs(u.x - v.x) < 1e-12 && std::abs(u.y - v.y) < 1e-12) found = true;
    CHECK(found);
  }
}

TEST_CASE("point in polygon") {
  Polygon sq = unit_square_at(0.25, 0.25, 0.5);
  CHECK(point_in_polygon(polygon_centroid(sq), sq));
  CHECK_FALSE(point_in_polygon({0.1, 0.1}, sq));
  CHECK(point_in_polygon({0.25, 0.5}, sq));  // boundary counts (closed)
  CHECK(point_in_polygon({0.25, 0.25}, sq)); // corner counts

  // L-polygon: notch points are outside
  Polygon ell = make_tool_polygon(ToolSpec{ToolKind::hook, 0.4, 0.1, 0.3, HookSide::right});
  Vec2 notch{0.1, 0.2};  // right of the handle, below the hook bar
  CHECK_FALSE(point_in_polygon(notch, ell));
  CHECK_FALSE(ray_cast_inside(notch, ell));
  Vec2 in_handle{0.0, 0.2};
  Vec2 in_hook{0.2, 0.37};
  CHECK(point_in_polygon(in_handle, ell));
  CHECK(ray_cast_inside(in_handle, ell));
  CHECK(point_in_polygon(in_hook, ell));
  CHECK(ray_cast_inside(in_hook, ell));

  // agreement with the independent ray caster over a grid (away from edges)
  Rng rng(11);
  for (int it = 0; it < 2000; ++it) {
    Vec2 p{rng.uniform(-0.2, 0.5), rng.uniform(-0.2, 0.6)};
    bool lib = point_in_polygon(p, ell);
    bool oracle = ray_cast_inside(p, ell);
    if (lib != oracle) {
      // disagreement is only allowed within boundary tolerance
      double d = 1e300;
      for (size_t i = 0; i < ell.size(); ++i) {
        Vec2 a = ell[i], b = ell[(i + 1) % ell.size()];
        Vec2 ab = b - a;
        double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
        Vec2 proj{a.x + t * ab.x, a.y + t * ab.y};
        d = std::min(d, std::hypot(p.x - proj.x, p.y - proj.y));
      }
      CHECK(d < 1e-9);
    }
  }
}

TEST_CASE("polygon intersection") {
  CHECK_FALSE(polygons_intersect(unit_square_at(0, 0), unit_square_at(2, 0)));
  CHECK(polygons_intersect(unit_square_at(0, 0), unit_square_at(0.4, 0.4, 0.2)));  // containment
  CHECK(polygons_intersect(unit_square_at(0, 0), unit_square_at(1.0, 0.0)));       // shared edge
  CHECK(polygons_intersect(unit_square_at(0, 0), unit_square_at(1.0, 1.0)));       // shared corner

  // symmetry + SAT cross-check on random rectangle pairs
  Rng rng(23);
  int overlaps = 0;
  for (int it = 0; it < 500; ++it) {
    Polygon a = rigid_transform(unit_square_at(0, 0, rng.uniform(0.1, 0.5)), rng.uniform(-3, 3),
                                {rng.uniform(0, 1), rng.uniform(0, 1)}, {0, 0});
    Polygon b = rigid_transform(unit_square_at(0, 0, rng.uniform(0.1, 0.5)), rng.uniform(-3, 3),
                                {rng.uniform(0, 1), rng.uniform(0, 1)}, {0, 0});
    bool ab = polygons_intersect(a, b);
    CHECK(ab == polygons_intersect(b, a));
    CHECK(ab == sat_convex_overlap(a, b));
    overlaps += ab;
  }
  CHECK(overlaps > 50);  // the sample actually exercises both outcomes
  CHECK(overlaps < 450);
}

TEST_CASE("interior point sampling") {
  Polygon ell = make_tool_polygon(ToolSpec{ToolKind::hook, 0.5, 0.06, 0.2, HookSide::left});
  Rng rng(5);
  auto pts = sample_interior_points(ell, 100, rng);
  CHECK(pts.size() == 100);
  for (const Vec2& p : pts) CHECK(point_in_polygon(p, ell));

  Rng r1(42), r2(42);
  auto a = sample_interior_points(ell, 50, r1);
  auto b = sample_interior_points(ell, 50, r2);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }

  // uniform on a rectangle: sample mean within 3 sigma of the center
  Polygon rect{{0.2, 0.1}, {0.6, 0.1}, {0.6, 0.9}, {0.2, 0.9}};
  Rng r3(99);
  const int n = 4000;
  auto ps = sample_interior_points(rect, n, r3);
  double mx = 0, my = 0;
  for (const Vec2& p : ps) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  const double sx = 0.4 / std::sqrt(12.0) / std::sqrt(double(n));
  const double sy = 0.8 / std::sqrt(12.0) / std::sqrt(double(n));
  CHECK(std::abs(mx - 0.4) < 3 * sx);
  CHECK(std::abs(my - 0.5) < 3 * sy);

  Polygon degenerate{{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS(sample_interior_points(degenerate, 5, rng));
}

TEST_CASE("feasibility oracle, obstacle free") {
  Scenario scn;
  scn.type = ScnType::A;
  scn.boundary_y = 0.2;
  scn.target = {0.5, 0.5};  // 0.3 above the boundary
  OracleConfig cfg;
  cfg.seed = 3;

  ToolSpec long_stick{ToolKind::stick, 0.4, 0.05, 0, HookSide::none};
  ToolSpec short_stick{ToolKind::stick, 0.2, 0.05, 0, HookSide::none};
  CHECK(feasible(scn, long_stick, cfg));
  CHECK_FALSE(feasible(scn, short_stick, cfg));

  // dense brute force agrees: 0.2 of reach cannot cover 0.3
  CHECK(brute_force_stick_reaches(0.4, 0.05, 0.3));
  CHECK_FALSE(brute_force_stick_reaches(0.2, 0.05, 0.3));
}

TEST_CASE("feasibility oracle, corridor") {
  // two obstacles forming a 0.04-wide vertical gap; tool of width 0.06
  Scenario scn;
  scn.type = ScnType::B;
  scn.boundary_y = 0.15;
  scn.target = {0.5, 0.48};
  scn.obstacles = {
      Polygon{{0.0, 0.3}, {0.48, 0.3}, {0.48, 0.42}, {0.0, 0.42}},
      Polygon{{0.52, 0.3}, {1.0, 0.3}, {1.0, 0.42}, {0.52, 0.42}},
  };
  OracleConfig cfg;
  cfg.seed = 17;

  ToolSpec wide{ToolKind::stick, 0.45, 0.06, 0, HookSide::none};
  ToolSpec thin{ToolKind::stick, 0.45, 0.03, 0, HookSide::none};
  CHECK_FALSE(feasible(scn, wide, cfg));
  CHECK(feasible(scn, thin, cfg));

  // independent confirmation for the wide stick: every pose on a dense grid
  // either misses the back region or hits an obstacle (SAT oracle)
  const Polygon tool = make_tool_polygon(wide);
  bool any_pose_ok = false;
  for (double ay = 0.0; ay <= 0.45 && !any_pose_ok; ay += 0.45 / 60) {
    for (double ax = -0.03; ax <= 0.03 && !any_pose_ok; ax += 0.01) {
      for (int deg = -60; deg <= 60 && !any_pose_ok; deg += 1) {
        Polygon posed = rigid_transform(tool, deg * M_PI / 180.0,
                                        scn.target - Vec2{ax, ay}, {ax, ay});
        double min_y = 1e300;
        for (const Vec2& v : posed) min_y = std::min(min_y, v.y);
        if (min_y > scn.boundary_y) continue;
        if (!sat_convex_overlap(posed, scn.obstacles[0]) &&
            !sat_convex_overlap(posed, scn.obstacles[1]))
          any_pose_ok = true;
      }
    }
  }
  CHECK_FALSE(any_pose_ok);
}

TEST_CASE("feasibility monotone in handle length") {
  Rng rng(31);
  for (int it = 0; it < 50; ++it) {
    Scenario scn;
    scn.type = ScnType::A;
    scn.boundary_y = rng.uniform(0.12, 0.22);
    scn.target = {rng.uniform(0.2, 0.8), scn.boundary_y + rng.uniform(0.2, 0.55)};
    OracleConfig cfg;
    cfg.seed = derive_seed(31, "mono", it);
    double width = rng.uniform(0.02, 0.1);
    bool seen_true = false;
    for (double L = std::max(0.12, width * 1.5); L <= 0.62; L += 0.025) {
      ToolSpec s{ToolKind::stick, L, width, 0, HookSide::none};
      bool f = feasible(scn, s, cfg);
      if (seen_true) CHECK(f);
      seen_true = seen_true || f;
    }
    CHECK(seen_true);  // 0.62 always covers the maximum 0.55 offset
  }
}

TEST_CASE("containment monotonicity of collision") {
  // if B clears the obstacles at a pose, any A contained in B does too
  Rng rng(77);
  for (int it = 0; it < 200; ++it) {
    double w = rng.uniform(0.05, 0.12), L = rng.uniform(0.2, 0.5);
    Polygon big = make_tool_polygon(ToolSpec{ToolKind::stick, L, w, 0, HookSide::none});
    Polygon small = make_tool_polygon(ToolSpec{ToolKind::stick, L * 0.7, w * 0.6, 0, HookSide::none});
    // shift the small tool to sit inside the big one
    small = rigid_transform(small, 0, {0, L * 0.1}, {0, 0});
    Polygon obstacle = unit_square_at(rng.uniform(0, 0.8), rng.uniform(0, 0.8), 0.2);
    double th = rng.uniform(-1.0, 1.0);
    Vec2 t{rng.uniform(0, 1), rng.uniform(0, 1)};
    Polygon big_posed = rigid_transform(big, th, t, {0, 0});
    Polygon small_posed = rigid_transform(small, th, t, {0, 0});
    if (!polygons_intersect(big_posed, obstacle)) CHECK_FALSE(polygons_intersect(small_posed, obstacle));
  }
}

TEST_CASE("raster feasibility flags") {
  Scenario scn;
  scn.boundary_y = 0.2;
  scn.target = {0.5, 0.5};
  Raster empty(1, 64, 64);
  OracleConfig cfg;
  auto v = raster_feasible(scn, empty, cfg);
  CHECK_FALSE(v.feasible);
  CHECK(v.empty_tool);

  // a full-height 3-pixel-wide bar easily reaches in the open scenario
  Raster bar(1, 64, 64);
  for (int y = 20; y < 52; ++y)
    for (int x = 31; x < 34; ++x) bar.at(0, y, x) = 1.0;
  auto v2 = raster_feasible(scn, bar, cfg);
  CHECK(v2.feasible);
  CHECK_FALSE(v2.empty_tool);
}

TEST_CASE("scenario validation") {
  Scenario bad;
  bad.boundary_y = 0.5;
  bad.target = {0.5, 0.4};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  Scenario overlap;
  overlap.boundary_y = 0.1;
  overlap.target = {0.5, 0.9};
  overlap.obstacles = {unit_square_at(0.2, 0.2, 0.3), unit_square_at(0.3, 0.3, 0.3)};
  CHECK_THROWS_AS(validate(overlap), std::invalid_argument);

  Scenario target_inside;
  target_inside.boundary_y = 0.1;
  target_inside.target = {0.3, 0.3};
  target_inside.obstacles = {unit_square_at(0.2, 0.2, 0.3)};
  CHECK_THROWS_AS(validate(target_inside), std::invalid_argument);
}
