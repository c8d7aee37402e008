#include <doctest.h>

#include <cmath>

#include "flatcur/surface.h"
#include "support.h"

using namespace flatcur;
using testsupport::specFixture;
using testsupport::surfaceFixture;

namespace {

ErrorKind kindOf(auto&& fn) {
  try {
    fn();
  } catch (const FlatcurError& e) {
    return e.kind();
  }
  FAIL("expected a FlatcurError");
  return ErrorKind::Argument;
}

std::string messageOf(auto&& fn) {
  try {
    fn();
  } catch (const FlatcurError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("regular octagon with opposite sides glued") {
  const SurfaceComplex s = surfaceFixture("octagon");
  CHECK(s.n == 1);
  CHECK(s.genus == 2);
  REQUIRE(s.conePoints.size() == 1);
  CHECK(s.conePoints[0].totalAngle == doctest::Approx(6 * kPi).epsilon(1e-12));
  CHECK(std::abs(s.gaussBonnetResidual) < 1e-9);
}

TEST_CASE("quarter-translation octagon") {
  const SurfaceComplex s = surfaceFixture("fig1_left");
  CHECK(s.n == 4);
  CHECK(s.genus == 2);
  REQUIRE(s.conePoints.size() == 1);
  CHECK(s.conePoints[0].totalAngle == doctest::Approx(6 * kPi));
}

TEST_CASE("third-translation pair of hexagons") {
  const SurfaceComplex s = surfaceFixture("fig1_right");
  CHECK(s.n == 3);
  CHECK(s.genus == 2);
  REQUIRE(s.conePoints.size() == 2);
  for (const auto& c : s.conePoints) CHECK(c.totalAngle == doctest::Approx(4 * kPi));
}

TEST_CASE("double octagon") {
  const SurfaceComplex s = surfaceFixture("double_octagon");
  CHECK(s.n == 2);
  CHECK(s.genus == 3);
  REQUIRE(s.conePoints.size() == 2);
  for (const auto& c : s.conePoints) CHECK(c.totalAngle == doctest::Approx(6 * kPi));
}

TEST_CASE("Gauss-Bonnet and holonomy on every fixture") {
  for (const char* name : {"octagon", "fig1_left", "fig1_right", "double_octagon"}) {
    const SurfaceComplex s = surfaceFixture(name);
    double excess = 0;
    for (const auto& c : s.conePoints) excess += c.totalAngle - kTwoPi;
    CHECK(excess == doctest::Approx(-kTwoPi * s.eulerCharacteristic));
    for (int v = 0; v < static_cast<int>(s.vertexClasses.size()); ++v) {
      const Isometry h = holonomyAroundVertex(s, v);
      CHECK(std::abs(wrap(h.angle - s.vertexClasses[v].angle)) < 1e-9);
      CHECK(norm(h.translation) < 1e-9);
    }
  }
}

TEST_CASE("rotation index out of range") {
  SurfaceSpec spec = specFixture("fig1_left");
  spec.gluings[0].rotation = 5;
  const std::string text = serializeSurface(spec);
  CHECK(kindOf([&] { parseSurface(text); }) == ErrorKind::Validation);
  CHECK(messageOf([&] { parseSurface(text); }).find("rotation index out of range") != std::string::npos);
}

TEST_CASE("malformed documents") {
  CHECK(kindOf([] { parseSurface("{\"n\": 1, \"polygons\": ["); }) == ErrorKind::Syntax);
  SurfaceSpec spec = specFixture("octagon");
  spec.gluings.pop_back();
  CHECK(kindOf([&] { parseSurface(serializeSurface(spec)); }) == ErrorKind::Validation);
  spec = specFixture("octagon");
  spec.polygons[0].vertices[1] = spec.polygons[0].vertices[1] * 1.01;
  CHECK(kindOf([&] { buildSurface(spec); }) == ErrorKind::Geometry);
}

TEST_CASE("wrong rotation is rejected") {
  SurfaceSpec spec = specFixture("fig1_left");
  spec.gluings[0].rotation = (spec.gluings[0].rotation + 1) % 4;
  CHECK(kindOf([&] { buildSurface(spec); }) == ErrorKind::Geometry);
}

TEST_CASE("serialization round trip") {
  for (const char* name : {"octagon", "fig1_left", "fig1_right", "double_octagon"}) {
    const SurfaceSpec spec = specFixture(name);
    CHECK(parseSurface(serializeSurface(spec)) == spec);
  }
}

TEST_CASE("redeclared order keeps the geometry") {
  const SurfaceComplex a = surfaceFixture("fig1_right");
  const SurfaceComplex b = buildSurface(redeclare(specFixture("fig1_right"), 2));
  CHECK(b.n == 6);
  CHECK(b.genus == a.genus);
  REQUIRE(b.conePoints.size() == a.conePoints.size());
  CHECK(b.conePoints[0].totalAngle == doctest::Approx(a.conePoints[0].totalAngle));
}

TEST_CASE("developing across an edge matches the transition") {
  const SurfaceComplex s = surfaceFixture("fig1_left");
  const DevelopedPath d = developPath(s, 0, {EdgeRef{0, 0}, EdgeRef{0, 2}});
  REQUIRE(d.placements.size() == 3);
  // Edge 0 in the plane coincides with the partner edge developed through the transition.
  const auto& poly = s.spec.polygons[0].vertices;
  const EdgeRef pe = s.partner[0][0];
  const Vec2 b0 = poly[pe.edge], b1 = poly[(pe.edge + 1) % poly.size()];
  CHECK(norm(d.placements[1].chartToPlane.apply(b0) - poly[1]) < 1e-12);
  CHECK(norm(d.placements[1].chartToPlane.apply(b1) - poly[0]) < 1e-12);
  CHECK(kindOf([&] { developPath(s, 0, {EdgeRef{1, 0}}); }) == ErrorKind::Argument);
}

TEST_CASE("triangulation covers the polygons") {
  const SurfaceComplex s = surfaceFixture("double_octagon");
  double area = 0;
  for (const auto& t : s.triangles) {
    area += 0.5 * cross(t.p[1] - t.p[0], t.p[2] - t.p[0]);
    for (int i = 0; i < 3; ++i) {
      const Triangle& u = s.triangles[t.neighbor[i]];
      CHECK(u.neighbor[t.neighborEdge[i]] >= 0);
    }
  }
  CHECK(area == doctest::Approx(2 * 2 * (1 + std::sqrt(2.0))));
}
