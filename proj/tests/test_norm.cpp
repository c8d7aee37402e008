#include <doctest.h>

#include <cmath>
#include <random>

#include "flatcur/norm.h"

using namespace flatcur;

namespace {

// Independent evaluation: intersect the ray through v with the polygon boundary.
double rayNorm(const std::vector<Vec2>& poly, Vec2 v) {
  if (v == Vec2{}) return 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const double den = cross(v, b - a);
    if (std::abs(den) < 1e-300) continue;
    const double t = cross(a, b - a) / den;  // v*t on the edge line
    const double s = cross(a, v) / den;
    if (t > 0 && s >= -1e-12 && s <= 1 + 1e-12) return 1.0 / t;
  }
  return -1;
}

double bruteWeb(int n, double theta, Vec2 v) {
  double s = 0;
  for (int k = 0; k < n; ++k) {
    const double a = theta + kPi / 2 + 2 * kPi * k / n;
    s += std::abs(v.x * std::cos(a) + v.y * std::sin(a));
  }
  return s;
}

std::vector<PolygonalNorm> sampleNorms() {
  return {l1Norm(), hexagonalNorm(), webUnitBall(3, 0.0), webUnitBall(4, 0.3), webUnitBall(6, 1.1),
          invariantPolygon({{1, 0.2}, {0.3, 0.9}}, 2), invariantPolygon({{1, 0.1}}, 4),
          invariantPolygon({{1.3, 0.4}, {0.2, 1.0}}, 3)};
}

}  // namespace

TEST_CASE("eval_norm examples") {
  CHECK(evalNorm(l1Norm(), {1, 1}) == doctest::Approx(2));
  CHECK(evalNorm(l1Norm(), {0, 0}) == 0);
  CHECK(evalNorm(hexagonalNorm(), {1, 0}) == doctest::Approx(1));
}

TEST_CASE("eval_norm matches the ray oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5);
  for (const auto& q : sampleNorms())
    for (int i = 0; i < 200; ++i) {
      const Vec2 v{u(rng), u(rng)};
      CHECK(evalNorm(q, v) == doctest::Approx(rayNorm(q.vertices(), v)).epsilon(1e-12));
    }
}

TEST_CASE("web_norm examples") {
  CHECK(webNorm(4, 0, {1, 0}) == doctest::Approx(2));
  CHECK(webNorm(3, 0, {1, 0}) == doctest::Approx(std::sqrt(3.0)));
  CHECK(webNorm(5, 0.4, {0, 0}) == 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const Vec2 v{u(rng), u(rng)};
    CHECK(webNorm(4, 0, v) == doctest::Approx(2 * (std::abs(v.x) + std::abs(v.y))));
  }
}

TEST_CASE("dual polygon examples") {
  const PolygonalNorm d = dualPolygon(l1Norm());
  REQUIRE(d.vertices().size() == 4);
  for (Vec2 p : d.vertices()) {
    CHECK(std::abs(std::abs(p.x) - 1) < 1e-12);
    CHECK(std::abs(std::abs(p.y) - 1) < 1e-12);
  }
  const PolygonalNorm h = dualPolygon(hexagonalNorm());
  REQUIRE(h.vertices().size() == 6);
  for (Vec2 p : h.vertices()) {
    CHECK(norm(p) == doctest::Approx(2 / std::sqrt(3.0)));
    CHECK(std::abs(std::remainder(arg(p) - kPi / 6, kPi / 3)) < 1e-12);
  }
  for (const auto& q : sampleNorms()) {
    const PolygonalNorm dd = dualPolygon(dualPolygon(q));
    REQUIRE(dd.vertices().size() == q.vertices().size());
    for (Vec2 p : q.vertices()) {
      double best = 1e9;
      for (Vec2 r : dd.vertices()) best = std::min(best, norm(p - r));
      CHECK(best < 1e-12);
    }
  }
}

TEST_CASE("collinear vertices are removed") {
  const PolygonalNorm q({{1, 0}, {0.5, 0.5}, {0, 1}, {-1, 0}, {0, -1}}, 1);
  CHECK(q.vertices().size() == 4);
}

TEST_CASE("invalid polygons are rejected") {
  CHECK_THROWS_AS(PolygonalNorm({{2, 0}, {0, 1}, {-1, 0}, {0, -1}}, 1), FlatcurError);
  CHECK_THROWS_AS(PolygonalNorm({{1, 0}, {0, 2}, {-1, 0}, {0, -2}}, 4), FlatcurError);
  CHECK_THROWS_AS(PolygonalNorm({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}, 1), FlatcurError);
  CHECK_THROWS_AS(decomposeNorm(invariantPolygon({{1, 0.2}}, 2), 4), FlatcurError);
}

TEST_CASE("decompose examples") {
  const WebMeasure a = decomposeNorm(l1Norm(), 4);
  REQUIRE(a.atoms.size() == 1);
  CHECK(a.atoms[0].theta == doctest::Approx(0));
  CHECK(a.atoms[0].weight == doctest::Approx(0.5));

  const WebMeasure w = decomposeNorm(webUnitBall(4, 0), 4);
  REQUIRE(w.atoms.size() == 1);
  CHECK(w.atoms[0].theta == doctest::Approx(0));
  CHECK(w.atoms[0].weight == doctest::Approx(1));

  // Odd order: classes mod 2pi/3 are also merged mod pi, so the two vertex classes
  // of the hexagon collapse to one atom of the same total mass.
  const WebMeasure h = decomposeNorm(hexagonalNorm(), 3);
  CHECK(h.totalMass() == doctest::Approx(std::sqrt(3.0) / 3));
  CHECK(reconstructNorm(h, {1, 0}) == doctest::Approx(1));
  CHECK(reconstructNorm(h, {0, 1}) == doctest::Approx(rayNorm(hexagonalNorm().vertices(), {0, 1})));
}

TEST_CASE("reconstruct examples") {
  CHECK(reconstructNorm({4, {{0, 0.5}}}, {3, 4}) == doctest::Approx(7));
  CHECK(reconstructNorm({4, {}}, {3, 4}) == 0);
}

TEST_CASE("decomposition exactness and circumference") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (const auto& q : sampleNorms()) {
    const WebMeasure m = decomposeNorm(q, q.n());
    CHECK(4 * q.n() * m.totalMass() == doctest::Approx(dualPerimeter(q)).epsilon(1e-12));
    for (const auto& a : m.atoms) CHECK(a.weight > 0);
    for (int i = 0; i < 2000; ++i) {
      const Vec2 v{u(rng), u(rng)};
      const double expect = rayNorm(q.vertices(), v);
      double viaBrute = 0;
      for (const auto& a : m.atoms) viaBrute += a.weight * bruteWeb(m.n, a.theta, v);
      CHECK(std::abs(reconstructNorm(m, v) - expect) <= 1e-10 * expect);
      CHECK(std::abs(viaBrute - expect) <= 1e-10 * expect);
    }
  }
}

TEST_CASE("dual perimeter examples") {
  CHECK(dualPerimeter(l1Norm()) == doctest::Approx(8));
  CHECK(dualPerimeter(hexagonalNorm()) == doctest::Approx(4 * std::sqrt(3.0)));
}

TEST_CASE("norm axioms") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4, 4);
  for (const auto& q : sampleNorms()) {
    const WebMeasure m = decomposeNorm(q, q.n());
    for (int i = 0; i < 300; ++i) {
      const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
      const double s = std::abs(u(rng));
      CHECK(evalNorm(q, a + b) <= evalNorm(q, a) + evalNorm(q, b) + 1e-12);
      CHECK(evalNorm(q, a * s) == doctest::Approx(s * evalNorm(q, a)));
      CHECK(webNorm(5, 0.2, a + b) <= webNorm(5, 0.2, a) + webNorm(5, 0.2, b) + 1e-12);
      CHECK(reconstructNorm(m, a + b) <= reconstructNorm(m, a) + reconstructNorm(m, b) + 1e-12);
      CHECK(std::abs(evalNorm(q, rotate(a, kTwoPi / q.n())) - evalNorm(q, a)) < 1e-12 * (1 + norm(a)));
    }
  }
}

TEST_CASE("supporting vectors") {
  const Vec2 w1 = supportingVector(l1Norm(), {1, 1});
  CHECK(std::abs(cross(w1, {1, -1})) < 1e-12);
  const Vec2 w2 = supportingVector(l1Norm(), {1, 0});
  CHECK(norm(w2 - Vec2{0, 1}) < 1e-12);
  const Vec2 w3 = supportingVector(hexagonalNorm(), {1, 0});
  CHECK(norm(w3 - Vec2{0, 1}) < 1e-12);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3), t(-10, 10);
  for (const auto& q : sampleNorms())
    for (int i = 0; i < 50; ++i) {
      const Vec2 v{u(rng), u(rng)};
      const Vec2 w = supportingVector(q, v);
      CHECK(norm(w) > 0);
      CHECK(cross(v, w) > 0);
      for (int j = 0; j < 100; ++j) CHECK(evalNorm(q, v + w * t(rng)) >= evalNorm(q, v) - 1e-12);
    }
}

TEST_CASE("vertex insertion never increases the dual perimeter") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ang(0, kTwoPi), rad(0.8, 1.2);
  for (int n : {1, 2, 3, 4, 6}) {
    std::vector<Vec2> pts{polar(0.1) * 1.0, polar(1.3) * 1.1};
    double last = dualPerimeter(invariantPolygon(pts, n));
    for (int i = 0; i < 20; ++i) {
      // A point of the unit sphere of the current polygon's norm.
      const PolygonalNorm cur = invariantPolygon(pts, n);
      const Vec2 d = polar(ang(rng));
      const Vec2 onBall = d / evalNorm(cur, d) * 1.05;
      pts.push_back(onBall);
      const PolygonalNorm next = invariantPolygon(pts, n);
      (void)next;
      // Inserting a point outside the polygon enlarges it, shrinking the dual.
      const double per = dualPerimeter(next);
      CHECK(per <= last + 1e-12);
      last = per;
    }
  }
}

TEST_CASE("approximation of the euclidean norm") {
  const auto seq = approximateNorm(euclideanOracle(4), 4, 5);
  REQUIRE(seq.size() == 5);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    CHECK(seq[i].dualPerimeter < seq[i - 1].dualPerimeter);
    CHECK(seq[i].supError <= seq[i - 1].supError + 1e-15);
  }
  CHECK(std::abs(seq.back().dualPerimeter - kTwoPi) < 0.01 * kTwoPi);
}

TEST_CASE("approximation reproduces a polygonal oracle") {
  const PolygonalNorm q = hexagonalNorm();
  const auto seq = approximateNorm(polygonOracle(q), 3, 1, {0.0, kPi / 3});
  CHECK(seq[0].supError < 1e-12);
  const auto web = approximateNorm(polygonOracle(webUnitBall(3, 0)), 3, 4);
  REQUIRE(web.back().measure.atoms.size() == 1);
  CHECK(web.back().measure.atoms[0].theta == doctest::Approx(0).epsilon(1e-12));
  CHECK(web.back().measure.atoms[0].weight == doctest::Approx(1));
}

TEST_CASE("bad oracles are rejected") {
  NormOracle skew{[](Vec2 v) { return std::abs(v.x) + 2 * std::abs(v.y); }, 4, "skew"};
  CHECK_THROWS_AS(approximateNorm(skew, 4, 2), FlatcurError);
  NormOracle notHomog{[](Vec2 v) { return norm(v) * norm(v); }, 1, "sq"};
  CHECK_THROWS_AS(approximateNorm(notHomog, 1, 2), FlatcurError);
}

TEST_CASE("norm files round trip") {
  const PolygonalNorm q = hexagonalNorm();
  const PolygonalNorm r = parsePolygonalNorm(serializePolygonalNorm(q));
  CHECK(r.vertices() == q.vertices());
  const WebMeasure m = decomposeNorm(q, 3);
  const WebMeasure mm = parseWebMeasure(serializeWebMeasure(m));
  CHECK(mm.atoms == m.atoms);
  CHECK(namedNorm("web:4:0").vertices().size() == 4);
  CHECK_THROWS_AS(namedNorm("euclidean"), FlatcurError);
}
