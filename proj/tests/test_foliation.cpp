#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>

#include "flatcur/foliation.h"
#include "support.h"

using namespace flatcur;
using namespace testsupport;

namespace {

const double kRt2 = std::sqrt(2.0);

LeafStart at(const SurfaceComplex& s, int poly, Vec2 p, Vec2 d) { return {{s.locate(poly, p), p}, d, -1}; }

// Short leaf centred on p.
LeafTrace through(const SurfaceComplex& s, int poly, Vec2 p, double angle, double half) {
  const Vec2 d = polar(angle);
  const Vec2 q = p - d * half;
  return traceLeaf(s, at(s, poly, q, d), angle, Turning::Left, 2 * half);
}

// Leaves leaving a cone point along a saddle connection.
std::vector<LeafStart> connectionStarts(const SurfaceComplex& s, double theta, double bound) {
  std::vector<LeafStart> out;
  for (const SaddleConnection& x : saddleConnectionsInDirection(s, theta, bound)) {
    const Vec2 v = s.triangles[x.startTri].p[x.startCorner];
    out.push_back({{x.startTri, v}, polar(x.direction), x.startCorner});
  }
  return out;
}

}  // namespace

TEST_CASE("leaf in the middle horizontal cylinder of the octagon closes up") {
  const auto s = surfaceFixture("octagon");
  const LeafTrace t = traceLeaf(s, at(s, 0, {0.5, 1.2}, {1, 0}), 0.0, Turning::Left, 20);
  CHECK(t.termination == Termination::ClosedUp);
  CHECK(t.events.empty());
  CHECK(t.length == doctest::Approx(1 + kRt2).epsilon(1e-12));
  for (const auto& p : t.pieces) CHECK(std::abs(p.dir.y) < 1e-15);
  // the developed trace is one horizontal segment
  REQUIRE(t.segments.size() == 1);
  CHECK(norm(t.segments[0].to - t.segments[0].from) == doctest::Approx(1 + kRt2));
}

TEST_CASE("zero length trace") {
  const auto s = surfaceFixture("octagon");
  const LeafTrace t = traceLeaf(s, at(s, 0, {0.5, 1.2}, {1, 0}), 0.0, Turning::Left, 0.0);
  CHECK(t.segments.empty());
  CHECK(t.pieces.empty());
  CHECK(t.termination == Termination::LengthBound);
}

TEST_CASE("start direction outside the web is rejected") {
  const auto s = surfaceFixture("fig1_left");
  CHECK_THROWS_AS(traceLeaf(s, at(s, 0, {0.5, 1.2}, polar(0.3)), 0.0, Turning::Left, 1), FlatcurError);
  CHECK_NOTHROW(traceLeaf(s, at(s, 0, {0.5, 1.2}, polar(0.5 * kPi)), 0.0, Turning::Left, 1));
  CHECK_NOTHROW(traceLeaf(s, at(s, 0, {0.5, 1.2}, polar(0.3 + kPi)), 0.3, Turning::Left, 1));
}

TEST_CASE("turning side angle is pi at every cone point") {
  for (const char* name : {"octagon", "fig1_left", "fig1_right", "double_octagon", "hexagons_n6"}) {
    const auto s = surfaceFixture(name);
    const std::string label = name;
    CAPTURE(label);
    // a second direction with saddle connections
    const double other = s.n % 3 == 0 ? kPi / 6 : 0.25 * kPi;
    for (double theta : {0.0, other}) {
      int events = 0;
      for (const LeafStart& a : connectionStarts(s, theta, 4.0))
        for (Turning turn : {Turning::Left, Turning::Right}) {
          const LeafTrace t = traceLeaf(s, a, theta, turn, 12.0);
          const TraceCheck c = verifyLeafTrace(s, t, 1e-9);
          CHECK(c.pass);
          CHECK(c.worst <= 1e-9);
          events += static_cast<int>(t.events.size());
          for (const auto& e : t.events) {
            CHECK(e.turningAngle == doctest::Approx(kPi));
            CHECK(e.otherAngle == doctest::Approx(s.vertexClasses[e.vertexClass].angle - kPi));
          }
        }
      CAPTURE(theta);
      CHECK(events > 0);
    }
  }
}

TEST_CASE("left and right turning leaves agree until the first cone point") {
  const auto s = surfaceFixture("octagon");
  // along the short horizontal saddle connection, then past the cone
  const auto starts = connectionStarts(s, 0.0, 1.5);
  REQUIRE(!starts.empty());
  for (const LeafStart& a : starts) {
    const LeafTrace l = traceLeaf(s, a, 0.0, Turning::Left, 6);
    const LeafTrace r = traceLeaf(s, a, 0.0, Turning::Right, 6);
    REQUIRE(!l.events.empty());
    REQUIRE(!r.events.empty());
    CHECK(l.events[0].arclength == doctest::Approx(r.events[0].arclength));
    CHECK(l.events[0].incoming == doctest::Approx(r.events[0].incoming));
    // 6 pi cone: pi on the turning side, 5 pi on the other
    CHECK(l.events[0].otherAngle == doctest::Approx(5 * kPi));
    CHECK(r.events[0].otherAngle == doctest::Approx(5 * kPi));
  }
}

TEST_CASE("octagon horizontal cylinders") {
  const auto s = surfaceFixture("octagon");
  const double area = 2 * (1 + kRt2);
  double sum = 0;
  for (auto [y, width, circ] : std::vector<std::tuple<double, double, double>>{
           {1.2, 1.0, 1 + kRt2}, {0.3, kRt2 / 2, 2 + kRt2}}) {
    const LeafTrace t = traceLeaf(s, at(s, 0, {0.5, y}, {1, 0}), 0.0, Turning::Left, 20);
    const auto c = detectCylinder(s, t);
    REQUIRE(c.has_value());
    CHECK(c->width == doctest::Approx(width).epsilon(1e-9));
    CHECK(c->core.length == doctest::Approx(circ).epsilon(1e-12));
    for (const auto& b : c->boundary) {
      CHECK(b.tangent);
      REQUIRE(!b.conePoints.empty());
      CHECK(b.conePoints[0] == 0);
      double loop = 0;
      for (double l : b.connectionLengths) loop += l;
      CHECK(loop == doctest::Approx(circ).epsilon(1e-9));
    }
    sum += c->width * c->core.length;
  }
  // the two cylinders tile the octagon
  CHECK(sum == doctest::Approx(area).epsilon(1e-9));
}

TEST_CASE("a leaf that does not close gives no cylinder") {
  const auto s = surfaceFixture("octagon");
  const LeafTrace t = traceLeaf(s, at(s, 0, {0.5, 1.2}, polar(0.3)), 0.3, Turning::Left, 5);
  CHECK(t.termination == Termination::LengthBound);
  CHECK_FALSE(detectCylinder(s, t).has_value());
}

TEST_CASE("cylinders on the two hexagon surface have tangent singular boundaries") {
  const auto s = surfaceFixture("fig1_right");
  int found = 0;
  double total = 0;
  for (double theta : {0.0, kPi / 6}) {
    const auto sc = saddleConnectionsInDirection(s, theta, 4.0);
    REQUIRE(!sc.empty());
    // sweep: start beside the middle of every saddle connection
    for (const auto& x : sc)
      for (double side : {1.0, -1.0}) {
        const Vec2 d = polar(x.direction);
        const Vec2 v = s.triangles[x.startTri].p[x.startCorner];
        Vec2 mid;
        const SurfacePoint m = walkRegular(s, {x.startTri, v + d * 1e-9}, d, 0.5 * x.length - 1e-9, &mid);
        const SurfacePoint p = walkRegular(s, m, rotate(mid, side * 0.5 * kPi), 0.05);
        const LeafTrace t = traceLeaf(s, {p, mid, -1}, theta, Turning::Left, 20);
        if (t.termination != Termination::ClosedUp) continue;
        const auto c = detectCylinder(s, t);
        REQUIRE(c.has_value());
        ++found;
        CHECK(c->width > 0);
        for (const auto& b : c->boundary) {
          CHECK(b.tangent);
          CHECK(!b.conePoints.empty());
        }
        if (theta == 0.0) total = c->width * c->core.length;
      }
  }
  CHECK(found > 0);
  // horizontal: two congruent cylinders fill both hexagons
  CHECK(2 * total == doctest::Approx(2 * 1.5 * std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("horizontal saddle connections of the octagon") {
  const auto s = surfaceFixture("octagon");
  const auto sc = saddleConnectionsInDirection(s, 0.0, 10.0);
  REQUIRE(sc.size() == 3);
  CHECK(sc[0].length == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sc[1].length == doctest::Approx(1 + kRt2).epsilon(1e-12));
  CHECK(sc[2].length == doctest::Approx(1 + kRt2).epsilon(1e-12));
  for (const auto& x : sc) {
    CHECK(x.startCone == 0);
    CHECK(x.endCone == 0);
    CHECK(inWeb(x.direction, 1, 0.0, 1e-12));
  }
  // the cylinder boundaries are made of exactly these
  for (double y : {0.3, 1.2}) {
    const auto c = detectCylinder(s, traceLeaf(s, at(s, 0, {0.5, y}, {1, 0}), 0.0, Turning::Left, 20));
    REQUIRE(c.has_value());
    for (const auto& b : c->boundary)
      for (double l : b.connectionLengths)
        CHECK(std::any_of(sc.begin(), sc.end(), [&](const SaddleConnection& x) { return std::abs(x.length - l) < 1e-9; }));
  }
}

TEST_CASE("saddle connection bounds") {
  const auto s = surfaceFixture("octagon");
  CHECK(saddleConnectionsInDirection(s, 0.0, 0.5).empty());
  CHECK_THROWS_AS(saddleConnectionsInDirection(s, 0.0, 0.0), FlatcurError);
  for (const char* name : {"fig1_left", "fig1_right", "double_octagon"}) {
    const auto t = surfaceFixture(name);
    for (double theta : {0.0, 0.25 * kPi}) {
      const auto a = saddleConnectionsInDirection(t, theta, 3.0);
      const auto b = saddleConnectionsInDirection(t, theta, 6.0);
      const auto again = saddleConnectionsInDirection(t, theta, 3.0);
      CHECK(a.size() <= b.size());
      REQUIRE(a.size() == again.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].length == again[i].length);
        CHECK(a[i].length <= 3.0 + 1e-9);
        CHECK(inWeb(a[i].direction, t.n, theta, 1e-9));
        CHECK(std::any_of(b.begin(), b.end(), [&](const SaddleConnection& x) {
          return x.startTri == a[i].startTri && x.startCorner == a[i].startCorner &&
                 std::abs(x.startOffset - a[i].startOffset) < 1e-12 && std::abs(x.length - a[i].length) < 1e-12;
        }));
      }
    }
  }
}

TEST_CASE("orthogonal leaves on the fourfold surface") {
  const auto s = surfaceFixture("fig1_left");
  const LeafTrace h = through(s, 0, {0.5, 1.2}, 0.0, 0.2);
  const LeafTrace v = through(s, 0, {0.5, 1.2}, 0.5 * kPi, 0.2);
  std::vector<Overlap> ov;
  const auto r = crossingAngle(s, h, v, &ov);
  REQUIRE(r.size() == 1);
  CHECK(ov.empty());
  CHECK(r[0].angle == doctest::Approx(0.5 * kPi).epsilon(1e-12));
  CHECK(r[0].k == 1);
  CHECK(r[0].first == 0);  // vertical crosses horizontal from right to left
  CHECK(norm(r[0].point - Vec2{0.5, 1.2}) < 1e-12);
  CHECK(r[0].s1 == doctest::Approx(0.2));
  // swapping the arguments keeps the positive order
  const auto q = crossingAngle(s, v, h);
  REQUIRE(q.size() == 1);
  CHECK(q[0].first == 1);
}

TEST_CASE("threefold crossings meet at 2pi/3") {
  const auto s = surfaceFixture("fig1_right");
  const LeafTrace a = through(s, 0, {0.5, 0.8}, 0.0, 0.2);
  const LeafTrace b = through(s, 0, {0.5, 0.8}, kTwoPi / 3, 0.2);
  const LeafTrace c = through(s, 0, {0.5, 0.8}, 2 * kTwoPi / 3, 0.2);
  for (const auto& [x, y] : {std::pair{&a, &b}, {&a, &c}, {&b, &c}}) {
    const auto r = crossingAngle(s, *x, *y);
    REQUIRE(r.size() == 1);
    CHECK(r[0].angle == doctest::Approx(kTwoPi / 3).epsilon(1e-12));
  }
}

TEST_CASE("sixfold crossings are pi/3 or 2pi/3") {
  const auto s = surfaceFixture("hexagons_n6");
  const auto spec = defaultLeafSamples(s, 0.2, 3, 4.0);
  std::vector<LeafTrace> t;
  for (const auto& a : spec.starts) t.push_back(traceLeaf(s, a, 0.2, Turning::Left, spec.maxLength));
  std::set<int> ks;
  long long count = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j)
      for (const auto& r : crossingAngle(s, t[i], t[j], nullptr, static_cast<int>(i), static_cast<int>(j))) {
        ++count;
        ks.insert(r.k);
        CHECK(std::abs(r.angle - kTwoPi * r.k / 6) <= 1e-9);
      }
  CHECK(count > 0);
  CHECK(ks == std::set<int>{1, 2});
}

TEST_CASE("a leaf overlapping itself is not a crossing") {
  const auto s = surfaceFixture("fig1_left");
  const LeafTrace h = through(s, 0, {0.5, 1.2}, 0.0, 0.2);
  std::vector<Overlap> ov;
  CHECK(crossingAngle(s, h, h, &ov).empty());
  CHECK(!ov.empty());
}

TEST_CASE("crossing statistics") {
  SUBCASE("fourfold: no positive 3-crossing") {
    const auto s = surfaceFixture("fig1_left");
    const auto st = crossingStatistics(s, 0.1, defaultLeafSamples(s, 0.1, 4, 4.0));
    CHECK(st.crossings > 0);
    CHECK(st.anglesK == std::vector<int>{1});
    CHECK(st.maxOrder <= 2);
    CHECK(st.pass);
  }
  SUBCASE("sixfold: superadditivity") {
    const auto s = surfaceFixture("hexagons_n6");
    const auto st = crossingStatistics(s, 0.1, defaultLeafSamples(s, 0.1, 3, 3.0));
    CHECK(st.triples > 0);
    CHECK(st.violations == 0);
    CHECK(st.worstSlack >= -1e-9);
    CHECK(st.maxOrder <= 3);
    CHECK(st.undetermined == 0);
  }
  SUBCASE("threefold reports order 2") {
    const auto s = surfaceFixture("fig1_right");
    const auto st = crossingStatistics(s, 0.1, defaultLeafSamples(s, 0.1, 3, 3.0));
    CHECK(st.anglesK == std::vector<int>{1});
    CHECK(st.maxOrder == 2);
  }
  SUBCASE("one leaf") {
    const auto s = surfaceFixture("fig1_left");
    LeafSampleSpec one;
    one.starts = {at(s, 0, {0.5, 1.2}, {1, 0})};
    const auto st = crossingStatistics(s, 0.0, one);
    CHECK(st.leaves == 1);
    CHECK(st.crossings == 0);
    CHECK(st.maxOrder == 0);
  }
}

TEST_CASE("small boxes on the octagon vertical loop") {
  const auto s = surfaceFixture("octagon");
  const auto rep = tightenClosed(s, curveFixture("octagon_vertical"));
  const double exact = thetaLength(rep, 1, 0.0);
  CHECK(exact == doctest::Approx(1 + kRt2).epsilon(1e-12));
  const BoxPlan plan = smallBoxTransversals(s, 0.0, rep);
  REQUIRE(!plan.transversals.empty());
  double est = 0;
  for (const auto& I : plan.transversals) est += empiricalSmallBoxMeasure(s, 0.0, I, 1000, rep).estimate;
  CHECK(std::abs(est - exact) / exact < 0.02);

  SUBCASE("a parallel target is never crossed") {
    CHECK(smallBoxTransversals(s, 0.5 * kPi, rep).transversals.empty());
    Transversal I;
    I.base = {s.locate(0, {0.2, 1.2}), {0.2, 1.2}};
    I.along = {-1, 0};
    I.length = 0.6;
    I.reach = 3;
    for (int m : {1, 10, 100}) CHECK(empiricalSmallBoxMeasure(s, 0.5 * kPi, I, m, rep).estimate == 0.0);
  }
  SUBCASE("halving the transversal halves the estimate") {
    Transversal I;
    I.base = {s.locate(0, {0.3, 0.9}), {0.3, 0.9}};
    I.along = {0, 1};
    I.length = 0.8;
    I.reach = 0.5;
    const double full = empiricalSmallBoxMeasure(s, 0.0, I, 400, rep).estimate;
    I.length = 0.4;
    const double half = empiricalSmallBoxMeasure(s, 0.0, I, 400, rep).estimate;
    CHECK(full == doctest::Approx(0.8));
    CHECK(half == doctest::Approx(0.5 * full));
  }
  SUBCASE("the transversal must be orthogonal to the web") {
    Transversal I;
    I.base = {s.locate(0, {0.3, 0.9}), {0.3, 0.9}};
    I.along = polar(1.0);
    I.length = 0.5;
    CHECK_THROWS_AS(empiricalSmallBoxMeasure(s, 0.0, I, 10, rep), FlatcurError);
  }
}

TEST_CASE("small boxes match theta lengths on every fixture curve") {
  for (const auto& fx : allFixtures()) {
    const auto s = surfaceFixture(fx.surface);
    for (const auto& name : fx.curves) {
      const auto rep = tightenClosed(s, curveFixture(name));
      for (double theta : {0.0, 0.37}) {
        const BoxPlan plan = smallBoxTransversals(s, theta, rep);
        double est = 0;
        for (const auto& I : plan.transversals) est += empiricalSmallBoxMeasure(s, theta, I, 200, rep).estimate;
        const double exact = thetaLength(rep, s.n, theta);
        CAPTURE(name);
        CAPTURE(theta);
        if (exact == 0) CHECK(est == 0);
        else CHECK(std::abs(est - exact) / exact < 0.02);
      }
    }
  }
}

TEST_CASE("crofton estimate from area samples agrees with theta lengths") {
  for (const auto& fx : allFixtures()) {
    const auto s = surfaceFixture(fx.surface);
    for (const auto& name : fx.curves) {
      const auto rep = tightenClosed(s, curveFixture(name));
      for (double theta : {0.0, 0.37, 1.1}) {
        const auto x = sampledIntersection(s, theta, rep, 2000, 10.0, 0);
        const double exact = thetaLength(rep, s.n, theta);
        CAPTURE(name);
        CAPTURE(theta);
        CHECK(x.standardError > 0);
        CHECK(std::abs(x.estimate - exact) <= 4.5 * x.standardError);
      }
    }
  }
}

TEST_CASE("crofton estimate on the octagon vertical loop") {
  const auto s = surfaceFixture("octagon");
  const auto rep = tightenClosed(s, curveFixture("octagon_vertical"));
  const auto x = sampledIntersection(s, 0.0, rep, 1000, 20.0, 0);
  CHECK(x.area == doctest::Approx(2 * (1 + kRt2)).epsilon(1e-12));
  CHECK(std::abs(x.estimate - (1 + kRt2)) / (1 + kRt2) < 0.02);
  // seeded
  CHECK(sampledIntersection(s, 0.0, rep, 200, 5.0, 3).estimate == sampledIntersection(s, 0.0, rep, 200, 5.0, 3).estimate);
  CHECK_THROWS_AS(sampledIntersection(s, 0.0, rep, 0, 5.0, 0), FlatcurError);
}
