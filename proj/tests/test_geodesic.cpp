#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flatcur/geodesic.h"
#include "support.h"

using namespace flatcur;
using namespace testsupport;

namespace {

const double kOctFlat = 1 + std::sqrt(2.0);  // distance between opposite sides of the unit octagon

GeodesicRep chainOf(std::vector<std::pair<double, double>> legs) {
  GeodesicRep r;
  for (auto [dir, len] : legs) {
    Leg l;
    l.direction = dir;
    l.length = len;
    r.chain.legs.push_back(l);
  }
  return r;
}

// Leg multiset comparison up to cyclic relabeling.
bool sameChain(const GeodesicRep& a, const GeodesicRep& b, double eps) {
  const auto la = a.legs(), lb = b.legs();
  if (la.size() != lb.size()) return false;
  const std::size_t k = la.size();
  for (std::size_t shift = 0; shift < k; ++shift) {
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i) {
      const Leg& x = la[i];
      const Leg& y = lb[(i + shift) % k];
      if (std::abs(x.length - y.length) > 1e-9 * (1 + x.length)) ok = false;
      if (x.startCone != y.startCone) ok = false;
    }
    if (ok) return true;
  }
  (void)eps;
  return false;
}

// Regular closed geodesic, or a saddle chain bounding a cylinder (flat on one side).
bool cylinderMember(const GeodesicRep& r) {
  if (r.regular) return true;
  bool left = true, right = true;
  for (const auto& p : r.chain.pivots) {
    left = left && std::abs(p.leftAngle - kPi) < 1e-9;
    right = right && std::abs(p.rightAngle - kPi) < 1e-9;
  }
  return left || right;
}

bool sameGeodesic(const GeodesicRep& a, const GeodesicRep& b) {
  if (cylinderMember(a) && cylinderMember(b)) return true;
  return sameChain(a, b, 1e-9);
}

}  // namespace

TEST_CASE("curve files round trip") {
  const SurfacePath p = curveFixture("octagon_vertical");
  const SurfacePath q = parseCurve(serializeCurve(p));
  CHECK(q.waypoints == p.waypoints);
  CHECK(q.closed);
  CHECK_THROWS_AS(parseCurve("{\"closed\": true}"), FlatcurError);
}

TEST_CASE("octagon loop across one pair of sides") {
  const SurfaceComplex s = surfaceFixture("octagon");
  const GeodesicRep rep = tightenClosed(s, curveFixture("octagon_vertical"));
  CHECK(cat0Length(rep) == doctest::Approx(kOctFlat).epsilon(1e-12));
  CHECK(verifyGeodesic(s, rep).pass);
  CHECK(rep.regular);
  CHECK(rep.closed.cylinder);
  // The developed holonomy is the translation across the flats.
  CHECK(norm(rep.holonomy.translation) == doctest::Approx(kOctFlat));
}

TEST_CASE("straight closed geodesic is a fixed point") {
  const SurfaceComplex s = surfaceFixture("octagon");
  // Straight vertical loop through the centre of the octagon.
  const double h = kOctFlat / 2;
  SurfacePath p;
  p.waypoints = {{0, {0.5, 0.3}}, {0, {0.5, h}}, {0, {0.5, 2 * h - 0.3}}};
  const GeodesicRep rep = tightenClosed(s, p);
  CHECK(rep.provenance.flips == 0);
  CHECK(rep.regular);
  CHECK(cat0Length(rep) == doctest::Approx(rep.provenance.initialLength).epsilon(1e-12));
}

TEST_CASE("perturbed zigzags tighten to the same loop") {
  const SurfaceComplex s = surfaceFixture("octagon");
  const SurfacePath base = curveFixture("octagon_vertical");
  const GeodesicRep ref = tightenClosed(s, base);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.03, 0.03);
  for (int seed = 0; seed < 100; ++seed) {
    SurfacePath p = base;
    for (auto& w : p.waypoints) w.p = w.p + Vec2{u(rng), u(rng)};
    const GeodesicRep rep = tightenClosed(s, p);
    CHECK(std::abs(cat0Length(rep) - cat0Length(ref)) <= 10 * 1e-10 * rep.provenance.initialLength);
    CHECK(sameGeodesic(rep, ref));
  }
}

TEST_CASE("every fixture curve tightens to a valid geodesic") {
  for (const auto& f : allFixtures()) {
    const SurfaceComplex s = surfaceFixture(f.surface);
    for (const auto& c : f.curves) {
      CAPTURE(c);
      const GeodesicRep rep = tightenClosed(s, curveFixture(c));
      const GeodesicReport r = verifyGeodesic(s, rep);
      CHECK(r.pass);
      CHECK(cat0Length(rep) <= rep.provenance.initialLength + 1e-12);
      for (const auto& p : rep.chain.pivots) {
        CHECK(p.leftAngle + p.rightAngle == doctest::Approx(s.vertexClasses[p.vertexClass].angle));
        CHECK(p.conePoint >= 0);
      }
      // Consecutive legs join up in the developed frame.
      const auto legs = rep.legs();
      for (std::size_t i = 0; i + 1 < legs.size(); ++i) CHECK(norm(legs[i].to - legs[i + 1].from) < 1e-9);
      const auto& h = rep.provenance.lengthHistory;
      for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
      REQUIRE(!h.empty());
      CHECK(h.front() <= rep.provenance.initialLength + 1e-12);
      CHECK(std::abs(h.back() - cat0Length(rep)) <= 1e-12 * (1 + h.back()));
    }
  }
}

TEST_CASE("different initial paths in one class agree") {
  for (const auto& f : allFixtures()) {
    const SurfaceComplex s = surfaceFixture(f.surface);
    for (const auto& c : f.curves) {
      CAPTURE(c);
      const GeodesicRep ref = tightenClosed(s, curveFixture(c));
      for (int seed = 0; seed < 10; ++seed) {
        const Corridor scrambled = scrambleCorridor(s, ref.corridor, 2 + seed, seed);
        const GeodesicRep rep = tightenCorridor(s, scrambled, -1);
        CHECK(verifyGeodesic(s, rep).pass);
        CHECK(std::abs(cat0Length(rep) - cat0Length(ref)) <= 1e-9 * cat0Length(ref));
        CHECK(sameGeodesic(rep, ref));
        // Total decrease is recorded consistently.
        const auto& h = rep.provenance.lengthHistory;
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
      }
    }
  }
}

TEST_CASE("null-homotopic curves are rejected") {
  const SurfaceComplex s = surfaceFixture("octagon");
  SurfacePath p;
  p.waypoints = {{0, {0.2, 0.1}}, {0, {0.6, 0.2}}, {0, {0.3, 0.7}}};
  try {
    tightenClosed(s, p);
    FAIL("expected an error");
  } catch (const FlatcurError& e) {
    CHECK(e.kind() == ErrorKind::NullHomotopic);
  }
  // Out through one side and straight back again.
  const GeodesicRep ref = tightenClosed(s, curveFixture("octagon_vertical"));
  Corridor c = ref.corridor;
  Corridor there = c, back;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    const Triangle& t = s.triangles[it->tri];
    back.push_back({t.neighbor[it->edge], t.neighborEdge[it->edge]});
  }
  there.insert(there.end(), back.begin(), back.end());
  CHECK_THROWS_AS(tightenCorridor(s, there, -1), FlatcurError);
}

TEST_CASE("verify_geodesic flags a bad pivot") {
  const SurfaceComplex s = surfaceFixture("octagon");
  GeodesicRep rep = tightenClosed(s, curveFixture("octagon_mixed"));
  REQUIRE(!rep.chain.pivots.empty());
  CHECK(verifyGeodesic(s, rep).pass);
  const double cone = s.vertexClasses[rep.chain.pivots[0].vertexClass].angle;
  rep.chain.pivots[0].leftAngle = 0.9 * kPi;
  rep.chain.pivots[0].rightAngle = cone - 0.9 * kPi;
  const GeodesicReport r = verifyGeodesic(s, rep, 1e-9);
  CHECK(!r.pass);
  CHECK(!r.pivots[0].pass);
  for (std::size_t i = 1; i < r.pivots.size(); ++i) CHECK(r.pivots[i].pass);

  const GeodesicRep reg = tightenClosed(s, curveFixture("octagon_vertical"));
  const GeodesicReport rr = verifyGeodesic(s, reg);
  CHECK(rr.pass);
  CHECK(rr.pivots.empty());
}

TEST_CASE("length formulas") {
  const double L = 2.5;
  CHECK(thetaLength(chainOf({{kPi / 2, L}}), 1, kPi / 2) == doctest::Approx(0).epsilon(1e-15));
  CHECK(thetaLength(chainOf({{0, L}}), 4, 0) == doctest::Approx(2 * L));
  CHECK(cat0Length(chainOf({{0.3, 1}, {1.2, 2}})) == doctest::Approx(3));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(0, kTwoPi), len(0.1, 3);
  for (int n : {3, 4, 5, 6, 8}) {
    for (int i = 0; i < 50; ++i) {
      std::vector<std::pair<double, double>> legs;
      for (int k = 0; k < 4; ++k) legs.push_back({ang(rng), len(rng)});
      const GeodesicRep r = chainOf(legs);
      const double theta = ang(rng);
      double brute = 0;
      for (auto [d, l] : legs)
        for (int k = 0; k < n; ++k) brute += l * std::abs(std::sin(d - theta + kTwoPi * k / n));
      CHECK(thetaLength(r, n, theta) == doctest::Approx(brute).epsilon(1e-12));
      CHECK(finslerLength(r, webUnitBall(n, theta)) == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("homotopic perturbations") {
  const SurfaceComplex s = surfaceFixture("octagon");
  const GeodesicRep rep = tightenClosed(s, curveFixture("octagon_vertical"));
  const PolygonalNorm q = l1Norm();
  const PerturbedPath zero = randomHomotopicPerturbation(s, rep, 0.0, 0);
  CHECK(finslerLength(zero.developed, q) == doctest::Approx(finslerLength(rep, q)).epsilon(1e-12));
  CHECK(norm(rep.holonomy.apply(zero.developed.front()) - zero.developed.back()) < 1e-12);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PerturbedPath p = randomHomotopicPerturbation(s, rep, 0.1, seed);
    CHECK(p.seed == seed);
    CHECK(finslerLength(p.developed, q) >= finslerLength(rep, q) - 1e-9);
    // The waypoint path is accepted by the corridor builder and tightens back.
    const GeodesicRep again = tightenClosed(s, p.path);
    CHECK(cat0Length(again) == doctest::Approx(cat0Length(rep)).epsilon(1e-9));
  }
  // Pivots produce repeated points, which are merged.
  const GeodesicRep chain = tightenClosed(s, curveFixture("octagon_mixed"));
  const PerturbedPath z = randomHomotopicPerturbation(s, chain, 0.0, 0);
  for (std::size_t i = 0; i + 1 < z.developed.size(); ++i) CHECK(norm(z.developed[i + 1] - z.developed[i]) > 0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PerturbedPath p = randomHomotopicPerturbation(s, chain, 0.05, seed);
    CHECK(finslerLength(p.developed, q) >= finslerLength(chain, q) - 1e-9);
    CHECK(cat0Length(tightenClosed(s, p.path)) == doctest::Approx(cat0Length(chain)).epsilon(1e-9));
  }
}

TEST_CASE("perturbed waypoint paths tighten back on every fixture") {
  const PolygonalNorm q = l1Norm();
  for (const auto& f : allFixtures()) {
    const SurfaceComplex s = surfaceFixture(f.surface);
    for (const auto& c : f.curves) {
      CAPTURE(c);
      const GeodesicRep rep = tightenClosed(s, curveFixture(c));
      for (double mag : {0.0, 0.02, 0.2})
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
          const PerturbedPath p = randomHomotopicPerturbation(s, rep, mag, seed);
          CHECK(norm(rep.holonomy.apply(p.developed.front()) - p.developed.back()) < 1e-9);
          CHECK(cat0Length(tightenClosed(s, p.path)) == doctest::Approx(cat0Length(rep)).epsilon(1e-9));
          if (4 % s.n == 0)
            CHECK(finslerLength(p.developed, q) >= finslerLength(rep, q) - 1e-9);
        }
    }
  }
}

TEST_CASE("repeated waypoints are merged") {
  const SurfaceComplex s = surfaceFixture("octagon");
  SurfacePath p = curveFixture("octagon_vertical");
  SurfacePath doubled;
  for (const auto& w : p.waypoints) {
    doubled.waypoints.push_back(w);
    doubled.waypoints.push_back(w);
  }
  CHECK(cat0Length(tightenClosed(s, doubled)) == doctest::Approx(kOctFlat));
}

TEST_CASE("geodesic JSON is deterministic") {
  const SurfaceComplex s = surfaceFixture("fig1_left");
  const GeodesicRep a = tightenClosed(s, curveFixture("fig1_left_c"));
  const GeodesicRep b = tightenClosed(s, curveFixture("fig1_left_c"));
  CHECK(geodesicJson(s, a, verifyGeodesic(s, a)) == geodesicJson(s, b, verifyGeodesic(s, b)));
}
