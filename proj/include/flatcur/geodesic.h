#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flatcur/norm.h"
#include "flatcur/surface.h"
#include "flatcur/walk.h"

namespace flatcur {

struct Waypoint {
  int polygon = 0;  // polygon id
  Vec2 p{};
  bool operator==(const Waypoint&) const = default;
};

struct SurfacePath {
  bool closed = true;
  std::vector<Waypoint> waypoints;
};

SurfacePath parseCurve(std::string_view text);
std::string serializeCurve(const SurfacePath& path);

/// Cyclic sequence of triangle crossings followed by a closed path. Between
/// consecutive waypoints the shorter of "straight inside the polygon" and
/// "straight across one glued edge" is used.
Corridor corridorFromPath(const SurfaceComplex& s, const SurfacePath& path);
/// Developed polyline of a closed path together with its corridor.
double pathLength(const SurfaceComplex& s, const SurfacePath& path);

/// Cancels immediate back-and-forth crossings, cyclically.
void reduceCorridor(const SurfaceComplex& s, Corridor& c);

/// A closed corridor unrolled `periods` times into the plane. Triangle j is
/// followed by portal j (its exit edge); portal endpoints are given as left and
/// right with respect to the direction of travel.
struct Strip {
  int period = 0;
  std::vector<int> tris;
  std::vector<Isometry> placement;  // chart of tris[j] -> plane
  std::vector<Vec2> left, right;
  std::vector<int> leftClass, rightClass;
  std::vector<int> leftRun, rightRun;  // first portal of the maximal run sharing the endpoint
  Isometry holonomy;                   // placement[j + period] = holonomy * placement[j]
};
Strip developCorridor(const SurfaceComplex& s, const Corridor& c, int periods);

struct Pivot {
  int conePoint = -1;
  int vertexClass = -1;
  double leftAngle = 0.0;
  double rightAngle = 0.0;
  Vec2 position{};  // in the developed frame of the corridor
  int firstPortal = 0;
  int lastPortal = 0;
  bool onLeft = false;  // vertex lies on the left wall of the corridor
};

struct Leg {
  int startCone = -1;
  double direction = 0.0;  // radians, in the chart of the start triangle
  double length = 0.0;
  int startTriangle = 0;
  Vec2 from{}, to{};  // developed frame
};

struct SaddleChain {
  std::vector<Leg> legs;
  std::vector<Pivot> pivots;  // pivots[i] is the start of legs[i]
};

struct RegularClosedGeodesic {
  int triangle = 0;
  int polygon = 0;  // polygon id
  Vec2 base{};
  double direction = 0.0;
  double length = 0.0;
  bool cylinder = true;
};

struct Provenance {
  int iterations = 0;
  int flips = 0;
  double initialLength = 0.0;
  double finalDecrement = 0.0;
  std::vector<double> lengthHistory;
};

struct GeodesicRep {
  bool regular = false;
  SaddleChain chain;
  RegularClosedGeodesic closed;
  Corridor corridor;
  std::vector<double> portalParams;  // 0 at the right endpoint, 1 at the left endpoint
  Isometry holonomy;
  Provenance provenance;
  /// Legs with developed frame endpoints; a regular geodesic is one leg.
  std::vector<Leg> legs() const;
};

struct TightenOptions {
  double tol = -1.0;  // negative: 1e-10 * initial length
  int maxSweeps = 100000;
};

GeodesicRep tightenClosed(const SurfaceComplex& s, const SurfacePath& path, TightenOptions opt = {});
GeodesicRep tightenCorridor(const SurfaceComplex& s, Corridor corridor, double initialLength, TightenOptions opt = {});

struct PivotCheck {
  Pivot pivot;
  bool pass = true;
};
struct GeodesicReport {
  bool pass = true;
  std::vector<PivotCheck> pivots;
  std::vector<std::string> problems;
};
GeodesicReport verifyGeodesic(const SurfaceComplex& s, const GeodesicRep& rep, double epsAng = 1e-9);

double cat0Length(const GeodesicRep& rep);
double finslerLength(const GeodesicRep& rep, const PolygonalNorm& q);
double thetaLength(const GeodesicRep& rep, int n, double theta);

struct PerturbedPath {
  SurfacePath path;
  std::vector<Vec2> developed;  // closed polyline in the corridor frame; last point = holonomy(first)
  std::uint64_t seed = 0;
  double magnitude = 0.0;
};
/// Displaces the crossing points of the geodesic along its corridor portals
/// and adds random interior points, staying inside the developed corridor.
PerturbedPath randomHomotopicPerturbation(const SurfaceComplex& s, const GeodesicRep& rep, double magnitude,
                                          std::uint64_t seed);
double finslerLength(const std::vector<Vec2>& polyline, const PolygonalNorm& q);

/// Random homotopic rewrites of a corridor: detours around vertices and
/// inserted backtracks. Used to produce distinct initial paths in one class.
Corridor scrambleCorridor(const SurfaceComplex& s, const Corridor& c, int moves, std::uint64_t seed);

std::string geodesicJson(const SurfaceComplex& s, const GeodesicRep& rep, const GeodesicReport& report);

}  // namespace flatcur
