#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flatcur/geodesic.h"
#include "flatcur/surface.h"
#include "flatcur/walk.h"

namespace flatcur {

enum class Turning { Left, Right };
enum class Termination { StepCap, ClosedUp, LengthBound };

std::string turningName(Turning t);
std::string terminationName(Termination t);

/// Start of a leaf: a point in the chart of `point.tri` and a direction in that
/// chart. With corner >= 0 the leaf starts at that vertex of the triangle and
/// the direction must point into the corner.
struct LeafStart {
  SurfacePoint point;
  Vec2 direction{};
  int corner = -1;
};

struct LeafPiece {
  int tri = 0;
  Vec2 from{}, to{};  // chart of tri
  Vec2 dir{};         // unit, exact web direction
  double s0 = 0.0, s1 = 0.0;
  int corridorIndex = 0;  // crossings recorded before this piece
};

struct LeafSegment {
  Vec2 from{}, to{};  // developed plane
};

struct LeafEvent {
  int conePoint = -1;
  int vertexClass = -1;
  double arclength = 0.0;
  Vec2 position{};  // developed plane
  int inTri = 0, inCorner = 0;
  int outTri = 0, outCorner = 0;
  double incoming = 0.0;  // direction angle in the chart of inTri
  double outgoing = 0.0;  // direction angle in the chart of outTri
  double turningAngle = 0.0;
  double otherAngle = 0.0;
  int swept = 0;  // edges crossed while turning
};

struct LeafTrace {
  double theta = 0.0;
  int n = 1;
  Turning turning = Turning::Left;
  LeafStart start;
  std::vector<LeafPiece> pieces;
  std::vector<LeafSegment> segments;
  std::vector<LeafEvent> events;
  Corridor crossings;  // edges crossed, including those swept around cone points
  Termination termination = Termination::LengthBound;
  double length = 0.0;
};

struct TraceOptions {
  int maxSteps = 1000000;
};

/// Straight leaf of the multi-foliation in direction theta (mod 2pi/n). At a
/// cone point the leaf continues so that the angle on the turning side is pi.
LeafTrace traceLeaf(const SurfaceComplex& s, const LeafStart& start, double theta, Turning turning,
                    double maxLength, TraceOptions opt = {});

/// Recomputes the turning-side angle of every event by summing corner angles.
struct TraceCheck {
  bool pass = true;
  double worst = 0.0;  // largest |turning angle - pi|
  std::vector<std::string> problems;
};
TraceCheck verifyLeafTrace(const SurfaceComplex& s, const LeafTrace& t, double epsAng = 1e-9);

bool inWeb(double angle, int n, double theta, double epsAng);

// ---------------------------------------------------------------------------
// Cylinders and saddle connections

struct SaddleConnection {
  int startCone = -1;
  int endCone = -1;
  int startTri = 0, startCorner = 0;
  double startOffset = 0.0;
  int endTri = 0, endCorner = 0;
  double direction = 0.0;  // angle in the chart of startTri
  double length = 0.0;
  Corridor crossings;
};

struct BoundaryLoop {
  double offset = 0.0;  // signed distance from the core, positive on the left
  std::vector<int> conePoints;
  std::vector<double> connectionLengths;
  bool tangent = false;
};

struct Cylinder {
  double direction = 0.0;  // chart angle at the core base
  RegularClosedGeodesic core;
  double width = 0.0;
  std::array<BoundaryLoop, 2> boundary;  // left, right
};

/// Sweeps parallel closed leaves away from a closed trace on both sides until
/// they hit a cone point. Returns nothing when the trace did not close up
/// without events.
std::optional<Cylinder> detectCylinder(const SurfaceComplex& s, const LeafTrace& trace, double epsLen = -1.0);

/// Saddle connections in the web directions of theta up to a length bound,
/// shot from every cone point in every admissible direction. With even n each
/// connection is listed once, from its lexicographically smaller end.
std::vector<SaddleConnection> saddleConnectionsInDirection(const SurfaceComplex& s, double theta,
                                                           double lengthBound);

// ---------------------------------------------------------------------------
// Crossings

struct CrossingRecord {
  int first = 0, second = 0;  // leaf ids, ordered so that (first, second) is a positive 2-crossing
  int tri = 0;
  int polygon = 0;  // polygon id
  Vec2 point{};     // chart of tri
  double s1 = 0.0, s2 = 0.0;  // arclength along first and second
  int piece1 = -1, piece2 = -1;
  double angle = 0.0;
  int k = 0;  // angle = 2 pi k / n
};

struct Overlap {
  int first = 0, second = 0;
  int tri = 0;
  double length = 0.0;
};

/// Transverse intersections at regular points of two traces. Leaf ids 0 and 1
/// refer to t1 and t2 unless given.
std::vector<CrossingRecord> crossingAngle(const SurfaceComplex& s, const LeafTrace& t1, const LeafTrace& t2,
                                          std::vector<Overlap>* overlaps = nullptr, int id1 = 0, int id2 = 1,
                                          double epsAng = 1e-9);

struct LeafSampleSpec {
  std::vector<LeafStart> starts;
  bool bothTurnings = true;
  double maxLength = 10.0;
  int maxOrder = 8;          // stop searching for positive k-crossings above this k
  long long maxCandidates = 200000;
};

/// Default sample: `perEdge` points along every polygon edge, each launching a
/// leaf in every web direction transverse to the edge, plus every web
/// direction leaving every cone point.
LeafSampleSpec defaultLeafSamples(const SurfaceComplex& s, double theta, int perEdge = 32, double maxLength = 10.0);

struct SuperadditivityCheck {
  std::array<int, 3> leaves{};
  double a12 = 0.0, a23 = 0.0, a13 = 0.0;
  bool pass = true;
};

struct CrossingStatistics {
  int leaves = 0;
  long long crossings = 0;
  long long overlaps = 0;
  std::vector<int> anglesK;  // distinct k observed
  int maxOrder = 0;          // largest k with an observed positive k-crossing
  long long candidates = 0;  // triples of pairwise positive crossings with homologous closing loop
  long long triples = 0;     // positive 3-crossings checked
  long long violations = 0;
  double worstSlack = 0.0;   // min over triples of a13 - a12 - a23
  long long undetermined = 0;  // loops whose homotopy class could not be decided
  bool truncated = false;
  bool pass = true;
};

CrossingStatistics crossingStatistics(const SurfaceComplex& s, double theta, const LeafSampleSpec& spec,
                                      double epsAng = 1e-9);

// ---------------------------------------------------------------------------
// Small boxes

/// Regular segment starting at `base`, running along `along` (unit, chart of
/// base.tri). Leaves leave it in the web direction `along` rotated by -pi/2.
struct Transversal {
  SurfacePoint base;
  Vec2 along{};
  double length = 0.0;
  double reach = 1.0;  // leaf length traced from each sample point
  int leg = -1;        // count crossings with this leg of the target only
  double legFrom = 0.0;  // ... and only within this arclength window of the leg
  double legTo = std::numeric_limits<double>::infinity();
};

struct SmallBoxEstimate {
  double estimate = 0.0;
  double count = 0.0;  // half counts where the two turnings disagree
  int m = 0;
  double length = 0.0;
};

SmallBoxEstimate empiricalSmallBoxMeasure(const SurfaceComplex& s, double theta, const Transversal& I, int m,
                                          const GeodesicRep& target);

/// Transversals covering the target: for every leg and web direction, short
/// boxes behind consecutive parts of the leg, each spanning the projection of
/// its part (plus `margin` * leg length at the leg ends) with leaves reaching
/// just past the leg. `expected` holds |J||sin| for each box.
struct BoxPlan {
  std::vector<Transversal> transversals;
  std::vector<double> expected;
};
BoxPlan smallBoxTransversals(const SurfaceComplex& s, double theta, const GeodesicRep& target,
                             double margin = 0.0, double behind = 0.02);

/// Crofton estimate independent of any box construction: m leaf segments of
/// length `length` from points uniform in area, each in a uniformly chosen web
/// direction. Estimates area * n * crossings / (m * length).
struct SampledIntersection {
  double estimate = 0.0;
  double count = 0.0;
  int m = 0;
  double length = 0.0;
  double area = 0.0;
  std::uint64_t seed = 0;
  double standardError = 0.0;
};
SampledIntersection sampledIntersection(const SurfaceComplex& s, double theta, const GeodesicRep& target, int m,
                                        double length, std::uint64_t seed);

/// Point reached by a straight walk that passes through regular vertices.
/// Throws when the walk runs into a cone point.
SurfacePoint walkRegular(const SurfaceComplex& s, SurfacePoint from, Vec2 dir, double length, Vec2* endDir = nullptr);

/// Pieces of one period of a representative, per triangle chart.
struct CurvePiece {
  int tri = 0;
  Vec2 from{}, to{};
  int leg = 0;
  double s0 = 0.0;  // arclength along the leg at `from`
};
std::vector<CurvePiece> curvePieces(const SurfaceComplex& s, const GeodesicRep& rep);

}  // namespace flatcur
