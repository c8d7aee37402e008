#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flatcur/geometry.h"

namespace flatcur {

// ---------------------------------------------------------------------------
// Gluing specification
// ---------------------------------------------------------------------------

struct EdgeRef {
  int polygon = 0;  // polygon id in a SurfaceSpec, polygon index in a SurfaceComplex
  int edge = 0;
  bool operator==(const EdgeRef&) const = default;
};

struct PolygonSpec {
  int id = 0;
  std::vector<Vec2> vertices;  // counterclockwise
  bool operator==(const PolygonSpec&) const = default;
};

struct GluingSpec {
  EdgeRef from;
  EdgeRef to;
  int rotation = 0;  // chart(to) -> chart(from) rotates by 2*pi*rotation/n
  bool operator==(const GluingSpec&) const = default;
};

struct SurfaceSpec {
  int n = 1;
  std::vector<PolygonSpec> polygons;
  std::vector<GluingSpec> gluings;
  bool operator==(const SurfaceSpec&) const = default;
};

/// Parses the JSON surface document. Throws FlatcurError(Syntax) with the byte
/// offset on malformed JSON and FlatcurError(Validation) on structural problems
/// (duplicate polygon id, edge index out of range, rotation out of [0,n),
/// directed edge used zero or two times).
SurfaceSpec parseSurface(std::string_view text);
std::string serializeSurface(const SurfaceSpec& spec);

/// The same gluing data declared with rotation order n*k (rotation indices scaled by k).
SurfaceSpec redeclare(const SurfaceSpec& spec, int k);

/// Multiplies every coordinate by s.
SurfaceSpec scaled(const SurfaceSpec& spec, double s);

// ---------------------------------------------------------------------------
// Built complex
// ---------------------------------------------------------------------------

struct ChartTransition {
  int rotationIndex = 0;  // rotation by 2*pi*rotationIndex/n
  Vec2 translation{};
  Isometry isometry(int n) const { return {kTwoPi * rotationIndex / n, translation}; }
};

struct Corner {
  int polygon = 0;
  int vertex = 0;
  bool operator==(const Corner&) const = default;
};

struct VertexClass {
  std::vector<Corner> corners;  // counterclockwise order around the vertex
  double angle = 0.0;           // snapped to 2*pi*k/n
  int k = 0;
  int conePoint = -1;  // index into SurfaceComplex::conePoints, -1 when regular
};

struct ConePoint {
  int id = 0;
  int vertexClass = 0;
  std::vector<Corner> corners;
  double totalAngle = 0.0;
};

// Triangle of the internal triangulation. Triangles share the chart of their
// polygon; edge i runs from p[i] to p[(i+1)%3].
struct Triangle {
  int polygon = 0;
  std::array<int, 3> polygonVertex{};
  std::array<Vec2, 3> p{};
  std::array<int, 3> neighbor{};      // triangle index across edge i
  std::array<int, 3> neighborEdge{};  // edge index in that triangle
  std::array<int, 3> polygonEdge{};   // polygon edge index, -1 for a diagonal
  std::array<int, 3> vertexClass{};
  std::array<double, 3> cornerAngle{};
  // Maps the neighbor's chart into this triangle's chart.
  std::array<Isometry, 3> fromNeighbor{};
  std::array<int, 3> fromNeighborRotation{};
};

struct Tolerances {
  double len = -1.0;  // negative: 1e-9 * max polygon diameter
  double ang = 1e-9;
};

class SurfaceComplex {
 public:
  SurfaceSpec spec;
  int n = 1;
  Tolerances eps;
  double diameter = 0.0;

  std::vector<std::vector<EdgeRef>> partner;  // [polygon][edge], polygon indices
  std::vector<std::vector<ChartTransition>> transition;  // partner chart -> this chart
  std::vector<std::vector<int>> cornerClass;             // [polygon][vertex]
  std::vector<VertexClass> vertexClasses;
  std::vector<ConePoint> conePoints;
  int eulerCharacteristic = 0;
  int genus = 0;
  double gaussBonnetResidual = 0.0;
  double holonomyResidual = 0.0;  // worst translation residual around a vertex class

  std::vector<Triangle> triangles;
  std::vector<std::vector<int>> polygonTriangles;

  int polygonIndex(int id) const;
  int conePointOfClass(int vclass) const { return vertexClasses[vclass].conePoint; }
  bool isCone(int vclass) const { return vertexClasses[vclass].conePoint >= 0; }

  /// Triangle of polygon `poly` containing local point p (closest one for boundary points).
  int locate(int poly, Vec2 p) const;
  /// Next corner counterclockwise / clockwise around the vertex of corner (tri, i).
  std::pair<int, int> nextCornerCCW(int tri, int i) const;
  std::pair<int, int> nextCornerCW(int tri, int i) const;
};

/// Builds and validates the glued complex. Throws FlatcurError on edge length
/// mismatch, rotation inconsistent with the edge directions, vertex angles not
/// in {2pi} U {2pi k/n : k > n}, or a Gauss-Bonnet residual above eps.ang.
SurfaceComplex buildSurface(const SurfaceSpec& spec, Tolerances eps = {});

double coneAngleAround(const SurfaceComplex& surface, int vertexClass);

struct Placement {
  int polygon = 0;  // polygon index
  Isometry chartToPlane;
};

struct DevelopedPath {
  std::vector<Placement> placements;
  std::vector<EdgeRef> crossings;
};

/// Develops a chain of polygons into a common plane: placement i+1 equals
/// placement i composed with the transition of the crossed edge.
DevelopedPath developPath(const SurfaceComplex& surface, int startPolygon,
                          const std::vector<EdgeRef>& crossings,
                          Isometry seed = Isometry::identity());

/// Composed transition around a vertex class, walking its corners once.
Isometry holonomyAroundVertex(const SurfaceComplex& surface, int vertexClass);

}  // namespace flatcur
