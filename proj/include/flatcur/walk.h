#pragma once

#include <vector>

#include "flatcur/surface.h"

namespace flatcur {

/// Leaving triangle `tri` through its edge `edge`.
struct Crossing {
  int tri = 0;
  int edge = 0;
  bool operator==(const Crossing&) const = default;
};

using Corridor = std::vector<Crossing>;

/// Point of the surface given in the chart of a triangle (the chart of its polygon).
struct SurfacePoint {
  int tri = 0;
  Vec2 p{};
};

struct RayStep {
  enum class Kind { Edge, Vertex, Reached };
  Kind kind = Kind::Reached;
  double distance = 0.0;
  int edge = -1;
  double lambda = 0.0;  // position along the edge, 0 at p[edge]
  int corner = -1;
  Vec2 point{};
};

/// Casts a ray inside one triangle. `enteredEdge` is skipped as an exit (-1 for none);
/// `startCorner` marks a ray leaving a vertex of the triangle (-1 for none).
RayStep castRay(const SurfaceComplex& s, int tri, Vec2 from, Vec2 dir, double maxDistance, int enteredEdge,
                int startCorner, double snap);

/// Moves a point on edge `edge` of `tri` (at parameter lambda) into the neighbor.
struct EdgeTransfer {
  int tri;
  int edge;
  Vec2 point;
  Vec2 dir;
};
EdgeTransfer crossEdge(const SurfaceComplex& s, int tri, int edge, double lambda, Vec2 dir);

/// Rotates a ray based at the vertex of corner (tri, corner) by `amount` radians,
/// counterclockwise if `ccw`. The ray is given by its angle `offset` measured
/// counterclockwise from the corner's first edge. Returns the corner containing
/// the rotated ray and its offset there; crossed edges are appended to `crossed`
/// and `placement` (chart -> plane) is updated when non-null.
struct CornerRay {
  int tri;
  int corner;
  double offset;
};
CornerRay rotateAroundVertex(const SurfaceComplex& s, CornerRay start, double amount, bool ccw,
                             std::vector<Crossing>* crossed = nullptr, Isometry* placement = nullptr);

/// Direction (in the triangle chart) of the ray at `offset` inside a corner.
Vec2 cornerRayDirection(const SurfaceComplex& s, int tri, int corner, double offset);
/// Offset of a ray direction inside a corner (clamped to the corner).
double cornerRayOffset(const SurfaceComplex& s, int tri, int corner, Vec2 dir);

struct WalkResult {
  std::vector<Crossing> crossings;
  SurfacePoint end;
  Vec2 endDir{};
  bool hitVertex = false;
  int vertexCorner = -1;
  double travelled = 0.0;
};

/// Straight walk of a given length without turning; stops early at a vertex.
/// `startEdge` names the edge of the start triangle the start point lies on (-1 for none).
WalkResult walkStraight(const SurfaceComplex& s, SurfacePoint start, Vec2 dir, double length, int startEdge = -1);

/// Triangle of polygon `poly` (index) containing p such that p + t*dir enters it
/// for small t > 0; `onEdge` receives the triangle edge containing p, if any.
int locateDirected(const SurfaceComplex& s, int poly, Vec2 p, Vec2 dir, int* onEdge = nullptr);

}  // namespace flatcur
