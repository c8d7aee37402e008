#include "flatcur/walk.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flatcur {

RayStep castRay(const SurfaceComplex& s, int tri, Vec2 from, Vec2 dir, double maxDistance, int enteredEdge,
                int startCorner, double snap) {
  const Triangle& t = s.triangles[tri];
  RayStep best;
  best.kind = RayStep::Kind::Reached;
  best.distance = maxDistance;
  best.point = from + dir * maxDistance;
  const double tiny = 1e-14 * std::max(1.0, s.diameter);

  for (int e = 0; e < 3; ++e) {
    if (e == enteredEdge) continue;
    if (startCorner >= 0 && (e == startCorner || e == (startCorner + 2) % 3)) continue;
    const Vec2 a = t.p[e], b = t.p[(e + 1) % 3];
    const Vec2 ab = b - a;
    const double denom = cross(dir, ab);
    if (std::abs(denom) < 1e-300) continue;
    const double dist = cross(a - from, ab) / denom;
    const double lambda = cross(a - from, dir) / denom;
    if (dist <= tiny || lambda < -1e-9 || lambda > 1 + 1e-9) continue;
    if (dist > maxDistance) continue;
    if (best.kind == RayStep::Kind::Edge && dist >= best.distance) continue;
    {
      best.kind = RayStep::Kind::Edge;
      best.distance = dist;
      best.edge = e;
      best.lambda = std::clamp(lambda, 0.0, 1.0);
      best.point = a + ab * best.lambda;
    }
  }
  // Vertices on or within `snap` of the ray.
  for (int v = 0; v < 3; ++v) {
    if (v == startCorner) continue;
    const Vec2 rel = t.p[v] - from;
    const double along = dot(rel, dir);
    if (along <= tiny) continue;
    const double off = std::abs(cross(dir, rel));
    if (off > snap) continue;
    if (along > maxDistance + snap) continue;
    if (best.kind == RayStep::Kind::Edge && along > best.distance + snap) continue;
    if (best.kind == RayStep::Kind::Vertex && along >= best.distance) continue;
    best.kind = RayStep::Kind::Vertex;
    best.distance = along;
    best.corner = v;
    best.point = t.p[v];
  }
  if (best.kind == RayStep::Kind::Edge) {
    const Vec2 a = t.p[best.edge], b = t.p[(best.edge + 1) % 3];
    if (norm(best.point - a) <= snap) {
      best.kind = RayStep::Kind::Vertex;
      best.corner = best.edge;
      best.point = a;
    } else if (norm(best.point - b) <= snap) {
      best.kind = RayStep::Kind::Vertex;
      best.corner = (best.edge + 1) % 3;
      best.point = b;
    }
  }
  return best;
}

EdgeTransfer crossEdge(const SurfaceComplex& s, int tri, int edge, double lambda, Vec2 dir) {
  const Triangle& t = s.triangles[tri];
  const int nt = t.neighbor[edge], ne = t.neighborEdge[edge];
  const Triangle& u = s.triangles[nt];
  const Vec2 a = u.p[ne], b = u.p[(ne + 1) % 3];
  const Vec2 point = a + (b - a) * (1.0 - lambda);
  const Vec2 ndir = rotate(dir, -t.fromNeighbor[edge].angle);
  return {nt, ne, point, ndir};
}

Vec2 cornerRayDirection(const SurfaceComplex& s, int tri, int corner, double offset) {
  const Triangle& t = s.triangles[tri];
  return rotate(unit(t.p[(corner + 1) % 3] - t.p[corner]), offset);
}

double cornerRayOffset(const SurfaceComplex& s, int tri, int corner, Vec2 dir) {
  const Triangle& t = s.triangles[tri];
  double a = ccwAngle(t.p[(corner + 1) % 3] - t.p[corner], dir);
  // Directions just clockwise of the first edge wrap to ~2pi; fold them back to 0.
  if (a > 0.5 * (t.cornerAngle[corner] + kTwoPi)) a = 0.0;
  return std::min(a, t.cornerAngle[corner]);
}

CornerRay rotateAroundVertex(const SurfaceComplex& s, CornerRay r, double amount, bool ccw,
                             std::vector<Crossing>* crossed, Isometry* placement) {
  const double tol = 1e-12;
  int guard = 0;
  while (true) {
    const Triangle& t = s.triangles[r.tri];
    if (ccw) {
      const double room = t.cornerAngle[r.corner] - r.offset;
      if (amount <= room + tol) {
        r.offset = std::min(r.offset + amount, t.cornerAngle[r.corner]);
        return r;
      }
      amount -= room;
      const int e = (r.corner + 2) % 3;
      if (crossed) crossed->push_back({r.tri, e});
      if (placement) *placement = *placement * t.fromNeighbor[e];
      auto [nt, nc] = s.nextCornerCCW(r.tri, r.corner);
      r = {nt, nc, 0.0};
    } else {
      if (amount <= r.offset + tol) {
        r.offset = std::max(r.offset - amount, 0.0);
        return r;
      }
      amount -= r.offset;
      const int e = r.corner;
      if (crossed) crossed->push_back({r.tri, e});
      if (placement) *placement = *placement * t.fromNeighbor[e];
      auto [nt, nc] = s.nextCornerCW(r.tri, r.corner);
      r = {nt, nc, s.triangles[nt].cornerAngle[nc]};
    }
    if (++guard > 1000000) throw FlatcurError(ErrorKind::Geometry, "vertex rotation did not terminate");
  }
}

WalkResult walkStraight(const SurfaceComplex& s, SurfacePoint start, Vec2 dir, double length, int startEdge) {
  WalkResult out;
  const double snap = s.eps.len;
  int tri = start.tri, entered = startEdge;
  Vec2 p = start.p;
  double remaining = length;
  for (int guard = 0; guard < 10000000; ++guard) {
    const RayStep step = castRay(s, tri, p, dir, remaining, entered, -1, snap);
    out.travelled += step.distance;
    if (step.kind == RayStep::Kind::Reached) {
      out.end = {tri, step.point};
      out.endDir = dir;
      return out;
    }
    if (step.kind == RayStep::Kind::Vertex) {
      out.end = {tri, step.point};
      out.endDir = dir;
      out.hitVertex = true;
      out.vertexCorner = step.corner;
      return out;
    }
    out.crossings.push_back({tri, step.edge});
    const EdgeTransfer x = crossEdge(s, tri, step.edge, step.lambda, dir);
    tri = x.tri;
    entered = x.edge;
    p = x.point;
    dir = x.dir;
    remaining -= step.distance;
  }
  throw FlatcurError(ErrorKind::Geometry, "straight walk did not terminate");
}

int locateDirected(const SurfaceComplex& s, int poly, Vec2 p, Vec2 dir, int* onEdge) {
  const double tol = 1e-9 * std::max(1.0, s.diameter);
  const Vec2 probe = p + unit(dir) * (1e-6 * std::max(1.0, s.diameter));
  int best = -1;
  double bestScore = -std::numeric_limits<double>::infinity();
  int bestEdge = -1;
  for (int t : s.polygonTriangles[poly]) {
    const Triangle& tr = s.triangles[t];
    double inside = std::numeric_limits<double>::infinity();
    double probeInside = std::numeric_limits<double>::infinity();
    int edge = -1;
    for (int e = 0; e < 3; ++e) {
      const Vec2 a = tr.p[e], b = tr.p[(e + 1) % 3];
      const double len = norm(b - a);
      const double d = cross(b - a, p - a) / len;
      if (d < inside) inside = d;
      if (std::abs(d) <= tol) edge = e;
      probeInside = std::min(probeInside, cross(b - a, probe - a) / len);
    }
    if (inside < -tol) continue;
    if (probeInside > bestScore) {
      bestScore = probeInside;
      best = t;
      bestEdge = edge;
    }
  }
  if (best < 0) throw FlatcurError(ErrorKind::Argument, "point lies outside its polygon");
  if (onEdge) *onEdge = bestEdge;
  return best;
}

}  // namespace flatcur
