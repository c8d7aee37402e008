#include "flatcur/foliation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <random>
#include <tuple>
#include <unordered_map>

namespace flatcur {

std::string turningName(Turning t) { return t == Turning::Left ? "left" : "right"; }

std::string terminationName(Termination t) {
  switch (t) {
    case Termination::StepCap: return "step-cap";
    case Termination::ClosedUp: return "closed-up";
    case Termination::LengthBound: return "hit-length-bound";
  }
  return "?";
}

bool inWeb(double angle, int n, double theta, double epsAng) {
  const double step = kTwoPi / n;
  const double d = wrap(angle - theta, step);
  return std::min(d, step - d) <= epsAng;
}

namespace {

double lenTol(const SurfaceComplex& s) { return s.eps.len > 0 ? s.eps.len : 1e-9 * std::max(1.0, s.diameter); }

// Nearest angle of the form base + 2 pi k / n.
Vec2 snapDir(Vec2 dir, double base, int n) {
  const double step = kTwoPi / n;
  const double k = std::round((arg(dir) - base) / step);
  return polar(base + k * step);
}

CornerRay canonical(const SurfaceComplex& s, CornerRay r) {
  if (r.offset >= s.triangles[r.tri].cornerAngle[r.corner] - 1e-12) {
    auto [t, c] = s.nextCornerCCW(r.tri, r.corner);
    return {t, c, 0.0};
  }
  return r;
}

struct StartState {
  int tri = 0;
  Vec2 p{};
  Vec2 dir{};
  int corner = -1;
  int entered = -1;
};

StartState normalizeStart(const SurfaceComplex& s, int tri, Vec2 p, Vec2 dir, int corner) {
  dir = unit(dir);
  if (corner >= 0) {
    const Triangle& t = s.triangles[tri];
    const double off = ccwAngle(t.p[(corner + 1) % 3] - t.p[corner], dir);
    if (off <= t.cornerAngle[corner] + 1e-12 || off >= kTwoPi - 1e-12) return {tri, t.p[corner], dir, corner, -1};
    const CornerRay r = rotateAroundVertex(s, {tri, corner, 0.0}, off, true);
    const Vec2 d = cornerRayDirection(s, r.tri, r.corner, r.offset);
    return {r.tri, s.triangles[r.tri].p[r.corner], d, r.corner, -1};
  }
  const int poly = s.triangles[tri].polygon;
  int onEdge = -1;
  const int loc = locateDirected(s, poly, p, dir, &onEdge);
  const Triangle& t = s.triangles[loc];
  for (int c = 0; c < 3; ++c)
    if (norm(t.p[c] - p) <= lenTol(s)) return normalizeStart(s, loc, t.p[c], dir, c);
  if (onEdge >= 0) {
    const Vec2 a = t.p[onEdge], e = t.p[(onEdge + 1) % 3] - a;
    if (cross(e, dir) < 0) {
      const double lambda = std::clamp(dot(p - a, e) / dot(e, e), 0.0, 1.0);
      const EdgeTransfer x = crossEdge(s, loc, onEdge, lambda, dir);
      return {x.tri, x.point, x.dir, -1, x.edge};
    }
  }
  return {loc, p, dir, -1, onEdge};
}

struct WalkConfig {
  Turning turning = Turning::Left;
  int n = 1;
  double base = 0.0;  // directions are snapped to base + 2 pi k / n
  double maxLength = 0.0;
  bool stopAtCone = false;
  bool detectClosure = false;
  int maxSteps = 1000000;
};

struct WalkOut {
  LeafTrace trace;
  int tri = 0;
  Vec2 p{};
  Vec2 dir{};
  bool hitCone = false;
  int coneTri = -1, coneCorner = -1;
};

WalkOut walkLeaf(const SurfaceComplex& s, const StartState& st0, const WalkConfig& cfg) {
  WalkOut out;
  LeafTrace& tr = out.trace;
  const double snap = lenTol(s);
  const double closeTol = 1e-8 * std::max(1.0, s.diameter);
  const double tiny = 1e-12 * std::max(1.0, s.diameter);
  int tri = st0.tri, corner = st0.corner, entered = st0.entered;
  Vec2 p = st0.p, dir = snapDir(st0.dir, cfg.base, cfg.n);
  const Vec2 dir0 = dir;
  CornerRay startRay{-1, -1, 0.0};
  if (corner >= 0) startRay = canonical(s, {tri, corner, cornerRayOffset(s, tri, corner, dir)});
  Isometry placement = Isometry::identity();
  bool freshSegment = true;
  tr.termination = Termination::StepCap;

  auto addPiece = [&](Vec2 a, Vec2 b, double len) {
    if (len <= 0) return;
    tr.pieces.push_back({tri, a, b, dir, tr.length, tr.length + len, static_cast<int>(tr.crossings.size())});
    const Vec2 A = placement.apply(a), B = placement.apply(b);
    if (!freshSegment && !tr.segments.empty() && norm(tr.segments.back().to - A) <= closeTol &&
        std::abs(cross(unit(tr.segments.back().to - tr.segments.back().from), placement.applyLinear(dir))) <= 1e-9)
      tr.segments.back().to = B;
    else
      tr.segments.push_back({A, B});
    freshSegment = false;
    tr.length += len;
  };

  if (cfg.maxLength <= 0) {
    tr.termination = Termination::LengthBound;
    out.tri = tri;
    out.p = p;
    out.dir = dir;
    return out;
  }

  for (int step = 0; step < cfg.maxSteps; ++step) {
    const double remaining = cfg.maxLength - tr.length;
    if (remaining <= tiny) {
      tr.termination = Termination::LengthBound;
      break;
    }
    const RayStep rs = castRay(s, tri, p, dir, remaining, entered, corner, snap);
    if (cfg.detectClosure && st0.corner < 0 && tri == st0.tri && tr.length > 0 &&
        norm(dir - dir0) <= 1e-9) {
      const Vec2 rel = st0.p - p;
      const double along = dot(rel, dir);
      if (along > tiny && along <= rs.distance + snap && std::abs(cross(dir, rel)) <= closeTol) {
        addPiece(p, st0.p, along);
        p = st0.p;
        tr.termination = Termination::ClosedUp;
        break;
      }
    }
    addPiece(p, rs.point, rs.distance);
    if (rs.kind == RayStep::Kind::Reached) {
      p = rs.point;
      tr.termination = Termination::LengthBound;
      break;
    }
    if (rs.kind == RayStep::Kind::Edge) {
      tr.crossings.push_back({tri, rs.edge});
      placement = placement * s.triangles[tri].fromNeighbor[rs.edge];
      const EdgeTransfer x = crossEdge(s, tri, rs.edge, rs.lambda, dir);
      tri = x.tri;
      entered = x.edge;
      p = x.point;
      dir = snapDir(x.dir, cfg.base, cfg.n);
      corner = -1;
      continue;
    }
    // vertex
    const int c = rs.corner;
    const Triangle& t = s.triangles[tri];
    const int vclass = t.vertexClass[c];
    const bool cone = s.isCone(vclass);
    p = t.p[c];
    if (cone && cfg.stopAtCone) {
      out.hitCone = true;
      out.coneTri = tri;
      out.coneCorner = c;
      break;
    }
    const Vec2 eventPos = placement.apply(p);
    const double back = cornerRayOffset(s, tri, c, -dir);
    std::vector<Crossing> swept;
    Isometry pl = placement;
    const CornerRay r = rotateAroundVertex(s, {tri, c, back}, kPi, cfg.turning == Turning::Right, &swept, &pl);
    const Vec2 ndir = snapDir(cornerRayDirection(s, r.tri, r.corner, r.offset), cfg.base, cfg.n);
    if (cone) {
      LeafEvent ev;
      ev.conePoint = s.conePointOfClass(vclass);
      ev.vertexClass = vclass;
      ev.arclength = tr.length;
      ev.position = eventPos;
      ev.inTri = tri;
      ev.inCorner = c;
      ev.outTri = r.tri;
      ev.outCorner = r.corner;
      ev.incoming = arg(dir);
      ev.outgoing = arg(ndir);
      ev.turningAngle = kPi;
      ev.otherAngle = s.vertexClasses[vclass].angle - kPi;
      ev.swept = static_cast<int>(swept.size());
      tr.events.push_back(ev);
      freshSegment = true;
    }
    tr.crossings.insert(tr.crossings.end(), swept.begin(), swept.end());
    placement = pl;
    tri = r.tri;
    corner = r.corner;
    entered = -1;
    p = s.triangles[tri].p[corner];
    dir = ndir;
    if (cfg.detectClosure && st0.corner >= 0) {
      const CornerRay now = canonical(s, {tri, corner, cornerRayOffset(s, tri, corner, dir)});
      if (now.tri == startRay.tri && now.corner == startRay.corner && std::abs(now.offset - startRay.offset) <= 1e-9) {
        tr.termination = Termination::ClosedUp;
        break;
      }
    }
  }
  out.tri = tri;
  out.p = p;
  out.dir = dir;
  return out;
}

}  // namespace

LeafTrace traceLeaf(const SurfaceComplex& s, const LeafStart& start, double theta, Turning turning,
                    double maxLength, TraceOptions opt) {
  if (start.point.tri < 0 || start.point.tri >= static_cast<int>(s.triangles.size()))
    throw FlatcurError(ErrorKind::Argument, "start triangle out of range");
  if (norm(start.direction) == 0) throw FlatcurError(ErrorKind::Argument, "zero start direction");
  if (!inWeb(arg(start.direction), s.n, theta, s.eps.ang))
    throw FlatcurError(ErrorKind::Argument, "start direction is not in the web of theta");
  const StartState st = normalizeStart(s, start.point.tri, start.point.p, start.direction, start.corner);
  WalkConfig cfg;
  cfg.turning = turning;
  cfg.n = s.n;
  cfg.base = theta;
  cfg.maxLength = maxLength;
  cfg.detectClosure = true;
  cfg.maxSteps = opt.maxSteps;
  WalkOut w = walkLeaf(s, st, cfg);
  w.trace.theta = theta;
  w.trace.n = s.n;
  w.trace.turning = turning;
  w.trace.start = start;
  return w.trace;
}

TraceCheck verifyLeafTrace(const SurfaceComplex& s, const LeafTrace& t, double epsAng) {
  TraceCheck r;
  for (std::size_t i = 0; i < t.pieces.size(); ++i)
    if (!inWeb(arg(t.pieces[i].dir), t.n, t.theta, epsAng)) {
      r.pass = false;
      r.problems.push_back("piece " + std::to_string(i) + " leaves the web");
    }
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const LeafEvent& e = t.events[i];
    const bool left = t.turning == Turning::Left;
    const double b = cornerRayOffset(s, e.inTri, e.inCorner, -polar(e.incoming));
    const double o = cornerRayOffset(s, e.outTri, e.outCorner, polar(e.outgoing));
    const double aIn = s.triangles[e.inTri].cornerAngle[e.inCorner];
    const double aOut = s.triangles[e.outTri].cornerAngle[e.outCorner];
    double angle;
    int tri = e.inTri, c = e.inCorner;
    if (e.swept == 0) {
      angle = left ? b - o : o - b;
    } else {
      angle = left ? b : aIn - b;
      for (int k = 0; k < e.swept; ++k) {
        std::tie(tri, c) = left ? s.nextCornerCW(tri, c) : s.nextCornerCCW(tri, c);
        if (k + 1 < e.swept) angle += s.triangles[tri].cornerAngle[c];
      }
      angle += left ? aOut - o : o;
    }
    if (tri != e.outTri || c != e.outCorner) {
      r.pass = false;
      r.problems.push_back("event " + std::to_string(i) + " does not end in its outgoing corner");
    }
    const double dev = std::abs(angle - kPi);
    r.worst = std::max(r.worst, dev);
    if (dev > epsAng) {
      r.pass = false;
      r.problems.push_back("event " + std::to_string(i) + " turns by " + std::to_string(angle));
    }
    if (std::abs(e.turningAngle + e.otherAngle - s.vertexClasses[e.vertexClass].angle) > epsAng) {
      r.pass = false;
      r.problems.push_back("event " + std::to_string(i) + " angles do not add up to the cone angle");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Saddle connections

namespace {

std::tuple<int, int, long long> rayKey(const SurfaceComplex& s, CornerRay r) {
  r = canonical(s, r);
  return {r.tri, r.corner, std::llround(r.offset * 1e9)};
}

// Shoots from a corner; returns the walk, stopping at the first cone point.
WalkOut shoot(const SurfaceComplex& s, int tri, int corner, Vec2 dir, double maxLength) {
  WalkConfig cfg;
  cfg.n = s.n;
  cfg.base = arg(dir);
  cfg.maxLength = maxLength;
  cfg.stopAtCone = true;
  StartState st{tri, s.triangles[tri].p[corner], dir, corner, -1};
  return walkLeaf(s, st, cfg);
}

}  // namespace

std::vector<SaddleConnection> saddleConnectionsInDirection(const SurfaceComplex& s, double theta,
                                                           double lengthBound) {
  if (!(lengthBound > 0)) throw FlatcurError(ErrorKind::Argument, "length bound must be positive");
  std::vector<SaddleConnection> out;
  const double tol = lenTol(s);
  const bool even = s.n % 2 == 0;
  for (int tri = 0; tri < static_cast<int>(s.triangles.size()); ++tri) {
    const Triangle& t = s.triangles[tri];
    for (int c = 0; c < 3; ++c) {
      if (!s.isCone(t.vertexClass[c])) continue;
      for (int k = 0; k < s.n; ++k) {
        const Vec2 d = polar(theta + kTwoPi * k / s.n);
        double off = ccwAngle(t.p[(c + 1) % 3] - t.p[c], d);
        if (off >= kTwoPi - 1e-12) off = 0.0;
        if (off >= t.cornerAngle[c] - 1e-12) continue;
        const WalkOut w = shoot(s, tri, c, d, lengthBound + tol);
        if (!w.hitCone || w.trace.length > lengthBound + tol) continue;
        SaddleConnection sc;
        sc.startCone = s.conePointOfClass(t.vertexClass[c]);
        sc.endCone = s.conePointOfClass(s.triangles[w.coneTri].vertexClass[w.coneCorner]);
        sc.startTri = tri;
        sc.startCorner = c;
        sc.startOffset = off;
        sc.endTri = w.coneTri;
        sc.endCorner = w.coneCorner;
        sc.direction = arg(d);
        sc.length = w.trace.length;
        sc.crossings = w.trace.crossings;
        if (even) {
          const auto a = rayKey(s, {tri, c, off});
          const auto b = rayKey(s, {w.coneTri, w.coneCorner, cornerRayOffset(s, w.coneTri, w.coneCorner, -w.dir)});
          if (b < a) continue;
        }
        out.push_back(std::move(sc));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SaddleConnection& a, const SaddleConnection& b) { return a.length < b.length; });
  return out;
}

// ---------------------------------------------------------------------------
// Cylinders

namespace {

struct StripVertex {
  double sigma = 0.0;
  double u = 0.0;
  int j = 0;  // strip triangle
  int corner = 0;
  int vclass = 0;
};

struct SideScan {
  bool found = false;
  double sigmaMin = 0.0;
  std::vector<StripVertex> onLine;
  std::vector<StripVertex> all;
  Strip strip;
  Vec2 origin{}, dir{};
};

SideScan scanSide(const SurfaceComplex& s, const LeafTrace& leaf, int side, double lower, double lineTol) {
  SideScan sc;
  const LeafPiece& p0 = leaf.pieces.front();
  sc.origin = p0.from;
  sc.dir = p0.dir;
  const double L = leaf.length;
  sc.strip = developCorridor(s, leaf.crossings, 1);
  const Strip& st = sc.strip;
  const int m = st.period;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= m; ++j) {
    const Triangle& t = s.triangles[st.tris[j]];
    for (int i = 0; i < 3; ++i) {
      const Vec2 v = st.placement[j].apply(t.p[i]) - sc.origin;
      StripVertex sv{side * cross(sc.dir, v), wrap(dot(sc.dir, v), L), j, i, t.vertexClass[i]};
      sc.all.push_back(sv);
      if (sv.sigma > lower) best = std::min(best, sv.sigma);
    }
  }
  if (!std::isfinite(best)) return sc;
  sc.found = true;
  sc.sigmaMin = best;
  for (const StripVertex& v : sc.all)
    if (v.sigma > lower && v.sigma <= best + lineTol) sc.onLine.push_back(v);
  return sc;
}

// Point of a leaf at arclength u.
SurfacePoint leafPoint(const LeafTrace& leaf, double u, Vec2* dir) {
  for (const LeafPiece& p : leaf.pieces)
    if (u <= p.s1 || &p == &leaf.pieces.back()) {
      *dir = p.dir;
      return {p.tri, p.from + p.dir * std::clamp(u - p.s0, 0.0, p.s1 - p.s0)};
    }
  *dir = leaf.pieces.back().dir;
  return {leaf.pieces.back().tri, leaf.pieces.back().to};
}

BoundaryLoop buildBoundary(const SurfaceComplex& s, const SideScan& sc, int side, double offset, double L,
                           double lineTol) {
  BoundaryLoop b;
  b.offset = side * offset;
  std::vector<StripVertex> pts = sc.onLine;
  std::sort(pts.begin(), pts.end(), [](const StripVertex& a, const StripVertex& c) { return a.u < c.u; });
  std::vector<StripVertex> uniq;
  for (const StripVertex& v : pts)
    if (uniq.empty() || v.u - uniq.back().u > lineTol) uniq.push_back(v);
  if (uniq.size() > 1 && uniq.back().u - uniq.front().u > L - lineTol) uniq.pop_back();
  std::vector<StripVertex> cones;
  for (const StripVertex& v : uniq)
    if (s.isCone(v.vclass)) cones.push_back(v);
  b.tangent = !cones.empty();
  for (std::size_t i = 0; i < cones.size(); ++i) {
    const StripVertex& v = cones[i];
    b.conePoints.push_back(s.conePointOfClass(v.vclass));
    const double next = i + 1 < cones.size() ? cones[i + 1].u : cones[0].u + L;
    const double len = next - v.u;
    b.connectionLengths.push_back(len);
    // The connection must be a straight segment along the boundary line.
    const int tri = sc.strip.tris[v.j];
    const Triangle& t = s.triangles[tri];
    const Vec2 d = sc.strip.placement[v.j].inverse().applyLinear(sc.dir);
    CornerRay r;
    if (side > 0)
      r = rotateAroundVertex(s, {tri, v.corner, 0.0}, ccwAngle(t.p[(v.corner + 1) % 3] - t.p[v.corner], d), true);
    else {
      const Vec2 last = t.p[(v.corner + 2) % 3] - t.p[v.corner];
      r = rotateAroundVertex(s, {tri, v.corner, t.cornerAngle[v.corner]}, ccwAngle(d, last), false);
    }
    const Vec2 rd = cornerRayDirection(s, r.tri, r.corner, r.offset);
    const WalkOut w = shoot(s, r.tri, r.corner, snapDir(rd, arg(d), s.n), len + 1e-6 * L);
    if (!w.hitCone || std::abs(w.trace.length - len) > 1e-7 * std::max(1.0, L) ||
        s.conePointOfClass(s.triangles[w.coneTri].vertexClass[w.coneCorner]) !=
            s.conePointOfClass(cones[(i + 1) % cones.size()].vclass))
      b.tangent = false;
  }
  return b;
}

}  // namespace

std::optional<Cylinder> detectCylinder(const SurfaceComplex& s, const LeafTrace& trace, double epsLen) {
  if (trace.termination != Termination::ClosedUp || !trace.events.empty() || trace.start.corner >= 0 ||
      trace.pieces.empty() || trace.crossings.empty())
    return std::nullopt;
  const double tol = epsLen > 0 ? epsLen : lenTol(s);
  const double lineTol = std::max(10 * tol, 1e-8 * std::max(1.0, s.diameter));
  const double L = trace.length;
  const double step = 1e-7 * std::max(1.0, s.diameter);
  Cylinder cyl;
  const LeafPiece& p0 = trace.pieces.front();
  cyl.direction = arg(p0.dir);
  cyl.core.triangle = p0.tri;
  cyl.core.polygon = s.spec.polygons[s.triangles[p0.tri].polygon].id;
  cyl.core.base = p0.from;
  cyl.core.direction = cyl.direction;
  cyl.core.length = L;
  cyl.core.cylinder = true;

  for (int sideIdx = 0; sideIdx < 2; ++sideIdx) {
    const int side = sideIdx == 0 ? 1 : -1;
    LeafTrace cur = trace;
    double acc = 0.0, lower = lineTol;
    bool done = false;
    for (int iter = 0; iter < 64 && !done; ++iter) {
      const SideScan sc = scanSide(s, cur, side, lower, lineTol);
      if (!sc.found) return std::nullopt;
      bool hasCone = false;
      for (const StripVertex& v : sc.onLine) hasCone = hasCone || s.isCone(v.vclass);
      if (hasCone) {
        cyl.boundary[sideIdx] = buildBoundary(s, sc, side, acc + sc.sigmaMin, L, lineTol);
        done = true;
        break;
      }
      // Only regular vertices on this line: move past it and keep sweeping.
      const double hop = sc.sigmaMin + step;
      std::vector<double> us;
      for (const StripVertex& v : sc.all)
        if (v.sigma > lower - lineTol && v.sigma <= hop + lineTol) us.push_back(v.u);
      std::sort(us.begin(), us.end());
      double uStar = 0.5 * L;
      if (!us.empty()) {
        double gap = -1;
        for (std::size_t i = 0; i < us.size(); ++i) {
          const double a = us[i], b = i + 1 < us.size() ? us[i + 1] : us[0] + L;
          if (b - a > gap) {
            gap = b - a;
            uStar = wrap(0.5 * (a + b), L);
          }
        }
      }
      Vec2 d;
      const SurfacePoint base = leafPoint(cur, uStar, &d);
      const Vec2 across = rotate(d, side * 0.5 * kPi);
      WalkConfig cfg;
      cfg.n = s.n;
      cfg.base = arg(across);
      cfg.maxLength = hop;
      cfg.stopAtCone = true;
      const WalkOut w = walkLeaf(s, normalizeStart(s, base.tri, base.p, across, -1), cfg);
      if (w.hitCone) return std::nullopt;
      LeafStart ns{{w.tri, w.p}, rotate(w.dir, -side * 0.5 * kPi), -1};
      LeafTrace next = traceLeaf(s, ns, trace.theta, Turning::Left, 1.5 * L + tol);
      if (next.termination != Termination::ClosedUp || !next.events.empty() ||
          std::abs(next.length - L) > 1e-7 * std::max(1.0, L) || next.crossings.empty())
        return std::nullopt;
      acc += hop;
      lower = -step + lineTol;
      cur = std::move(next);
    }
    if (!done) return std::nullopt;
  }
  cyl.width = cyl.boundary[0].offset - cyl.boundary[1].offset;
  return cyl;
}

// ---------------------------------------------------------------------------
// Crossings

namespace {

using Buckets = std::unordered_map<int, std::vector<int>>;

Buckets bucketPieces(const LeafTrace& t) {
  Buckets b;
  for (int i = 0; i < static_cast<int>(t.pieces.size()); ++i) b[t.pieces[i].tri].push_back(i);
  return b;
}

bool nearVertex(const Triangle& t, Vec2 x, double tol) {
  for (int c = 0; c < 3; ++c)
    if (norm(t.p[c] - x) <= tol) return true;
  return false;
}

void crossTraces(const SurfaceComplex& s, const LeafTrace& A, const LeafTrace& B, const Buckets& bucketB, int idA,
                 int idB, double epsAng, std::vector<CrossingRecord>& out, std::vector<Overlap>* overlaps) {
  const double tol = 10 * lenTol(s);
  std::vector<CrossingRecord> found;
  for (int i = 0; i < static_cast<int>(A.pieces.size()); ++i) {
    const LeafPiece& P = A.pieces[i];
    const auto it = bucketB.find(P.tri);
    if (it == bucketB.end()) continue;
    const Triangle& tri = s.triangles[P.tri];
    const double l1 = P.s1 - P.s0;
    for (int j : it->second) {
      const LeafPiece& Q = B.pieces[j];
      const double l2 = Q.s1 - Q.s0;
      const double denom = cross(P.dir, Q.dir);
      const Vec2 ca = Q.from - P.from;
      if (std::abs(denom) <= 1e-12) {
        if (std::abs(cross(P.dir, ca)) > tol) continue;
        const double tc = dot(ca, P.dir), te = dot(Q.to - P.from, P.dir);
        const double len = std::min(l1, std::max(tc, te)) - std::max(0.0, std::min(tc, te));
        if (len > tol && overlaps) overlaps->push_back({idA, idB, P.tri, len});
        continue;
      }
      const double t1 = cross(ca, Q.dir) / denom;
      const double t2 = cross(ca, P.dir) / denom;
      if (t1 < -tol || t1 > l1 + tol || t2 < -tol || t2 > l2 + tol) continue;
      const Vec2 x = P.from + P.dir * t1;
      if (nearVertex(tri, x, tol)) continue;
      CrossingRecord r;
      r.tri = P.tri;
      r.polygon = s.spec.polygons[tri.polygon].id;
      r.point = x;
      const double angle = angleBetween(P.dir, Q.dir);
      const int k = static_cast<int>(std::lround(angle * s.n / kTwoPi));
      if (std::abs(angle - kTwoPi * k / s.n) > epsAng || k < 1 || 2 * k >= s.n)
        throw FlatcurError(ErrorKind::Geometry, "crossing angle " + std::to_string(angle) + " is not 2 pi k / n");
      r.angle = angle;
      r.k = k;
      if (denom > 0) {
        r.first = idA, r.second = idB, r.s1 = P.s0 + t1, r.s2 = Q.s0 + t2, r.piece1 = i, r.piece2 = j;
      } else {
        r.first = idB, r.second = idA, r.s1 = Q.s0 + t2, r.s2 = P.s0 + t1, r.piece1 = j, r.piece2 = i;
      }
      found.push_back(r);
    }
  }
  std::sort(found.begin(), found.end(), [](const CrossingRecord& a, const CrossingRecord& b) {
    return std::tie(a.s1, a.s2) < std::tie(b.s1, b.s2);
  });
  for (const CrossingRecord& r : found) {
    bool dup = false;
    for (auto it = out.rbegin(); it != out.rend() && it->first == r.first && it->second == r.second; ++it)
      if (std::abs(it->s1 - r.s1) <= tol && std::abs(it->s2 - r.s2) <= tol) {
        dup = true;
        break;
      } else if (r.s1 - it->s1 > tol) {
        break;
      }
    if (!dup) out.push_back(r);
  }
}

}  // namespace

std::vector<CrossingRecord> crossingAngle(const SurfaceComplex& s, const LeafTrace& t1, const LeafTrace& t2,
                                          std::vector<Overlap>* overlaps, int id1, int id2, double epsAng) {
  if (std::abs(wrap(t1.theta - t2.theta, kTwoPi / s.n)) > 1e-12 &&
      std::abs(wrap(t1.theta - t2.theta, kTwoPi / s.n) - kTwoPi / s.n) > 1e-12)
    throw FlatcurError(ErrorKind::Argument, "traces belong to different foliations");
  std::vector<CrossingRecord> out;
  crossTraces(s, t1, t2, bucketPieces(t2), id1, id2, epsAng, out, overlaps);
  return out;
}

LeafSampleSpec defaultLeafSamples(const SurfaceComplex& s, double theta, int perEdge, double maxLength) {
  LeafSampleSpec spec;
  spec.maxLength = maxLength;
  for (const GluingSpec& g : s.spec.gluings) {
    const int poly = s.polygonIndex(g.from.polygon);
    const auto& V = s.spec.polygons[poly].vertices;
    const Vec2 a = V[g.from.edge], b = V[(g.from.edge + 1) % V.size()];
    for (int i = 0; i < perEdge; ++i) {
      const Vec2 p = a + (b - a) * ((i + 0.5) / perEdge);
      for (int k = 0; k < s.n; ++k) {
        const Vec2 d = polar(theta + kTwoPi * k / s.n);
        if (cross(unit(b - a), d) <= 1e-6) continue;
        spec.starts.push_back({{s.locate(poly, p), p}, d, -1});
      }
    }
  }
  for (int tri = 0; tri < static_cast<int>(s.triangles.size()); ++tri) {
    const Triangle& t = s.triangles[tri];
    for (int c = 0; c < 3; ++c) {
      if (!s.isCone(t.vertexClass[c])) continue;
      for (int k = 0; k < s.n; ++k) {
        const Vec2 d = polar(theta + kTwoPi * k / s.n);
        double off = ccwAngle(t.p[(c + 1) % 3] - t.p[c], d);
        if (off >= kTwoPi - 1e-12) off = 0.0;
        if (off >= t.cornerAngle[c] - 1e-12) continue;
        spec.starts.push_back({{tri, t.p[c]}, d, c});
      }
    }
  }
  return spec;
}

namespace {

Crossing reversed(const SurfaceComplex& s, Crossing c) {
  const Triangle& t = s.triangles[c.tri];
  return {t.neighbor[c.edge], t.neighborEdge[c.edge]};
}

// Crossings of a leaf between two of its pieces, in the order of travel from piece i to piece j.
void appendLeafPath(const SurfaceComplex& s, const LeafTrace& t, int i, int j, Corridor& out) {
  const int a = t.pieces[i].corridorIndex, b = t.pieces[j].corridorIndex;
  if (a <= b) {
    out.insert(out.end(), t.crossings.begin() + a, t.crossings.begin() + b);
  } else {
    for (int k = a - 1; k >= b; --k) out.push_back(reversed(s, t.crossings[k]));
  }
}

// Homology of the surface as the cycle space of the dual graph modulo the loops
// around vertices; `project` kills the vertex loops.
struct Homology {
  int dim = 0;
  std::vector<std::vector<double>> basis;  // orthonormal basis of the vertex loop span
  std::vector<std::array<int, 3>> edgeIndex, edgeSign;

  explicit Homology(const SurfaceComplex& s) {
    std::map<std::pair<int, int>, std::pair<int, int>> idx;
    for (std::size_t g = 0; g < s.spec.gluings.size(); ++g) {
      const GluingSpec& gl = s.spec.gluings[g];
      idx[{s.polygonIndex(gl.from.polygon), gl.from.edge}] = {static_cast<int>(g), 1};
      idx[{s.polygonIndex(gl.to.polygon), gl.to.edge}] = {static_cast<int>(g), -1};
    }
    dim = static_cast<int>(s.spec.gluings.size());
    edgeIndex.resize(s.triangles.size());
    edgeSign.resize(s.triangles.size());
    for (std::size_t t = 0; t < s.triangles.size(); ++t)
      for (int e = 0; e < 3; ++e) {
        const int pe = s.triangles[t].polygonEdge[e];
        edgeIndex[t][e] = -1;
        edgeSign[t][e] = 0;
        if (pe < 0) continue;
        const auto [g, sg] = idx.at({s.triangles[t].polygon, pe});
        edgeIndex[t][e] = g;
        edgeSign[t][e] = sg;
      }
    std::vector<char> seen(s.vertexClasses.size(), 0);
    for (std::size_t t = 0; t < s.triangles.size(); ++t)
      for (int c = 0; c < 3; ++c) {
        const int vc = s.triangles[t].vertexClass[c];
        if (seen[vc]) continue;
        seen[vc] = 1;
        std::vector<double> v(dim, 0.0);
        int ct = static_cast<int>(t), cc = c;
        do {
          add(v, {ct, (cc + 2) % 3});
          std::tie(ct, cc) = s.nextCornerCCW(ct, cc);
        } while (ct != static_cast<int>(t) || cc != c);
        for (const auto& b : basis) {
          double d = 0;
          for (int i = 0; i < dim; ++i) d += v[i] * b[i];
          for (int i = 0; i < dim; ++i) v[i] -= d * b[i];
        }
        double nn = 0;
        for (double x : v) nn += x * x;
        if (nn > 1e-12) {
          nn = std::sqrt(nn);
          for (double& x : v) x /= nn;
          basis.push_back(v);
        }
      }
  }
  void add(std::vector<double>& v, Crossing c) const {
    const int g = edgeIndex[c.tri][c.edge];
    if (g >= 0) v[g] += edgeSign[c.tri][c.edge];
  }
  std::vector<double> project(std::vector<double> v) const {
    for (const auto& b : basis) {
      double d = 0;
      for (int i = 0; i < dim; ++i) d += v[i] * b[i];
      for (int i = 0; i < dim; ++i) v[i] -= d * b[i];
    }
    return v;
  }
};

std::uint64_t hashVec(const std::vector<double>& v) {
  std::uint64_t h = 1469598103934665603ull;
  for (double x : v) {
    h ^= static_cast<std::uint64_t>(std::llround(x * 1e6));
    h *= 1099511628211ull;
  }
  return h;
}

bool sameVec(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-6) return false;
  return true;
}

}  // namespace

CrossingStatistics crossingStatistics(const SurfaceComplex& s, double theta, const LeafSampleSpec& spec,
                                      double epsAng) {
  CrossingStatistics st;
  std::vector<LeafTrace> leaves;
  for (const LeafStart& a : spec.starts) {
    LeafTrace l = traceLeaf(s, a, theta, Turning::Left, spec.maxLength);
    const bool turned = !l.events.empty();
    leaves.push_back(std::move(l));
    if (spec.bothTurnings && turned) leaves.push_back(traceLeaf(s, a, theta, Turning::Right, spec.maxLength));
  }
  const int L = static_cast<int>(leaves.size());
  st.leaves = L;
  std::vector<Buckets> buckets;
  for (const LeafTrace& l : leaves) buckets.push_back(bucketPieces(l));

  std::vector<CrossingRecord> recs;
  std::vector<Overlap> overlaps;
  for (int a = 0; a < L; ++a)
    for (int b = a + 1; b < L; ++b) crossTraces(s, leaves[a], leaves[b], buckets[b], a, b, epsAng, recs, &overlaps);
  st.crossings = static_cast<long long>(recs.size());
  st.overlaps = static_cast<long long>(overlaps.size());
  for (const CrossingRecord& r : recs)
    if (std::find(st.anglesK.begin(), st.anglesK.end(), r.k) == st.anglesK.end()) st.anglesK.push_back(r.k);
  std::sort(st.anglesK.begin(), st.anglesK.end());
  if (recs.empty()) return st;
  st.maxOrder = 2;
  st.worstSlack = std::numeric_limits<double>::infinity();

  // projected homology of every leaf prefix
  const Homology hom(s);
  std::vector<std::vector<std::vector<double>>> prefix(L);
  for (int a = 0; a < L; ++a) {
    std::vector<double> v(hom.dim, 0.0);
    prefix[a].push_back(hom.project(v));
    for (const Crossing& c : leaves[a].crossings) {
      hom.add(v, c);
      prefix[a].push_back(hom.project(v));
    }
  }
  auto Q = [&](int leaf, int piece) -> const std::vector<double>& {
    return prefix[leaf][leaves[leaf].pieces[piece].corridorIndex];
  };
  auto pieceOn = [](const CrossingRecord& r, int leaf) { return r.first == leaf ? r.piece1 : r.piece2; };

  std::vector<std::vector<int>> byFirst(L);
  std::map<std::pair<int, int>, std::vector<int>> byPair;
  for (int i = 0; i < static_cast<int>(recs.size()); ++i) {
    byFirst[recs[i].first].push_back(i);
    byPair[{recs[i].first, recs[i].second}].push_back(i);
  }
  // r3 lookup keyed by Q_c - Q_b at the crossing of b and c
  std::map<std::pair<int, int>, std::unordered_multimap<std::uint64_t, int>> keyed;
  std::vector<std::vector<double>> key3(recs.size());
  for (int i = 0; i < static_cast<int>(recs.size()); ++i) {
    const CrossingRecord& r = recs[i];
    std::vector<double> k = Q(r.second, r.piece2);
    const auto& qb = Q(r.first, r.piece1);
    for (int d = 0; d < hom.dim; ++d) k[d] -= qb[d];
    keyed[{r.first, r.second}].emplace(hashVec(k), i);
    key3[i] = std::move(k);
  }

  auto nullLoop = [&](int r1, int r2, int r3, int a, int b, int c) -> int {
    Corridor loop;
    appendLeafPath(s, leaves[a], pieceOn(recs[r1], a), pieceOn(recs[r2], a), loop);
    appendLeafPath(s, leaves[c], pieceOn(recs[r2], c), pieceOn(recs[r3], c), loop);
    appendLeafPath(s, leaves[b], pieceOn(recs[r3], b), pieceOn(recs[r1], b), loop);
    reduceCorridor(s, loop);
    if (loop.empty()) return 1;
    try {
      tightenCorridor(s, loop, -1.0);
      return 0;
    } catch (const FlatcurError& e) {
      return e.kind() == ErrorKind::NullHomotopic ? 1 : -1;
    }
  };

  std::map<std::tuple<int, int, int>, bool> verified;
  long long candidates = 0;
  for (int r1 = 0; r1 < static_cast<int>(recs.size()) && !st.truncated; ++r1) {
    const int a = recs[r1].first, b = recs[r1].second;
    for (int r2 : byFirst[a]) {
      const int c = recs[r2].second;
      if (c == b) continue;
      const auto kit = keyed.find({b, c});
      if (kit == keyed.end()) continue;
      std::vector<double> target = Q(a, recs[r1].piece1);
      const auto& qa2 = Q(a, recs[r2].piece1);
      const auto& qc2 = Q(c, recs[r2].piece2);
      const auto& qb1 = Q(b, recs[r1].piece2);
      for (int d = 0; d < hom.dim; ++d) target[d] += qc2[d] - qa2[d] - qb1[d];
      const auto range = kit->second.equal_range(hashVec(target));
      for (auto it = range.first; it != range.second; ++it) {
        const int r3 = it->second;
        if (!sameVec(key3[r3], target)) continue;
        if (++candidates > spec.maxCandidates) {
          st.truncated = true;
          break;
        }
        const int v = nullLoop(r1, r2, r3, a, b, c);
        if (v < 0) ++st.undetermined;
        if (v != 1) continue;
        verified[{r1, r2, r3}] = true;
        ++st.triples;
        st.maxOrder = std::max(st.maxOrder, 3);
        const double slack = recs[r2].angle - recs[r1].angle - recs[r3].angle;
        st.worstSlack = std::min(st.worstSlack, slack);
        if (slack < -epsAng) ++st.violations;
      }
      if (st.truncated) break;
    }
  }
  st.candidates = std::min(candidates, spec.maxCandidates);
  if (!std::isfinite(st.worstSlack)) st.worstSlack = 0.0;

  // longer positive crossings: every triple through the first leaf must be verified
  std::vector<int> leafs, firstRec;  // firstRec[i]: record of (leafs[0], leafs[i])
  std::function<void(int)> extend = [&](int order) {
    st.maxOrder = std::max(st.maxOrder, order);
    if (order >= spec.maxOrder) return;
    const int a = leafs[0];
    for (int rd : byFirst[a]) {
      const int d = recs[rd].second;
      if (std::find(leafs.begin(), leafs.end(), d) != leafs.end()) continue;
      bool ok = true;
      for (int i = 1; i < order && ok; ++i) {
        const auto pit = byPair.find({leafs[i], d});
        bool any = false;
        if (pit != byPair.end())
          for (int rid : pit->second)
            if (verified.count({firstRec[i], rd, rid})) any = true;
        ok = any;
      }
      if (!ok) continue;
      leafs.push_back(d);
      firstRec.push_back(rd);
      extend(order + 1);
      leafs.pop_back();
      firstRec.pop_back();
    }
  };
  for (const auto& [key, _] : verified) {
    const auto [r1, r2, r3] = key;
    leafs = {recs[r1].first, recs[r1].second, recs[r2].second};
    firstRec = {-1, r1, r2};
    extend(3);
  }
  st.pass = st.violations == 0;
  return st;
}

// ---------------------------------------------------------------------------
// Small boxes

std::vector<CurvePiece> curvePieces(const SurfaceComplex& s, const GeodesicRep& rep) {
  const int m = static_cast<int>(rep.corridor.size());
  if (m == 0 || static_cast<int>(rep.portalParams.size()) != m)
    throw FlatcurError(ErrorKind::Argument, "representative has no corridor");
  const Strip st = developCorridor(s, rep.corridor, 1);
  std::vector<Vec2> X(m + 1);
  for (int j = 0; j < m; ++j) X[j + 1] = st.right[j] + (st.left[j] - st.right[j]) * rep.portalParams[j];
  X[0] = st.holonomy.inverse().apply(X[m]);
  const double tol = 10 * lenTol(s);
  std::vector<CurvePiece> out;
  for (int j = 0; j < m; ++j) {
    if (norm(X[j + 1] - X[j]) <= tol) continue;
    const Isometry inv = st.placement[j].inverse();
    out.push_back({st.tris[j], inv.apply(X[j]), inv.apply(X[j + 1]), 0, 0.0});
  }
  auto arclengths = [&](const std::vector<int>& startOf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (startOf[i]) {
        out[i].s0 = 0.0;
        continue;
      }
      const CurvePiece& prev = out[(i + out.size() - 1) % out.size()];
      out[i].s0 = prev.s0 + norm(prev.to - prev.from);
    }
  };
  if (out.empty()) return out;
  if (rep.regular) {
    std::vector<int> startOf(out.size(), 0);
    startOf[0] = 1;
    arclengths(startOf);
    return out;
  }
  // legs start at cone points
  std::vector<int> starts;
  for (int i = 0; i < static_cast<int>(out.size()); ++i) {
    const Triangle& t = s.triangles[out[i].tri];
    for (int c = 0; c < 3; ++c)
      if (s.isCone(t.vertexClass[c]) && norm(t.p[c] - out[i].from) <= tol) {
        starts.push_back(i);
        break;
      }
  }
  if (starts.empty()) return out;
  const int P = static_cast<int>(out.size());
  std::vector<int> groupOf(P, 0);
  for (int g = 0; g < static_cast<int>(starts.size()); ++g) {
    const int end = g + 1 < static_cast<int>(starts.size()) ? starts[g + 1] : starts[0] + P;
    for (int i = starts[g]; i < end; ++i) groupOf[i % P] = g;
  }
  // number the groups like the legs of the representative
  const std::vector<Leg> legs = rep.legs();
  std::vector<int> name(starts.size(), -1);
  for (std::size_t g = 0; g < starts.size(); ++g) {
    const CurvePiece& p = out[starts[g]];
    for (std::size_t i = 0; i < legs.size(); ++i)
      if (legs[i].startTriangle == p.tri &&
          std::abs(wrap(arg(p.to - p.from) - legs[i].direction + kPi) - kPi) <= 1e-7)
        name[g] = static_cast<int>(i);
  }
  const bool named = legs.size() == starts.size() &&
                     std::none_of(name.begin(), name.end(), [](int x) { return x < 0; });
  for (int i = 0; i < P; ++i) out[i].leg = named ? name[groupOf[i]] : groupOf[i];
  std::vector<int> startOf(P, 0);
  for (int i : starts) startOf[i] = 1;
  // arclengths run forward from each start, so process in cyclic order from the first start
  std::vector<CurvePiece> rotated(out.begin() + starts[0], out.end());
  rotated.insert(rotated.end(), out.begin(), out.begin() + starts[0]);
  std::vector<int> rstart(startOf.begin() + starts[0], startOf.end());
  rstart.insert(rstart.end(), startOf.begin(), startOf.begin() + starts[0]);
  for (std::size_t i = 0; i < rotated.size(); ++i)
    rotated[i].s0 = rstart[i] ? 0.0 : rotated[i - 1].s0 + norm(rotated[i - 1].to - rotated[i - 1].from);
  for (int i = 0; i < P; ++i) out[(i + starts[0]) % P].s0 = rotated[i].s0;
  return out;
}

namespace {

int countCrossings(const SurfaceComplex& s, const LeafTrace& leaf, const std::vector<CurvePiece>& pieces, int leg,
                   double legFrom, double legTo) {
  const double tol = 10 * lenTol(s);
  std::vector<double> hits;
  for (const LeafPiece& P : leaf.pieces) {
    const double l1 = P.s1 - P.s0;
    for (const CurvePiece& C : pieces) {
      if (C.tri != P.tri || (leg >= 0 && C.leg != leg)) continue;
      const Vec2 cd = C.to - C.from;
      const double l2 = norm(cd);
      const Vec2 d2 = cd / l2;
      const double denom = cross(P.dir, d2);
      if (std::abs(denom) <= 1e-12) continue;
      const Vec2 ca = C.from - P.from;
      const double t1 = cross(ca, d2) / denom;
      const double t2 = cross(ca, P.dir) / denom;
      if (t1 < -tol || t1 > l1 + tol || t2 < -tol || t2 > l2 + tol) continue;
      if (nearVertex(s.triangles[P.tri], P.from + P.dir * t1, tol)) continue;
      const double along = C.s0 + t2;
      if (along < legFrom - tol || along > legTo + tol) continue;
      hits.push_back(P.s0 + t1);
    }
  }
  std::sort(hits.begin(), hits.end());
  int count = 0;
  for (std::size_t i = 0; i < hits.size(); ++i)
    if (i == 0 || hits[i] - hits[i - 1] > tol) ++count;
  return count;
}

}  // namespace

SmallBoxEstimate empiricalSmallBoxMeasure(const SurfaceComplex& s, double theta, const Transversal& I, int m,
                                          const GeodesicRep& target) {
  if (m < 1) throw FlatcurError(ErrorKind::Argument, "sample count must be positive");
  if (!(I.length > 0)) throw FlatcurError(ErrorKind::Argument, "transversal length must be positive");
  const Vec2 along = unit(I.along);
  if (!inWeb(arg(along) - 0.5 * kPi, s.n, theta, s.eps.ang))
    throw FlatcurError(ErrorKind::Argument, "transversal is not orthogonal to a web direction");
  const std::vector<CurvePiece> pieces = curvePieces(s, target);
  const StartState base = normalizeStart(s, I.base.tri, I.base.p, along, -1);
  SmallBoxEstimate est;
  est.m = m;
  est.length = I.length;
  for (int i = 0; i < m; ++i) {
    const double t = (i + 0.5) * I.length / m;
    WalkConfig cfg;
    cfg.n = s.n;
    cfg.base = arg(base.dir);
    cfg.maxLength = t;
    cfg.stopAtCone = true;
    const WalkOut w = walkLeaf(s, base, cfg);
    if (w.hitCone) throw FlatcurError(ErrorKind::Argument, "transversal runs into a cone point");
    const LeafStart ls{{w.tri, w.p}, rotate(w.dir, -0.5 * kPi), -1};
    const LeafTrace left = traceLeaf(s, ls, theta, Turning::Left, I.reach);
    double c = countCrossings(s, left, pieces, I.leg, I.legFrom, I.legTo);
    if (!left.events.empty()) {
      const LeafTrace right = traceLeaf(s, ls, theta, Turning::Right, I.reach);
      c = 0.5 * (c + countCrossings(s, right, pieces, I.leg, I.legFrom, I.legTo));
    }
    est.count += c;
  }
  est.estimate = I.length / m * est.count;
  return est;
}

SampledIntersection sampledIntersection(const SurfaceComplex& s, double theta, const GeodesicRep& target, int m,
                                        double length, std::uint64_t seed) {
  if (m < 1) throw FlatcurError(ErrorKind::Argument, "sample count must be positive");
  if (!(length > 0)) throw FlatcurError(ErrorKind::Argument, "leaf length must be positive");
  const std::vector<CurvePiece> pieces = curvePieces(s, target);
  std::vector<double> cum;
  double area = 0;
  for (const Triangle& t : s.triangles) {
    area += 0.5 * cross(t.p[1] - t.p[0], t.p[2] - t.p[0]);
    cum.push_back(area);
  }
  SampledIntersection out;
  out.m = m;
  out.length = length;
  out.area = area;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sq = 0;
  for (int i = 0; i < m; ++i) {
    const double a = u(rng) * area;
    double r1 = u(rng), r2 = u(rng);
    const int k = std::min(s.n - 1, static_cast<int>(u(rng) * s.n));
    const int tri = static_cast<int>(std::min<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), a) - cum.begin(), cum.size() - 1));
    if (r1 + r2 > 1) {
      r1 = 1 - r1;
      r2 = 1 - r2;
    }
    const Triangle& t = s.triangles[tri];
    const Vec2 p = t.p[0] + (t.p[1] - t.p[0]) * r1 + (t.p[2] - t.p[0]) * r2;
    const LeafStart ls{{tri, p}, polar(theta + kTwoPi * k / s.n), -1};
    // a leaf that closes up repeats; the start is uniform along it
    auto crossings = [&](Turning turn) {
      const LeafTrace t = traceLeaf(s, ls, theta, turn, length);
      const double c = countCrossings(s, t, pieces, -1, 0.0, std::numeric_limits<double>::infinity());
      return std::make_pair(t.termination == Termination::ClosedUp ? c * length / t.length : c, t.events.empty());
    };
    const auto [c, regular] = crossings(Turning::Left);
    const double x = regular ? c : 0.5 * (c + crossings(Turning::Right).first);
    out.count += x;
    sq += x * x;
  }
  const double scale = area * s.n / length;
  out.estimate = scale * out.count / m;
  if (m > 1) {
    const double mean = out.count / m;
    out.standardError = scale * std::sqrt(std::max(0.0, (sq - m * mean * mean) / (m - 1)) / m);
  }
  return out;
}

SurfacePoint walkRegular(const SurfaceComplex& s, SurfacePoint from, Vec2 dir, double length, Vec2* endDir) {
  const StartState st = normalizeStart(s, from.tri, from.p, dir, -1);
  WalkConfig cfg;
  cfg.n = s.n;
  cfg.base = arg(st.dir);
  cfg.maxLength = length;
  cfg.stopAtCone = true;
  const WalkOut w = walkLeaf(s, st, cfg);
  if (w.hitCone) throw FlatcurError(ErrorKind::Geometry, "straight walk runs into a cone point");
  if (endDir) *endDir = w.dir;
  return {w.tri, w.p};
}

BoxPlan smallBoxTransversals(const SurfaceComplex& s, double theta, const GeodesicRep& target, double margin,
                             double behind) {
  const std::vector<CurvePiece> pieces = curvePieces(s, target);
  BoxPlan plan;
  if (pieces.empty()) return plan;
  int legs = 0;
  for (const CurvePiece& p : pieces) legs = std::max(legs, p.leg + 1);
  const int P = static_cast<int>(pieces.size());
  const double maxPortion = 0.1 * s.diameter;
  for (int leg = 0; leg < legs; ++leg) {
    // first piece of the leg in travel order
    const bool closed = target.regular;
    int first = -1;
    double L = 0;
    for (int i = 0; i < P; ++i) {
      if (pieces[i].leg != leg) continue;
      L += norm(pieces[i].to - pieces[i].from);
      if (first >= 0 || closed) continue;
      const Triangle& t = s.triangles[pieces[i].tri];
      for (int c = 0; c < 3; ++c)
        if (s.isCone(t.vertexClass[c]) && norm(t.p[c] - pieces[i].from) <= 10 * lenTol(s)) first = i;
    }
    if (first < 0) first = 0;
    if (L <= 0) continue;
    const CurvePiece& c = pieces[first];
    const SurfacePoint start{c.tri, c.from};
    const Vec2 dir0 = unit(c.to - c.from);
    const double lead = closed ? 0.0 : std::min(1e-3 * L, 0.25 * norm(c.to - c.from));
    const double a0 = closed ? 0.0 : lead, a1 = closed ? L : L - lead;

    // box over the leg part [t0, t1] for web direction k; splits itself when a walk meets a cone point
    std::function<void(int, double, double, int)> box = [&](int k, double t0, double t1, int depth) {
      try {
        Vec2 dir = dir0;
        const SurfacePoint S = t0 > 0 ? walkRegular(s, start, dir0, t0, &dir) : start;
        const Vec2 J = dir * (t1 - t0);
        const double delta = behind * (t1 - t0);
        const Vec2 v = polar(theta + kTwoPi * k / s.n);
        const Vec2 a = perp(v);
        const double p = dot(J, a), q = dot(J, v);
        if (std::abs(p) <= 1e-12 * L) return;
        const double sinAbs = std::abs(p) / (t1 - t0);
        const double mu = margin * L + lead * sinAbs;
        double lo = std::min(0.0, p), hi = std::max(0.0, p);
        if (!closed && t0 <= a0) (p > 0 ? lo : hi) += (p > 0 ? -mu : mu);
        if (!closed && t1 >= a1) (p > 0 ? hi : lo) += (p > 0 ? mu : -mu);
        const double back = delta + std::max(0.0, -q);
        Vec2 d1;
        const SurfacePoint B1 = walkRegular(s, S, -v, back, &d1);
        const Vec2 av = rotate(d1, -0.5 * kPi);
        Vec2 d2 = av;
        SurfacePoint B2 = B1;
        if (lo < 0) B2 = walkRegular(s, B1, -av, -lo, &d2), d2 = -d2;
        else if (lo > 0) B2 = walkRegular(s, B1, av, lo, &d2);
        Transversal I;
        I.base = B2;
        I.along = d2;
        I.length = hi - lo;
        I.reach = std::abs(q) + 2 * delta;
        I.leg = leg;
        I.legFrom = t0 <= a0 ? 0.0 : t0;
        I.legTo = t1 >= a1 ? std::numeric_limits<double>::infinity() : t1;
        // the transversal itself must be regular
        walkRegular(s, I.base, I.along, I.length);
        double expected = std::abs(p);
        if (!closed && t0 <= a0) expected += lead * sinAbs;
        if (!closed && t1 >= a1) expected += lead * sinAbs;
        plan.transversals.push_back(I);
        plan.expected.push_back(expected);
      } catch (const FlatcurError&) {
        if (depth >= 8) throw;
        const double mid = 0.5 * (t0 + t1);
        box(k, t0, mid, depth + 1);
        box(k, mid, t1, depth + 1);
      }
    };
    const int N = std::max(1, static_cast<int>(std::ceil(L / maxPortion)));
    for (int k = 0; k < s.n; ++k)
      for (int i = 0; i < N; ++i) box(k, a0 + (a1 - a0) * i / N, a0 + (a1 - a0) * (i + 1) / N, 0);
  }
  return plan;
}

}  // namespace flatcur
