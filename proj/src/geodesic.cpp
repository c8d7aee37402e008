#include "flatcur/geodesic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "json.hpp"

namespace flatcur {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Curve files

SurfacePath parseCurve(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FlatcurError(ErrorKind::Syntax, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("waypoints") || !doc["waypoints"].is_array())
    throw FlatcurError(ErrorKind::Validation, "curve needs a waypoints array");
  SurfacePath path;
  path.closed = doc.value("closed", true);
  for (const auto& w : doc["waypoints"]) {
    if (!w.is_array() || w.size() != 3 || !w[0].is_number_integer() || !w[1].is_number() || !w[2].is_number())
      throw FlatcurError(ErrorKind::Validation, "waypoint must be [pid, x, y]");
    path.waypoints.push_back({w[0].get<int>(), {w[1].get<double>(), w[2].get<double>()}});
  }
  return path;
}

std::string serializeCurve(const SurfacePath& path) {
  json doc;
  doc["closed"] = path.closed;
  doc["waypoints"] = json::array();
  for (const auto& w : path.waypoints) doc["waypoints"].push_back(json::array({w.polygon, w.p.x, w.p.y}));
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Corridors

namespace {

Crossing reverseCrossing(const SurfaceComplex& s, Crossing c) {
  const Triangle& t = s.triangles[c.tri];
  return {t.neighbor[c.edge], t.neighborEdge[c.edge]};
}

// Appends the crossing that joins triangle `from` to `to` when both contain the
// point p (chart of their common polygon) on a shared diagonal.
void joinTriangles(const SurfaceComplex& s, int from, int to, Corridor& out) {
  if (from == to) return;
  const Triangle& t = s.triangles[from];
  for (int e = 0; e < 3; ++e)
    if (t.neighbor[e] == to && t.polygonEdge[e] < 0) {
      out.push_back({from, e});
      return;
    }
  throw FlatcurError(ErrorKind::Argument, "waypoint lies on a polygon vertex");
}

struct Segment {
  double length = 0.0;
  WalkResult walk;
};

std::vector<Waypoint> dedupWaypoints(const SurfacePath& path, double tol) {
  std::vector<Waypoint> w;
  for (const auto& p : path.waypoints)
    if (w.empty() || w.back().polygon != p.polygon || norm(w.back().p - p.p) > tol) w.push_back(p);
  while (w.size() > 1 && w.front().polygon == w.back().polygon && norm(w.front().p - w.back().p) <= tol) w.pop_back();
  return w;
}

struct PathCorridor {
  Corridor corridor;
  double length = 0.0;
};

PathCorridor buildPathCorridor(const SurfaceComplex& s, const SurfacePath& path) {
  if (!path.closed) throw FlatcurError(ErrorKind::Argument, "only closed curves can be tightened");
  const double tol = 1e-9 * std::max(1.0, s.diameter);
  const std::vector<Waypoint> w = dedupWaypoints(path, tol);
  if (w.size() < 2) throw FlatcurError(ErrorKind::NullHomotopic, "curve is a single point");
  for (const auto& p : w) (void)s.polygonIndex(p.polygon);

  PathCorridor out;
  int firstTri = -1, currentTri = -1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Waypoint a = w[i], b = w[(i + 1) % w.size()];
    const int P = s.polygonIndex(a.polygon), Q = s.polygonIndex(b.polygon);
    struct Candidate {
      Vec2 target;
      int edge;
    };
    std::vector<Candidate> cands;
    if (P == Q) cands.push_back({b.p, -1});
    for (int e = 0; e < static_cast<int>(s.partner[P].size()); ++e)
      if (s.partner[P][e].polygon == Q) cands.push_back({s.transition[P][e].isometry(s.n).apply(b.p), e});
    std::sort(cands.begin(), cands.end(),
              [&](const Candidate& x, const Candidate& y) { return norm(x.target - a.p) < norm(y.target - a.p); });
    bool done = false;
    for (const auto& c : cands) {
      const Vec2 d = c.target - a.p;
      const double len = norm(d);
      if (len <= tol) continue;
      int onEdge = -1;
      const int startTri = locateDirected(s, P, a.p, d, &onEdge);
      const WalkResult r = walkStraight(s, {startTri, a.p}, d / len, len, onEdge);
      if (r.hitVertex) continue;
      int polygonCrossings = 0;
      bool ok = true;
      for (const auto& x : r.crossings)
        if (s.triangles[x.tri].polygonEdge[x.edge] >= 0) {
          ++polygonCrossings;
          if (s.triangles[x.tri].polygonEdge[x.edge] != c.edge) ok = false;
        }
      if (!ok || polygonCrossings != (c.edge < 0 ? 0 : 1)) continue;
      if (s.triangles[r.end.tri].polygon != Q || norm(r.end.p - b.p) > 1e-7 * std::max(1.0, s.diameter)) continue;
      if (currentTri < 0) firstTri = startTri;
      else joinTriangles(s, currentTri, startTri, out.corridor);
      out.corridor.insert(out.corridor.end(), r.crossings.begin(), r.crossings.end());
      currentTri = r.end.tri;
      out.length += len;
      done = true;
      break;
    }
    if (!done)
      throw FlatcurError(ErrorKind::Argument, "waypoints " + std::to_string(i) + " and " +
                                                  std::to_string((i + 1) % w.size()) + " are not chart-connected");
  }
  joinTriangles(s, currentTri, firstTri, out.corridor);
  return out;
}

}  // namespace

Corridor corridorFromPath(const SurfaceComplex& s, const SurfacePath& path) {
  Corridor c = buildPathCorridor(s, path).corridor;
  reduceCorridor(s, c);
  return c;
}

double pathLength(const SurfaceComplex& s, const SurfacePath& path) { return buildPathCorridor(s, path).length; }

void reduceCorridor(const SurfaceComplex& s, Corridor& c) {
  Corridor out;
  for (const auto& x : c) {
    if (!out.empty() && reverseCrossing(s, out.back()) == x) out.pop_back();
    else out.push_back(x);
  }
  std::size_t lo = 0;
  while (out.size() - lo >= 2 && reverseCrossing(s, out.back()) == out[lo]) {
    out.pop_back();
    ++lo;
  }
  c.assign(out.begin() + static_cast<std::ptrdiff_t>(lo), out.end());
}

Strip developCorridor(const SurfaceComplex& s, const Corridor& c, int periods) {
  const int m = static_cast<int>(c.size());
  if (m == 0) throw FlatcurError(ErrorKind::NullHomotopic, "empty corridor");
  Strip st;
  st.period = m;
  const int count = m * periods + 1;
  st.tris.resize(count + 1);
  st.placement.resize(count + 1);
  st.left.resize(count);
  st.right.resize(count);
  st.leftClass.resize(count);
  st.rightClass.resize(count);
  st.leftRun.resize(count);
  st.rightRun.resize(count);
  st.tris[0] = c[0].tri;
  st.placement[0] = Isometry::identity();
  for (int j = 0; j < count; ++j) {
    const Crossing x = c[j % m];
    if (x.tri != st.tris[j]) throw FlatcurError(ErrorKind::Argument, "corridor crossings are not chained");
    const Triangle& t = s.triangles[x.tri];
    const int e = x.edge;
    bool sharedLeft = false, sharedRight = false;
    if (j > 0) {
      const int g = s.triangles[st.tris[j - 1]].neighborEdge[c[(j - 1) % m].edge];
      sharedLeft = (g == (e + 1) % 3);
      sharedRight = ((g + 1) % 3 == e);
    }
    st.left[j] = sharedLeft ? st.left[j - 1] : st.placement[j].apply(t.p[(e + 1) % 3]);
    st.right[j] = sharedRight ? st.right[j - 1] : st.placement[j].apply(t.p[e]);
    st.leftRun[j] = sharedLeft ? st.leftRun[j - 1] : j;
    st.rightRun[j] = sharedRight ? st.rightRun[j - 1] : j;
    st.leftClass[j] = t.vertexClass[(e + 1) % 3];
    st.rightClass[j] = t.vertexClass[e];
    st.tris[j + 1] = t.neighbor[e];
    st.placement[j + 1] = st.placement[j] * t.fromNeighbor[e];
  }
  if (st.tris[m] != st.tris[0]) throw FlatcurError(ErrorKind::Argument, "corridor does not close up");
  st.holonomy = st.placement[m];
  return st;
}

// ---------------------------------------------------------------------------
// Funnel and tightening

namespace {

struct Touch {
  int runFirst = 0;
  int runLast = 0;
  bool left = false;
  int vclass = -1;
  Vec2 pos{};
};

int runEnd(const std::vector<int>& run, int j) {
  int r = j;
  while (r + 1 < static_cast<int>(run.size()) && run[r + 1] == run[j]) ++r;
  return r;
}

Touch touchAt(const Strip& st, int j, bool left) {
  Touch t;
  t.left = left;
  t.runFirst = left ? st.leftRun[j] : st.rightRun[j];
  t.runLast = runEnd(left ? st.leftRun : st.rightRun, j);
  t.vclass = left ? st.leftClass[j] : st.rightClass[j];
  t.pos = left ? st.left[j] : st.right[j];
  return t;
}

// Shortest path from S (on portal 0) to E (on portal `last`) through portals 1..last-1.
std::vector<Touch> funnel(const Strip& st, Vec2 S, Vec2 E, int last, double epsLen, double epsArea) {
  std::vector<Touch> out;
  auto cr = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
  auto same = [&](Vec2 a, Vec2 b) { return norm(a - b) <= epsLen; };
  Vec2 apex = S, lp = S, rp = S;
  int li = 0, ri = 0;
  int i = 1;
  long guard = 0;
  while (i <= last) {
    if (++guard > 100L * (last + 10) * (last + 10)) throw FlatcurError(ErrorKind::Geometry, "funnel did not terminate");
    const bool end = (i == last);
    const Vec2 L = end ? E : st.left[i];
    const Vec2 R = end ? E : st.right[i];
    if (cr(apex, rp, R) >= -epsArea) {
      if (same(apex, rp) || same(apex, lp) || cr(apex, lp, R) < -epsArea) {
        rp = R;
        ri = i;
      } else {
        out.push_back(touchAt(st, li, true));
        apex = lp;
        rp = lp;
        ri = li;
        i = li + 1;
        continue;
      }
    }
    if (cr(apex, lp, L) <= epsArea) {
      if (same(apex, lp) || same(apex, rp) || cr(apex, rp, L) > epsArea) {
        lp = L;
        li = i;
      } else {
        out.push_back(touchAt(st, ri, false));
        apex = rp;
        lp = rp;
        li = ri;
        i = ri + 1;
        continue;
      }
    }
    ++i;
  }
  return out;
}

struct TouchAngles {
  double corridor = 0.0;
  double outside = 0.0;
  double cone = 0.0;
};

// Corner index of the touched vertex in strip triangle j (runFirst <= j <= runLast + 1).
int cornerInStrip(const SurfaceComplex& s, const Strip& st, const Corridor& c, int j, const Touch& t) {
  const int m = st.period;
  if (j <= t.runLast) {
    const int e = c[j % m].edge;
    return t.left ? (e + 1) % 3 : e;
  }
  const int g = s.triangles[st.tris[j - 1]].neighborEdge[c[(j - 1) % m].edge];
  return t.left ? g : (g + 1) % 3;
}

TouchAngles touchAngles(const SurfaceComplex& s, const Strip& st, const Corridor& c, const Touch& t, Vec2 prev,
                        Vec2 next) {
  const int m = st.period;
  double sum = 0;
  for (int j = t.runFirst; j <= t.runLast + 1; ++j) sum += s.triangles[st.tris[j]].cornerAngle[cornerInStrip(s, st, c, j, t)];
  const Triangle& tin = s.triangles[st.tris[t.runFirst]];
  const Vec2 win = st.placement[t.runFirst].apply(tin.p[(c[t.runFirst % m].edge + 2) % 3]);
  const int g = s.triangles[st.tris[t.runLast]].neighborEdge[c[t.runLast % m].edge];
  const Triangle& tout = s.triangles[st.tris[t.runLast + 1]];
  const Vec2 wout = st.placement[t.runLast + 1].apply(tout.p[(g + 2) % 3]);
  auto angleOrZero = [&](Vec2 a, Vec2 b) {
    if (norm(a) <= s.eps.len || norm(b) <= s.eps.len) return 0.0;
    return angleBetween(a, b);
  };
  TouchAngles out;
  out.cone = s.vertexClasses[t.vclass].angle;
  out.corridor = sum - angleOrZero(prev - t.pos, win - t.pos) - angleOrZero(next - t.pos, wout - t.pos);
  out.outside = out.cone - out.corridor;
  return out;
}

struct Analysis {
  Strip strip;
  std::vector<Touch> path;  // S, touches..., E
  int blockBegin = 0;       // index into path of the first touch in copy 2
  int blockSize = 0;
  bool straight = false;
  double length = 0.0;
  std::vector<TouchAngles> angles;  // for the block
};

Analysis analyze(const SurfaceComplex& s, const Corridor& c) {
  const int m = static_cast<int>(c.size());
  const double epsLen = s.eps.len;
  const double epsArea = 1e-13 * std::max(1.0, s.diameter * s.diameter);
  for (int K = 6; K <= 48; K *= 2) {
    Analysis a;
    a.strip = developCorridor(s, c, K);
    const Strip& st = a.strip;
    const Vec2 S = (st.left[0] + st.right[0]) * 0.5;
    const Vec2 E = (st.left[K * m] + st.right[K * m]) * 0.5;
    const std::vector<Touch> raw = funnel(st, S, E, K * m, epsLen, epsArea);
    // Touches the path runs straight through are dropped; they are numerically unstable.
    std::vector<Touch> touches;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      const Vec2 prev = touches.empty() ? S : touches.back().pos;
      const Vec2 next = k + 1 < raw.size() ? raw[k + 1].pos : E;
      const Vec2 d1 = raw[k].pos - prev, d2 = next - raw[k].pos;
      if (dot(d1, d2) > 0 && std::abs(cross(d1, d2)) <= 1e-10 * norm(d1) * norm(d2) &&
          std::abs(touchAngles(s, st, c, raw[k], prev, next).corridor - kPi) <= 1e-9)
        continue;
      touches.push_back(raw[k]);
    }
    a.path.push_back({0, 0, false, -1, S});
    a.path.insert(a.path.end(), touches.begin(), touches.end());
    a.path.push_back({K * m, K * m, false, -1, E});

    for (const auto& t : touches)
      if (t.runLast - t.runFirst >= m)
        throw FlatcurError(ErrorKind::NullHomotopic, "curve is null-homotopic (winds around a single vertex)");

    int begin = -1, count = 0;
    for (int k = 1; k + 1 < static_cast<int>(a.path.size()); ++k)
      if (a.path[k].runFirst >= 2 * m && a.path[k].runFirst < 3 * m) {
        if (begin < 0) begin = k;
        ++count;
      }
    if (count == 0) {
      bool middle = false;
      for (const auto& t : touches)
        if (t.runLast >= 2 * m && t.runFirst < 4 * m) middle = true;
      if (middle || std::abs(std::remainder(st.holonomy.angle, kTwoPi)) > 1e-9) continue;
      const Vec2 u = perp(unit(st.holonomy.translation));
      double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
      for (int j = 2 * m; j < 3 * m; ++j) {
        lo = std::max(lo, dot(st.right[j], u));
        hi = std::min(hi, dot(st.left[j], u));
      }
      if (hi < lo - epsLen) continue;
      a.straight = true;
      a.blockBegin = -1;
      a.length = norm(st.holonomy.translation);
      return a;
    }
    bool periodic = begin + 2 * count + 1 < static_cast<int>(a.path.size());
    for (int k = 0; periodic && k < 2 * count; ++k) {
      const Touch& x = a.path[begin + k];
      const Touch& y = a.path[begin + k + count];
      if (y.runFirst != x.runFirst + m || y.left != x.left || y.runLast != x.runLast + m) periodic = false;
    }
    if (!periodic) continue;
    a.blockBegin = begin;
    a.blockSize = count;
    for (int k = begin; k < begin + count; ++k) {
      a.length += norm(a.path[k + 1].pos - a.path[k].pos);
      a.angles.push_back(touchAngles(s, st, c, a.path[k], a.path[k - 1].pos, a.path[k + 1].pos));
    }
    return a;
  }
  throw FlatcurError(ErrorKind::Geometry, "no periodic shortest path found in the corridor");
}

// Replaces the fan of crossings around a touched vertex by the other way around it.
Corridor flipAt(const SurfaceComplex& s, const Strip& st, const Corridor& c, const Touch& t) {
  const int m = static_cast<int>(c.size());
  const int a = t.runFirst, b = t.runLast;
  const int startCorner = cornerInStrip(s, st, c, a, t);
  const int endCorner = cornerInStrip(s, st, c, b + 1, t);
  const int endTri = st.tris[b + 1];
  Corridor detour;
  int tri = st.tris[a], corner = startCorner;
  for (int guard = 0; !(tri == endTri && corner == endCorner); ++guard) {
    if (guard > 4 * static_cast<int>(s.triangles.size())) throw FlatcurError(ErrorKind::Geometry, "flip did not close");
    if (t.left) {
      detour.push_back({tri, corner});
      std::tie(tri, corner) = s.nextCornerCW(tri, corner);
    } else {
      detour.push_back({tri, (corner + 2) % 3});
      std::tie(tri, corner) = s.nextCornerCCW(tri, corner);
    }
  }
  Corridor out = detour;
  for (int j = b + 1; j < a + m; ++j) out.push_back(c[j % m]);
  return out;
}

double portalParam(const Strip& st, int j, const std::vector<Touch>& path) {
  for (std::size_t k = 1; k + 1 < path.size(); ++k)
    if (path[k].runFirst <= j && j <= path[k].runLast) return path[k].left ? 1.0 : 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const Touch& A = path[k];
    const Touch& B = path[k + 1];
    if (A.runLast < j && j < B.runFirst) {
      const Vec2 L = st.left[j], R = st.right[j];
      const Vec2 d = B.pos - A.pos;
      const double den = cross(L - R, d);
      if (std::abs(den) < 1e-300) return 0.5;
      return std::clamp(cross(A.pos - R, d) / den, 0.0, 1.0);
    }
  }
  return 0.5;
}

}  // namespace

GeodesicRep tightenCorridor(const SurfaceComplex& s, Corridor corridor, double initialLength, TightenOptions opt) {
  reduceCorridor(s, corridor);
  Provenance prov;
  const double flipTol = 1e-11;
  for (int sweep = 1; sweep <= opt.maxSweeps; ++sweep) {
    if (corridor.empty()) throw FlatcurError(ErrorKind::NullHomotopic, "curve is null-homotopic");
    const Analysis a = analyze(s, corridor);
    if (sweep == 1) {
      prov.initialLength = initialLength >= 0 ? initialLength : a.length;
      if (opt.tol < 0) opt.tol = 1e-10 * prov.initialLength;
    }
    prov.lengthHistory.push_back(a.length);
    prov.iterations = sweep;
    int worst = -1;
    double worstOutside = kPi - flipTol;
    for (int k = 0; k < a.blockSize; ++k)
      if (a.angles[k].outside < worstOutside) {
        worstOutside = a.angles[k].outside;
        worst = k;
      }
    if (worst >= 0) {
      corridor = flipAt(s, a.strip, corridor, a.path[a.blockBegin + worst]);
      reduceCorridor(s, corridor);
      ++prov.flips;
      continue;
    }

    // Converged: assemble the representative.
    const int m = static_cast<int>(corridor.size());
    const Strip& st = a.strip;
    GeodesicRep rep;
    rep.corridor = corridor;
    rep.holonomy = st.holonomy;
    rep.portalParams.resize(m);
    if (a.straight) {
      // Centre of the band of parallel closed geodesics in this corridor.
      const Vec2 d = unit(st.holonomy.translation);
      const Vec2 u = perp(d);
      double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
      for (int j = 2 * m; j < 3 * m; ++j) {
        lo = std::max(lo, dot(st.right[j], u));
        hi = std::min(hi, dot(st.left[j], u));
      }
      const double c = 0.5 * (lo + hi);
      for (int j = 0; j < m; ++j) {
        const Vec2 L = st.left[2 * m + j], R = st.right[2 * m + j];
        rep.portalParams[j] = std::clamp((c - dot(R, u)) / dot(L - R, u), 0.0, 1.0);
      }
    } else {
      for (int j = 0; j < m; ++j) rep.portalParams[j] = portalParam(st, 2 * m + j, a.path);
    }
    for (int j = 0; j < m; ++j) {
      const double len = norm(st.left[2 * m + j] - st.right[2 * m + j]);
      if (rep.portalParams[j] * len <= s.eps.len) rep.portalParams[j] = 0.0;
      if ((1.0 - rep.portalParams[j]) * len <= s.eps.len) rep.portalParams[j] = 1.0;
    }
    // Every vertex the path runs through, over copies 1..3.
    std::vector<Touch> hits;
    for (int j = m; j < 4 * m; ++j) {
      const double lam = rep.portalParams[j % m];
      if (lam != 0.0 && lam != 1.0) continue;
      const Touch t = touchAt(st, j, lam == 1.0);
      if (!hits.empty() && hits.back().left == t.left && hits.back().runFirst == t.runFirst) continue;
      hits.push_back(t);
    }
    const Isometry toFrame = st.placement[2 * m].inverse();
    std::vector<std::size_t> block;
    for (std::size_t k = 0; k < hits.size(); ++k)
      if (hits[k].runFirst >= 2 * m && hits[k].runFirst < 3 * m && k > 0 && k + 1 < hits.size()) block.push_back(k);
    std::vector<std::size_t> cones;
    for (std::size_t k : block)
      if (s.isCone(hits[k].vclass)) cones.push_back(k);
    for (std::size_t q = 0; q < cones.size(); ++q) {
      const Touch& t = hits[cones[q]];
      const TouchAngles ang = touchAngles(s, st, corridor, t, hits[cones[q] - 1].pos, hits[cones[q] + 1].pos);
      Pivot p;
      p.vertexClass = t.vclass;
      p.conePoint = s.conePointOfClass(t.vclass);
      p.onLeft = t.left;
      p.leftAngle = t.left ? ang.outside : ang.corridor;
      p.rightAngle = t.left ? ang.corridor : ang.outside;
      p.position = toFrame.apply(t.pos);
      p.firstPortal = t.runFirst - 2 * m;
      p.lastPortal = t.runLast - 2 * m;
      rep.chain.pivots.push_back(p);
      // The next cone hit, possibly in the following copy.
      Vec2 to{};
      if (q + 1 < cones.size()) {
        to = hits[cones[q + 1]].pos;
      } else {
        const Touch& first = hits[cones[0]];
        const int j = first.runFirst + m;
        to = first.left ? st.left[j] : st.right[j];
      }
      Leg leg;
      leg.startCone = p.conePoint;
      leg.length = norm(to - t.pos);
      leg.startTriangle = st.tris[t.runLast + 1];
      leg.direction = arg(st.placement[t.runLast + 1].inverse().applyLinear(to - t.pos));
      leg.from = p.position;
      leg.to = toFrame.apply(to);
      rep.chain.legs.push_back(leg);
    }
    if (rep.chain.pivots.empty()) {
      if (std::abs(std::remainder(st.holonomy.angle, kTwoPi)) > 1e-9)
        throw FlatcurError(ErrorKind::Geometry, "regular closed geodesic with rotational holonomy");
      rep.regular = true;
      const Vec2 X = st.right[2 * m] + (st.left[2 * m] - st.right[2 * m]) * rep.portalParams[0];
      const Isometry toLocal = st.placement[2 * m].inverse();
      rep.closed.triangle = st.tris[2 * m];
      rep.closed.polygon = s.spec.polygons[s.triangles[st.tris[2 * m]].polygon].id;
      rep.closed.base = toLocal.apply(X);
      rep.closed.direction = arg(toLocal.applyLinear(st.holonomy.translation));
      rep.closed.length = norm(st.holonomy.translation);
      rep.closed.cylinder = true;
    }
    const double finalLength = rep.regular ? rep.closed.length : a.length;
    prov.finalDecrement = prov.lengthHistory.size() > 1
                              ? prov.lengthHistory[prov.lengthHistory.size() - 2] - finalLength
                              : prov.initialLength - finalLength;
    rep.provenance = prov;
    return rep;
  }
  throw FlatcurError(ErrorKind::IterationCap,
                     "iteration cap exceeded; residual length decrease " +
                         std::to_string(prov.lengthHistory.size() > 1
                                            ? prov.lengthHistory[prov.lengthHistory.size() - 2] - prov.lengthHistory.back()
                                            : 0.0));
}

GeodesicRep tightenClosed(const SurfaceComplex& s, const SurfacePath& path, TightenOptions opt) {
  const PathCorridor pc = buildPathCorridor(s, path);
  return tightenCorridor(s, pc.corridor, pc.length, opt);
}

// ---------------------------------------------------------------------------
// Representatives

std::vector<Leg> GeodesicRep::legs() const {
  if (!regular) return chain.legs;
  Leg l;
  l.direction = closed.direction;
  l.length = closed.length;
  l.startTriangle = closed.triangle;
  l.from = closed.base;
  l.to = closed.base + polar(closed.direction) * closed.length;
  return {l};
}

GeodesicReport verifyGeodesic(const SurfaceComplex& s, const GeodesicRep& rep, double epsAng) {
  GeodesicReport r;
  for (std::size_t i = 0; i < rep.chain.pivots.size(); ++i) {
    const Pivot& p = rep.chain.pivots[i];
    PivotCheck c{p, true};
    const double cone = s.vertexClasses[p.vertexClass].angle;
    if (p.leftAngle < kPi - epsAng || p.rightAngle < kPi - epsAng) c.pass = false;
    if (std::abs(p.leftAngle + p.rightAngle - cone) > epsAng) c.pass = false;
    if (!c.pass) {
      r.pass = false;
      r.problems.push_back("pivot " + std::to_string(i) + " has a side angle below pi");
    }
    r.pivots.push_back(c);
  }
  const int m = static_cast<int>(rep.corridor.size());
  if (m > 0 && static_cast<int>(rep.portalParams.size()) == m) {
    const Strip st = developCorridor(s, rep.corridor, 1);
    for (int j = 0; j < m; ++j) {
      const double lam = rep.portalParams[j];
      bool left;
      if (lam <= 1e-12) left = false;
      else if (lam >= 1 - 1e-12) left = true;
      else continue;
      const int cls = left ? st.leftClass[j] : st.rightClass[j];
      if (!s.isCone(cls)) continue;
      bool atPivot = false;
      for (const Pivot& p : rep.chain.pivots) {
        const int off = ((j - p.firstPortal) % m + m) % m;
        if (p.onLeft == left && off <= p.lastPortal - p.firstPortal) atPivot = true;
      }
      if (!atPivot) {
        r.pass = false;
        r.problems.push_back("leg passes through a cone point at portal " + std::to_string(j));
      }
    }
  }
  return r;
}

double cat0Length(const GeodesicRep& rep) {
  double sum = 0;
  for (const Leg& l : rep.legs()) sum += l.length;
  return sum;
}

double finslerLength(const GeodesicRep& rep, const PolygonalNorm& q) {
  double sum = 0;
  for (const Leg& l : rep.legs()) sum += l.length * evalNorm(q, polar(l.direction));
  return sum;
}

double thetaLength(const GeodesicRep& rep, int n, double theta) {
  double sum = 0;
  for (const Leg& l : rep.legs()) sum += webNorm(n, theta, polar(l.direction) * l.length);
  return sum;
}

double finslerLength(const std::vector<Vec2>& polyline, const PolygonalNorm& q) {
  double sum = 0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) sum += evalNorm(q, polyline[i + 1] - polyline[i]);
  return sum;
}

PerturbedPath randomHomotopicPerturbation(const SurfaceComplex& s, const GeodesicRep& rep, double magnitude,
                                          std::uint64_t seed) {
  const int m = static_cast<int>(rep.corridor.size());
  if (m == 0 || static_cast<int>(rep.portalParams.size()) != m)
    throw FlatcurError(ErrorKind::Argument, "representative has no corridor");
  const Strip st = developCorridor(s, rep.corridor, 3);
  const Isometry H = st.holonomy;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double tol = 1e-12 * std::max(1.0, s.diameter);

  enum class Kind { Interior, Diagonal, Glued, Vertex };
  struct Point {
    Vec2 x;
    int in;   // strip triangle holding the incoming segment
    int out;  // strip triangle holding the outgoing segment
    Kind kind;
  };
  auto portalKind = [&](int j, double lam) {
    if (lam <= 1e-12 || lam >= 1.0 - 1e-12) return Kind::Vertex;
    const Crossing c = rep.corridor[j % m];
    return s.triangles[c.tri].polygonEdge[c.edge] >= 0 ? Kind::Glued : Kind::Diagonal;
  };

  // one period of random choices, repeated through the holonomy
  std::vector<double> lams(m);
  for (int j = 0; j < m; ++j) {
    const double w = norm(st.left[j] - st.right[j]);
    lams[j] = std::clamp(rep.portalParams[j] + magnitude * u(rng) / w, 0.0, 1.0);
  }
  std::vector<Vec2> noise(m);
  for (auto& v : noise) v = Vec2{u(rng), u(rng)};

  std::vector<Vec2> portal(3 * m + 1);
  for (int j = 0; j <= 3 * m; ++j) portal[j] = st.right[j] + (st.left[j] - st.right[j]) * lams[j % m];
  std::vector<Point> pts{{portal[0], 0, 1, portalKind(0, lams[0])}};
  for (int j = 1; j <= 3 * m; ++j) {
    const Triangle& t = s.triangles[st.tris[j]];
    std::array<Vec2, 3> v;
    for (int i = 0; i < 3; ++i) v[i] = st.placement[j].apply(t.p[i]);
    double mag = magnitude;
    for (int attempt = 0; attempt < 4; ++attempt, mag *= 0.5) {
      const Vec2 q = (portal[j - 1] + portal[j]) * 0.5 + st.placement[j].applyLinear(noise[j % m]) * mag;
      bool inside = true;
      for (int i = 0; i < 3; ++i)
        if (cross(unit(v[(i + 1) % 3] - v[i]), q - v[i]) <= tol) inside = false;
      if (inside) {
        pts.push_back({q, j, j, Kind::Interior});
        break;
      }
    }
    pts.push_back({portal[j], j, j + 1, portalKind(j, lams[j % m])});
  }

  std::vector<Point> dedup;
  for (const auto& p : pts) {
    if (!dedup.empty() && norm(dedup.back().x - p.x) <= tol) {
      Point& b = dedup.back();
      if (b.kind != Kind::Interior && p.kind != Kind::Interior) b.kind = Kind::Vertex;
      if (b.kind == Kind::Interior) b.kind = p.kind;
      b.out = std::max(b.out, p.out);
      continue;
    }
    dedup.push_back(p);
  }

  PerturbedPath out;
  out.seed = seed;
  out.magnitude = magnitude;
  {
    std::size_t i = 0;
    while (i < dedup.size() && dedup[i].in <= m) out.developed.push_back(dedup[i++].x);
    const Vec2 close = H.apply(out.developed.front());
    if (norm(out.developed.back() - close) > tol) out.developed.push_back(close);
  }

  // one period of points, from dedup[i0] up to its copy dedup[i1]
  std::size_t i0 = 0;
  while (i0 < dedup.size() && dedup[i0].in < 1) ++i0;
  std::size_t i1 = i0 + 1;
  while (i1 < dedup.size() && !(dedup[i1].kind == dedup[i0].kind && dedup[i1].in == dedup[i0].in + m)) ++i1;
  if (i0 == 0 || i1 + 1 >= dedup.size()) throw FlatcurError(ErrorKind::Geometry, "perturbed path does not close");

  std::optional<Vec2> lastEmitted;
  auto emit = [&](int k, Vec2 x) {
    if (lastEmitted && norm(*lastEmitted - x) <= tol) return;
    lastEmitted = x;
    const int tri = st.tris[k];
    out.path.waypoints.push_back(
        {s.spec.polygons[s.triangles[tri].polygon].id, st.placement[k].inverse().apply(x)});
  };
  auto developed = [&](int k, int c) { return st.placement[k].apply(s.triangles[st.tris[k]].p[c]); };
  auto contains = [&](int k, Vec2 x) {
    for (int c = 0; c < 3; ++c) {
      const Vec2 a = developed(k, c), b = developed(k, (c + 1) % 3);
      if (cross(unit(b - a), x - a) < -1e-12 * std::max(1.0, s.diameter)) return false;
    }
    return true;
  };
  // Distance to the nearest cone vertex of the nearby strip triangles.
  const int last = static_cast<int>(st.tris.size()) - 1;
  auto rho = [&](int k, Vec2 x) {
    double r = std::numeric_limits<double>::infinity();
    for (int kk = std::max(0, k - 2); kk <= std::min(last, k + 2); ++kk)
      for (int c = 0; c < 3; ++c)
        if (s.isCone(s.triangles[st.tris[kk]].vertexClass[c])) r = std::min(r, norm(developed(kk, c) - x));
    return r;
  };
  // Consecutive waypoints stay much closer to each other than to any cone
  // point, so the shortest chart interpretation is the intended one.
  auto march = [&](const Point& a, const Point& b, double da, double db) {
    const Vec2 d = unit(b.x - a.x);
    const double len = norm(b.x - a.x);
    int k = a.out;
    auto place = [&](double t) {
      Vec2 x = a.x + d * t;
      for (int kk = k; kk <= b.in; ++kk)
        if (contains(kk, x)) {
          k = kk;
          break;
        }
      // off glued edges, where a waypoint has two charts
      const Triangle& tri = s.triangles[st.tris[k]];
      const double gap = 1e-8 * std::max(1.0, s.diameter);
      for (int c = 0; c < 3; ++c) {
        if (tri.polygonEdge[c] < 0) continue;
        const Vec2 e0 = developed(k, c), e = unit(developed(k, (c + 1) % 3) - e0);
        const double h = cross(e, x - e0);
        if (h < gap) x = x + perp(e) * (gap - h);
      }
      emit(k, x);
    };
    double t = da;
    if (a.kind == Kind::Interior || a.kind == Kind::Diagonal) emit(a.in, a.x);
    else if (a.kind == Kind::Vertex) place(t);
    const double stop = len - db;
    const double minStep = 1e-3 * std::min(std::max(da, db), len);
    for (;;) {
      const double step = std::max(0.3 * rho(k, a.x + d * t), minStep);
      if (t + step >= stop) break;
      t += step;
      place(t);
    }
    if (b.kind == Kind::Vertex) place(stop);
  };
  auto fan = [&](const Point& p, Vec2 prev, Vec2 next, double r) {
    const Vec2 din = unit(prev - p.x), dout = unit(next - p.x);
    std::vector<Vec2> bounds{din};
    for (int k = p.in; k < p.out; ++k) {
      const Vec2 other = norm(st.left[k] - p.x) < norm(st.right[k] - p.x) ? st.right[k] : st.left[k];
      bounds.push_back(unit(other - p.x));
    }
    bounds.push_back(dout);
    double base = arg(din);
    for (int k = p.in; k <= p.out; ++k) {
      const Vec2 u0 = bounds[k - p.in], u1 = bounds[k - p.in + 1];
      const double sweep = std::atan2(cross(u0, u1), dot(u0, u1));
      const int count = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) / (kPi / 9))));
      for (int i = 0; i < count; ++i) emit(k, p.x + polar(base + sweep * (i + 0.5) / count) * r);
      base += sweep;
    }
  };

  std::vector<double> radius(dedup.size(), 0.0);
  for (std::size_t i = i0; i <= i1; ++i)
    if (dedup[i].kind == Kind::Vertex)
      radius[i] = std::min({1e-3 * s.diameter, 0.25 * norm(dedup[i].x - dedup[i - 1].x),
                            0.25 * norm(dedup[i + 1].x - dedup[i].x)});
  for (std::size_t i = i0; i < i1; ++i) {
    if (dedup[i].kind == Kind::Vertex) fan(dedup[i], dedup[i - 1].x, dedup[i + 1].x, radius[i]);
    march(dedup[i], dedup[i + 1], radius[i], radius[i + 1]);
  }
  return out;
}

Corridor scrambleCorridor(const SurfaceComplex& s, const Corridor& c, int moves, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Corridor cur = c;
  for (int move = 0; move < moves; ++move) {
    const int m = static_cast<int>(cur.size());
    if (m == 0) break;
    const int j = static_cast<int>(rng() % m);
    const int kind = static_cast<int>(rng() % 3);
    Corridor ins;
    int removed = 0;
    const Crossing x = cur[j];
    if (kind == 0) {
      // Cross portal j the other way around one of its endpoints.
      const bool left = rng() % 2;
      const Triangle& t = s.triangles[x.tri];
      int tri = x.tri, corner = left ? (x.edge + 1) % 3 : x.edge;
      const int endTri = t.neighbor[x.edge];
      const int endCorner = left ? t.neighborEdge[x.edge] : (t.neighborEdge[x.edge] + 1) % 3;
      while (!(tri == endTri && corner == endCorner)) {
        if (left) {
          ins.push_back({tri, corner});
          std::tie(tri, corner) = s.nextCornerCW(tri, corner);
        } else {
          ins.push_back({tri, (corner + 2) % 3});
          std::tie(tri, corner) = s.nextCornerCCW(tri, corner);
        }
      }
      removed = 1;
    } else if (kind == 1) {
      // Step into a neighbor and back.
      const int e = static_cast<int>(rng() % 3);
      const Triangle& t = s.triangles[x.tri];
      ins.push_back({x.tri, e});
      ins.push_back({t.neighbor[e], t.neighborEdge[e]});
    } else {
      // A full turn around a vertex of the current triangle.
      const int corner0 = static_cast<int>(rng() % 3);
      int tri = x.tri, corner = corner0;
      do {
        ins.push_back({tri, (corner + 2) % 3});
        std::tie(tri, corner) = s.nextCornerCCW(tri, corner);
      } while (!(tri == x.tri && corner == corner0));
    }
    Corridor next(cur.begin(), cur.begin() + j);
    next.insert(next.end(), ins.begin(), ins.end());
    next.insert(next.end(), cur.begin() + j + removed, cur.end());
    cur = std::move(next);
  }
  return cur;
}

std::string geodesicJson(const SurfaceComplex& s, const GeodesicRep& rep, const GeodesicReport& report) {
  json doc;
  doc["kind"] = rep.regular ? "regular_closed_geodesic" : "saddle_chain";
  doc["cat0_length"] = cat0Length(rep);
  if (rep.regular) {
    doc["closed"] = {{"polygon", rep.closed.polygon},
                     {"base", json::array({rep.closed.base.x, rep.closed.base.y})},
                     {"direction", rep.closed.direction},
                     {"length", rep.closed.length},
                     {"cylinder", rep.closed.cylinder}};
  }
  doc["legs"] = json::array();
  for (const Leg& l : rep.chain.legs)
    doc["legs"].push_back({{"start_cone", l.startCone}, {"direction", l.direction}, {"length", l.length}});
  doc["pivots"] = json::array();
  for (const PivotCheck& c : report.pivots)
    doc["pivots"].push_back({{"cone_point", c.pivot.conePoint},
                             {"left_angle", c.pivot.leftAngle},
                             {"right_angle", c.pivot.rightAngle},
                             {"cone_angle", s.vertexClasses[c.pivot.vertexClass].angle},
                             {"pass", c.pass}});
  doc["verify"] = {{"pass", report.pass}, {"problems", report.problems}};
  doc["provenance"] = {{"iterations", rep.provenance.iterations},
                       {"flips", rep.provenance.flips},
                       {"initial_length", rep.provenance.initialLength},
                       {"final_decrement", rep.provenance.finalDecrement},
                       {"length_history", rep.provenance.lengthHistory}};
  return doc.dump(2);
}

}  // namespace flatcur
