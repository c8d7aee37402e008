#include "flatcur/surface.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace flatcur {

using json = nlohmann::json;

std::string errorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Topology: return "topology";
    case ErrorKind::NullHomotopic: return "null-homotopic";
    case ErrorKind::IterationCap: return "iteration-cap";
    case ErrorKind::Argument: return "argument";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw FlatcurError(kind, msg); }

double readNumber(const json& j, const std::string& where) {
  if (!j.is_number()) fail(ErrorKind::Validation, where + ": expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) fail(ErrorKind::Validation, where + ": non-finite number");
  return v;
}

int readInt(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(ErrorKind::Validation, where + ": expected an integer");
  return j.get<int>();
}

EdgeRef readEdge(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(ErrorKind::Validation, where + ": expected [polygon, edge]");
  return {readInt(j[0], where), readInt(j[1], where)};
}

double signedArea(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

bool segmentsProperlyIntersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool isSimple(const std::vector<Vec2>& v) {
  const size_t k = v.size();
  for (size_t i = 0; i < k; ++i)
    for (size_t j = i + 1; j < k; ++j) {
      if (j == i + 1 || (i == 0 && j == k - 1)) continue;
      if (segmentsProperlyIntersect(v[i], v[(i + 1) % k], v[j], v[(j + 1) % k])) return false;
    }
  return true;
}

bool insideOrOnTriangle(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
  return cross(b - a, p - a) >= 0 && cross(c - b, p - b) >= 0 && cross(a - c, p - c) >= 0;
}

// Ear clipping for a simple counterclockwise polygon.
std::vector<std::array<int, 3>> triangulate(const std::vector<Vec2>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::array<int, 3>> tris;
  const double scale = std::max(1e-300, std::abs(signedArea(v)));
  while (idx.size() > 3) {
    bool clipped = false;
    for (size_t i = 0; i < idx.size(); ++i) {
      const int a = idx[(i + idx.size() - 1) % idx.size()], b = idx[i], c = idx[(i + 1) % idx.size()];
      if (cross(v[b] - v[a], v[c] - v[b]) <= 1e-12 * scale) continue;
      bool ear = true;
      for (int q : idx) {
        if (q == a || q == b || q == c) continue;
        if (insideOrOnTriangle(v[q], v[a], v[b], v[c])) { ear = false; break; }
      }
      if (!ear) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<long>(i));
      clipped = true;
      break;
    }
    if (!clipped) fail(ErrorKind::Geometry, "polygon could not be triangulated");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

SurfaceSpec parseSurface(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Syntax, "syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Validation, "surface document must be an object");
  for (const char* key : {"n", "polygons", "gluings"})
    if (!doc.contains(key)) fail(ErrorKind::Validation, std::string("missing field '") + key + "'");

  SurfaceSpec spec;
  spec.n = readInt(doc["n"], "n");
  if (spec.n < 1) fail(ErrorKind::Validation, "n must be positive");

  std::map<int, int> edgeCount;  // polygon id -> number of edges
  if (!doc["polygons"].is_array()) fail(ErrorKind::Validation, "'polygons' must be an array");
  for (const auto& jp : doc["polygons"]) {
    PolygonSpec poly;
    poly.id = readInt(jp.at("id"), "polygon id");
    if (edgeCount.count(poly.id)) fail(ErrorKind::Validation, "duplicate polygon id " + std::to_string(poly.id));
    const auto& jv = jp.at("vertices");
    if (!jv.is_array()) fail(ErrorKind::Validation, "'vertices' must be an array");
    for (const auto& pt : jv) {
      if (!pt.is_array() || pt.size() != 2) fail(ErrorKind::Validation, "vertex must be [x, y]");
      poly.vertices.push_back({readNumber(pt[0], "vertex"), readNumber(pt[1], "vertex")});
    }
    if (poly.vertices.size() < 3)
      fail(ErrorKind::Validation, "polygon " + std::to_string(poly.id) + " has fewer than 3 vertices");
    edgeCount[poly.id] = static_cast<int>(poly.vertices.size());
    spec.polygons.push_back(std::move(poly));
  }

  std::set<std::pair<int, int>> used;
  auto useEdge = [&](EdgeRef e) {
    auto it = edgeCount.find(e.polygon);
    if (it == edgeCount.end()) fail(ErrorKind::Validation, "unknown polygon id " + std::to_string(e.polygon));
    if (e.edge < 0 || e.edge >= it->second)
      fail(ErrorKind::Validation, "edge index out of range: polygon " + std::to_string(e.polygon) + " edge " +
                                      std::to_string(e.edge));
    if (!used.insert({e.polygon, e.edge}).second)
      fail(ErrorKind::Validation, "edge glued twice: polygon " + std::to_string(e.polygon) + " edge " +
                                      std::to_string(e.edge));
  };
  if (!doc["gluings"].is_array()) fail(ErrorKind::Validation, "'gluings' must be an array");
  for (const auto& jg : doc["gluings"]) {
    GluingSpec g;
    g.from = readEdge(jg.at("from"), "from");
    g.to = readEdge(jg.at("to"), "to");
    g.rotation = readInt(jg.at("rotation"), "rotation");
    if (g.rotation < 0 || g.rotation >= spec.n) fail(ErrorKind::Validation, "rotation index out of range");
    useEdge(g.from);
    useEdge(g.to);
    spec.gluings.push_back(g);
  }
  size_t total = 0;
  for (const auto& [id, k] : edgeCount) total += static_cast<size_t>(k);
  if (used.size() != total) fail(ErrorKind::Validation, "some edges are not glued");
  return spec;
}

std::string serializeSurface(const SurfaceSpec& spec) {
  json doc;
  doc["n"] = spec.n;
  doc["polygons"] = json::array();
  for (const auto& p : spec.polygons) {
    json jv = json::array();
    for (const auto& v : p.vertices) jv.push_back({v.x, v.y});
    doc["polygons"].push_back({{"id", p.id}, {"vertices", jv}});
  }
  doc["gluings"] = json::array();
  for (const auto& g : spec.gluings)
    doc["gluings"].push_back({{"from", {g.from.polygon, g.from.edge}},
                              {"to", {g.to.polygon, g.to.edge}},
                              {"rotation", g.rotation}});
  return doc.dump(2);
}

SurfaceSpec redeclare(const SurfaceSpec& spec, int k) {
  if (k < 1) fail(ErrorKind::Argument, "refinement factor must be positive");
  SurfaceSpec out = spec;
  out.n = spec.n * k;
  for (auto& g : out.gluings) g.rotation *= k;
  return out;
}

SurfaceSpec scaled(const SurfaceSpec& spec, double s) {
  SurfaceSpec out = spec;
  for (auto& p : out.polygons)
    for (auto& v : p.vertices) v = v * s;
  return out;
}

int SurfaceComplex::polygonIndex(int id) const {
  for (size_t i = 0; i < spec.polygons.size(); ++i)
    if (spec.polygons[i].id == id) return static_cast<int>(i);
  fail(ErrorKind::Validation, "unknown polygon id " + std::to_string(id));
}

int SurfaceComplex::locate(int poly, Vec2 p) const {
  int best = -1;
  double bestScore = -std::numeric_limits<double>::infinity();
  for (int t : polygonTriangles.at(poly)) {
    const auto& tr = triangles[t];
    double score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      const Vec2 e = tr.p[(i + 1) % 3] - tr.p[i];
      score = std::min(score, cross(e, p - tr.p[i]) / norm(e));
    }
    if (score > bestScore) { bestScore = score; best = t; }
  }
  return best;
}

std::pair<int, int> SurfaceComplex::nextCornerCCW(int tri, int i) const {
  const auto& t = triangles[tri];
  const int e = (i + 2) % 3;
  return {t.neighbor[e], t.neighborEdge[e]};
}

std::pair<int, int> SurfaceComplex::nextCornerCW(int tri, int i) const {
  const auto& t = triangles[tri];
  return {t.neighbor[i], (t.neighborEdge[i] + 1) % 3};
}

SurfaceComplex buildSurface(const SurfaceSpec& spec, Tolerances eps) {
  SurfaceComplex s;
  s.spec = spec;
  s.n = spec.n;
  const int P = static_cast<int>(spec.polygons.size());
  if (P == 0) fail(ErrorKind::Validation, "surface has no polygons");

  for (const auto& poly : spec.polygons)
    for (const auto& a : poly.vertices)
      for (const auto& b : poly.vertices) s.diameter = std::max(s.diameter, norm(a - b));
  if (eps.len <= 0) eps.len = 1e-9 * s.diameter;
  s.eps = eps;

  std::map<int, int> idToIndex;
  for (int i = 0; i < P; ++i) idToIndex[spec.polygons[i].id] = i;

  for (const auto& poly : spec.polygons) {
    if (signedArea(poly.vertices) <= 0)
      fail(ErrorKind::Geometry, "polygon " + std::to_string(poly.id) + " is not counterclockwise");
    if (!isSimple(poly.vertices)) fail(ErrorKind::Geometry, "polygon " + std::to_string(poly.id) + " is not simple");
  }

  s.partner.resize(P);
  s.transition.resize(P);
  s.cornerClass.resize(P);
  for (int i = 0; i < P; ++i) {
    const size_t k = spec.polygons[i].vertices.size();
    s.partner[i].assign(k, EdgeRef{-1, -1});
    s.transition[i].assign(k, ChartTransition{});
    s.cornerClass[i].assign(k, -1);
  }

  const double step = kTwoPi / s.n;
  auto vert = [&](int poly, int v) {
    const auto& vs = spec.polygons[poly].vertices;
    return vs[static_cast<size_t>((v % static_cast<int>(vs.size()) + static_cast<int>(vs.size())) %
                                  static_cast<int>(vs.size()))];
  };

  for (const auto& g : spec.gluings) {
    const EdgeRef a{idToIndex.at(g.from.polygon), g.from.edge};
    const EdgeRef b{idToIndex.at(g.to.polygon), g.to.edge};
    if (a == b) fail(ErrorKind::Topology, "edge glued to itself");
    const Vec2 a0 = vert(a.polygon, a.edge), a1 = vert(a.polygon, a.edge + 1);
    const Vec2 b0 = vert(b.polygon, b.edge), b1 = vert(b.polygon, b.edge + 1);
    if (std::abs(norm(a1 - a0) - norm(b1 - b0)) > eps.len)
      fail(ErrorKind::Geometry, "edge length mismatch between polygon " + std::to_string(g.from.polygon) +
                                    " edge " + std::to_string(g.from.edge) + " and polygon " +
                                    std::to_string(g.to.polygon) + " edge " + std::to_string(g.to.edge));
    // chart(to) -> chart(from): b0 -> a1, b1 -> a0
    const double alpha = arg(a0 - a1) - arg(b1 - b0);
    const double declared = step * g.rotation;
    const double mismatch = std::abs(std::remainder(alpha - declared, kTwoPi));
    if (mismatch > 1e-7)
      fail(ErrorKind::Geometry, "gluing rotation inconsistent with edge directions (polygon " +
                                    std::to_string(g.from.polygon) + " edge " + std::to_string(g.from.edge) + ")");
    const Vec2 t = a1 - rotate(b0, declared);
    s.partner[a.polygon][a.edge] = b;
    s.partner[b.polygon][b.edge] = a;
    s.transition[a.polygon][a.edge] = {g.rotation, t};
    const Isometry inv = Isometry{declared, t}.inverse();
    s.transition[b.polygon][b.edge] = {(s.n - g.rotation) % s.n, inv.translation};
  }

  // Vertex classes.
  std::vector<int> cornerBase(P + 1, 0);
  for (int i = 0; i < P; ++i) cornerBase[i + 1] = cornerBase[i] + static_cast<int>(spec.polygons[i].vertices.size());
  UnionFind uf(cornerBase[P]);
  for (int i = 0; i < P; ++i) {
    const int k = static_cast<int>(spec.polygons[i].vertices.size());
    for (int e = 0; e < k; ++e) {
      const EdgeRef q = s.partner[i][e];
      const int kq = static_cast<int>(spec.polygons[q.polygon].vertices.size());
      uf.unite(cornerBase[i] + e, cornerBase[q.polygon] + (q.edge + 1) % kq);
    }
  }
  auto cornerAngle = [&](int poly, int v) {
    return ccwAngle(vert(poly, v + 1) - vert(poly, v), vert(poly, v - 1) - vert(poly, v));
  };
  std::map<int, int> rootToClass;
  for (int i = 0; i < P; ++i) {
    const int k = static_cast<int>(spec.polygons[i].vertices.size());
    for (int v = 0; v < k; ++v) {
      const int root = uf.find(cornerBase[i] + v);
      auto [it, inserted] = rootToClass.try_emplace(root, static_cast<int>(s.vertexClasses.size()));
      if (inserted) {
        VertexClass vc;
        Corner c{i, v};
        do {
          vc.corners.push_back(c);
          s.cornerClass[c.polygon][c.vertex] = it->second;
          const int kc = static_cast<int>(spec.polygons[c.polygon].vertices.size());
          const EdgeRef across = s.partner[c.polygon][(c.vertex + kc - 1) % kc];
          c = Corner{across.polygon, across.edge};
        } while (!(c == Corner{i, v}) && vc.corners.size() <= static_cast<size_t>(cornerBase[P]));
        double total = 0.0;
        for (const auto& cc : vc.corners) total += cornerAngle(cc.polygon, cc.vertex);
        vc.k = static_cast<int>(std::lround(total / step));
        if (std::abs(total - vc.k * step) > eps.ang)
          fail(ErrorKind::Geometry, "vertex class angle " + std::to_string(total) + " is not a multiple of 2pi/n");
        if (vc.k < s.n) fail(ErrorKind::Geometry, "vertex class angle below 2pi");
        vc.angle = vc.k * step;
        s.vertexClasses.push_back(std::move(vc));
      }
    }
  }
  for (size_t c = 0; c < s.vertexClasses.size(); ++c) {
    auto& vc = s.vertexClasses[c];
    if (vc.k > s.n) {
      vc.conePoint = static_cast<int>(s.conePoints.size());
      s.conePoints.push_back({vc.conePoint, static_cast<int>(c), vc.corners, vc.angle});
    }
  }

  const int V = static_cast<int>(s.vertexClasses.size());
  const int E = static_cast<int>(spec.gluings.size());
  s.eulerCharacteristic = V - E + P;
  if (s.eulerCharacteristic > 2 || (2 - s.eulerCharacteristic) % 2 != 0)
    fail(ErrorKind::Topology, "glued complex is not a closed orientable surface");
  s.genus = (2 - s.eulerCharacteristic) / 2;
  double excess = 0.0;
  for (const auto& cp : s.conePoints) excess += cp.totalAngle - kTwoPi;
  s.gaussBonnetResidual = std::abs(excess - 4.0 * kPi * (s.genus - 1));
  if (s.gaussBonnetResidual > eps.ang) fail(ErrorKind::Topology, "Gauss-Bonnet residual too large");

  // Triangulation.
  s.polygonTriangles.resize(P);
  std::map<std::tuple<int, int, int>, std::pair<int, int>> diagonals;
  std::map<std::pair<int, int>, std::pair<int, int>> boundary;  // (polygon, edge) -> (triangle, edge)
  for (int i = 0; i < P; ++i) {
    const auto& vs = spec.polygons[i].vertices;
    const int k = static_cast<int>(vs.size());
    for (const auto& tri : triangulate(vs)) {
      Triangle t;
      t.polygon = i;
      const int ti = static_cast<int>(s.triangles.size());
      for (int j = 0; j < 3; ++j) {
        t.polygonVertex[j] = tri[j];
        t.p[j] = vs[tri[j]];
        t.vertexClass[j] = s.cornerClass[i][tri[j]];
      }
      for (int j = 0; j < 3; ++j) {
        const int a = tri[j], b = tri[(j + 1) % 3];
        t.cornerAngle[j] = ccwAngle(t.p[(j + 1) % 3] - t.p[j], t.p[(j + 2) % 3] - t.p[j]);
        if (b == (a + 1) % k) {
          t.polygonEdge[j] = a;
          boundary[{i, a}] = {ti, j};
        } else {
          t.polygonEdge[j] = -1;
          auto key = std::make_tuple(i, std::min(a, b), std::max(a, b));
          auto it = diagonals.find(key);
          if (it == diagonals.end()) {
            diagonals[key] = {ti, j};
          } else {
            auto [oi, oj] = it->second;
            t.neighbor[j] = oi;
            t.neighborEdge[j] = oj;
            s.triangles[oi].neighbor[oj] = ti;
            s.triangles[oi].neighborEdge[oj] = j;
          }
        }
      }
      s.polygonTriangles[i].push_back(ti);
      s.triangles.push_back(t);
    }
  }
  for (auto& t : s.triangles) {
    for (int j = 0; j < 3; ++j) {
      if (t.polygonEdge[j] < 0) continue;
      const EdgeRef q = s.partner[t.polygon][t.polygonEdge[j]];
      auto [oi, oj] = boundary.at({q.polygon, q.edge});
      t.neighbor[j] = oi;
      t.neighborEdge[j] = oj;
      const auto& tr = s.transition[t.polygon][t.polygonEdge[j]];
      t.fromNeighbor[j] = tr.isometry(s.n);
      t.fromNeighborRotation[j] = tr.rotationIndex;
    }
  }

  for (int c = 0; c < V; ++c) {
    const Isometry h = holonomyAroundVertex(s, c);
    const Corner c0 = s.vertexClasses[c].corners.front();
    const Vec2 p = vert(c0.polygon, c0.vertex);
    s.holonomyResidual = std::max(s.holonomyResidual, norm(h.apply(p) - p));
    const double rotResidual =
        std::abs(std::remainder(h.angle - s.vertexClasses[c].angle, kTwoPi));
    if (rotResidual > std::max(eps.ang, 1e-9)) fail(ErrorKind::Geometry, "rotation holonomy around vertex mismatch");
  }
  if (s.holonomyResidual > eps.len * 10) fail(ErrorKind::Geometry, "translation holonomy around vertex is not zero");
  return s;
}

double coneAngleAround(const SurfaceComplex& surface, int vertexClass) {
  const auto& vc = surface.vertexClasses.at(vertexClass);
  double total = 0.0;
  for (const auto& c : vc.corners) {
    const auto& vs = surface.spec.polygons[c.polygon].vertices;
    const int k = static_cast<int>(vs.size());
    total += ccwAngle(vs[(c.vertex + 1) % k] - vs[c.vertex], vs[(c.vertex + k - 1) % k] - vs[c.vertex]);
  }
  return total;
}

Isometry holonomyAroundVertex(const SurfaceComplex& surface, int vertexClass) {
  // Walking counterclockwise: leave corner (P, v) through edge v-1 into the partner.
  Isometry acc = Isometry::identity();
  for (const auto& c : surface.vertexClasses.at(vertexClass).corners) {
    const int k = static_cast<int>(surface.spec.polygons[c.polygon].vertices.size());
    acc = acc * surface.transition[c.polygon][(c.vertex + k - 1) % k].isometry(surface.n);
  }
  return acc;
}

DevelopedPath developPath(const SurfaceComplex& surface, int startPolygon, const std::vector<EdgeRef>& crossings,
                          Isometry seed) {
  DevelopedPath out;
  out.crossings = crossings;
  out.placements.push_back({startPolygon, seed});
  int current = startPolygon;
  for (const auto& c : crossings) {
    if (c.polygon != current)
      fail(ErrorKind::Argument, "crossings are not chained through common polygons");
    const auto& tr = surface.transition.at(c.polygon).at(c.edge);
    const Isometry next = out.placements.back().chartToPlane * tr.isometry(surface.n);
    current = surface.partner[c.polygon][c.edge].polygon;
    out.placements.push_back({current, next});
  }
  return out;
}

}  // namespace flatcur
