#include "flatcur/render.h"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <sstream>

namespace flatcur {

using json = nlohmann::ordered_json;

namespace {

json vec(Vec2 v) { return json::array({v.x, v.y}); }

json corridorJson(const Corridor& c) {
  json out = json::array();
  for (const Crossing& x : c) out.push_back({x.tri, x.edge});
  return out;
}

json boundaryJson(const BoundaryLoop& b) {
  return {{"offset", b.offset},
          {"cone_points", b.conePoints},
          {"connection_lengths", b.connectionLengths},
          {"tangent", b.tangent}};
}

// Maps polygon charts into the picture.
struct Layout {
  std::vector<Vec2> shift;
  double scale = 100.0;
  double width = 0, height = 0;
  double top = 0;

  Vec2 at(int poly, Vec2 p) const {
    const Vec2 q = p + shift[poly];
    return {q.x * scale, (top - q.y) * scale};
  }
};

Layout layout(const SurfaceComplex& s) {
  Layout L;
  const double gap = 0.25 * s.diameter;
  double x = gap, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : s.spec.polygons) {
    double minX = lo, maxX = hi;
    for (Vec2 v : p.vertices) {
      minX = std::min(minX, v.x);
      maxX = std::max(maxX, v.x);
      lo = std::min(lo, v.y);
      hi = std::max(hi, v.y);
    }
    L.shift.push_back({x - minX, 0.0});
    x += maxX - minX + gap;
  }
  L.scale = 400.0 / s.diameter;
  L.top = hi + gap;
  L.width = x * L.scale;
  L.height = (hi - lo + 2 * gap) * L.scale;
  return L;
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3f", v);
  return b;
}

void line(std::ostringstream& out, Vec2 a, Vec2 b) {
  out << "    <line x1=\"" << num(a.x) << "\" y1=\"" << num(a.y) << "\" x2=\"" << num(b.x) << "\" y2=\"" << num(b.y)
      << "\"/>\n";
}

void dot(std::ostringstream& out, Vec2 a, double r) {
  out << "    <circle cx=\"" << num(a.x) << "\" cy=\"" << num(a.y) << "\" r=\"" << num(r) << "\"/>\n";
}

}  // namespace

std::string surfaceReportJson(const SurfaceComplex& s) {
  json doc;
  doc["n"] = s.n;
  doc["polygons"] = s.spec.polygons.size();
  doc["triangles"] = s.triangles.size();
  doc["vertex_classes"] = s.vertexClasses.size();
  doc["euler_characteristic"] = s.eulerCharacteristic;
  doc["genus"] = s.genus;
  doc["cone_points"] = json::array();
  for (const ConePoint& c : s.conePoints) {
    json corners = json::array();
    for (const Corner& k : c.corners) corners.push_back({s.spec.polygons[k.polygon].id, k.vertex});
    doc["cone_points"].push_back({{"id", c.id},
                                  {"angle", c.totalAngle},
                                  {"angle_over_pi", c.totalAngle / kPi},
                                  {"k", s.vertexClasses[c.vertexClass].k},
                                  {"corners", corners}});
  }
  doc["gauss_bonnet_residual"] = s.gaussBonnetResidual;
  doc["holonomy_residual"] = s.holonomyResidual;
  doc["diameter"] = s.diameter;
  return doc.dump(2);
}

std::string traceJson(const SurfaceComplex& s, const LeafTrace& t, const std::optional<Cylinder>& cyl,
                      const TraceCheck& check) {
  json doc;
  doc["theta"] = t.theta;
  doc["n"] = t.n;
  doc["turning"] = turningName(t.turning);
  doc["termination"] = terminationName(t.termination);
  doc["length"] = t.length;
  doc["pieces"] = json::array();
  for (const LeafPiece& p : t.pieces)
    doc["pieces"].push_back({{"polygon", s.spec.polygons[s.triangles[p.tri].polygon].id},
                             {"from", vec(p.from)},
                             {"to", vec(p.to)},
                             {"s0", p.s0},
                             {"s1", p.s1}});
  doc["events"] = json::array();
  for (const LeafEvent& e : t.events)
    doc["events"].push_back({{"cone_point", e.conePoint},
                             {"arclength", e.arclength},
                             {"incoming", e.incoming},
                             {"outgoing", e.outgoing},
                             {"turning_angle", e.turningAngle},
                             {"other_angle", e.otherAngle}});
  doc["crossings"] = corridorJson(t.crossings);
  doc["verify"] = {{"pass", check.pass}, {"worst", check.worst}, {"problems", check.problems}};
  if (cyl) {
    doc["cylinder"] = {{"direction", cyl->direction},
                       {"circumference", cyl->core.length},
                       {"width", cyl->width},
                       {"area", cyl->width * cyl->core.length},
                       {"left", boundaryJson(cyl->boundary[0])},
                       {"right", boundaryJson(cyl->boundary[1])}};
  } else {
    doc["cylinder"] = nullptr;
  }
  return doc.dump(2);
}

std::string renderSvg(const SurfaceComplex& s, const SvgScene& scene) {
  const Layout L = layout(s);
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(L.width) << "\" height=\"" << num(L.height)
      << "\" viewBox=\"0 0 " << num(L.width) << " " << num(L.height) << "\">\n";

  out << "  <g id=\"polygons\" fill=\"#f4f4f0\" stroke=\"#333\" stroke-width=\"1\">\n";
  for (std::size_t i = 0; i < s.spec.polygons.size(); ++i) {
    out << "    <polygon points=\"";
    const auto& v = s.spec.polygons[i].vertices;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const Vec2 q = L.at(static_cast<int>(i), v[j]);
      out << (j ? " " : "") << num(q.x) << "," << num(q.y);
    }
    out << "\"/>\n";
  }
  out << "  </g>\n";

  out << "  <g id=\"leaves\" stroke=\"#2a6fb0\" stroke-width=\"0.8\">\n";
  for (const LeafTrace& t : scene.leaves)
    for (const LeafPiece& p : t.pieces) {
      const int poly = s.triangles[p.tri].polygon;
      line(out, L.at(poly, p.from), L.at(poly, p.to));
    }
  out << "  </g>\n";

  out << "  <g id=\"geodesic\" stroke=\"#c0392b\" stroke-width=\"2\">\n";
  if (scene.geodesic)
    for (const CurvePiece& p : curvePieces(s, *scene.geodesic)) {
      const int poly = s.triangles[p.tri].polygon;
      line(out, L.at(poly, p.from), L.at(poly, p.to));
    }
  out << "  </g>\n";

  out << "  <g id=\"cone-points\" fill=\"#000\">\n";
  for (std::size_t i = 0; i < s.spec.polygons.size(); ++i)
    for (std::size_t j = 0; j < s.spec.polygons[i].vertices.size(); ++j)
      if (s.isCone(s.cornerClass[i][j])) dot(out, L.at(static_cast<int>(i), s.spec.polygons[i].vertices[j]), 4);
  out << "  </g>\n";

  out << "  <g id=\"crossings\" fill=\"#e67e22\">\n";
  for (const CrossingRecord& c : scene.crossings) dot(out, L.at(s.triangles[c.tri].polygon, c.point), 2.5);
  out << "  </g>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace flatcur
