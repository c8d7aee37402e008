#include "flatcur/norm.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace flatcur {

using json = nlohmann::json;

namespace {

double maxRadius(const std::vector<Vec2>& pts) {
  double r = 0;
  for (Vec2 p : pts) r = std::max(r, norm(p));
  return r;
}

bool hasPoint(const std::vector<Vec2>& pts, Vec2 q, double tol) {
  return std::any_of(pts.begin(), pts.end(), [&](Vec2 p) { return norm(p - q) <= tol; });
}

// Angular convex hull of points around the origin (all directions distinct after merging).
std::vector<Vec2> hullAroundOrigin(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return wrap(arg(a)) < wrap(arg(b)); });
  const double tol = 1e-12 * std::max(1.0, maxRadius(pts));
  std::vector<Vec2> uniq;
  for (Vec2 p : pts)
    if (uniq.empty() || norm(uniq.back() - p) > tol) uniq.push_back(p);
  if (uniq.size() > 1 && norm(uniq.front() - uniq.back()) <= tol) uniq.pop_back();
  // Graham-style pass, repeated until stable since the start may be a reflex point.
  bool changed = true;
  while (changed && uniq.size() >= 3) {
    changed = false;
    std::vector<Vec2> out;
    const std::size_t m = uniq.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2 a = uniq[(i + m - 1) % m], b = uniq[i], c = uniq[(i + 1) % m];
      if (cross(b - a, c - b) > 1e-14 * norm(b - a) * norm(c - b)) out.push_back(b);
      else changed = true;
    }
    uniq = std::move(out);
  }
  return uniq;
}

}  // namespace

PolygonalNorm::PolygonalNorm(std::vector<Vec2> vertices, int n, double epsAng) : n_(n) {
  if (n < 1) throw FlatcurError(ErrorKind::Argument, "rotation order must be positive");
  if (vertices.size() < 4) throw FlatcurError(ErrorKind::Validation, "norm polygon needs at least 4 vertices");
  const double scale = maxRadius(vertices);
  const double tol = 1e-9 * scale;
  // Drop duplicates and collinear vertices.
  std::vector<Vec2> v;
  for (Vec2 p : vertices)
    if (v.empty() || norm(v.back() - p) > tol) v.push_back(p);
  if (v.size() > 1 && norm(v.front() - v.back()) <= tol) v.pop_back();
  bool changed = true;
  while (changed && v.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec2 a = v[(i + v.size() - 1) % v.size()], b = v[i], c = v[(i + 1) % v.size()];
      const double turn = std::atan2(cross(b - a, c - b), dot(b - a, c - b));
      if (std::abs(turn) <= epsAng) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
      if (turn < 0) throw FlatcurError(ErrorKind::Validation, "norm polygon is not convex and counterclockwise");
    }
  }
  if (v.size() < 4) throw FlatcurError(ErrorKind::Validation, "degenerate norm polygon");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (cross(v[i], v[(i + 1) % v.size()]) <= tol * scale)
      throw FlatcurError(ErrorKind::Validation, "origin is not interior to the norm polygon");
  double winding = 0;
  for (std::size_t i = 0; i < v.size(); ++i) winding += ccwAngle(v[i], v[(i + 1) % v.size()]);
  if (std::abs(winding - kTwoPi) > 1e-6) throw FlatcurError(ErrorKind::Validation, "norm polygon winds more than once");
  for (Vec2 p : v) {
    if (!hasPoint(v, -p, tol)) throw FlatcurError(ErrorKind::Validation, "norm polygon is not symmetric");
    if (!hasPoint(v, rotate(p, kTwoPi / n), tol))
      throw FlatcurError(ErrorKind::Validation, "norm polygon is not invariant under rotation by 2pi/" + std::to_string(n));
  }
  vertices_ = std::move(v);
  const std::size_t m = vertices_.size();
  dual_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 a = vertices_[i], b = vertices_[(i + 1) % m];
    dual_[i] = Vec2{b.y - a.y, a.x - b.x} / cross(a, b);
  }
  for (std::size_t i = 0; i < m; ++i)
    if (norm(dual_[i] - dual_[(i + m - 1) % m]) <= 1e-12 * maxRadius(dual_))
      throw FlatcurError(ErrorKind::Validation, "degenerate dual edge");
}

double WebMeasure::totalMass() const {
  double s = 0;
  for (const auto& a : atoms) s += a.weight;
  return s;
}

double evalNorm(const PolygonalNorm& q, Vec2 v) {
  double best = 0;
  for (Vec2 e : q.dualVertices()) best = std::max(best, dot(v, e));
  return best;
}

double webNorm(int n, double theta, Vec2 v) {
  double s = 0;
  for (int k = 0; k < n; ++k) s += std::abs(dot(v, polar(theta + kPi / 2 + kTwoPi * k / n)));
  return s;
}

PolygonalNorm dualPolygon(const PolygonalNorm& q) { return PolygonalNorm(q.dualVertices(), q.n()); }

double dualPerimeter(const PolygonalNorm& q) {
  const auto& d = q.dualVertices();
  double s = 0;
  for (std::size_t i = 0; i < d.size(); ++i) s += norm(d[(i + 1) % d.size()] - d[i]);
  return s;
}

WebMeasure decomposeNorm(const PolygonalNorm& q, int n) {
  if (n < 1) throw FlatcurError(ErrorKind::Argument, "rotation order must be positive");
  const auto& v = q.vertices();
  const double tol = 1e-9 * maxRadius(v);
  for (Vec2 p : v) {
    if (!hasPoint(v, -p, tol)) throw FlatcurError(ErrorKind::Validation, "norm polygon is not symmetric");
    if (!hasPoint(v, rotate(p, kTwoPi / n), tol))
      throw FlatcurError(ErrorKind::Validation, "norm polygon is not invariant under rotation by 2pi/" + std::to_string(n));
  }
  // Vertex V_i sits between dual vertices E_{i-1} and E_i.
  const double period = (n % 2 == 0) ? kTwoPi / n : kPi / n;
  const auto& d = q.dualVertices();
  const std::size_t m = v.size();
  WebMeasure out;
  out.n = n;
  for (std::size_t i = 0; i < m; ++i) {
    const double k = norm(d[i] - d[(i + m - 1) % m]);
    double theta = wrap(arg(v[i]), period);
    if (period - theta < 1e-12) theta = 0.0;
    auto it = std::find_if(out.atoms.begin(), out.atoms.end(), [&](const WebAtom& a) {
      const double diff = std::abs(a.theta - theta);
      return std::min(diff, period - diff) < 1e-9;
    });
    if (it == out.atoms.end()) out.atoms.push_back({theta, k / (4.0 * n)});
    else it->weight += k / (4.0 * n);
  }
  std::sort(out.atoms.begin(), out.atoms.end(), [](const WebAtom& a, const WebAtom& b) { return a.theta < b.theta; });
  return out;
}

double reconstructNorm(const WebMeasure& m, Vec2 v) {
  double s = 0;
  for (const auto& a : m.atoms) s += a.weight * webNorm(m.n, a.theta, v);
  return s;
}

Vec2 supportingVector(const PolygonalNorm& q, Vec2 u) {
  if (norm(u) == 0.0) throw FlatcurError(ErrorKind::Argument, "supporting vector of the zero vector");
  const auto& v = q.vertices();
  const std::size_t m = v.size();
  const Vec2 p = u / evalNorm(q, u);
  const double tol = 1e-9 * maxRadius(v);
  for (std::size_t i = 0; i < m; ++i) {
    if (norm(p - v[i]) <= tol) {
      const Vec2 in = unit(v[i] - v[(i + m - 1) % m]);
      const Vec2 out = unit(v[(i + 1) % m] - v[i]);
      return unit(in + out);
    }
  }
  // Edge containing the ray through u.
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 a = v[i], b = v[(i + 1) % m];
    if (cross(a, u) >= 0 && cross(u, b) >= 0) return unit(b - a);
  }
  throw FlatcurError(ErrorKind::Geometry, "no supporting edge found");
}

PolygonalNorm l1Norm() { return PolygonalNorm({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}, 4); }

PolygonalNorm hexagonalNorm() {
  std::vector<Vec2> v;
  for (int j = 0; j < 6; ++j) v.push_back(polar(kPi * j / 3));
  return PolygonalNorm(v, 3);
}

PolygonalNorm webUnitBall(int n, double theta) {
  // Orders 1 and 2 give a strip, not a polygon.
  if (n < 3) throw FlatcurError(ErrorKind::Argument, "web norms of order below 3 are degenerate");
  const int count = (n % 2 == 0) ? n : 2 * n;
  std::vector<Vec2> v;
  for (int j = 0; j < count; ++j) {
    const Vec2 d = polar(theta + kTwoPi * j / count);
    v.push_back(d / webNorm(n, theta, d));
  }
  return PolygonalNorm(v, n);
}

PolygonalNorm invariantPolygon(const std::vector<Vec2>& points, int n) {
  std::vector<Vec2> all;
  for (Vec2 p : points)
    for (int k = 0; k < n; ++k)
      for (int s : {1, -1}) all.push_back(rotate(p, kTwoPi * k / n) * s);
  return PolygonalNorm(hullAroundOrigin(all), n);
}

NormOracle euclideanOracle(int n) { return {[](Vec2 v) { return norm(v); }, n, "euclidean"}; }

NormOracle polygonOracle(const PolygonalNorm& q) {
  return {[q](Vec2 v) { return evalNorm(q, v); }, q.n(), "polygon"};
}

std::vector<NormApproximation> approximateNorm(const NormOracle& oracle, int n, int rounds,
                                               const std::vector<double>& seeds) {
  if (rounds < 1) throw FlatcurError(ErrorKind::Argument, "rounds must be positive");
  // Spot checks of homogeneity, symmetry and invariance.
  for (int i = 0; i < 16; ++i) {
    const Vec2 v = polar(0.7 + 0.39 * i) * (0.5 + 0.1 * i);
    const double f = oracle.eval(v);
    const double tol = 1e-9 * std::max(1.0, f);
    if (!(f > 0)) throw FlatcurError(ErrorKind::Argument, "oracle is not positive");
    if (std::abs(oracle.eval(v * 2.5) - 2.5 * f) > 2.5 * tol)
      throw FlatcurError(ErrorKind::Argument, "oracle is not positively homogeneous");
    if (std::abs(oracle.eval(-v) - f) > tol) throw FlatcurError(ErrorKind::Argument, "oracle is not symmetric");
    if (std::abs(oracle.eval(rotate(v, kTwoPi / n)) - f) > tol)
      throw FlatcurError(ErrorKind::Argument, "oracle is not invariant under rotation by 2pi/" + std::to_string(n));
  }
  auto spherePoint = [&](double phi) {
    const Vec2 d = polar(phi);
    return d / oracle.eval(d);
  };
  std::vector<Vec2> points;
  std::vector<NormApproximation> out;
  for (int r = 1; r <= rounds; ++r) {
    if (!seeds.empty()) {
      if (r == 1)
        for (double phi : seeds) points.push_back(spherePoint(phi));
      if (r > 1) {
        // Refine by bisecting the angular gaps of the current polygon.
        const auto& v = out.back().polygon.vertices();
        for (std::size_t i = 0; i < v.size(); ++i)
          points.push_back(spherePoint(arg(v[i]) + 0.5 * ccwAngle(v[i], v[(i + 1) % v.size()])));
      }
    } else {
      const int count = 1 << (r + 1);
      for (int j = 0; j < count; ++j) points.push_back(spherePoint(kTwoPi * j / count));
    }
    NormApproximation a;
    a.polygon = invariantPolygon(points, n);
    a.measure = decomposeNorm(a.polygon, n);
    a.dualPerimeter = dualPerimeter(a.polygon);
    for (int i = 0; i < 720; ++i) {
      const Vec2 d = polar(kTwoPi * i / 720);
      const double f = oracle.eval(d);
      a.supError = std::max(a.supError, std::abs(reconstructNorm(a.measure, d) - f) / f);
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

json vecJson(Vec2 v) { return json::array({v.x, v.y}); }

json parseDoc(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FlatcurError(ErrorKind::Syntax, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

int docOrder(const json& doc) {
  if (!doc.is_object() || !doc.contains("n") || !doc["n"].is_number_integer())
    throw FlatcurError(ErrorKind::Validation, "missing integer field n");
  return doc["n"].get<int>();
}

}  // namespace

PolygonalNorm parsePolygonalNorm(std::string_view text) {
  const json doc = parseDoc(text);
  const int n = docOrder(doc);
  if (!doc.contains("vertices") || !doc["vertices"].is_array())
    throw FlatcurError(ErrorKind::Validation, "missing vertices array");
  std::vector<Vec2> v;
  for (const auto& p : doc["vertices"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw FlatcurError(ErrorKind::Validation, "vertex must be [x, y]");
    v.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return PolygonalNorm(v, n);
}

WebMeasure parseWebMeasure(std::string_view text) {
  const json doc = parseDoc(text);
  WebMeasure m;
  m.n = docOrder(doc);
  if (!doc.contains("atoms") || !doc["atoms"].is_array()) throw FlatcurError(ErrorKind::Validation, "missing atoms array");
  for (const auto& a : doc["atoms"]) {
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
      throw FlatcurError(ErrorKind::Validation, "atom must be [theta, w]");
    if (!(a[1].get<double>() > 0)) throw FlatcurError(ErrorKind::Validation, "atom weight must be positive");
    m.atoms.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  return m;
}

std::string serializePolygonalNorm(const PolygonalNorm& q) {
  json doc;
  doc["n"] = q.n();
  doc["vertices"] = json::array();
  for (Vec2 v : q.vertices()) doc["vertices"].push_back(vecJson(v));
  return doc.dump(2);
}

std::string serializeWebMeasure(const WebMeasure& m) {
  json doc;
  doc["n"] = m.n;
  doc["atoms"] = json::array();
  for (const auto& a : m.atoms) doc["atoms"].push_back(json::array({a.theta, a.weight}));
  return doc.dump(2);
}

PolygonalNorm namedNorm(std::string_view name) {
  if (name == "l1") return l1Norm();
  if (name == "hexagonal") return hexagonalNorm();
  if (name.starts_with("web:")) {
    const std::string rest(name.substr(4));
    const auto colon = rest.find(':');
    try {
      const int n = std::stoi(rest.substr(0, colon));
      const double theta = colon == std::string::npos ? 0.0 : std::stod(rest.substr(colon + 1));
      return webUnitBall(n, theta);
    } catch (const std::logic_error&) {
      throw FlatcurError(ErrorKind::Argument, "bad web norm name " + std::string(name));
    }
  }
  if (name == "euclidean") throw FlatcurError(ErrorKind::Argument, "the euclidean norm is only available as an oracle");
  std::ifstream in{std::string(name)};
  if (!in) throw FlatcurError(ErrorKind::Argument, "unknown norm " + std::string(name));
  std::stringstream ss;
  ss << in.rdbuf();
  return parsePolygonalNorm(ss.str());
}

}  // namespace flatcur
