#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "flatcur/geometry.h"

namespace flatcur {

/// Symmetric, Z/n-invariant norm whose unit sphere is a convex polygon.
class PolygonalNorm {
 public:
  PolygonalNorm() = default;
  /// Validates convexity, symmetry and invariance; removes collinear vertices.
  PolygonalNorm(std::vector<Vec2> vertices, int n, double epsAng = 1e-9);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  /// Dual vertices E_i: edge i of P (from vertex i to i+1) lies on <E_i, x> = 1.
  const std::vector<Vec2>& dualVertices() const { return dual_; }
  int n() const { return n_; }

 private:
  std::vector<Vec2> vertices_;
  std::vector<Vec2> dual_;
  int n_ = 1;
};

struct WebAtom {
  double theta = 0.0;
  double weight = 0.0;
  bool operator==(const WebAtom&) const = default;
};

struct WebMeasure {
  int n = 1;
  std::vector<WebAtom> atoms;
  double totalMass() const;
};

/// Black-box norm on the plane.
struct NormOracle {
  std::function<double(Vec2)> eval;
  int n = 1;
  std::string name;
};

double evalNorm(const PolygonalNorm& q, Vec2 v);
double webNorm(int n, double theta, Vec2 v);
PolygonalNorm dualPolygon(const PolygonalNorm& q);
double dualPerimeter(const PolygonalNorm& q);
WebMeasure decomposeNorm(const PolygonalNorm& q, int n);
double reconstructNorm(const WebMeasure& m, Vec2 v);
Vec2 supportingVector(const PolygonalNorm& q, Vec2 u);

struct NormApproximation {
  PolygonalNorm polygon;
  WebMeasure measure;
  double dualPerimeter = 0.0;
  double supError = 0.0;  // max relative error of the reconstruction on the unit circle
};

/// Nested inscribed polygons. Round r adds the vertex orbits of the 2^(r+1)-th
/// roots of unity (or of `seeds` when given, all in round 1).
std::vector<NormApproximation> approximateNorm(const NormOracle& oracle, int n, int rounds,
                                               const std::vector<double>& seeds = {});

// Built-in norms.
PolygonalNorm l1Norm();
PolygonalNorm hexagonalNorm();  // regular hexagon with circumradius 1, vertex at angle 0
PolygonalNorm webUnitBall(int n, double theta);
/// Convex hull of the orbits of points under rotation by pi and 2pi/n.
PolygonalNorm invariantPolygon(const std::vector<Vec2>& points, int n);
NormOracle euclideanOracle(int n = 1);
NormOracle polygonOracle(const PolygonalNorm& q);

/// "l1", "hexagonal", "web:<n>:<theta>"; anything else is read as a norm JSON file path.
PolygonalNorm namedNorm(std::string_view name);
PolygonalNorm parsePolygonalNorm(std::string_view text);
WebMeasure parseWebMeasure(std::string_view text);
std::string serializePolygonalNorm(const PolygonalNorm& q);
std::string serializeWebMeasure(const WebMeasure& m);

}  // namespace flatcur
