#pragma once

#include <string>
#include <vector>

#include "flatcur/geodesic.h"
#include "flatcur/norm.h"
#include "flatcur/surface.h"

namespace flatcur {

/// Sum over atoms of weight * theta length. Throws when the measure order
/// differs from the surface order.
double liouvilleLength(const SurfaceComplex& s, const WebMeasure& m, const GeodesicRep& rep);

struct IntersectionTerm {
  int leg = 0;
  int k = 0;
  double length = 0.0;     // |J_j|
  double direction = 0.0;  // leg direction
  double value = 0.0;      // |J_j| |sin(direction - theta - 2 pi k / n)|
};

struct Intersection {
  double theta = 0.0;
  int n = 1;
  double total = 0.0;
  std::vector<IntersectionTerm> terms;
};

/// Theta length of the curve with its per (leg, web direction) breakdown.
Intersection intersectionWithCurve(const SurfaceComplex& s, double theta, const GeodesicRep& rep);

struct RefinementReport {
  int m = 1, n = 1, k = 1;
  double theta = 0.0;
  double fine = 0.0;                // theta length under order n
  std::vector<double> coarseTerms;  // order m lengths at theta + 2 pi j / n
  double coarse = 0.0;
  double cat0Fine = 0.0, cat0Coarse = 0.0;
  double residual = 0.0;  // relative
  bool pass = true;
};

/// Tightens `path` on both surfaces and compares the order n theta length with
/// the sum of order m lengths over the k = n/m rotated directions. Throws when
/// n is not a multiple of m or the fine surface is not the coarse one
/// re-declared.
RefinementReport refinementAdditivityCheck(const SurfaceComplex& coarse, const SurfaceComplex& fine, double theta,
                                           const SurfacePath& path, double tol = 1e-10);

struct NormSpec {
  std::string name;
  bool polygonal = true;
  PolygonalNorm polygon;  // polygonal
  NormOracle oracle;      // otherwise
  int depth = 4;          // approximation rounds for an oracle
};

NormSpec polygonalSpec(std::string name, PolygonalNorm q);
NormSpec oracleSpec(NormOracle o, int depth);

struct NormLength {
  std::string norm;
  bool polygonal = true;
  int depth = 0;
  int atoms = 0;
  double finsler = 0.0;
  double liouville = 0.0;
  double residual = 0.0;  // |liouville - finsler| / finsler
  bool pass = true;       // only asserted for polygonal norms
};

struct DirectionLength {
  double theta = 0.0;
  double length = 0.0;
  double empirical = -1.0;  // small-box estimate, negative when not sampled
  double empiricalResidual = 0.0;
};

struct LengthReport {
  std::string curve;
  std::string kind;
  double cat0 = 0.0;
  std::vector<NormLength> norms;
  std::vector<DirectionLength> directions;
  bool pass = true;
};

struct CurveInput {
  std::string id;
  SurfacePath path;
};

/// One report per curve. `samples` > 0 adds a small-box estimate per direction.
std::vector<LengthReport> consistencyReport(const SurfaceComplex& s, const std::vector<CurveInput>& curves,
                                            const std::vector<NormSpec>& norms,
                                            const std::vector<double>& directions, int samples = 0,
                                            double tol = 1e-9);

std::string lengthReportJson(const std::vector<LengthReport>& reports);
std::string lengthReportTable(const std::vector<LengthReport>& reports);

}  // namespace flatcur
