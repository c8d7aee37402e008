#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flatcur/foliation.h"
#include "flatcur/geodesic.h"
#include "flatcur/surface.h"

namespace flatcur {

/// Build report: Euler characteristic, genus, cone points, Gauss-Bonnet residual.
std::string surfaceReportJson(const SurfaceComplex& s);

std::string traceJson(const SurfaceComplex& s, const LeafTrace& t, const std::optional<Cylinder>& cyl,
                      const TraceCheck& check);

/// Polygons drawn side by side in their own charts, one <g> layer per class:
/// polygons, leaves, geodesic, cone-points, crossings.
struct SvgScene {
  std::vector<LeafTrace> leaves;
  std::optional<GeodesicRep> geodesic;
  std::vector<CrossingRecord> crossings;
};
std::string renderSvg(const SurfaceComplex& s, const SvgScene& scene);

}  // namespace flatcur
