#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <utility>
#include <vector>

#include "flatcur/geodesic.h"
#include "flatcur/surface.h"

namespace testsupport {

inline std::string readFixture(const std::string& name) {
  std::ifstream in(std::string(FLATCUR_FIXTURE_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline flatcur::SurfaceSpec specFixture(const std::string& name) {
  return flatcur::parseSurface(readFixture(name + ".json"));
}

inline flatcur::SurfaceComplex surfaceFixture(const std::string& name) {
  return flatcur::buildSurface(specFixture(name));
}

inline flatcur::SurfacePath curveFixture(const std::string& name) {
  return flatcur::parseCurve(readFixture(name + ".json"));
}

struct FixtureSet {
  std::string surface;
  std::vector<std::string> curves;
};

inline std::vector<FixtureSet> allFixtures() {
  return {{"octagon", {"octagon_vertical", "octagon_diag", "octagon_long", "octagon_mixed"}},
          {"fig1_left", {"fig1_left_a", "fig1_left_b", "fig1_left_c"}},
          {"fig1_right", {"fig1_right_a", "fig1_right_b", "fig1_right_c"}},
          {"double_octagon", {"double_octagon_a", "double_octagon_b", "double_octagon_c"}}};
}

}  // namespace testsupport
