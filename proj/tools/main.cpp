#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flatcur/currents.h"
#include "flatcur/foliation.h"
#include "flatcur/geodesic.h"
#include "flatcur/kernels.h"
#include "flatcur/norm.h"
#include "flatcur/render.h"
#include "flatcur/surface.h"

using namespace flatcur;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string command;
  double epsLen = -1.0;
  double epsAng = 1e-9;
  double tol = -1.0;
  std::uint64_t seed = 0;
  std::string format = "json";
  std::string svg;
};

RunConfig cfg;

std::string resolve(const std::string& path, const fs::path& base = {}) {
  std::vector<fs::path> tries{path};
  if (!base.empty()) tries.push_back(base / path);
  if (const char* env = std::getenv("FLATCUR_FIXTURES")) tries.push_back(fs::path(env) / path);
  tries.push_back(fs::path(FLATCUR_FIXTURE_DIR) / path);
  for (const auto& p : tries)
    if (fs::is_regular_file(p)) return p.string();
  throw FlatcurError(ErrorKind::Argument, "cannot find " + path);
}

std::string slurp(const std::string& path, const fs::path& base = {}) {
  std::ifstream in(resolve(path, base));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SurfaceComplex loadSurface(const std::string& path, const fs::path& base = {}) {
  return buildSurface(parseSurface(slurp(path, base)), Tolerances{cfg.epsLen, cfg.epsAng});
}

SurfacePath loadCurve(const std::string& path, const fs::path& base = {}) { return parseCurve(slurp(path, base)); }

TightenOptions tightenOptions() {
  TightenOptions o;
  o.tol = cfg.tol;
  return o;
}

NormSpec normSpec(const std::string& name, int depth) {
  if (name == "euclidean") return oracleSpec(euclideanOracle(1), depth);
  return polygonalSpec(name, namedNorm(name));
}

void emit(const json& result) {
  json doc;
  doc["command"] = cfg.command;
  doc["seed"] = cfg.seed;
  doc["result"] = result;
  std::cout << doc.dump(2) << "\n";
}

void writeSvg(const std::string& text) {
  std::ofstream out(cfg.svg);
  if (!out) throw FlatcurError(ErrorKind::Argument, "cannot write " + cfg.svg);
  out << text;
}

int cmdValidate(const std::string& surface) {
  const SurfaceComplex s = loadSurface(surface);
  if (cfg.format == "table") {
    std::printf("# seed %llu\n", static_cast<unsigned long long>(cfg.seed));
    std::printf("n %d  genus %d  euler %d  gauss-bonnet residual %.3e\n", s.n, s.genus, s.eulerCharacteristic,
                s.gaussBonnetResidual);
    for (const ConePoint& c : s.conePoints) std::printf("cone %d  angle %.17g pi\n", c.id, c.totalAngle / kPi);
  } else {
    emit(json::parse(surfaceReportJson(s)));
  }
  if (!cfg.svg.empty()) writeSvg(renderSvg(s, {}));
  return 0;
}

int cmdTighten(const std::string& surface, const std::string& curve) {
  const SurfaceComplex s = loadSurface(surface);
  const GeodesicRep rep = tightenClosed(s, loadCurve(curve), tightenOptions());
  const GeodesicReport check = verifyGeodesic(s, rep, cfg.epsAng);
  emit(json::parse(geodesicJson(s, rep, check)));
  if (!cfg.svg.empty()) {
    SvgScene scene;
    scene.geodesic = rep;
    writeSvg(renderSvg(s, scene));
  }
  return check.pass ? 0 : 1;
}

struct LengthsArgs {
  std::string surface;
  std::vector<std::string> curves;
  std::vector<std::string> norms{"l1"};
  std::vector<double> theta;
  int samples = 0;
  int depth = 4;
  int perturbations = 0;
};

json minimalityJson(const SurfaceComplex& s, const GeodesicRep& rep, const std::vector<NormSpec>& norms, int count,
                    bool& pass) {
  json out = json::array();
  for (const NormSpec& q : norms) {
    if (!q.polygonal) continue;
    const MinimalitySweep m = minimalitySweep(s, rep, q.polygon, count, cfg.seed);
    pass = pass && m.violations == 0;
    out.push_back({{"norm", q.name},
                   {"count", m.count},
                   {"tight", m.tight},
                   {"shortest", m.shortest},
                   {"worst_relative", m.worst},
                   {"violations", m.violations}});
  }
  return out;
}

int cmdLengths(const LengthsArgs& a) {
  const SurfaceComplex s = loadSurface(a.surface);
  std::vector<CurveInput> curves;
  for (const auto& c : a.curves) curves.push_back({fs::path(c).stem().string(), loadCurve(c)});
  std::vector<NormSpec> norms;
  for (const auto& n : a.norms) norms.push_back(normSpec(n, a.depth));
  const auto reports = consistencyReport(s, curves, norms, a.theta, a.samples);
  bool pass = true;
  for (const auto& r : reports) pass = pass && r.pass;
  json minimality = json::array();
  if (a.perturbations > 0)
    for (const auto& c : curves)
      minimality.push_back({{"curve", c.id},
                            {"norms", minimalityJson(s, tightenClosed(s, c.path, tightenOptions()), norms,
                                                     a.perturbations, pass)}});
  if (cfg.format == "table") {
    std::printf("# seed %llu\n", static_cast<unsigned long long>(cfg.seed));
    std::fputs(lengthReportTable(reports).c_str(), stdout);
    std::printf("%s\n", pass ? "pass" : "FAIL");
  } else {
    json result;
    result["reports"] = json::parse(lengthReportJson(reports));
    if (a.perturbations > 0) result["minimality"] = minimality;
    result["pass"] = pass;
    emit(result);
  }
  return pass ? 0 : 1;
}

int cmdDecompose(const std::string& normName, int n) {
  const PolygonalNorm q = namedNorm(normName);
  const WebMeasure m = decomposeNorm(q, n);
  json result = json::parse(serializeWebMeasure(m));
  result["total_mass"] = m.totalMass();
  result["dual_perimeter"] = dualPerimeter(q);
  const auto check = reconstructionSweep(q, m, randomVectors(10000, cfg.seed));
  result["max_reconstruction_error"] = check.maxRelError;
  emit(result);
  return 0;
}

struct TraceArgs {
  std::string surface;
  double theta = 0.0;
  int direction = 0;
  std::vector<double> start;
  std::string turning = "left";
  double maxLength = 50.0;
  int crossings = 0;
};

int cmdTrace(const TraceArgs& a) {
  const SurfaceComplex s = loadSurface(a.surface);
  int poly = 0;
  Vec2 p{};
  if (a.start.empty()) {
    for (Vec2 v : s.spec.polygons[0].vertices) p += v;
    p = p / static_cast<double>(s.spec.polygons[0].vertices.size());
  } else {
    if (a.start.size() != 3) throw FlatcurError(ErrorKind::Argument, "--start takes polygon id, x, y");
    poly = s.polygonIndex(static_cast<int>(a.start[0]));
    p = {a.start[1], a.start[2]};
  }
  if (a.turning != "left" && a.turning != "right") throw FlatcurError(ErrorKind::Argument, "turning is left or right");
  const Turning turning = a.turning == "left" ? Turning::Left : Turning::Right;
  const LeafStart start{{s.locate(poly, p), p}, polar(a.theta + kTwoPi * a.direction / s.n), -1};
  const LeafTrace t = traceLeaf(s, start, a.theta, turning, a.maxLength);
  const TraceCheck check = verifyLeafTrace(s, t, cfg.epsAng);
  std::optional<Cylinder> cyl;
  if (t.termination == Termination::ClosedUp && t.events.empty()) cyl = detectCylinder(s, t, cfg.epsLen);
  json result = json::parse(traceJson(s, t, cyl, check));
  SvgScene scene;
  scene.leaves.push_back(t);
  if (a.crossings > 0) {
    const auto spec = defaultLeafSamples(s, a.theta, a.crossings, std::min(a.maxLength, 6.0));
    const CrossingStatistics st = crossingStatistics(s, a.theta, spec, cfg.epsAng);
    result["crossing_statistics"] = {{"leaves", st.leaves},
                                     {"crossings", st.crossings},
                                     {"overlaps", st.overlaps},
                                     {"angles_k", st.anglesK},
                                     {"max_order", st.maxOrder},
                                     {"triples", st.triples},
                                     {"violations", st.violations},
                                     {"worst_slack", st.worstSlack},
                                     {"undetermined", st.undetermined},
                                     {"truncated", st.truncated},
                                     {"pass", st.pass}};
    std::vector<LeafTrace> more;
    for (const LeafStart& b : spec.starts) more.push_back(traceLeaf(s, b, a.theta, turning, spec.maxLength));
    for (std::size_t i = 0; i < more.size(); ++i)
      for (std::size_t j = i + 1; j < more.size(); ++j)
        for (const auto& c : crossingAngle(s, more[i], more[j], nullptr, 0, 1, cfg.epsAng)) scene.crossings.push_back(c);
    for (auto& m : more) scene.leaves.push_back(std::move(m));
  }
  emit(result);
  if (!cfg.svg.empty()) writeSvg(renderSvg(s, scene));
  return check.pass ? 0 : 1;
}

int cmdReport(const std::string& suitePath) {
  const std::string path = resolve(suitePath);
  const fs::path base = fs::path(path).parent_path();
  const json suite = json::parse(slurp(path));
  if (suite.contains("seed")) cfg.seed = suite["seed"].get<std::uint64_t>();
  json entries = json::array();
  bool pass = true;
  for (const auto& e : suite.at("entries")) {
    const std::string surface = e.at("surface").get<std::string>();
    const SurfaceComplex s = loadSurface(surface, base);
    std::vector<CurveInput> curves;
    for (const auto& c : e.value("curves", json::array()))
      curves.push_back({fs::path(c.get<std::string>()).stem().string(), loadCurve(c.get<std::string>(), base)});
    std::vector<NormSpec> norms;
    const int depth = e.value("depth", 4);
    for (const auto& n : e.value("norms", json::array({"l1"}))) norms.push_back(normSpec(n.get<std::string>(), depth));
    const auto theta = e.value("theta", std::vector<double>{});
    const auto reports = consistencyReport(s, curves, norms, theta, e.value("samples", 0));
    bool ok = true;
    for (const auto& r : reports) ok = ok && r.pass;
    json entry;
    entry["surface"] = surface;
    entry["genus"] = s.genus;
    entry["cone_angles_over_pi"] = json::array();
    for (const ConePoint& c : s.conePoints) entry["cone_angles_over_pi"].push_back(c.totalAngle / kPi);
    entry["gauss_bonnet_residual"] = s.gaussBonnetResidual;
    entry["lengths"] = json::parse(lengthReportJson(reports));
    if (const int k = e.value("perturbations", 0); k > 0) {
      entry["minimality"] = json::array();
      for (const auto& c : curves)
        entry["minimality"].push_back(
            {{"curve", c.id}, {"norms", minimalityJson(s, tightenClosed(s, c.path, tightenOptions()), norms, k, ok)}});
    }
    entry["pass"] = ok;
    pass = pass && ok;
    entries.push_back(entry);
  }
  emit({{"entries", entries}, {"pass", pass}});
  return pass ? 0 : 1;
}

int fail(const std::string& kind, const std::string& message) {
  json doc;
  doc["command"] = cfg.command;
  doc["seed"] = cfg.seed;
  doc["error"] = {{"kind", kind}, {"message", message}};
  std::cout << doc.dump(2) << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flat cone surfaces, geodesics, foliations and length currents"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--eps-len", cfg.epsLen, "length tolerance (default 1e-9 * diameter)");
  app.add_option("--eps-ang", cfg.epsAng, "angle tolerance")->check(CLI::PositiveNumber);
  app.add_option("--tol", cfg.tol, "tightening tolerance (default 1e-10 * initial length)");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--format", cfg.format, "json | table")->check(CLI::IsMember({"json", "table"}));
  app.add_option("--svg", cfg.svg, "also write an SVG figure here");

  std::string surface, curve, suite;
  auto* validate = app.add_subcommand("validate", "build a surface and report its invariants");
  validate->add_option("surface", surface)->required();

  auto* tighten = app.add_subcommand("tighten", "geodesic representative of a closed curve");
  tighten->add_option("surface", surface)->required();
  tighten->add_option("curve", curve)->required();

  LengthsArgs la;
  auto* lengths = app.add_subcommand("lengths", "Finsler, theta and Liouville lengths");
  lengths->add_option("surface", la.surface)->required();
  lengths->add_option("curves", la.curves)->required();
  lengths->add_option("--norm", la.norms, "l1, hexagonal, web:<n>:<theta>, euclidean or a norm file")->take_all();
  lengths->add_option("--theta", la.theta, "directions for theta lengths")->take_all();
  lengths->add_option("--samples", la.samples, "small-box samples per box (0: off)");
  lengths->add_option("--depth", la.depth, "approximation rounds for the euclidean oracle");
  lengths->add_option("--perturbations", la.perturbations, "seeded homotopic perturbations per curve and norm");

  std::string normName = "l1";
  int order = 1;
  auto* decompose = app.add_subcommand("decompose", "web measure of a polygonal norm");
  decompose->add_option("--norm", normName)->required();
  decompose->add_option("-n", order, "rotation order")->required();

  TraceArgs ta;
  auto* trace = app.add_subcommand("trace", "trace a leaf of the multi-foliation");
  trace->add_option("surface", ta.surface)->required();
  trace->add_option("--theta", ta.theta);
  trace->add_option("--direction", ta.direction, "web direction index k: theta + 2 pi k / n");
  trace->add_option("--start", ta.start, "polygon id, x, y (default: centre of the first polygon)")->expected(3);
  trace->add_option("--turning", ta.turning, "left | right");
  trace->add_option("--max-length", ta.maxLength);
  trace->add_option("--crossings", ta.crossings, "sample this many leaves per edge and report crossings");

  auto* report = app.add_subcommand("report", "batch run over a suite file");
  report->add_option("suite", suite)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    cfg.command = app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name();
    return fail("argument", e.what());
  }
  cfg.command = app.get_subcommands()[0]->get_name();
  try {
    if (validate->parsed()) return cmdValidate(surface);
    if (tighten->parsed()) return cmdTighten(surface, curve);
    if (lengths->parsed()) return cmdLengths(la);
    if (decompose->parsed()) return cmdDecompose(normName, order);
    if (trace->parsed()) return cmdTrace(ta);
    if (report->parsed()) return cmdReport(suite);
  } catch (const FlatcurError& e) {
    return fail(errorKindName(e.kind()), e.what());
  } catch (const json::exception& e) {
    return fail("syntax", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
