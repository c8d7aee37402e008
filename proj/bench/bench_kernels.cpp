#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "flatcur/kernels.h"

using namespace flatcur;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(FLATCUR_FIXTURE_DIR) + "/" + name + ".json");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds(const std::function<void()>& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-24s %10.4f %10.4f %7.2fx  %s\n", name, serial, parallel, serial / parallel, same ? "same" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::stoi(argv[1]) : 3;
  std::printf("threads %d, reps %d\n", kernelThreads(), reps);
  std::printf("%-24s %10s %10s %8s\n", "kernel", "serial s", "omp s", "speedup");

  {
    const auto v = randomVectors(200000, 0);
    const PolygonalNorm q = invariantPolygon({{1.0, 0.3}, {0.2, 0.9}, {-0.5, 0.7}}, 6);
    const WebMeasure m = decomposeNorm(q, 6);
    ReconstructionSweep a, b;
    const double ts = seconds([&] { a = reconstructionSweepSerial(q, m, v); }, reps);
    const double tp = seconds([&] { b = reconstructionSweep(q, m, v); }, reps);
    row("reconstruction", ts, tp, a.maxRelError == b.maxRelError && a.worstIndex == b.worstIndex);
  }
  {
    const auto s = buildSurface(parseSurface(fixture("fig1_right")));
    const auto rep = tightenClosed(s, parseCurve(fixture("fig1_right_c")));
    const PolygonalNorm q = hexagonalNorm();
    MinimalitySweep a, b;
    const double ts = seconds([&] { a = minimalitySweepSerial(s, rep, q, 400, 0); }, reps);
    const double tp = seconds([&] { b = minimalitySweep(s, rep, q, 400, 0); }, reps);
    row("minimality", ts, tp, a.shortest == b.shortest && a.worst == b.worst);
  }
  {
    const auto s = buildSurface(parseSurface(fixture("octagon")));
    const auto rep = tightenClosed(s, parseCurve(fixture("octagon_diag")));
    const BoxPlan plan = smallBoxTransversals(s, 0.2, rep);
    SmallBoxSweep a, b;
    const double ts = seconds([&] { a = smallBoxSweepSerial(s, 0.2, plan, 1000, rep); }, reps);
    const double tp = seconds([&] { b = smallBoxSweep(s, 0.2, plan, 1000, rep); }, reps);
    row("small boxes", ts, tp, a.perBox == b.perBox);
  }
  return 0;
}
