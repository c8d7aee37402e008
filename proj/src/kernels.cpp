#include "flatcur/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flatcur {

namespace {

double relError(const PolygonalNorm& q, const WebMeasure& m, Vec2 v) {
  const double a = evalNorm(q, v);
  return std::abs(reconstructNorm(m, v) - a) / a;
}

ReconstructionSweep reduceErrors(const std::vector<double>& e) {
  ReconstructionSweep out;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i] > out.maxRelError || out.worstIndex < 0) {
      out.maxRelError = e[i];
      out.worstIndex = static_cast<int>(i);
    }
  return out;
}

double scaleOf(const GeodesicRep& rep) {
  double l = std::numeric_limits<double>::infinity();
  for (const Leg& leg : rep.legs()) l = std::min(l, leg.length);
  return std::isfinite(l) ? l : cat0Length(rep);
}

double perturbedLength(const SurfaceComplex& s, const GeodesicRep& rep, const PolygonalNorm& q, double scale,
                       int i, std::uint64_t seed) {
  static constexpr double kMags[] = {0.02, 0.05, 0.1, 0.2};
  const PerturbedPath p = randomHomotopicPerturbation(s, rep, kMags[i % 4] * scale, seed + i);
  return finslerLength(p.developed, q);
}

MinimalitySweep reduceLengths(const std::vector<double>& len, double tight, double tol) {
  MinimalitySweep out;
  out.count = static_cast<int>(len.size());
  out.tight = tight;
  out.shortest = std::numeric_limits<double>::infinity();
  out.worst = std::numeric_limits<double>::infinity();
  for (double l : len) {
    out.shortest = std::min(out.shortest, l);
    const double r = (l - tight) / tight;
    out.worst = std::min(out.worst, r);
    if (r < -tol) ++out.violations;
  }
  return out;
}

SmallBoxSweep reduceBoxes(std::vector<double> per) {
  SmallBoxSweep out;
  for (double x : per) out.estimate += x;
  out.perBox = std::move(per);
  return out;
}

}  // namespace

std::vector<Vec2> randomVectors(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi), len(0.1, 10.0);
  std::vector<Vec2> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double a = ang(rng);
    out.push_back(polar(a) * len(rng));
  }
  return out;
}

ReconstructionSweep reconstructionSweepSerial(const PolygonalNorm& q, const WebMeasure& m,
                                              const std::vector<Vec2>& v) {
  std::vector<double> e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = relError(q, m, v[i]);
  return reduceErrors(e);
}

ReconstructionSweep reconstructionSweep(const PolygonalNorm& q, const WebMeasure& m, const std::vector<Vec2>& v) {
  std::vector<double> e(v.size());
  const long long count = static_cast<long long>(v.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) e[i] = relError(q, m, v[i]);
  return reduceErrors(e);
}

MinimalitySweep minimalitySweepSerial(const SurfaceComplex& s, const GeodesicRep& rep, const PolygonalNorm& q,
                                      int count, std::uint64_t seed, double tol) {
  const double scale = scaleOf(rep);
  std::vector<double> len(count);
  for (int i = 0; i < count; ++i) len[i] = perturbedLength(s, rep, q, scale, i, seed);
  return reduceLengths(len, finslerLength(rep, q), tol);
}

MinimalitySweep minimalitySweep(const SurfaceComplex& s, const GeodesicRep& rep, const PolygonalNorm& q, int count,
                                std::uint64_t seed, double tol) {
  const double scale = scaleOf(rep);
  std::vector<double> len(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) len[i] = perturbedLength(s, rep, q, scale, i, seed);
  return reduceLengths(len, finslerLength(rep, q), tol);
}

SmallBoxSweep smallBoxSweepSerial(const SurfaceComplex& s, double theta, const BoxPlan& plan, int m,
                                  const GeodesicRep& target) {
  std::vector<double> per(plan.transversals.size());
  for (std::size_t i = 0; i < per.size(); ++i)
    per[i] = empiricalSmallBoxMeasure(s, theta, plan.transversals[i], m, target).estimate;
  return reduceBoxes(std::move(per));
}

SmallBoxSweep smallBoxSweep(const SurfaceComplex& s, double theta, const BoxPlan& plan, int m,
                            const GeodesicRep& target) {
  std::vector<double> per(plan.transversals.size());
  const int count = static_cast<int>(per.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) per[i] = empiricalSmallBoxMeasure(s, theta, plan.transversals[i], m, target).estimate;
  return reduceBoxes(std::move(per));
}

int kernelThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace flatcur
