#pragma once

#include <cstdint>
#include <vector>

#include "flatcur/foliation.h"
#include "flatcur/geodesic.h"
#include "flatcur/norm.h"

namespace flatcur {

// Batch kernels. Each has a serial reference and an OpenMP version that
// returns bit-identical results (per-item work, reduction in index order).

/// `count` vectors, uniform angle and length in [0.1, 10), from a seed.
std::vector<Vec2> randomVectors(int count, std::uint64_t seed);

struct ReconstructionSweep {
  double maxRelError = 0.0;
  int worstIndex = -1;
};
ReconstructionSweep reconstructionSweepSerial(const PolygonalNorm& q, const WebMeasure& m, const std::vector<Vec2>& v);
ReconstructionSweep reconstructionSweep(const PolygonalNorm& q, const WebMeasure& m, const std::vector<Vec2>& v);

struct MinimalitySweep {
  int count = 0;
  double tight = 0.0;     // Finsler length of the representative
  double shortest = 0.0;  // shortest perturbed Finsler length
  double worst = 0.0;     // min over perturbations of (length - tight) / tight
  int violations = 0;     // perturbations below tight by more than tol (relative)
};
/// Perturbation i uses seed `seed + i` and magnitude cycling through
/// {0.02, 0.05, 0.1, 0.2} times the shortest leg or loop length.
MinimalitySweep minimalitySweepSerial(const SurfaceComplex& s, const GeodesicRep& rep, const PolygonalNorm& q,
                                      int count, std::uint64_t seed, double tol = 1e-9);
MinimalitySweep minimalitySweep(const SurfaceComplex& s, const GeodesicRep& rep, const PolygonalNorm& q, int count,
                                std::uint64_t seed, double tol = 1e-9);

struct SmallBoxSweep {
  double estimate = 0.0;
  std::vector<double> perBox;
};
SmallBoxSweep smallBoxSweepSerial(const SurfaceComplex& s, double theta, const BoxPlan& plan, int m,
                                  const GeodesicRep& target);
SmallBoxSweep smallBoxSweep(const SurfaceComplex& s, double theta, const BoxPlan& plan, int m,
                            const GeodesicRep& target);

int kernelThreads();

}  // namespace flatcur
