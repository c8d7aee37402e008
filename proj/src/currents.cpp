#include "flatcur/currents.h"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "flatcur/foliation.h"

namespace flatcur {

using json = nlohmann::ordered_json;

namespace {

double relative(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0 ? 0.0 : std::abs(a - b) / scale;
}

double oracleLength(const GeodesicRep& rep, const NormOracle& o) {
  double sum = 0;
  for (const Leg& l : rep.legs()) sum += l.length * o.eval(polar(l.direction));
  return sum;
}

}  // namespace

double liouvilleLength(const SurfaceComplex& s, const WebMeasure& m, const GeodesicRep& rep) {
  if (m.n != s.n)
    throw FlatcurError(ErrorKind::Argument, "measure order " + std::to_string(m.n) + " differs from surface order " +
                                                std::to_string(s.n));
  double sum = 0;
  for (const WebAtom& a : m.atoms) sum += a.weight * thetaLength(rep, s.n, a.theta);
  return sum;
}

Intersection intersectionWithCurve(const SurfaceComplex& s, double theta, const GeodesicRep& rep) {
  Intersection out;
  out.theta = theta;
  out.n = s.n;
  const auto legs = rep.legs();
  for (std::size_t j = 0; j < legs.size(); ++j)
    for (int k = 0; k < s.n; ++k) {
      IntersectionTerm t;
      t.leg = static_cast<int>(j);
      t.k = k;
      t.length = legs[j].length;
      t.direction = legs[j].direction;
      t.value = t.length * std::abs(std::sin(t.direction - theta - kTwoPi * k / s.n));
      out.total += t.value;
      out.terms.push_back(t);
    }
  return out;
}

RefinementReport refinementAdditivityCheck(const SurfaceComplex& coarse, const SurfaceComplex& fine, double theta,
                                           const SurfacePath& path, double tol) {
  RefinementReport r;
  r.m = coarse.n;
  r.n = fine.n;
  r.theta = theta;
  if (r.n % r.m != 0)
    throw FlatcurError(ErrorKind::Argument,
                       "order " + std::to_string(r.n) + " is not a multiple of " + std::to_string(r.m));
  r.k = r.n / r.m;
  if (!(redeclare(coarse.spec, r.k) == fine.spec))
    throw FlatcurError(ErrorKind::Validation, "surfaces do not share their gluing data");
  const GeodesicRep a = tightenClosed(coarse, path);
  const GeodesicRep b = tightenClosed(fine, path);
  r.cat0Coarse = cat0Length(a);
  r.cat0Fine = cat0Length(b);
  r.fine = thetaLength(b, r.n, theta);
  for (int j = 0; j < r.k; ++j) {
    r.coarseTerms.push_back(thetaLength(a, r.m, theta + kTwoPi * j / r.n));
    r.coarse += r.coarseTerms.back();
  }
  r.residual = relative(r.fine, r.coarse);
  r.pass = r.residual <= tol && relative(r.cat0Fine, r.cat0Coarse) <= tol;
  return r;
}

NormSpec polygonalSpec(std::string name, PolygonalNorm q) {
  NormSpec n;
  n.name = std::move(name);
  n.polygon = std::move(q);
  return n;
}

NormSpec oracleSpec(NormOracle o, int depth) {
  NormSpec n;
  n.name = o.name;
  n.polygonal = false;
  n.oracle = std::move(o);
  n.depth = depth;
  return n;
}

std::vector<LengthReport> consistencyReport(const SurfaceComplex& s, const std::vector<CurveInput>& curves,
                                            const std::vector<NormSpec>& norms,
                                            const std::vector<double>& directions, int samples, double tol) {
  std::vector<WebMeasure> measures;
  for (const NormSpec& q : norms) {
    if (q.polygonal) measures.push_back(decomposeNorm(q.polygon, s.n));
    else measures.push_back(approximateNorm(q.oracle, s.n, q.depth).back().measure);
  }
  std::vector<LengthReport> out;
  for (const CurveInput& c : curves) {
    const GeodesicRep rep = tightenClosed(s, c.path);
    LengthReport r;
    r.curve = c.id;
    r.kind = rep.regular ? "regular" : "chain";
    r.cat0 = cat0Length(rep);
    for (std::size_t i = 0; i < norms.size(); ++i) {
      NormLength l;
      l.norm = norms[i].name;
      l.polygonal = norms[i].polygonal;
      l.depth = l.polygonal ? 0 : norms[i].depth;
      l.atoms = static_cast<int>(measures[i].atoms.size());
      l.finsler = l.polygonal ? finslerLength(rep, norms[i].polygon) : oracleLength(rep, norms[i].oracle);
      l.liouville = liouvilleLength(s, measures[i], rep);
      l.residual = l.finsler == 0 ? std::abs(l.liouville) : std::abs(l.liouville - l.finsler) / l.finsler;
      l.pass = !l.polygonal || l.residual <= tol;
      r.pass = r.pass && l.pass && l.liouville >= 0;
      r.norms.push_back(l);
    }
    for (double theta : directions) {
      DirectionLength d;
      d.theta = theta;
      d.length = thetaLength(rep, s.n, theta);
      if (samples > 0) {
        double est = 0;
        for (const Transversal& I : smallBoxTransversals(s, theta, rep).transversals)
          est += empiricalSmallBoxMeasure(s, theta, I, samples, rep).estimate;
        d.empirical = est;
        d.empiricalResidual = relative(est, d.length);
      }
      r.directions.push_back(d);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string lengthReportJson(const std::vector<LengthReport>& reports) {
  json doc = json::array();
  for (const LengthReport& r : reports) {
    json c;
    c["curve"] = r.curve;
    c["kind"] = r.kind;
    c["cat0_length"] = r.cat0;
    c["norms"] = json::array();
    for (const NormLength& l : r.norms) {
      json e = {{"norm", l.norm}, {"polygonal", l.polygonal}};
      if (!l.polygonal) e["depth"] = l.depth;
      e["atoms"] = l.atoms;
      e["finsler_length"] = l.finsler;
      e["liouville_length"] = l.liouville;
      e["residual"] = l.residual;
      e["pass"] = l.pass;
      c["norms"].push_back(e);
    }
    c["theta_lengths"] = json::array();
    for (const DirectionLength& d : r.directions) {
      json e = {{"theta", d.theta}, {"length", d.length}};
      if (d.empirical >= 0) {
        e["small_box"] = d.empirical;
        e["small_box_residual"] = d.empiricalResidual;
      }
      c["theta_lengths"].push_back(e);
    }
    c["pass"] = r.pass;
    doc.push_back(c);
  }
  return doc.dump(2);
}

std::string lengthReportTable(const std::vector<LengthReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-14s %22s %22s %10s %s\n", "curve", "norm", "finsler", "liouville",
                "residual", "ok");
  out << line;
  for (const LengthReport& r : reports) {
    for (const NormLength& l : r.norms) {
      std::snprintf(line, sizeof line, "%-20s %-14s %22.17g %22.17g %10.2e %s\n", r.curve.c_str(), l.norm.c_str(),
                    l.finsler, l.liouville, l.residual, l.polygonal ? (l.pass ? "yes" : "NO") : "-");
      out << line;
    }
    for (const DirectionLength& d : r.directions) {
      std::snprintf(line, sizeof line, "%-20s theta=%-8.4f %22.17g", r.curve.c_str(), d.theta, d.length);
      out << line;
      if (d.empirical >= 0) {
        std::snprintf(line, sizeof line, " %22.17g %10.2e", d.empirical, d.empiricalResidual);
        out << line;
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace flatcur
