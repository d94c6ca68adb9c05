#include "hexmorph/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "hexmorph/errors.hpp"

namespace hexmorph {

namespace {

// Edges leaving each corner, ordered so that det > 0 for a well-formed
// element in VTK ordering.
constexpr int kCornerEdges[8][3] = {{1, 3, 4}, {2, 0, 5}, {3, 1, 6}, {0, 2, 7},
                                    {7, 5, 0}, {4, 6, 1}, {5, 7, 2}, {6, 4, 3}};

constexpr int kEdges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                               {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

constexpr int kHistogramBins = 40;

}  // namespace

double scaled_jacobian(const HexCorners& c) {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 8; ++k) {
    const Vec3 e1 = c[static_cast<std::size_t>(kCornerEdges[k][0])] - c[static_cast<std::size_t>(k)];
    const Vec3 e2 = c[static_cast<std::size_t>(kCornerEdges[k][1])] - c[static_cast<std::size_t>(k)];
    const Vec3 e3 = c[static_cast<std::size_t>(kCornerEdges[k][2])] - c[static_cast<std::size_t>(k)];
    const double lengths = e1.norm() * e2.norm() * e3.norm();
    if (!(lengths > 0.0)) return 0.0;
    const double j = e1.dot(e2.cross(e3)) / lengths;
    worst = std::min(worst, j);
  }
  return std::clamp(worst, -1.0, 1.0);
}

double aspect_ratio(const HexCorners& c) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& e : kEdges) {
    const double len = (c[static_cast<std::size_t>(e[1])] - c[static_cast<std::size_t>(e[0])]).norm();
    lo = std::min(lo, len);
    hi = std::max(hi, len);
  }
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double skew(const HexCorners& p) {
  const Vec3 x1 = (p[1] - p[0]) + (p[2] - p[3]) + (p[5] - p[4]) + (p[6] - p[7]);
  const Vec3 x2 = (p[3] - p[0]) + (p[2] - p[1]) + (p[7] - p[4]) + (p[6] - p[5]);
  const Vec3 x3 = (p[4] - p[0]) + (p[5] - p[1]) + (p[6] - p[2]) + (p[7] - p[3]);
  const double n1 = x1.norm(), n2 = x2.norm(), n3 = x3.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0) || !(n3 > 0.0)) return 1.0;
  const Vec3 u1 = x1 / n1, u2 = x2 / n2, u3 = x3 / n3;
  const double s = std::max({std::abs(u1.dot(u2)), std::abs(u1.dot(u3)), std::abs(u2.dot(u3))});
  return std::min(s, 1.0);
}

namespace {

Histogram make_histogram(double lo, double hi, bool overflow) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(kHistogramBins, 0);
  h.has_overflow = overflow;
  return h;
}

// Bins are [left, right); the top edge belongs to the last bin.
void add(Histogram& h, double v) {
  if (h.has_overflow && !(v <= h.hi)) {
    ++h.overflow;
    return;
  }
  const double t = (std::clamp(v, h.lo, h.hi) - h.lo) / h.bin_width();
  auto bin = static_cast<std::int64_t>(std::floor(t));
  bin = std::clamp<std::int64_t>(bin, 0, static_cast<std::int64_t>(h.counts.size()) - 1);
  ++h.counts[static_cast<std::size_t>(bin)];
}

MetricSummary summarize(const std::vector<double>& values, Histogram hist, std::int64_t passing) {
  MetricSummary s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::int64_t finite = 0;
  for (double v : values) {
    add(hist, v);
    if (!std::isfinite(v)) continue;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
    ++finite;
  }
  s.mean = finite > 0 ? sum / double(finite) : std::numeric_limits<double>::quiet_NaN();
  s.threshold_fraction = double(passing) / double(values.size());
  s.histogram = std::move(hist);
  return s;
}

nlohmann::json summary_json(const MetricSummary& s, const std::string& definition, const std::string& threshold) {
  nlohmann::json j{{"definition", definition}, {"min", s.min},   {"max", s.max},
                   {"mean", s.mean},           {"threshold", threshold}, {"threshold_fraction", s.threshold_fraction}};
  j["histogram"] = {{"lo", s.histogram.lo}, {"hi", s.histogram.hi}, {"counts", s.histogram.counts}};
  if (s.histogram.has_overflow) j["histogram"]["overflow"] = s.histogram.overflow;
  return j;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

QualityReport quality_report(const HexMesh& mesh, const QualityThresholds& thresholds) {
  if (mesh.elements.empty()) throw Error(ErrorKind::degenerate_input, "quality report of an empty mesh");
  QualityReport r;
  r.thresholds = thresholds;
  r.element_count = static_cast<std::int64_t>(mesh.elements.size());
  const std::size_t n = mesh.elements.size();
  r.per_element_scaled_jacobian.reserve(n);
  r.per_element_aspect_ratio.reserve(n);
  r.per_element_skew.reserve(n);
  std::int64_t sj_pass = 0, ar_pass = 0, skew_pass = 0;
  for (std::size_t e = 0; e < n; ++e) {
    const HexCorners c = mesh.corners(e);
    const double sj = scaled_jacobian(c);
    const double ar = aspect_ratio(c);
    const double sk = skew(c);
    r.per_element_scaled_jacobian.push_back(sj);
    r.per_element_aspect_ratio.push_back(ar);
    r.per_element_skew.push_back(sk);
    if (sj > thresholds.scaled_jacobian_above) ++sj_pass;
    if (ar < thresholds.aspect_ratio_below) ++ar_pass;
    if (sk < thresholds.skew_below) ++skew_pass;
    if (!std::isfinite(ar)) ++r.degenerate_count;
  }
  r.scaled_jacobian = summarize(r.per_element_scaled_jacobian, make_histogram(-1.0, 1.0, false), sj_pass);
  r.aspect_ratio = summarize(r.per_element_aspect_ratio, make_histogram(1.0, 5.0, true), ar_pass);
  r.skew = summarize(r.per_element_skew, make_histogram(0.0, 1.0, false), skew_pass);
  return r;
}

std::string quality_report_json(const QualityReport& r, int indent) {
  nlohmann::json j;
  j["element_count"] = r.element_count;
  j["degenerate_count"] = r.degenerate_count;
  j["scaled_jacobian"] =
      summary_json(r.scaled_jacobian, "min over 8 corners of det(e1,e2,e3)/(|e1||e2||e3|)",
                   "> " + fmt(r.thresholds.scaled_jacobian_above));
  j["aspect_ratio"] = summary_json(r.aspect_ratio, "max edge length / min edge length (12 edges)",
                                   "< " + fmt(r.thresholds.aspect_ratio_below));
  j["skew"] = summary_json(r.skew, "max |cos| between normalized principal axes", "< " + fmt(r.thresholds.skew_below));
  return j.dump(indent);
}

void write_quality_histograms_csv(const QualityReport& r, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (f == nullptr) throw Error(ErrorKind::io, "cannot write " + path.string());
  std::fprintf(f, "metric,bin_left,bin_right,count\n");
  auto dump = [&](const char* name, const Histogram& h) {
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      const double left = h.lo + double(b) * h.bin_width();
      const double right = b + 1 == h.counts.size() ? h.hi : h.lo + double(b + 1) * h.bin_width();
      std::fprintf(f, "%s,%s,%s,%lld\n", name, fmt(left).c_str(), fmt(right).c_str(),
                   static_cast<long long>(h.counts[b]));
    }
    if (h.has_overflow) std::fprintf(f, "%s,%s,inf,%lld\n", name, fmt(h.hi).c_str(), static_cast<long long>(h.overflow));
  };
  dump("scaled_jacobian", r.scaled_jacobian.histogram);
  dump("aspect_ratio", r.aspect_ratio.histogram);
  dump("skew", r.skew.histogram);
  if (std::fclose(f) != 0) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace hexmorph
