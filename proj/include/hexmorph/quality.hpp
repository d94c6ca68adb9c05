#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hexmorph/geometry.hpp"
#include "hexmorph/mesh.hpp"

namespace hexmorph {

using HexCorners = std::array<Vec3, 8>;

// Minimum over the 8 corners of det[e1 e2 e3] / (|e1||e2||e3|) with the
// edges leaving each corner taken in VTK-orientation order. Any zero-length
// edge gives 0. Corner-only; the element center is not sampled.
double scaled_jacobian(const HexCorners& c);

// Longest over shortest of the 12 edges; +infinity if an edge has zero length.
double aspect_ratio(const HexCorners& c);

// Largest |cos| between the three normalized principal axes; 1 if an axis
// vanishes.
double skew(const HexCorners& c);

struct QualityThresholds {
  double scaled_jacobian_above = 0.5;
  double aspect_ratio_below = 3.0;
  double skew_below = 0.5;
};

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::int64_t> counts;  // uniform bins over [lo, hi]
  std::int64_t overflow = 0;         // values above hi (aspect ratio only)
  bool has_overflow = false;

  double bin_width() const { return (hi - lo) / double(counts.size()); }
};

struct MetricSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double threshold_fraction = 0.0;  // passing the metric's threshold
  Histogram histogram;
};

struct QualityReport {
  std::int64_t element_count = 0;
  // Elements with a zero-length edge; excluded from aspect-ratio min/max/mean,
  // counted in its overflow bin and as failing its threshold.
  std::int64_t degenerate_count = 0;
  QualityThresholds thresholds;
  MetricSummary scaled_jacobian;
  MetricSummary aspect_ratio;
  MetricSummary skew;

  std::vector<double> per_element_scaled_jacobian;
  std::vector<double> per_element_aspect_ratio;
  std::vector<double> per_element_skew;
};

// Histograms: scaled Jacobian [-1, 1], aspect ratio [1, 5] plus overflow,
// skew [0, 1]; 40 bins each.
QualityReport quality_report(const HexMesh& mesh, const QualityThresholds& thresholds = {});

// JSON (self-describing metric definitions, summaries, histograms).
std::string quality_report_json(const QualityReport& report, int indent = 2);
// metric,bin_left,bin_right,count
void write_quality_histograms_csv(const QualityReport& report, const std::filesystem::path& path);

}  // namespace hexmorph
