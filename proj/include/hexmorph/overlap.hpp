#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hexmorph/volume.hpp"

namespace hexmorph {

// 2|A∩B| / (|A|+|B|). Both empty gives 1, exactly one empty gives 0.
double dice(const BinaryMask& a, const BinaryMask& b);

struct HausdorffResult {
  double hd = 0.0;
  double hd95 = 0.0;
};

// Distances between surface-voxel centers in mm. hd95 is the linearly
// interpolated 95th percentile of both directed distance lists pooled.
// Throws undefined_metric when either mask is empty.
HausdorffResult hausdorff(const BinaryMask& a, const BinaryMask& b);

// For each point in `from`, distance to the nearest point in `to`.
std::vector<double> directed_distances(std::span<const Vec3> from, std::span<const Vec3> to);

// Linear interpolation between closest ranks: position q * (n - 1) in the
// sorted values.
double percentile(std::vector<double> values, double q);

struct OverlapRow {
  std::int32_t label = 0;
  double dice = 0.0;
  std::optional<double> hd;  // empty when one side has no voxels
  std::optional<double> hd95;
  std::int64_t n_a = 0;
  std::int64_t n_b = 0;
};

struct OverlapAggregate {
  // Unweighted means over labels present in both volumes.
  std::optional<double> dice;
  std::optional<double> hd;
  std::optional<double> hd95;
  std::size_t label_count = 0;
};

struct OverlapReport {
  std::vector<OverlapRow> rows;  // ascending label
  OverlapAggregate aggregate;
  std::vector<std::int32_t> only_in_a;
  std::vector<std::int32_t> only_in_b;
};

// Default labels: union of the labels of both volumes, without 0.
OverlapReport overlap_report(const ImageVolume& a, const ImageVolume& b,
                             const std::optional<std::vector<std::int32_t>>& labels = std::nullopt);

// label,dice,hd_mm,hd95_mm,n_a,n_b with "NA" for undefined distances.
std::string overlap_report_csv(const OverlapReport& report);
std::string overlap_report_json(const OverlapReport& report, int indent = 2);
void write_overlap_report(const OverlapReport& report, const std::filesystem::path& csv_path,
                          const std::filesystem::path& json_path);

}  // namespace hexmorph
