#include "hexmorph/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "hexmorph/errors.hpp"
#include "hexmorph/octree.hpp"

namespace hexmorph {

namespace {

void require_same_grid(const Geometry& a, const Geometry& b) {
  if (!a.matches(b)) throw Error(ErrorKind::incompatible_grids, "masks are on different grids");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_grid(a.geometry, b.geometry);
  std::int64_t na = 0, nb = 0, both = 0;
  for (std::size_t n = 0; n < a.bits.size(); ++n) {
    const bool x = a.bits[n] != 0, y = b.bits[n] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * double(both) / double(na + nb);
}

std::vector<double> directed_distances(std::span<const Vec3> from, std::span<const Vec3> to) {
  std::vector<double> out;
  if (from.empty()) return out;
  if (to.empty()) throw Error(ErrorKind::undefined_metric, "distance to an empty point set");
  PointOctree tree({to.begin(), to.end()}, std::vector<std::int32_t>(to.size(), 0));
  out.reserve(from.size());
  for (const Vec3& p : from) out.push_back(tree.nearest(p).distance);
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::undefined_metric, "percentile of no values");
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - double(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

HausdorffResult hausdorff(const BinaryMask& a, const BinaryMask& b) {
  require_same_grid(a.geometry, b.geometry);
  const std::vector<Vec3> sa = surface_voxels(a);
  const std::vector<Vec3> sb = surface_voxels(b);
  if (sa.empty() || sb.empty()) throw Error(ErrorKind::undefined_metric, "Hausdorff distance of an empty mask");

  std::vector<double> pooled = directed_distances(sa, sb);
  const std::vector<double> ba = directed_distances(sb, sa);
  pooled.insert(pooled.end(), ba.begin(), ba.end());
  HausdorffResult r;
  r.hd = *std::max_element(pooled.begin(), pooled.end());
  r.hd95 = percentile(std::move(pooled), 0.95);
  return r;
}

OverlapReport overlap_report(const ImageVolume& a, const ImageVolume& b,
                             const std::optional<std::vector<std::int32_t>>& labels) {
  if (a.kind() != VolumeKind::label || b.kind() != VolumeKind::label)
    throw Error(ErrorKind::format, "overlap needs two label volumes");
  require_same_grid(a.geometry(), b.geometry());

  const auto ha = label_histogram(a);
  const auto hb = label_histogram(b);
  std::set<std::int32_t> wanted;
  if (labels) {
    wanted.insert(labels->begin(), labels->end());
  } else {
    for (const auto& [l, n] : ha) wanted.insert(l);
    for (const auto& [l, n] : hb) wanted.insert(l);
    wanted.erase(0);
  }

  OverlapReport report;
  double sum_dice = 0.0, sum_hd = 0.0, sum_hd95 = 0.0;
  for (std::int32_t l : wanted) {
    OverlapRow row;
    row.label = l;
    const auto ia = ha.find(l);
    const auto ib = hb.find(l);
    row.n_a = ia == ha.end() ? 0 : ia->second;
    row.n_b = ib == hb.end() ? 0 : ib->second;
    const BinaryMask ma = binary_mask(a, l);
    const BinaryMask mb = binary_mask(b, l);
    row.dice = dice(ma, mb);
    if (row.n_a > 0 && row.n_b > 0) {
      const HausdorffResult h = hausdorff(ma, mb);
      row.hd = h.hd;
      row.hd95 = h.hd95;
      sum_dice += row.dice;
      sum_hd += h.hd;
      sum_hd95 += h.hd95;
      ++report.aggregate.label_count;
    } else if (row.n_a > 0) {
      report.only_in_a.push_back(l);
    } else if (row.n_b > 0) {
      report.only_in_b.push_back(l);
    }
    report.rows.push_back(row);
  }
  if (report.aggregate.label_count > 0) {
    const double n = double(report.aggregate.label_count);
    report.aggregate.dice = sum_dice / n;
    report.aggregate.hd = sum_hd / n;
    report.aggregate.hd95 = sum_hd95 / n;
  }
  return report;
}

std::string overlap_report_csv(const OverlapReport& report) {
  std::string out = "label,dice,hd_mm,hd95_mm,n_a,n_b\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); };
  for (const OverlapRow& r : report.rows) {
    out += std::to_string(r.label) + "," + format_number(r.dice) + "," + opt(r.hd) + "," + opt(r.hd95) + "," +
           std::to_string(r.n_a) + "," + std::to_string(r.n_b) + "\n";
  }
  return out;
}

std::string overlap_report_json(const OverlapReport& report, int indent) {
  nlohmann::json j;
  j["conventions"] = {
      {"distance_units", "mm"},
      {"surface", "centers of set voxels with a 6-connected unset or off-grid neighbor"},
      {"hd95", "linear-interpolation 95th percentile of both directed distance lists pooled"},
      {"aggregate", "unweighted mean over labels present in both volumes"},
      {"background", "label 0 excluded unless requested"},
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const OverlapRow& r : report.rows) {
    rows.push_back({{"label", r.label},
                    {"dice", r.dice},
                    {"hd_mm", optional_json(r.hd)},
                    {"hd95_mm", optional_json(r.hd95)},
                    {"n_a", r.n_a},
                    {"n_b", r.n_b}});
  }
  j["rows"] = rows;
  j["aggregate"] = {{"dice", optional_json(report.aggregate.dice)},
                    {"hd_mm", optional_json(report.aggregate.hd)},
                    {"hd95_mm", optional_json(report.aggregate.hd95)},
                    {"label_count", report.aggregate.label_count}};
  j["only_in_a"] = report.only_in_a;
  j["only_in_b"] = report.only_in_b;
  return j.dump(indent) + "\n";
}

void write_overlap_report(const OverlapReport& report, const std::filesystem::path& csv_path,
                          const std::filesystem::path& json_path) {
  write_text(csv_path, overlap_report_csv(report));
  write_text(json_path, overlap_report_json(report));
}

}  // namespace hexmorph
