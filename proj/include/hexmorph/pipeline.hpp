#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hexmorph/labeling.hpp"
#include "hexmorph/mesh.hpp"
#include "hexmorph/overlap.hpp"
#include "hexmorph/quality.hpp"
#include "hexmorph/registration.hpp"
#include "hexmorph/transforms.hpp"

namespace hexmorph {

enum class Method { affine, bspline, external };

const char* to_string(Method method);
Method parse_method(std::string_view text);

struct PipelineConfig {
  std::filesystem::path atlas_volume;
  std::filesystem::path target_volume;
  std::filesystem::path atlas_mesh;
  std::filesystem::path atlas_labels;
  std::filesystem::path target_labels;
  std::filesystem::path external_field;
  // Previously written transform (.json or .nii[.gz]) for warp/evaluate.
  std::filesystem::path transform;
  std::filesystem::path output_dir = "hexmorph_out";

  Method method = Method::affine;
  RegistrationConfig registration;
  DomainPolicy domain_policy = DomainPolicy::permissive;

  LabelMode label_mode = LabelMode::centroid;
  std::string label_array = "atlas";

  int block = 2;                          // mesh-from-mask
  std::optional<std::int32_t> mask_label;  // unset: every nonzero voxel

  int inversion_max_iterations = 50;
  double inversion_tolerance = 0.01;

  QualityThresholds quality_thresholds;
  bool write_csv = true;
  bool write_json = true;

  // method=external needs external_field (or transform); affine and
  // bspline need both intensity volumes.
  void validate_for_registration() const;
};

// JSON keys mirror the field names; "registration", "inversion" and
// "quality_thresholds" are nested objects and "report_formats" lists
// "csv"/"json". Relative paths resolve against `base_dir`. Unknown keys
// are rejected.
PipelineConfig parse_pipeline_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct RegisterOutcome {
  Transform transform;
  std::vector<LossRecord> trace;
  double seconds = 0.0;
  std::filesystem::path transform_file;  // what warp/evaluate should load
};

// Writes transform.json (affine or FFD) and loss_trace.csv; bspline also
// writes its affine initialisation and a dense displacement.nii.gz on the
// atlas grid; external re-validates and writes displacement.nii.gz.
RegisterOutcome cmd_register(const PipelineConfig& cfg, std::ostream& log);

// Writes morphed_mesh.vtk.
HexMesh cmd_warp_mesh(const PipelineConfig& cfg, std::ostream& log);

// Labels atlas_mesh from atlas_labels; writes labeled_mesh.vtk.
HexMesh cmd_label_mesh(const PipelineConfig& cfg, std::ostream& log);

struct EvaluateOutcome {
  std::string method;
  OverlapReport overlap;
  double inversion_residual_mm = 0.0;
  int inversion_iterations = 0;
  bool inversion_warning = false;
  std::optional<QualityReport> reference_quality;
  std::optional<QualityReport> morphed_quality;
};

// Pulls atlas labels into target space through the inverted dense form of
// the transform (nearest-label lookup), compares with target_labels, and
// reports mesh quality before and after morphing when atlas_mesh is set.
EvaluateOutcome cmd_evaluate(const PipelineConfig& cfg, std::ostream& log);

// Inverts external_field; writes inverse_field.nii.gz.
InversionResult cmd_invert_field(const PipelineConfig& cfg, std::ostream& log);

// Overlay-grid mesh of atlas_labels (mask_label or all nonzero); writes mesh.vtk.
HexMesh cmd_mesh_from_mask(const PipelineConfig& cfg, std::ostream& log);

// Quality-comparison table of two reports, one row per metric.
std::string quality_comparison_csv(const QualityReport& reference, const QualityReport& morphed);

struct DemoRow {
  std::string method;
  double dice = 0.0;
  double hd_mm = 0.0;
  double hd95_mm = 0.0;
  double scaled_jacobian_fraction = 0.0;
  double aspect_ratio_fraction = 0.0;
  double skew_fraction = 0.0;
  double label_agreement = 0.0;  // elements whose carried label matches the target labels
  double inversion_residual_mm = 0.0;
};

struct DemoOutcome {
  std::vector<DemoRow> rows;  // affine, bspline, external
  double seconds = 0.0;
};

// Synthetic atlas/target pair, ground-truth warp, overlay mesh, then
// register -> warp -> label -> evaluate for all three methods; writes
// summary.csv and summary.json. Files depend only on (seed, size).
DemoOutcome cmd_demo_synthetic(std::uint64_t seed, int size, const std::filesystem::path& output_dir,
                               std::ostream& log, const RegistrationConfig& registration = {});

std::string demo_summary_csv(const DemoOutcome& demo);

}  // namespace hexmorph
