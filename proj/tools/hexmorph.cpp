// hexmorph: register, morph, label and evaluate hexahedral atlas meshes.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hexmorph/errors.hpp"
#include "hexmorph/pipeline.hpp"

namespace {

using namespace hexmorph;

struct Flags {
  std::string config;
  std::string method;
  bool strict = false;
  bool permissive = false;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string atlas, target, mesh, field, transform, labels, atlas_labels, target_labels, mode, array;
  std::optional<int> block;
  std::optional<std::int32_t> label;
  std::optional<int> max_iter;
  std::optional<double> tol;
  int size = 64;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON pipeline config");
  cmd->add_option("--method", f.method, "affine | bspline | external")
      ->check(CLI::IsMember({"affine", "bspline", "external"}));
  auto* strict = cmd->add_flag("--strict", f.strict, "fail on points outside a transform's domain");
  cmd->add_flag("--permissive", f.permissive, "clamp points outside a transform's domain (default)")->excludes(strict);
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--out", f.out, "output directory");
}

PipelineConfig build_config(const Flags& f) {
  PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : load_pipeline_config(f.config);
  if (!f.method.empty()) cfg.method = parse_method(f.method);
  if (f.strict) cfg.domain_policy = DomainPolicy::strict;
  if (f.permissive) cfg.domain_policy = DomainPolicy::permissive;
  if (f.seed) cfg.registration.seed = *f.seed;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (!f.atlas.empty()) cfg.atlas_volume = f.atlas;
  if (!f.target.empty()) cfg.target_volume = f.target;
  if (!f.mesh.empty()) cfg.atlas_mesh = f.mesh;
  if (!f.field.empty()) cfg.external_field = f.field;
  if (!f.transform.empty()) cfg.transform = f.transform;
  if (!f.labels.empty()) cfg.atlas_labels = f.labels;
  if (!f.atlas_labels.empty()) cfg.atlas_labels = f.atlas_labels;
  if (!f.target_labels.empty()) cfg.target_labels = f.target_labels;
  if (!f.mode.empty()) cfg.label_mode = parse_label_mode(f.mode);
  if (!f.array.empty()) cfg.label_array = f.array;
  if (f.block) cfg.block = *f.block;
  if (f.label) cfg.mask_label = *f.label;
  if (f.max_iter) cfg.inversion_max_iterations = *f.max_iter;
  if (f.tol) cfg.inversion_tolerance = *f.tol;
  if (cfg.block < 1) throw Error(ErrorKind::config, "--block must be >= 1");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Registration-driven morphing of labeled hexahedral meshes"};
  app.require_subcommand(1);
  Flags f;

  auto* reg = app.add_subcommand("register", "estimate or ingest an atlas-to-target transform");
  add_common(reg, f);
  reg->add_option("--atlas", f.atlas, "atlas intensity volume (.nii/.nii.gz)");
  reg->add_option("--target", f.target, "target intensity volume");
  reg->add_option("--field", f.field, "external displacement field (method external)");

  auto* warp = app.add_subcommand("warp-mesh", "apply a transform to mesh nodes");
  add_common(warp, f);
  warp->add_option("--mesh", f.mesh, "input VTK mesh");
  warp->add_option("--transform", f.transform, "transform .json or displacement .nii.gz");
  warp->add_option("--field", f.field, "external displacement field");

  auto* lab = app.add_subcommand("label-mesh", "transfer voxel labels to mesh elements");
  add_common(lab, f);
  lab->add_option("--mesh", f.mesh, "input VTK mesh");
  lab->add_option("--labels", f.labels, "label volume");
  lab->add_option("--mode", f.mode, "centroid | vote")->check(CLI::IsMember({"centroid", "vote"}));
  lab->add_option("--array", f.array, "label array name");

  auto* ev = app.add_subcommand("evaluate", "overlap and mesh-quality reports");
  add_common(ev, f);
  ev->add_option("--transform", f.transform, "transform .json or displacement .nii.gz");
  ev->add_option("--field", f.field, "external displacement field");
  ev->add_option("--atlas-labels", f.atlas_labels, "atlas label volume");
  ev->add_option("--target-labels", f.target_labels, "target label volume");
  ev->add_option("--mesh", f.mesh, "atlas mesh for quality comparison");
  ev->add_option("--max-iter", f.max_iter, "inversion iterations");
  ev->add_option("--tol", f.tol, "inversion tolerance (mm)");

  auto* inv = app.add_subcommand("invert-field", "invert a dense displacement field");
  add_common(inv, f);
  inv->add_option("--field", f.field, "displacement field")->required();
  inv->add_option("--max-iter", f.max_iter, "iterations");
  inv->add_option("--tol", f.tol, "tolerance (mm)");

  auto* mfm = app.add_subcommand("mesh-from-mask", "overlay-grid hexahedral mesh of a label mask");
  add_common(mfm, f);
  mfm->add_option("--labels", f.labels, "label volume")->required();
  mfm->add_option("--label", f.label, "label to mesh (default: all nonzero)");
  mfm->add_option("--block", f.block, "voxels per element edge");

  auto* demo = app.add_subcommand("demo", "synthetic end-to-end comparison of all three methods");
  add_common(demo, f);
  demo->add_option("--size", f.size, "phantom edge length in voxels")->check(CLI::Range(8, 512));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const PipelineConfig cfg = build_config(f);
    if (reg->parsed()) cmd_register(cfg, std::cout);
    else if (warp->parsed()) cmd_warp_mesh(cfg, std::cout);
    else if (lab->parsed()) cmd_label_mesh(cfg, std::cout);
    else if (ev->parsed()) cmd_evaluate(cfg, std::cout);
    else if (inv->parsed()) cmd_invert_field(cfg, std::cout);
    else if (mfm->parsed()) cmd_mesh_from_mask(cfg, std::cout);
    else if (demo->parsed()) {
      const std::filesystem::path out = f.out.empty() ? std::filesystem::path("hexmorph_demo") : cfg.output_dir;
      cmd_demo_synthetic(f.seed.value_or(0), f.size, out, std::cout, cfg.registration);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
