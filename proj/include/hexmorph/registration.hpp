#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hexmorph/errors.hpp"
#include "hexmorph/transforms.hpp"
#include "hexmorph/volume.hpp"

namespace hexmorph {

struct RegistrationConfig {
  int levels = 3;
  int iterations = 100;  // per level
  // First trial step of each level, as the largest point displacement (mm)
  // it may cause. The line search adapts from there.
  double affine_step_mm = 2.0;
  double ffd_step_mm = 1.0;
  double sample_fraction = 1.0;
  double bending_weight = 0.01;
  double grid_spacing_mm = 8.0;  // finest FFD level
  std::uint64_t seed = 0;
  // A level stops once one accepted step improves the objective by less
  // than this relative amount.
  double relative_tolerance = 1e-7;

  void validate() const;
};

struct LossRecord {
  int level = 0;
  int iteration = 0;
  double mse = 0.0;
  double bending = 0.0;
  double total = 0.0;
};

struct RegistrationResult {
  Transform transform;
  std::vector<LossRecord> trace;
  double final_mse = 0.0;
  double seconds = 0.0;

  std::vector<LossRecord> level_trace(int level) const;
};

// level,iteration,mse,bending,total
void write_loss_trace_csv(const std::vector<LossRecord>& trace, const std::filesystem::path& path);

// Mean squared intensity difference over every fixed voxel center x,
// comparing F(x) with M(T(x)) (trilinear, border clamp).
double mse(const ImageVolume& fixed, const ImageVolume& moving, const Transform& t);

// d mse / d parameters. Affine: 12 entries in AffineTransform::parameters()
// order. FFD: 3 per control point, control index major. The moving-image
// gradient is the exact derivative of the trilinear interpolant.
std::vector<double> mse_gradient(const ImageVolume& fixed, const ImageVolume& moving, const Transform& t);

// Sum over lattice points of the squared second differences of the
// coefficients (mixed terms counted twice), divided by the control count.
double bending_energy(const BSplineFFD& ffd);
std::vector<double> bending_energy_gradient(const BSplineFFD& ffd);

// Coarse-to-fine gradient descent with backtracking line search, starting
// from identity with the translation aligning intensity centroids.
RegistrationResult register_affine(const ImageVolume& fixed, const ImageVolume& moving,
                                   const RegistrationConfig& cfg);

// Minimizes mse + bending_weight * bending_energy over FFD coefficients.
// The lattice spacing halves per level, ending at cfg.grid_spacing_mm; the
// result carries `init` as its pre-affine.
RegistrationResult register_bspline(const ImageVolume& fixed, const ImageVolume& moving,
                                    const AffineTransform& init, const RegistrationConfig& cfg);

}  // namespace hexmorph

namespace hexmorph {

// Raised when a level ends with a higher objective than it started with
// (or the objective became non-finite). Carries the trace so far.
class OptimizationFailure : public Error {
 public:
  OptimizationFailure(const std::string& what, std::vector<LossRecord> trace)
      : Error(ErrorKind::optimization_failure, what), trace_(std::move(trace)) {}
  const std::vector<LossRecord>& trace() const { return trace_; }

 private:
  std::vector<LossRecord> trace_;
};

}  // namespace hexmorph
