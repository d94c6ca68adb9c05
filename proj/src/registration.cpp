#include "hexmorph/registration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "hexmorph/errors.hpp"

namespace hexmorph {

void RegistrationConfig::validate() const {
  if (levels < 1) throw Error(ErrorKind::config, "registration levels must be >= 1");
  if (iterations < 0) throw Error(ErrorKind::config, "registration iterations must be >= 0");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw Error(ErrorKind::config, "sample_fraction must be in (0, 1]");
  if (!(bending_weight >= 0.0)) throw Error(ErrorKind::config, "bending_weight must be >= 0");
  if (!(grid_spacing_mm > 0.0)) throw Error(ErrorKind::config, "grid_spacing_mm must be > 0");
  if (!(affine_step_mm > 0.0) || !(ffd_step_mm > 0.0))
    throw Error(ErrorKind::config, "step sizes must be > 0");
  if (!(relative_tolerance >= 0.0)) throw Error(ErrorKind::config, "relative_tolerance must be >= 0");
}

std::vector<LossRecord> RegistrationResult::level_trace(int level) const {
  std::vector<LossRecord> out;
  std::copy_if(trace.begin(), trace.end(), std::back_inserter(out),
               [level](const LossRecord& r) { return r.level == level; });
  return out;
}

void write_loss_trace_csv(const std::vector<LossRecord>& trace, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (f == nullptr) throw Error(ErrorKind::io, "cannot write " + path.string());
  std::fprintf(f, "level,iteration,mse,bending,total\n");
  for (const LossRecord& r : trace)
    std::fprintf(f, "%d,%d,%.17g,%.17g,%.17g\n", r.level, r.iteration, r.mse, r.bending, r.total);
  if (std::fclose(f) != 0) throw Error(ErrorKind::io, "write failed for " + path.string());
}

namespace {

struct SampleSet {
  std::vector<Vec3> points;
  std::vector<double> values;
};

SampleSet make_samples(const ImageVolume& fixed, double fraction, std::uint64_t seed) {
  const Geometry& g = fixed.geometry();
  const std::int64_t n = g.voxel_count();
  std::vector<std::int64_t> chosen(static_cast<std::size_t>(n));
  std::iota(chosen.begin(), chosen.end(), std::int64_t{0});
  if (fraction < 1.0) {
    const auto m = std::max<std::int64_t>(1, std::llround(fraction * double(n)));
    std::mt19937_64 rng(seed);
    for (std::int64_t i = 0; i < m; ++i) {
      const auto j = i + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n - i));
      std::swap(chosen[static_cast<std::size_t>(i)], chosen[static_cast<std::size_t>(j)]);
    }
    chosen.resize(static_cast<std::size_t>(m));
    std::sort(chosen.begin(), chosen.end());
  }
  SampleSet s;
  s.points.reserve(chosen.size());
  s.values.reserve(chosen.size());
  const Dims3& d = g.dims();
  for (std::int64_t idx : chosen) {
    const std::int64_t i = idx % d[0];
    const std::int64_t j = (idx / d[0]) % d[1];
    const std::int64_t k = idx / (d[0] * d[1]);
    s.points.push_back(g.voxel_center(i, j, k));
    s.values.push_back(fixed.values()[static_cast<std::size_t>(idx)]);
  }
  return s;
}

// Index 0 is the coarsest level.
std::vector<ImageVolume> pyramid(const ImageVolume& vol, int levels) {
  std::vector<ImageVolume> out{vol};
  for (int l = 1; l < levels; ++l) {
    const Dims3& d = out.back().geometry().dims();
    if (d[0] < 2 || d[1] < 2 || d[2] < 2) out.push_back(out.back());
    else out.push_back(downsample2x(out.back()));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void require_intensity(const ImageVolume& fixed, const ImageVolume& moving) {
  if (fixed.kind() != VolumeKind::intensity || moving.kind() != VolumeKind::intensity)
    throw Error(ErrorKind::format, "registration needs two intensity volumes");
}

using Matrix12 = Eigen::Matrix<double, 12, 12>;

// T(x) = A (x - c) + c + t with parameters (A row-major, t).
class AffineObjective {
 public:
  AffineObjective(const SampleSet& samples, const ImageVolume& moving, const Vec3& center)
      : samples_(samples), moving_(moving), center_(center) {}

  double value(const std::vector<double>& theta) const {
    const Mat3 a = matrix(theta);
    const Vec3 shift = center_ + Vec3(theta[9], theta[10], theta[11]);
    double sum = 0.0;
    for (std::size_t s = 0; s < samples_.points.size(); ++s) {
      const Vec3 y = a * (samples_.points[s] - center_) + shift;
      const double r = sample_trilinear(moving_, y) - samples_.values[s];
      sum += r * r;
    }
    return sum / double(samples_.points.size());
  }

  // With `normal`, also accumulates the Gauss-Newton matrix (2/N) sum J^T J.
  double value_gradient(const std::vector<double>& theta, std::vector<double>& grad,
                        Matrix12* normal = nullptr) const {
    const Mat3 a = matrix(theta);
    const Vec3 shift = center_ + Vec3(theta[9], theta[10], theta[11]);
    grad.assign(12, 0.0);
    if (normal) normal->setZero();
    double sum = 0.0;
    Vec3 gm;
    Eigen::Matrix<double, 12, 1> jac;
    for (std::size_t s = 0; s < samples_.points.size(); ++s) {
      const Vec3 xc = samples_.points[s] - center_;
      const Vec3 y = a * xc + shift;
      const double r = sample_trilinear_gradient(moving_, y, gm) - samples_.values[s];
      sum += r * r;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) jac[3 * i + j] = gm[i] * xc[j];
        jac[9 + i] = gm[i];
      }
      for (int i = 0; i < 12; ++i) grad[static_cast<std::size_t>(i)] += r * jac[i];
      if (normal) normal->selfadjointView<Eigen::Lower>().rankUpdate(jac);
    }
    const double n = double(samples_.points.size());
    for (double& g : grad) g *= 2.0 / n;
    if (normal) {
      *normal = normal->selfadjointView<Eigen::Lower>();
      *normal *= 2.0 / n;
    }
    return sum / n;
  }

  static Mat3 matrix(const std::vector<double>& theta) {
    Mat3 a;
    a << theta[0], theta[1], theta[2], theta[3], theta[4], theta[5], theta[6], theta[7], theta[8];
    return a;
  }

 private:
  const SampleSet& samples_;
  const ImageVolume& moving_;
  Vec3 center_;
};

// Precomputes each sample's lattice support, which depends only on the
// pre-affine, so evaluations only redo the coefficient sums.
class FfdObjective {
 public:
  FfdObjective(const SampleSet& samples, const ImageVolume& moving, const BSplineFFD& layout, double lambda)
      : samples_(samples), moving_(moving), work_(layout), lambda_(lambda) {
    q_.reserve(samples.points.size());
    support_.reserve(samples.points.size());
    for (const Vec3& x : samples.points) {
      const Vec3 q = layout.pre_affine() ? layout.pre_affine()->apply(x) : x;
      q_.push_back(q);
      support_.push_back(*layout.support(q, DomainPolicy::permissive));
    }
  }

  struct Terms {
    double mse = 0.0;
    double bending = 0.0;
    double total = 0.0;
  };

  Terms value(const std::vector<double>& theta) {
    load(theta);
    double sum = 0.0;
    for (std::size_t s = 0; s < q_.size(); ++s) {
      const Vec3 y = q_[s] + work_.displacement(support_[s]);
      const double r = sample_trilinear(moving_, y) - samples_.values[s];
      sum += r * r;
    }
    return finish(sum);
  }

  Terms value_gradient(const std::vector<double>& theta, std::vector<double>& grad) {
    load(theta);
    grad.assign(theta.size(), 0.0);
    const double scale = 2.0 / double(q_.size());
    double sum = 0.0;
    Vec3 gm;
    for (std::size_t s = 0; s < q_.size(); ++s) {
      const BSplineFFD::Support& sup = support_[s];
      const Vec3 y = q_[s] + work_.displacement(sup);
      const double r = sample_trilinear_gradient(moving_, y, gm) - samples_.values[s];
      sum += r * r;
      const Vec3 rg = (scale * r) * gm;
      for (int n = 0; n < 4; ++n)
        for (int m = 0; m < 4; ++m) {
          const double wzy = sup.weights[2][n] * sup.weights[1][m];
          const std::size_t row = work_.control_index(sup.base[0], sup.base[1] + m, sup.base[2] + n);
          for (int l = 0; l < 4; ++l) {
            const double w = wzy * sup.weights[0][l];
            double* g = grad.data() + 3 * (row + l);
            g[0] += w * rg[0];
            g[1] += w * rg[1];
            g[2] += w * rg[2];
          }
        }
    }
    if (lambda_ > 0.0) {
      const std::vector<double> bg = bending_energy_gradient(work_);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += lambda_ * bg[i];
    }
    return finish(sum);
  }

  const BSplineFFD& ffd() const { return work_; }
  void load(const std::vector<double>& theta) {
    auto c = work_.coefficients();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = Vec3(theta[3 * i], theta[3 * i + 1], theta[3 * i + 2]);
  }

 private:
  Terms finish(double sum) const {
    Terms t;
    t.mse = sum / double(q_.size());
    t.bending = lambda_ > 0.0 ? bending_energy(work_) : 0.0;
    t.total = t.mse + lambda_ * t.bending;
    return t;
  }

  const SampleSet& samples_;
  const ImageVolume& moving_;
  BSplineFFD work_;
  double lambda_;
  std::vector<Vec3> q_;
  std::vector<BSplineFFD::Support> support_;
};

struct Terms {
  double mse = 0.0;
  double bending = 0.0;
  double total = 0.0;
};

struct DescentProblem {
  std::function<Terms(const std::vector<double>&)> value;
  std::function<Terms(const std::vector<double>&, std::vector<double>&)> value_gradient;
  // Search direction from the gradient.
  std::function<void(const std::vector<double>&, std::vector<double>&)> direction;
  // Largest point displacement (mm) per unit step along a direction.
  std::function<double(const std::vector<double>&)> displacement_scale;
  // Upper bound on the step length (1 for Newton-like directions).
  double max_alpha = std::numeric_limits<double>::infinity();
};

// Armijo backtracking gradient descent. Accepted steps never increase the
// objective, so each level's trace is non-increasing.
void descend(std::vector<double>& theta, const DescentProblem& p, double step_mm, const RegistrationConfig& cfg,
             int level, std::vector<LossRecord>& trace) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 40;

  std::vector<double> grad;
  std::vector<double> dir;
  std::vector<double> trial(theta.size());
  Terms current = p.value_gradient(theta, grad);
  const Terms start = current;
  trace.push_back({level, 0, current.mse, current.bending, current.total});
  if (!std::isfinite(current.total))
    throw OptimizationFailure("objective is not finite at the start of level " + std::to_string(level), trace);

  double alpha = -1.0;
  for (int it = 1; it <= cfg.iterations; ++it) {
    p.direction(grad, dir);
    double slope = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) slope += grad[i] * dir[i];
    if (!(slope < 0.0)) break;
    const double scale = p.displacement_scale(dir);
    if (!(scale > 0.0)) break;
    if (alpha <= 0.0) alpha = step_mm / scale;
    alpha = std::min(alpha, p.max_alpha);

    bool accepted = false;
    Terms next;
    for (int h = 0; h < kMaxHalvings; ++h) {
      for (std::size_t i = 0; i < theta.size(); ++i) trial[i] = theta[i] + alpha * dir[i];
      next = p.value(trial);
      if (std::isfinite(next.total) && next.total <= current.total + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const double improvement = (current.total - next.total) / std::max(std::abs(current.total), 1e-300);
    theta = trial;
    current = p.value_gradient(theta, grad);
    trace.push_back({level, it, current.mse, current.bending, current.total});
    alpha *= 2.0;
    if (improvement < cfg.relative_tolerance) break;
  }
  if (!(current.total <= start.total))
    throw OptimizationFailure("objective increased over level " + std::to_string(level), trace);
}

Vec3 intensity_centroid(const ImageVolume& vol) {
  const Geometry& g = vol.geometry();
  const Dims3& d = g.dims();
  Vec3 acc = Vec3::Zero();
  double mass = 0.0;
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const double w = vol.at(i, j, k);
        if (w <= 0.0) continue;
        acc += w * g.voxel_center(i, j, k);
        mass += w;
      }
  if (!(mass > 0.0)) return g.index_to_world(0.5 * Vec3(double(d[0] - 1), double(d[1] - 1), double(d[2] - 1)));
  return acc / mass;
}

double level_factor(const ImageVolume& level, const ImageVolume& finest) {
  return level.geometry().spacing().maxCoeff() / finest.geometry().spacing().maxCoeff();
}

using Clock = std::chrono::steady_clock;

}  // namespace

double mse(const ImageVolume& fixed, const ImageVolume& moving, const Transform& t) {
  const Geometry& g = fixed.geometry();
  const Dims3& d = g.dims();
  double sum = 0.0;
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const Vec3 x = g.voxel_center(i, j, k);
        const double r = fixed.at(i, j, k) - sample_trilinear(moving, apply_transform(t, x));
        sum += r * r;
      }
  return sum / double(g.voxel_count());
}

std::vector<double> mse_gradient(const ImageVolume& fixed, const ImageVolume& moving, const Transform& t) {
  const SampleSet samples = make_samples(fixed, 1.0, 0);
  if (const auto* a = std::get_if<AffineTransform>(&t)) {
    AffineObjective obj(samples, moving, Vec3::Zero());
    const auto p = a->parameters();
    std::vector<double> theta(p.begin(), p.end());
    std::vector<double> grad;
    obj.value_gradient(theta, grad);
    return grad;
  }
  if (const auto* f = std::get_if<BSplineFFD>(&t)) {
    FfdObjective obj(samples, moving, *f, 0.0);
    std::vector<double> theta;
    theta.reserve(3 * f->control_count());
    for (const Vec3& c : f->coefficients()) theta.insert(theta.end(), {c.x(), c.y(), c.z()});
    std::vector<double> grad;
    obj.value_gradient(theta, grad);
    return grad;
  }
  throw Error(ErrorKind::unsupported, "dense displacement fields have no parametric gradient");
}

namespace {

// Calls visit(point, d) for every lattice point where all stencils fit,
// with d the six second differences (xx, yy, zz, xy, xz, yz) of component c.
template <class Visit>
void for_each_second_difference(const BSplineFFD& ffd, Visit&& visit) {
  const Dims3& g = ffd.grid_dims();
  const Vec3& h = ffd.grid_spacing();
  const auto c = ffd.coefficients();
  const std::int64_t stride[3] = {1, g[0], g[0] * g[1]};
  for (std::int64_t k = 1; k + 1 < g[2]; ++k)
    for (std::int64_t j = 1; j + 1 < g[1]; ++j)
      for (std::int64_t i = 1; i + 1 < g[0]; ++i) {
        const auto p = static_cast<std::int64_t>(ffd.control_index(i, j, k));
        auto at = [&](std::int64_t off) -> const Vec3& { return c[static_cast<std::size_t>(p + off)]; };
        Vec3 d[6];
        for (int a = 0; a < 3; ++a) d[a] = (at(stride[a]) - 2.0 * at(0) + at(-stride[a])) / (h[a] * h[a]);
        int slot = 3;
        for (int a = 0; a < 3; ++a)
          for (int b = a + 1; b < 3; ++b) {
            d[slot++] = (at(stride[a] + stride[b]) - at(stride[a] - stride[b]) - at(-stride[a] + stride[b]) +
                         at(-stride[a] - stride[b])) /
                        (4.0 * h[a] * h[b]);
          }
        visit(p, d, stride);
      }
}

}  // namespace

double bending_energy(const BSplineFFD& ffd) {
  double e = 0.0;
  for_each_second_difference(ffd, [&](std::int64_t, const Vec3* d, const std::int64_t*) {
    for (int s = 0; s < 3; ++s) e += d[s].squaredNorm();
    for (int s = 3; s < 6; ++s) e += 2.0 * d[s].squaredNorm();
  });
  return e / double(ffd.control_count());
}

std::vector<double> bending_energy_gradient(const BSplineFFD& ffd) {
  std::vector<double> grad(3 * ffd.control_count(), 0.0);
  const Vec3& h = ffd.grid_spacing();
  const double norm = 1.0 / double(ffd.control_count());
  auto add = [&](std::int64_t idx, const Vec3& v) {
    double* g = grad.data() + 3 * idx;
    g[0] += v[0];
    g[1] += v[1];
    g[2] += v[2];
  };
  for_each_second_difference(ffd, [&](std::int64_t p, const Vec3* d, const std::int64_t* stride) {
    for (int a = 0; a < 3; ++a) {
      const Vec3 w = (2.0 * norm / (h[a] * h[a])) * d[a];
      add(p + stride[a], w);
      add(p, -2.0 * w);
      add(p - stride[a], w);
    }
    int slot = 3;
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        const Vec3 w = (4.0 * norm / (4.0 * h[a] * h[b])) * d[slot++];
        add(p + stride[a] + stride[b], w);
        add(p + stride[a] - stride[b], -w);
        add(p - stride[a] + stride[b], -w);
        add(p - stride[a] - stride[b], w);
      }
  });
  return grad;
}

RegistrationResult register_affine(const ImageVolume& fixed, const ImageVolume& moving, const RegistrationConfig& cfg) {
  cfg.validate();
  require_intensity(fixed, moving);
  const auto t0 = Clock::now();

  const std::vector<ImageVolume> fixed_pyr = pyramid(fixed, cfg.levels);
  const std::vector<ImageVolume> moving_pyr = pyramid(moving, cfg.levels);
  const Dims3& fd = fixed.geometry().dims();
  const Vec3 center = fixed.geometry().index_to_world(0.5 * Vec3(double(fd[0] - 1), double(fd[1] - 1), double(fd[2] - 1)));

  const Vec3 shift = intensity_centroid(moving) - intensity_centroid(fixed);
  std::vector<double> theta{1, 0, 0, 0, 1, 0, 0, 0, 1, shift.x(), shift.y(), shift.z()};

  RegistrationResult result{AffineTransform::identity(), {}, 0.0, 0.0};
  for (int level = 0; level < cfg.levels; ++level) {
    const SampleSet samples = make_samples(fixed_pyr[static_cast<std::size_t>(level)], cfg.sample_fraction,
                                           cfg.seed + static_cast<std::uint64_t>(level));
    const AffineObjective obj(samples, moving_pyr[static_cast<std::size_t>(level)], center);

    double rmax = 0.0;
    for (const Vec3& x : samples.points) rmax = std::max(rmax, (x - center).norm());

    // Descent along the damped Gauss-Newton direction. The rotation part is
    // seen only through small asymmetric features, so plain or diagonally
    // scaled gradients crawl.
    Matrix12 normal;
    DescentProblem p;
    p.value = [&](const std::vector<double>& th) {
      const double m = obj.value(th);
      return Terms{m, 0.0, m};
    };
    p.value_gradient = [&](const std::vector<double>& th, std::vector<double>& g) {
      const double m = obj.value_gradient(th, g, &normal);
      return Terms{m, 0.0, m};
    };
    p.direction = [&](const std::vector<double>& g, std::vector<double>& d) {
      Matrix12 h = normal;
      const double floor = 1e-12 * std::max(h.diagonal().maxCoeff(), 1e-300);
      for (int i = 0; i < 12; ++i) h(i, i) += 1e-3 * h(i, i) + floor;
      const Eigen::Matrix<double, 12, 1> step =
          h.ldlt().solve(-Eigen::Map<const Eigen::Matrix<double, 12, 1>>(g.data()));
      d.assign(step.data(), step.data() + 12);
    };
    p.max_alpha = 1.0;
    p.displacement_scale = [&](const std::vector<double>& d) {
      double fro = 0.0;
      for (int i = 0; i < 9; ++i) fro += d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
      return std::sqrt(fro) * rmax + Vec3(d[9], d[10], d[11]).norm();
    };
    const double step = cfg.affine_step_mm * level_factor(fixed_pyr[static_cast<std::size_t>(level)], fixed);
    descend(theta, p, step, cfg, level, result.trace);
  }

  AffineTransform t;
  t.matrix = AffineObjective::matrix(theta);
  t.translation = center + Vec3(theta[9], theta[10], theta[11]) - t.matrix * center;
  t.validate();
  result.transform = t;
  result.final_mse = mse(fixed, moving, t);
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

RegistrationResult register_bspline(const ImageVolume& fixed, const ImageVolume& moving, const AffineTransform& init,
                                    const RegistrationConfig& cfg) {
  cfg.validate();
  require_intensity(fixed, moving);
  init.validate();
  const auto t0 = Clock::now();

  const std::vector<ImageVolume> fixed_pyr = pyramid(fixed, cfg.levels);
  const std::vector<ImageVolume> moving_pyr = pyramid(moving, cfg.levels);

  const Box3 bounds = fixed.geometry().center_bounds();
  Box3 domain = Box3::empty_box();
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c & 1) ? bounds.hi.x() : bounds.lo.x(), (c & 2) ? bounds.hi.y() : bounds.lo.y(),
                      (c & 4) ? bounds.hi.z() : bounds.lo.z());
    domain.expand(init.apply(corner));
  }
  const double coarse = cfg.grid_spacing_mm * std::ldexp(1.0, cfg.levels - 1);
  BSplineFFD ffd = BSplineFFD::covering(domain, Vec3::Constant(coarse), init);

  RegistrationResult result{ffd, {}, 0.0, 0.0};
  for (int level = 0; level < cfg.levels; ++level) {
    if (level > 0) ffd = ffd.refined();
    const SampleSet samples = make_samples(fixed_pyr[static_cast<std::size_t>(level)], cfg.sample_fraction,
                                           cfg.seed + static_cast<std::uint64_t>(level));
    FfdObjective obj(samples, moving_pyr[static_cast<std::size_t>(level)], ffd, cfg.bending_weight);

    std::vector<double> theta;
    theta.reserve(3 * ffd.control_count());
    for (const Vec3& c : ffd.coefficients()) theta.insert(theta.end(), {c.x(), c.y(), c.z()});

    DescentProblem p;
    p.value = [&](const std::vector<double>& th) {
      const auto t = obj.value(th);
      return Terms{t.mse, t.bending, t.total};
    };
    p.value_gradient = [&](const std::vector<double>& th, std::vector<double>& g) {
      const auto t = obj.value_gradient(th, g);
      return Terms{t.mse, t.bending, t.total};
    };
    p.direction = [](const std::vector<double>& g, std::vector<double>& d) {
      d.resize(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
    };
    // Partition of unity: a point moves at most as far as its largest
    // coefficient change.
    p.displacement_scale = [](const std::vector<double>& d) {
      double worst = 0.0;
      for (std::size_t i = 0; i + 2 < d.size(); i += 3)
        worst = std::max(worst, d[i] * d[i] + d[i + 1] * d[i + 1] + d[i + 2] * d[i + 2]);
      return std::sqrt(worst);
    };
    const double step = cfg.ffd_step_mm * level_factor(fixed_pyr[static_cast<std::size_t>(level)], fixed);
    descend(theta, p, step, cfg, level, result.trace);

    auto c = ffd.coefficients();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = Vec3(theta[3 * i], theta[3 * i + 1], theta[3 * i + 2]);
  }

  result.final_mse = mse(fixed, moving, ffd);
  result.transform = std::move(ffd);
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

}  // namespace hexmorph
