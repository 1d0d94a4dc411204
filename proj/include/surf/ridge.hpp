#pragma once

#include <optional>
#include <vector>

#include "surf/density.hpp"
#include "surf/point_cloud.hpp"
#include "surf/spectral.hpp"

namespace surf {

struct SurfConfig {
  int d = 1;                       // ridge dimension, 0 <= d < D
  std::optional<double> bandwidth; // Silverman when empty
  double threshold_frac = 0.05;    // denoise below this fraction of max mesh density
  bool use_log = true;
  double step_tol = 1e-7;          // on |x_{t+1} - x_t|
  double grad_tol = 1e-6;          // on |G| / |g|
  int max_iter = 500;

  /// Throws DomainError on out-of-range fields.
  void validate() const;
};

enum class PointStatus { converged, max_iter_reached, denoised, underflow };

const char *to_string(PointStatus s);

/// Local quantities at a converged point, for the function being ascended
/// (log p when use_log).
struct RidgeDiagnostics {
  double density = 0; // p at the point
  double grad_ratio = 0; // |G| / |g|
  double lambda_next = 0;
  double eigengap = 0;
};

struct PointRecord {
  Vector origin;
  Vector position; // last iterate (equals origin when denoised)
  PointStatus status = PointStatus::denoised;
  int iterations = 0;
  std::optional<RidgeDiagnostics> diagnostics; // set for converged points
};

struct RidgeEstimate {
  std::vector<PointRecord> records; // one per mesh point, mesh order
  PointCloud ridge_points;          // converged positions, mesh order
  PointCloud origins;               // their starting mesh points
  std::vector<std::size_t> ridge_index; // ridge point k came from records[ridge_index[k]]
  SurfConfig config;                // fully resolved (bandwidth filled in by surf)

  std::size_t count(PointStatus s) const;
};

/// One subspace-constrained mean-shift update x + L(x) (m(x) - x), with L
/// built from the Hessian of p, or of log p when use_log. Throws
/// UnderflowError when p(x) is below kDensityFloor.
Vector scms_step(const DensityModel &model, const Eigen::Ref<const Vector> &x,
                 int d, bool use_log);

/// Iterates scms_step from every mesh point. Mesh points are independent;
/// results do not depend on `threads`.
RidgeEstimate scms_run(const DensityModel &model, const PointCloud &mesh,
                       const SurfConfig &config, unsigned threads = 1);

/// Kernel density estimate, low-density denoising of the mesh (the data
/// itself unless `mesh` is given), then SCMS on the survivors.
RidgeEstimate surf(const PointCloud &data, const SurfConfig &config,
                   const std::optional<PointCloud> &mesh = std::nullopt,
                   unsigned threads = 1);

struct CurveSample {
  double s;     // arclength from the start
  Vector x;
  double p;     // density
  double value; // ascended function: log p when use_log, else p
};

struct IntegralCurve {
  std::vector<CurveSample> samples;
  Vector destination;
  int d = 1;
  bool use_log = true;
  bool converged = false;
  bool truncated = false; // max_len reached first
};

/// Unit-speed ascent path of the projected-gradient field G / |G|,
/// integrated with classical RK4 at fixed arclength `step`. Stops when
/// |G| / |g| <= grad_tol or when the Newton estimate of the remaining normal
/// distance drops below kCurvePositionTol; the last stretch toward the ridge
/// is taken in shortened steps and recorded as one final sample.
IntegralCurve integral_curve(const DensityModel &model,
                             const Eigen::Ref<const Vector> &x0, int d,
                             bool use_log, double step, double grad_tol,
                             double max_len);

inline constexpr double kCurvePositionTol = 1e-11;

struct PathDiagnostics {
  std::vector<double> s;  // arclength measured back from the destination
  std::vector<double> xi; // f(destination) - f(gamma(s)), same order as s
  bool monotone = false;
  bool quadratic_lb_ok = false;
  double beta_est = 0;
};

/// Drop in the ascended function along the curve, its monotonicity, and the
/// quadratic lower bound xi(s) >= beta/4 |destination - gamma(s)|^2 with
/// beta = safety * |lambda_{d+1}(destination)|.
PathDiagnostics path_diagnostics(const IntegralCurve &curve,
                                 const DensityModel &model, double safety = 1.0);

} // namespace surf
