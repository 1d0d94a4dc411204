#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "surf/geometry.hpp"
#include "surf/point_cloud.hpp"

namespace surf {

/// Value and derivatives of a density (or of its logarithm) at one point.
struct LocalDensityInfo {
  double value = 0; // p, or log p when produced by log_eval
  Vector g;         // gradient
  Matrix H;         // Hessian
  /// D^2 x D Jacobian of vec(H), column-major vec: row a + b*D, column c
  /// holds d^3 f / dx_a dx_b dx_c.
  std::optional<Matrix> Hprime;
};

/// Normal component. Isotropic with scale `sigma` unless `covariance` is
/// given (nonempty), in which case sigma is ignored.
struct MixtureComponent {
  double weight;
  Vector mean;
  double sigma = 1;
  Matrix covariance{};
};

/// Density floor below which log_eval refuses to take the logarithm.
inline constexpr double kDensityFloor = 1e-300;

/// A finite sum of isotropic normal densities. Realized either as a Gaussian
/// kernel density estimator (equal weights 1/n, common bandwidth) or as an
/// explicit mixture. Immutable after construction.
class DensityModel {
public:
  enum class Kind { kde, mixture };

  static DensityModel kde(PointCloud data, double bandwidth);
  static DensityModel mixture(const std::vector<MixtureComponent> &components);
  /// Single normal N(mean, covariance).
  static DensityModel gaussian(const Vector &mean, const Matrix &covariance);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return centers_.dim(); }
  Eigen::Index size() const { return centers_.size(); }

  /// Kernel bandwidth for kde models; throws for mixtures.
  double bandwidth() const;
  /// Data points (kde) or component means (mixture).
  const PointCloud &centers() const { return centers_; }
  std::vector<MixtureComponent> components() const;

  LocalDensityInfo eval(const Eigen::Ref<const Vector> &x,
                        bool with_hprime = false) const;

  /// Derivatives of log p. Throws UnderflowError when p < kDensityFloor.
  LocalDensityInfo log_eval(const Eigen::Ref<const Vector> &x,
                            bool with_hprime = false) const;

  /// Precision-weighted posterior mean of the component means at x; for a
  /// kde this is the classical mean-shift target sum c_i X_i / sum c_i.
  Vector mean_shift_target(const Eigen::Ref<const Vector> &x) const;

  struct ShiftState {
    LocalDensityInfo info; // of p or log p
    double density;        // p itself, possibly 0 on underflow
    Vector target;
  };

  /// One pass computing eval (or log_eval) together with the mean-shift
  /// target. Never throws on underflow; check `density` instead.
  ShiftState shift_state(const Eigen::Ref<const Vector> &x, bool use_log) const;

private:
  struct Sums;
  DensityModel(Kind kind, PointCloud centers, Vector weights, Vector sigmas,
               std::vector<Matrix> covariances = {});
  Sums accumulate(const Eigen::Ref<const Vector> &x, bool third) const;

  Kind kind_;
  PointCloud centers_;
  Vector weights_;
  Vector sigmas_;
  Vector log_coef_; // log w_i - log sqrt(det Sigma_i) - D/2 log(2 pi)
  Vector inv_var_;  // 1 / sigma_i^2 (isotropic components)
  // Per-component covariance and precision; empty when all are isotropic.
  std::vector<Matrix> covariances_;
  std::vector<Matrix> precisions_;
};

/// Normal-reference bandwidth s * (4 / ((D + 2) n))^(1 / (D + 4)), with s the
/// mean of the per-coordinate sample standard deviations.
double silverman_bandwidth(const PointCloud &data);

/// Density on a manifold, evaluated at points of M; need not be normalized.
using ManifoldWeightFn = std::function<double(const Vector &)>;

/// Noise-convolved manifold density int_M phi_sigma(x - z) dW(z) discretized
/// as an m-component mixture at equal arclength spacing on M.
///
/// Circles get nodes at angles 2 pi k / m; segments get midpoint nodes with
/// per-segment counts proportional to length. Weights are weight(z) times
/// the arclength element, normalized to one.
DensityModel manifold_oracle(const ManifoldSpec &manifold,
                             const ManifoldWeightFn &weight, double sigma,
                             Eigen::Index m);

inline double uniform_weight(const Vector &) { return 1.0; }

} // namespace surf
