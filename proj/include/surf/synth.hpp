#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "surf/density.hpp"
#include "surf/geometry.hpp"
#include "surf/point_cloud.hpp"

namespace surf {

/// Weight of the signal distribution along M. For circles, w(theta) is
/// proportional to 1 + cosine_amplitude * cos(theta), theta measured in the
/// plane of the first two coordinates; amplitude 0 is uniform. Segments only
/// support the uniform (length-proportional) weight.
struct ManifoldWeight {
  double cosine_amplitude = 0;

  double operator()(const ManifoldSpec &m, const Vector &z) const;
  /// Bound to a manifold, for manifold_oracle().
  ManifoldWeightFn bind(const ManifoldSpec &m) const;
};

struct AxisBox {
  std::vector<std::pair<double, double>> intervals;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(intervals.size()); }
  double volume() const;
};

/// Clutter/signal mixture: with probability eta a point is Z + sigma * eps,
/// Z ~ weight on M and eps standard normal; otherwise it is uniform on box.
struct HiddenManifoldModel {
  ManifoldSpec manifold;
  ManifoldWeight weight;
  double sigma = 0;
  double eta = 1;
  AxisBox box;
  std::uint64_t seed = 0;

  void validate() const;
};

/// n draws; draw i uses only the substream (seed, i), so sample(n) is a
/// prefix of sample(n + k).
PointCloud sample(const HiddenManifoldModel &model, Eigen::Index n,
                  unsigned threads = 1);

/// Bounding box of M expanded by `margin` on every side.
AxisBox bounding_box(const ManifoldSpec &m, double margin);

/// Default stylized filament layout in [0, 10]^2: two diagonals, a
/// vertical, a horizontal and a short spur.
std::vector<Segment> default_cosmic_web_layout();

struct CosmicWeb {
  PointCloud points;
  ManifoldSpec truth;
  HiddenManifoldModel model;
};

/// Segments plus uniform background clutter on [0, 10]^2 (default layout)
/// or on the layout's bounding box expanded by max(4 sigma, 1).
CosmicWeb cosmic_web(std::uint64_t seed, Eigen::Index n,
                     const std::vector<Segment> &layout, double sigma,
                     double clutter_frac);

} // namespace surf
