#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surf/io.hpp"
#include "surf/ridge.hpp"
#include "surf/synth.hpp"

namespace surf {

struct ExperimentCell {
  double setting = 0;
  std::uint64_t seed = 0;
  double hausdorff = 0;
  double runtime_s = 0;
  bool failed = false;
  std::string failure;
  Json extra = Json::object();
};

struct SettingSummary {
  double setting = 0;
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
};

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
};

/// Ordinary least squares of y on x with the standard error of the slope.
LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y);

/// Type-7 (linear interpolation) sample quantile; q in [0, 1].
double quantile(std::vector<double> values, double q);

struct ExperimentReport {
  std::string experiment;
  std::string parameter; // name of the grid variable
  std::vector<double> grid;
  std::vector<ExperimentCell> cells; // grid-major, then replication
  std::vector<SettingSummary> summary;
  std::optional<LineFit> fit; // log median vs log setting; >= 3 settings
  Json config;

  std::size_t failed_cells() const;
  /// Runtimes are left out unless asked for, so that reruns serialize
  /// identically.
  Json to_json(bool include_timing = false) const;
  /// One row per cell.
  std::string to_csv(bool include_timing = false) const;
};

/// Fills summary and fit from cells.
void summarize(ExperimentReport &report);

enum class RateReference { manifold, oracle_ridge };
enum class RateMesh { data, probes };

struct RateOptions {
  RateReference reference = RateReference::oracle_ridge;
  RateMesh mesh = RateMesh::probes;
  Eigen::Index probe_count = 256;
  Eigen::Index oracle_components = 1024;
  std::optional<double> delta_restrict; // default 3 sigma^2 / r (circle), 3 sigma otherwise
  unsigned threads = 1;
};

/// Ridge estimation error against n. Replication r uses seed model.seed + r
/// for every n, so the samples are nested across the grid. With a fixed
/// bandwidth h the oracle-ridge reference is the ridge of the signal density
/// smoothed by the kernel, i.e. the manifold oracle at sqrt(sigma^2 + h^2).
ExperimentReport rate_experiment(const std::vector<Eigen::Index> &n_grid,
                                 int replications, const HiddenManifoldModel &model,
                                 const SurfConfig &config, const RateOptions &options = {});

struct BiasOptions {
  Eigen::Index probe_count = 360;
  ManifoldWeight weight;
  double step_tol = 1e-11;
  int max_iter = 2000;
  unsigned threads = 1;
};

/// Distance between M and the ridge of its noise-convolved density, per
/// sigma. SCMS starts at the manifold probes, which are also the probes used
/// for the Hausdorff distance.
ExperimentReport bias_experiment(const std::vector<double> &sigma_grid,
                                 const ManifoldSpec &manifold,
                                 Eigen::Index m_quadrature, int d, bool use_log,
                                 const BiasOptions &options = {});

struct SweepOptions {
  std::optional<ManifoldSpec> truth;
  Eigen::Index probe_count = 720;
  unsigned threads = 1;
};

/// SuRF at each bandwidth; reports dilation components of the ridge set
/// (extra.components) and, with a ground truth, its Hausdorff distance.
ExperimentReport bandwidth_sweep(const std::vector<double> &h_grid,
                                 const PointCloud &data, const SurfConfig &config,
                                 double eps_connect, const SweepOptions &options = {});

struct StabilityOptions {
  Eigen::Index probe_count = 256;
  ManifoldWeight weight;
  std::uint64_t seed = 1;
  double step_tol = 1e-11;
  unsigned threads = 1;
};

/// Hausdorff distance between the oracle ridge and the ridge of a copy whose
/// component weights are scaled by (1 + delta u_j), u_j uniform on [-1, 1].
ExperimentReport stability_experiment(const std::vector<double> &delta_grid,
                                      const ManifoldSpec &manifold, double sigma,
                                      Eigen::Index m_quadrature, int d, bool use_log,
                                      const StabilityOptions &options = {});

} // namespace surf
