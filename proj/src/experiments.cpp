#include "surf/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "surf/random.hpp"

namespace surf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T> void require_monotone(const std::vector<T> &grid, bool increasing,
                                            const char *what) {
  if (grid.size() < 3)
    throw DomainError(std::string(what) + ": grid needs at least 3 values");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (increasing ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
      throw DomainError(std::string(what) + ": grid must be strictly " +
                        (increasing ? "increasing" : "decreasing"));
}

SurfConfig oracle_config(int d, bool use_log, double step_tol, int max_iter) {
  SurfConfig c;
  c.d = d;
  c.use_log = use_log;
  c.threshold_frac = 0;
  c.step_tol = step_tol;
  c.grad_tol = 1e-10;
  c.max_iter = max_iter;
  return c;
}

double default_delta(const ManifoldSpec &m, double sigma) {
  if (const auto *c = m.as_circle())
    return 3 * sigma * sigma / c->radius;
  return 3 * sigma;
}

} // namespace

LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("fit_line: need at least two paired values");
  const auto k = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0))
    throw DomainError("fit_line: x values are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += r * r;
  }
  f.slope_se = x.size() > 2 ? std::sqrt(ssr / (k - 2) / sxx)
                            : std::numeric_limits<double>::quiet_NaN();
  return f;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty())
    throw DomainError("quantile: no values");
  if (!(q >= 0 && q <= 1))
    throw DomainError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::size_t ExperimentReport::failed_cells() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const auto &c) { return c.failed; }));
}

void summarize(ExperimentReport &report) {
  report.summary.clear();
  std::vector<double> lx, ly;
  for (double setting : report.grid) {
    SettingSummary s;
    s.setting = setting;
    std::vector<double> vals;
    for (const auto &c : report.cells) {
      if (c.setting != setting)
        continue;
      if (c.failed)
        ++s.failed;
      else if (std::isfinite(c.hausdorff))
        vals.push_back(c.hausdorff);
    }
    s.ok = vals.size();
    if (!vals.empty()) {
      s.median = quantile(vals, 0.5);
      s.q1 = quantile(vals, 0.25);
      s.q3 = quantile(vals, 0.75);
      if (s.median > 0 && setting > 0) {
        lx.push_back(std::log(setting));
        ly.push_back(std::log(s.median));
      }
    } else {
      s.median = s.q1 = s.q3 = std::numeric_limits<double>::quiet_NaN();
    }
    report.summary.push_back(s);
  }
  report.fit.reset();
  if (report.grid.size() >= 3 && lx.size() >= 3)
    report.fit = fit_line(lx, ly);
}

Json ExperimentReport::to_json(bool include_timing) const {
  Json jcells = Json::array();
  for (const auto &c : cells) {
    Json j{{"setting", c.setting},
           {"seed", c.seed},
           {"hausdorff", number_or_null(c.hausdorff)},
           {"failed", c.failed},
           {"extra", c.extra}};
    if (c.failed)
      j["failure"] = c.failure;
    if (include_timing)
      j["runtime_s"] = c.runtime_s;
    jcells.push_back(std::move(j));
  }
  Json jsum = Json::array();
  for (const auto &s : summary)
    jsum.push_back({{"setting", s.setting},
                    {"median", number_or_null(s.median)},
                    {"q1", number_or_null(s.q1)},
                    {"q3", number_or_null(s.q3)},
                    {"ok", s.ok},
                    {"failed", s.failed}});
  Json out{{"experiment", experiment},
           {"parameter", parameter},
           {"grid", grid},
           {"cells", std::move(jcells)},
           {"summary", std::move(jsum)},
           {"failed_cells", failed_cells()},
           {"config", config}};
  if (fit)
    out["fit"] = {{"slope", fit->slope},
                  {"slope_se", number_or_null(fit->slope_se)},
                  {"intercept", fit->intercept}};
  else
    out["fit"] = nullptr;
  return out;
}

std::string ExperimentReport::to_csv(bool include_timing) const {
  std::ostringstream out;
  out << parameter << ",seed,hausdorff,failed" << (include_timing ? ",runtime_s" : "") << '\n';
  for (const auto &c : cells) {
    out << format_double(c.setting) << ',' << c.seed << ','
        << (std::isfinite(c.hausdorff) ? format_double(c.hausdorff) : "") << ','
        << (c.failed ? 1 : 0);
    if (include_timing)
      out << ',' << format_double(c.runtime_s);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

ExperimentReport rate_experiment(const std::vector<Eigen::Index> &n_grid,
                                 int replications, const HiddenManifoldModel &model,
                                 const SurfConfig &config, const RateOptions &options) {
  require_monotone(n_grid, true, "rate_experiment");
  if (replications < 3)
    throw DomainError("rate_experiment: replications must be >= 3");
  config.validate();
  model.validate();

  const double delta = options.delta_restrict.value_or(default_delta(model.manifold, model.sigma));
  const auto probes = manifold_probes(model.manifold, options.probe_count);

  ExperimentReport report;
  report.experiment = "rate";
  report.parameter = "n";
  for (auto n : n_grid)
    report.grid.push_back(static_cast<double>(n));

  std::optional<PointCloud> reference_ridge;
  double sigma_eff = model.sigma;
  if (options.reference == RateReference::oracle_ridge) {
    if (config.bandwidth)
      sigma_eff = std::sqrt(model.sigma * model.sigma + *config.bandwidth * *config.bandwidth);
    const auto oracle = manifold_oracle(model.manifold, model.weight.bind(model.manifold),
                                        sigma_eff, options.oracle_components);
    const auto est = scms_run(oracle, probes,
                              oracle_config(config.d, config.use_log, 1e-11, 2000),
                              options.threads);
    if (est.ridge_points.empty())
      throw DomainError("rate_experiment: oracle ridge did not converge");
    reference_ridge = est.ridge_points;
  }

  for (auto n : n_grid) {
    for (int r = 0; r < replications; ++r) {
      ExperimentCell cell;
      cell.setting = static_cast<double>(n);
      cell.seed = model.seed + static_cast<std::uint64_t>(r);
      const auto t0 = Clock::now();
      try {
        auto m = model;
        m.seed = cell.seed;
        const auto data = sample(m, n, options.threads);
        std::optional<PointCloud> mesh;
        if (options.mesh == RateMesh::probes)
          mesh = probes;
        const auto est = surf(data, config, mesh, options.threads);

        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < est.ridge_points.size(); ++i) {
          const auto x = est.ridge_points.point(i);
          const double dist = reference_ridge ? distance_to_set(x, *reference_ridge)
                                              : distance_to_manifold(x, model.manifold);
          if (dist <= delta)
            keep.push_back(i);
        }
        cell.extra = {{"ridge_points", est.ridge_points.size()},
                      {"restricted_points", keep.size()},
                      {"bandwidth", *est.config.bandwidth}};
        if (keep.empty()) {
          cell.failed = true;
          cell.failure = "no ridge points within delta_restrict of the reference";
          cell.hausdorff = std::numeric_limits<double>::quiet_NaN();
        } else {
          const auto restricted = est.ridge_points.subset(keep);
          cell.hausdorff = reference_ridge
                               ? hausdorff(restricted, *reference_ridge)
                               : hausdorff_to_manifold(restricted, model.manifold,
                                                       options.probe_count);
        }
      } catch (const DomainError &e) {
        cell.failed = true;
        cell.failure = e.what();
        cell.hausdorff = std::numeric_limits<double>::quiet_NaN();
      }
      cell.runtime_s = seconds_since(t0);
      report.cells.push_back(std::move(cell));
    }
  }

  report.config = {{"model", hidden_model_to_json(model)},
                   {"surf", config_to_json(config)},
                   {"replications", replications},
                   {"reference", options.reference == RateReference::oracle_ridge
                                     ? "oracle_ridge"
                                     : "manifold"},
                   {"mesh", options.mesh == RateMesh::probes ? "probes" : "data"},
                   {"probe_count", options.probe_count},
                   {"oracle_components", options.oracle_components},
                   {"oracle_sigma", sigma_eff},
                   {"delta_restrict", delta},
                   {"seeds", "model.seed + replication"}};
  summarize(report);
  return report;
}

ExperimentReport bias_experiment(const std::vector<double> &sigma_grid,
                                 const ManifoldSpec &manifold,
                                 Eigen::Index m_quadrature, int d, bool use_log,
                                 const BiasOptions &options) {
  require_monotone(sigma_grid, false, "bias_experiment");
  const auto probes = manifold_probes(manifold, options.probe_count);
  const auto cfg = oracle_config(d, use_log, options.step_tol, options.max_iter);

  ExperimentReport report;
  report.experiment = "bias";
  report.parameter = "sigma";
  report.grid = sigma_grid;
  for (double sigma : sigma_grid) {
    ExperimentCell cell;
    cell.setting = sigma;
    const auto t0 = Clock::now();
    try {
      const auto oracle = manifold_oracle(manifold, options.weight.bind(manifold), sigma,
                                          m_quadrature);
      const auto est = scms_run(oracle, probes, cfg, options.threads);
      const auto bad = est.records.size() - est.count(PointStatus::converged);
      cell.extra["unconverged"] = bad;
      if (bad > 0) {
        cell.failed = true;
        cell.failure = "SCMS did not converge from every start";
        cell.hausdorff = std::numeric_limits<double>::quiet_NaN();
      } else {
        cell.hausdorff = hausdorff_to_manifold(est.ridge_points, manifold,
                                               options.probe_count);
        if (const auto *c = manifold.as_circle()) {
          const Matrix off = est.ridge_points.matrix().colwise() - c->center;
          const Vector radii = off.topRows(2).colwise().norm().transpose();
          cell.extra["radius_mean"] = radii.mean();
          cell.extra["radius_min"] = radii.minCoeff();
          cell.extra["radius_max"] = radii.maxCoeff();
        }
      }
    } catch (const DomainError &e) {
      cell.failed = true;
      cell.failure = e.what();
      cell.hausdorff = std::numeric_limits<double>::quiet_NaN();
    }
    cell.runtime_s = seconds_since(t0);
    report.cells.push_back(std::move(cell));
  }
  report.config = {{"manifold", manifold_to_json(manifold)},
                   {"m_quadrature", m_quadrature},
                   {"d", d},
                   {"use_log", use_log},
                   {"probe_count", options.probe_count},
                   {"weight", {{"cosine_amplitude", options.weight.cosine_amplitude}}},
                   {"scms", config_to_json(cfg)}};
  summarize(report);
  return report;
}

ExperimentReport bandwidth_sweep(const std::vector<double> &h_grid,
                                 const PointCloud &data, const SurfConfig &config,
                                 double eps_connect, const SweepOptions &options) {
  if (h_grid.size() < 3)
    throw DomainError("bandwidth_sweep: grid needs at least 3 values");
  if (!(eps_connect > 0))
    throw DomainError("bandwidth_sweep: eps_connect must be positive");
  ExperimentReport report;
  report.experiment = "sweep";
  report.parameter = "bandwidth";
  report.grid = h_grid;
  for (double h : h_grid) {
    ExperimentCell cell;
    cell.setting = h;
    cell.hausdorff = std::numeric_limits<double>::quiet_NaN();
    const auto t0 = Clock::now();
    try {
      auto cfg = config;
      cfg.bandwidth = h;
      const auto est = surf(data, cfg, std::nullopt, options.threads);
      cell.extra["ridge_points"] = est.ridge_points.size();
      if (est.ridge_points.empty()) {
        cell.failed = true;
        cell.failure = "no converged ridge points";
      } else {
        cell.extra["components"] = dilation_components(est.ridge_points, eps_connect);
        if (options.truth)
          cell.hausdorff =
              hausdorff_to_manifold(est.ridge_points, *options.truth, options.probe_count);
      }
    } catch (const DomainError &e) {
      cell.failed = true;
      cell.failure = e.what();
    }
    cell.runtime_s = seconds_since(t0);
    report.cells.push_back(std::move(cell));
  }
  report.config = {{"surf", config_to_json(config)},
                   {"eps_connect", eps_connect},
                   {"n", data.size()},
                   {"dim", data.dim()},
                   {"probe_count", options.probe_count},
                   {"truth", options.truth ? manifold_to_json(*options.truth) : Json(nullptr)}};
  summarize(report);
  return report;
}

ExperimentReport stability_experiment(const std::vector<double> &delta_grid,
                                      const ManifoldSpec &manifold, double sigma,
                                      Eigen::Index m_quadrature, int d, bool use_log,
                                      const StabilityOptions &options) {
  if (delta_grid.size() < 3)
    throw DomainError("stability_experiment: grid needs at least 3 values");
  const auto probes = manifold_probes(manifold, options.probe_count);
  const auto cfg = oracle_config(d, use_log, options.step_tol, 2000);
  const auto base = manifold_oracle(manifold, options.weight.bind(manifold), sigma, m_quadrature);
  const auto base_est = scms_run(base, probes, cfg, options.threads);
  if (base_est.count(PointStatus::converged) != base_est.records.size())
    throw DomainError("stability_experiment: base ridge did not converge");

  ExperimentReport report;
  report.experiment = "stability";
  report.parameter = "delta";
  report.grid = delta_grid;
  for (double delta : delta_grid) {
    ExperimentCell cell;
    cell.setting = delta;
    cell.seed = options.seed;
    const auto t0 = Clock::now();
    auto comps = base.components();
    double total = 0;
    for (std::size_t j = 0; j < comps.size(); ++j) {
      auto rng = Xoshiro256::substream(options.seed, j);
      comps[j].weight *= 1 + delta * rng.uniform(-1.0, 1.0);
      total += comps[j].weight;
    }
    for (auto &c : comps)
      c.weight /= total;
    const auto jittered = DensityModel::mixture(comps);
    const auto est = scms_run(jittered, probes, cfg, options.threads);
    if (est.count(PointStatus::converged) != est.records.size() || est.ridge_points.empty()) {
      cell.failed = true;
      cell.failure = "SCMS did not converge on the perturbed model";
      cell.hausdorff = std::numeric_limits<double>::quiet_NaN();
    } else {
      cell.hausdorff = hausdorff(base_est.ridge_points, est.ridge_points);
    }
    cell.runtime_s = seconds_since(t0);
    report.cells.push_back(std::move(cell));
  }
  report.config = {{"manifold", manifold_to_json(manifold)},
                   {"sigma", sigma},
                   {"m_quadrature", m_quadrature},
                   {"d", d},
                   {"use_log", use_log},
                   {"probe_count", options.probe_count},
                   {"seed", options.seed},
                   {"scms", config_to_json(cfg)}};
  summarize(report);
  return report;
}

} // namespace surf
