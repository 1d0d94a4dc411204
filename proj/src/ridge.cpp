#include "surf/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "surf/parallel.hpp"

namespace surf {

void SurfConfig::validate() const {
  if (d < 0)
    throw DomainError("SurfConfig: d must be >= 0");
  if (bandwidth && !(*bandwidth > 0))
    throw DomainError("SurfConfig: bandwidth must be positive");
  if (!(threshold_frac >= 0 && threshold_frac < 1))
    throw DomainError("SurfConfig: threshold_frac must be in [0, 1)");
  if (!(step_tol > 0) || !(grad_tol > 0))
    throw DomainError("SurfConfig: tolerances must be positive");
  if (max_iter < 1)
    throw DomainError("SurfConfig: max_iter must be positive");
}

const char *to_string(PointStatus s) {
  switch (s) {
  case PointStatus::converged:
    return "converged";
  case PointStatus::max_iter_reached:
    return "max_iter_reached";
  case PointStatus::denoised:
    return "denoised";
  case PointStatus::underflow:
    return "underflow";
  }
  return "unknown";
}

std::size_t RidgeEstimate::count(PointStatus s) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [s](const PointRecord &r) { return r.status == s; }));
}

namespace {

double grad_ratio(const Vector &g, const Vector &G) {
  const double gn = g.norm();
  return gn > 0 ? G.norm() / gn : 0.0;
}

void check_dims(const DensityModel &model, Eigen::Index xdim, int d) {
  if (xdim != model.dim())
    throw DomainError("ridge: point dimension does not match the model");
  if (d < 0 || d >= model.dim())
    throw DomainError("ridge: d must be in [0, D-1]");
}

PointRecord run_point(const DensityModel &model, const Vector &start,
                      const SurfConfig &cfg) {
  PointRecord rec;
  rec.origin = start;
  Vector x = start;
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    const auto state = model.shift_state(x, cfg.use_log);
    if (!(state.density >= kDensityFloor)) {
      rec.status = PointStatus::underflow;
      rec.position = x;
      rec.iterations = it;
      return rec;
    }
    const auto frame = spectral_frame(state.info.g, state.info.H, cfg.d);
    const double ratio = grad_ratio(state.info.g, frame.G);
    if (ratio <= cfg.grad_tol || last_step <= cfg.step_tol) {
      rec.status = PointStatus::converged;
      rec.position = x;
      rec.iterations = it;
      rec.diagnostics =
          RidgeDiagnostics{state.density, ratio, frame.lambda_next, frame.eigengap};
      return rec;
    }
    if (it == cfg.max_iter) {
      rec.status = PointStatus::max_iter_reached;
      rec.position = x;
      rec.iterations = it;
      return rec;
    }
    Vector next = x + frame.L * (state.target - x);
    last_step = (next - x).norm();
    x = std::move(next);
  }
}

RidgeEstimate assemble(std::vector<PointRecord> records, Eigen::Index dim,
                       const SurfConfig &cfg) {
  RidgeEstimate est{std::move(records), PointCloud(dim), PointCloud(dim), {}, cfg};
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < est.records.size(); ++i)
    if (est.records[i].status == PointStatus::converged)
      idx.push_back(static_cast<Eigen::Index>(i));
  Matrix pos(dim, static_cast<Eigen::Index>(idx.size()));
  Matrix org(dim, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto &r = est.records[static_cast<std::size_t>(idx[k])];
    pos.col(static_cast<Eigen::Index>(k)) = r.position;
    org.col(static_cast<Eigen::Index>(k)) = r.origin;
    est.ridge_index.push_back(static_cast<std::size_t>(idx[k]));
  }
  est.ridge_points = PointCloud(std::move(pos));
  est.origins = PointCloud(std::move(org));
  return est;
}

} // namespace

Vector scms_step(const DensityModel &model, const Eigen::Ref<const Vector> &x,
                 int d, bool use_log) {
  check_dims(model, x.size(), d);
  const auto state = model.shift_state(x, use_log);
  if (!(state.density >= kDensityFloor))
    throw UnderflowError("scms_step: density underflow");
  const auto frame = spectral_frame(state.info.g, state.info.H, d);
  return x + frame.L * (state.target - x);
}

RidgeEstimate scms_run(const DensityModel &model, const PointCloud &mesh,
                       const SurfConfig &config, unsigned threads) {
  config.validate();
  check_dims(model, mesh.dim(), config.d);
  std::vector<PointRecord> records(static_cast<std::size_t>(mesh.size()));
  parallel_for(records.size(), threads, [&](std::size_t i) {
    records[i] = run_point(model, mesh.point(static_cast<Eigen::Index>(i)), config);
  });
  return assemble(std::move(records), mesh.dim(), config);
}

RidgeEstimate surf(const PointCloud &data, const SurfConfig &config,
                   const std::optional<PointCloud> &mesh, unsigned threads) {
  config.validate();
  if (data.size() < 2)
    throw DomainError("surf: need at least 2 data points");
  SurfConfig cfg = config;
  if (!cfg.bandwidth)
    cfg.bandwidth = silverman_bandwidth(data);
  const auto model = DensityModel::kde(data, *cfg.bandwidth);
  const PointCloud &starts = mesh ? *mesh : data;
  if (starts.empty())
    throw DomainError("surf: mesh is empty");
  check_dims(model, starts.dim(), cfg.d);

  const auto n = static_cast<std::size_t>(starts.size());
  std::vector<double> dens(n);
  parallel_for(n, threads, [&](std::size_t i) {
    dens[i] = model.eval(starts.point(static_cast<Eigen::Index>(i))).value;
  });
  const double cutoff = cfg.threshold_frac * *std::max_element(dens.begin(), dens.end());

  std::vector<PointRecord> records(n);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (dens[i] < cutoff || !(dens[i] > 0)) {
      records[i].origin = starts.point(static_cast<Eigen::Index>(i));
      records[i].position = records[i].origin;
      records[i].status = PointStatus::denoised;
    } else {
      keep.push_back(i);
    }
  }
  if (keep.empty())
    throw DomainError("surf: empty mesh after denoising");

  parallel_for(keep.size(), threads, [&](std::size_t k) {
    const auto i = keep[k];
    records[i] = run_point(model, starts.point(static_cast<Eigen::Index>(i)), cfg);
  });
  return assemble(std::move(records), starts.dim(), cfg);
}

// ---------------------------------------------------------------------------
// Integral curves

namespace {

struct FieldPoint {
  LocalDensityInfo info;
  SpectralFrame frame;
};

FieldPoint field_at(const DensityModel &model, const Vector &x, int d, bool use_log) {
  FieldPoint fp;
  fp.info = use_log ? model.log_eval(x) : model.eval(x);
  fp.frame = spectral_frame(fp.info.g, fp.info.H, d);
  return fp;
}

Vector unit_direction(const DensityModel &model, const Vector &x, int d, bool use_log) {
  const auto fp = field_at(model, x, d, use_log);
  const double n = fp.frame.G.norm();
  return n > 0 ? Vector(fp.frame.G / n) : Vector::Zero(x.size());
}

// Newton estimate of the distance to the ridge along the normal space; +inf
// when the normal Hessian block is not negative definite.
double normal_newton_distance(const FieldPoint &fp) {
  const auto &ev = fp.frame.eigenvalues;
  const Eigen::Index D = ev.size();
  const Eigen::Index k = D - fp.frame.d;
  const Vector lam = ev.tail(k);
  if (!(lam.maxCoeff() < 0))
    return std::numeric_limits<double>::infinity();
  const Vector coeff = fp.frame.V.transpose() * fp.info.g;
  return coeff.cwiseQuotient(lam).norm();
}

// Newton step restricted to the normal space.
Vector normal_newton_step(const FieldPoint &fp) {
  const Eigen::Index k = fp.frame.eigenvalues.size() - fp.frame.d;
  const Vector lam = fp.frame.eigenvalues.tail(k);
  const Vector coeff = fp.frame.V.transpose() * fp.info.g;
  return -fp.frame.V * coeff.cwiseQuotient(lam);
}

Vector rk4(const DensityModel &model, const Vector &x, double h, int d, bool use_log) {
  const Vector k1 = unit_direction(model, x, d, use_log);
  const Vector k2 = unit_direction(model, x + 0.5 * h * k1, d, use_log);
  const Vector k3 = unit_direction(model, x + 0.5 * h * k2, d, use_log);
  const Vector k4 = unit_direction(model, x + h * k3, d, use_log);
  return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
}

CurveSample make_sample(double s, const Vector &x, const FieldPoint &fp,
                        bool use_log) {
  const double p = use_log ? std::exp(fp.info.value) : fp.info.value;
  return CurveSample{s, x, p, fp.info.value};
}

} // namespace

IntegralCurve integral_curve(const DensityModel &model,
                             const Eigen::Ref<const Vector> &x0, int d,
                             bool use_log, double step, double grad_tol,
                             double max_len) {
  check_dims(model, x0.size(), d);
  if (!(step > 0) || !(grad_tol > 0) || !(max_len > 0))
    throw DomainError("integral_curve: step, grad_tol and max_len must be positive");

  IntegralCurve curve;
  curve.d = d;
  curve.use_log = use_log;
  Vector x = x0;
  double s = 0;
  auto fp = field_at(model, x, d, use_log);
  curve.samples.push_back(make_sample(s, x, fp, use_log));

  auto done = [&](const FieldPoint &f) {
    return grad_ratio(f.info.g, f.frame.G) <= grad_tol ||
           normal_newton_distance(f) <= kCurvePositionTol;
  };

  bool polish = false;
  while (true) {
    if (done(fp)) {
      curve.converged = true;
      break;
    }
    if (s >= max_len) {
      curve.truncated = true;
      break;
    }
    if (normal_newton_distance(fp) < step) {
      polish = true;
      break;
    }
    Vector next = rk4(model, x, step, d, use_log);
    auto fnext = field_at(model, next, d, use_log);
    if (fnext.frame.G.dot(fp.frame.G) < 0) {
      // Stepped across the ridge; finish from x with shortened steps.
      polish = true;
      break;
    }
    x = std::move(next);
    fp = std::move(fnext);
    s += step;
    curve.samples.push_back(make_sample(s, x, fp, use_log));
  }

  if (polish) {
    double extra = 0;
    for (int k = 0; k < 100; ++k) {
      if (done(fp)) {
        curve.converged = true;
        break;
      }
      const double dist = normal_newton_distance(fp);
      if (!std::isfinite(dist))
        break;
      if (dist < step) {
        const Vector delta = normal_newton_step(fp);
        x += delta;
        extra += delta.norm();
      } else {
        x = rk4(model, x, step, d, use_log);
        extra += step;
      }
      fp = field_at(model, x, d, use_log);
    }
    if (!curve.converged && done(fp))
      curve.converged = true;
    s += extra;
    curve.samples.push_back(make_sample(s, x, fp, use_log));
  }
  curve.destination = x;
  return curve;
}

PathDiagnostics path_diagnostics(const IntegralCurve &curve,
                                 const DensityModel &model, double safety) {
  if (curve.truncated || !curve.converged)
    throw DomainError("path_diagnostics: curve did not reach the ridge");
  if (curve.samples.size() < 3)
    throw DomainError("path_diagnostics: need at least 3 samples");
  if (!(safety > 0))
    throw DomainError("path_diagnostics: safety factor must be positive");

  constexpr double slack = 1e-12;
  const auto &dest = curve.samples.back();
  const double total = dest.s;

  const auto fp = field_at(model, curve.destination, curve.d, curve.use_log);
  PathDiagnostics out;
  out.beta_est = safety * std::abs(fp.frame.lambda_next);

  out.monotone = true;
  out.quadratic_lb_ok = true;
  for (auto it = curve.samples.rbegin(); it != curve.samples.rend(); ++it) {
    const double xi = dest.value - it->value;
    out.s.push_back(total - it->s);
    out.xi.push_back(xi);
    if (out.xi.size() > 1 && xi < out.xi[out.xi.size() - 2] - slack)
      out.monotone = false;
    const double bound = out.beta_est / 4 * (curve.destination - it->x).squaredNorm();
    if (xi < bound - slack)
      out.quadratic_lb_ok = false;
  }
  return out;
}

} // namespace surf
