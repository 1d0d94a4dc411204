#include "surf/density.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace surf {

struct DensityModel::Sums {
  double log_scale; // every sum below is multiplied by exp(log_scale)
  double s0;        // p
  Vector g;         // gradient
  Matrix H;         // Hessian
  Matrix T;         // third derivatives, D^2 x D (only when requested)
  Matrix prec;      // sum a_i P_i, P_i the component precision
  Vector prec_mean; // sum a_i P_i mu_i
};

DensityModel::DensityModel(Kind kind, PointCloud centers, Vector weights,
                           Vector sigmas, std::vector<Matrix> covariances)
    : kind_(kind), centers_(std::move(centers)), weights_(std::move(weights)),
      sigmas_(std::move(sigmas)), covariances_(std::move(covariances)) {
  const auto D = centers_.dim();
  const auto Dd = static_cast<double>(D);
  log_coef_ = weights_.array().log() - Dd * sigmas_.array().log() -
              0.5 * Dd * std::log(2 * M_PI);
  inv_var_ = sigmas_.array().square().inverse();
  if (covariances_.empty())
    return;
  for (std::size_t i = 0; i < covariances_.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    auto &C = covariances_[i];
    if (C.size() == 0)
      C = Matrix::Identity(D, D) * (sigmas_(j) * sigmas_(j));
    Eigen::LLT<Matrix> llt(C);
    if (llt.info() != Eigen::Success || (C - C.transpose()).norm() > 1e-12 * C.norm())
      throw DomainError("mixture: covariance must be symmetric positive definite");
    precisions_.push_back(llt.solve(Matrix::Identity(D, D)));
    const double log_det = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    log_coef_(j) = std::log(weights_(j)) - 0.5 * log_det - 0.5 * Dd * std::log(2 * M_PI);
  }
}

DensityModel DensityModel::kde(PointCloud data, double bandwidth) {
  if (data.empty())
    throw DomainError("kde: data set is empty");
  if (!(bandwidth > 0) || !std::isfinite(bandwidth))
    throw DomainError("kde: bandwidth must be positive");
  const auto n = data.size();
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector s = Vector::Constant(n, bandwidth);
  return DensityModel(Kind::kde, std::move(data), std::move(w), std::move(s));
}

DensityModel DensityModel::mixture(const std::vector<MixtureComponent> &components) {
  if (components.empty())
    throw DomainError("mixture: no components");
  const auto D = components.front().mean.size();
  const auto m = static_cast<Eigen::Index>(components.size());
  Matrix means(D, m);
  Vector w(m), s(m);
  std::vector<Matrix> covs;
  bool anisotropic = false;
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto &c = components[static_cast<std::size_t>(j)];
    if (c.mean.size() != D)
      throw DomainError("mixture: inconsistent component dimension");
    if (!(c.weight > 0))
      throw DomainError("mixture: weights must be positive");
    if (c.covariance.size() > 0) {
      if (c.covariance.rows() != D || c.covariance.cols() != D)
        throw DomainError("mixture: covariance has the wrong shape");
      anisotropic = true;
    } else if (!(c.sigma > 0)) {
      throw DomainError("mixture: sigmas must be positive");
    }
    means.col(j) = c.mean;
    w(j) = c.weight;
    s(j) = c.covariance.size() > 0 ? 1.0 : c.sigma;
    covs.push_back(c.covariance);
  }
  if (std::abs(w.sum() - 1.0) > 1e-12)
    throw DomainError("mixture: weights must sum to 1");
  if (!anisotropic)
    covs.clear();
  return DensityModel(Kind::mixture, PointCloud(std::move(means)), std::move(w),
                      std::move(s), std::move(covs));
}

DensityModel DensityModel::gaussian(const Vector &mean, const Matrix &covariance) {
  return mixture({MixtureComponent{1.0, mean, 1.0, covariance}});
}

double DensityModel::bandwidth() const {
  if (kind_ != Kind::kde)
    throw DomainError("bandwidth() is only defined for kde models");
  return sigmas_(0);
}

std::vector<MixtureComponent> DensityModel::components() const {
  std::vector<MixtureComponent> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Eigen::Index j = 0; j < size(); ++j) {
    MixtureComponent c{weights_(j), centers_.point(j), sigmas_(j), Matrix()};
    if (!covariances_.empty())
      c.covariance = covariances_[static_cast<std::size_t>(j)];
    out.push_back(std::move(c));
  }
  return out;
}

DensityModel::Sums DensityModel::accumulate(const Eigen::Ref<const Vector> &x,
                                            bool third) const {
  const Eigen::Index D = dim();
  if (x.size() != D)
    throw DomainError("density: query dimension mismatch");
  const auto &C = centers_.matrix();
  const Eigen::Index n = C.cols();
  const bool general = !precisions_.empty();

  Vector expo(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto diff = x - C.col(i);
    const double quad = general ? diff.dot(precisions_[static_cast<std::size_t>(i)] * diff)
                                : inv_var_(i) * diff.squaredNorm();
    expo(i) = log_coef_(i) - 0.5 * quad;
  }
  const double top = expo.maxCoeff();

  Sums s{top, 0.0, Vector::Zero(D), Matrix::Zero(D, D), Matrix(), Matrix::Zero(D, D),
         Vector::Zero(D)};
  if (third)
    s.T = Matrix::Zero(D * D, D);

  double prec_iso = 0;
  Vector u(D);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::exp(expo(i) - top);
    if (a == 0)
      continue;
    const double iv = inv_var_(i);
    if (general) {
      const auto &P = precisions_[static_cast<std::size_t>(i)];
      u.noalias() = P * (x - C.col(i));
      s.prec.noalias() += a * P;
      s.prec_mean.noalias() += a * (P * C.col(i));
    } else {
      u = (x - C.col(i)) * iv;
      prec_iso += a * iv;
      s.prec_mean.noalias() += (a * iv) * C.col(i);
    }
    s.s0 += a;
    s.g.noalias() -= a * u;
    s.H.noalias() += a * u * u.transpose();
    if (third) {
      // d^3 phi / dx_r dx_b dx_c = phi [-u_r u_b u_c + P_rb u_c + P_rc u_b + P_bc u_r]
      const Matrix *P = general ? &precisions_[static_cast<std::size_t>(i)] : nullptr;
      auto prec_at = [&](Eigen::Index r, Eigen::Index c) {
        return P ? (*P)(r, c) : (r == c ? iv : 0.0);
      };
      for (Eigen::Index c = 0; c < D; ++c)
        for (Eigen::Index b = 0; b < D; ++b)
          for (Eigen::Index r = 0; r < D; ++r)
            s.T(r + b * D, c) += a * (-u(r) * u(b) * u(c) + prec_at(r, b) * u(c) +
                                      prec_at(r, c) * u(b) + prec_at(b, c) * u(r));
    }
  }
  if (!general)
    s.prec.diagonal().setConstant(prec_iso);
  s.H -= s.prec;
  return s;
}

LocalDensityInfo DensityModel::eval(const Eigen::Ref<const Vector> &x,
                                    bool with_hprime) const {
  auto s = accumulate(x, with_hprime);
  const double scale = std::exp(s.log_scale);
  LocalDensityInfo info;
  info.value = scale * s.s0;
  info.g = scale * s.g;
  info.H = scale * s.H;
  if (with_hprime)
    info.Hprime = scale * s.T;
  return info;
}

namespace {

LocalDensityInfo to_log(double log_p, const Vector &g_raw, const Matrix &H_raw,
                        const Matrix *T_raw, double s0) {
  const Eigen::Index D = g_raw.size();
  LocalDensityInfo info;
  info.value = log_p;
  info.g = g_raw / s0;
  const Matrix Hr = H_raw / s0;
  info.H = Hr - info.g * info.g.transpose();
  if (T_raw) {
    const Vector &gl = info.g;
    Matrix T = *T_raw / s0;
    for (Eigen::Index c = 0; c < D; ++c)
      for (Eigen::Index b = 0; b < D; ++b)
        for (Eigen::Index a = 0; a < D; ++a)
          T(a + b * D, c) += -Hr(a, b) * gl(c) - Hr(a, c) * gl(b) -
                             Hr(b, c) * gl(a) + 2 * gl(a) * gl(b) * gl(c);
    info.Hprime = std::move(T);
  }
  return info;
}

} // namespace

LocalDensityInfo DensityModel::log_eval(const Eigen::Ref<const Vector> &x,
                                        bool with_hprime) const {
  auto s = accumulate(x, with_hprime);
  const double log_p = s.log_scale + std::log(s.s0);
  if (!(log_p >= std::log(kDensityFloor))) {
    std::ostringstream msg;
    msg << "density underflow at x = (" << x.transpose() << ")";
    throw UnderflowError(msg.str());
  }
  return to_log(log_p, s.g, s.H, with_hprime ? &s.T : nullptr, s.s0);
}

Vector DensityModel::mean_shift_target(const Eigen::Ref<const Vector> &x) const {
  const auto s = accumulate(x, false);
  return s.prec.ldlt().solve(s.prec_mean);
}

DensityModel::ShiftState
DensityModel::shift_state(const Eigen::Ref<const Vector> &x, bool use_log) const {
  auto s = accumulate(x, false);
  const double scale = std::exp(s.log_scale);
  ShiftState out;
  out.density = scale * s.s0;
  out.target = s.prec.ldlt().solve(s.prec_mean);
  if (use_log) {
    out.info = to_log(s.log_scale + std::log(s.s0), s.g, s.H, nullptr, s.s0);
  } else {
    out.info.value = out.density;
    out.info.g = scale * s.g;
    out.info.H = scale * s.H;
  }
  return out;
}

double silverman_bandwidth(const PointCloud &data) {
  const auto n = data.size();
  if (n < 2)
    throw DomainError("silverman_bandwidth: need at least 2 points");
  const auto D = static_cast<double>(data.dim());
  const Matrix centered = data.matrix().colwise() - data.matrix().rowwise().mean();
  const Vector sd =
      (centered.rowwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt();
  const double s = sd.mean();
  if (!(s > 0))
    throw DomainError("silverman_bandwidth: all points identical");
  return s * std::pow(4.0 / ((D + 2.0) * static_cast<double>(n)), 1.0 / (D + 4.0));
}

DensityModel manifold_oracle(const ManifoldSpec &manifold,
                             const ManifoldWeightFn &weight, double sigma,
                             Eigen::Index m) {
  if (m < 8)
    throw DomainError("manifold_oracle: need at least 8 components");
  if (!(sigma > 0))
    throw DomainError("manifold_oracle: sigma must be positive");

  std::vector<Vector> nodes;
  std::vector<double> mass;
  if (manifold.as_circle()) {
    const auto probes = manifold_probes(manifold, m);
    const double ds = manifold.length() / static_cast<double>(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      nodes.emplace_back(probes.point(k));
      mass.push_back(weight(nodes.back()) * ds);
    }
  } else if (const auto *segs = manifold.as_segments()) {
    const double total = manifold.length();
    for (const auto &s : *segs) {
      const double len = (s.b - s.a).norm();
      const auto k = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::llround(static_cast<double>(m) * len / total)));
      for (Eigen::Index j = 0; j < k; ++j) {
        const double t = (static_cast<double>(j) + 0.5) / static_cast<double>(k);
        nodes.emplace_back(s.a + t * (s.b - s.a));
        mass.push_back(weight(nodes.back()) * len / static_cast<double>(k));
      }
    }
  } else {
    throw DomainError("manifold_oracle: unsupported manifold variant");
  }

  for (double w : mass)
    if (!(w >= 0) || !std::isfinite(w))
      throw DomainError("manifold_oracle: weight must be finite and nonnegative");
  // Zero-weight nodes carry no mass and are dropped.
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 0))
    throw DomainError("manifold_oracle: weight integrates to zero");
  std::vector<MixtureComponent> comps;
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (mass[j] > 0)
      comps.push_back({mass[j] / total, nodes[j], sigma});
  // Renormalize exactly so the mixture weights sum to 1 to rounding.
  double sum = 0;
  for (const auto &c : comps)
    sum += c.weight;
  for (auto &c : comps)
    c.weight /= sum;
  return DensityModel::mixture(comps);
}

} // namespace surf
