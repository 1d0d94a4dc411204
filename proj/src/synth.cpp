#include "surf/synth.hpp"

#include <algorithm>
#include <cmath>

#include "surf/parallel.hpp"
#include "surf/random.hpp"

namespace surf {

namespace {

double circle_angle(const Circle &c, const Vector &z) {
  return std::atan2(z(1) - c.center(1), z(0) - c.center(0));
}

Vector draw_on_manifold(const HiddenManifoldModel &model, Xoshiro256 &rng) {
  const auto &m = model.manifold;
  if (const auto *c = m.as_circle()) {
    const double a = model.weight.cosine_amplitude;
    double theta = rng.uniform(0.0, 2 * M_PI);
    // Rejection against the envelope 1 + a.
    while (a > 0 && rng.uniform() * (1 + a) > 1 + a * std::cos(theta))
      theta = rng.uniform(0.0, 2 * M_PI);
    Vector z = c->center;
    z(0) += c->radius * std::cos(theta);
    z(1) += c->radius * std::sin(theta);
    return z;
  }
  if (const auto *segs = m.as_segments()) {
    const double target = rng.uniform() * m.length();
    double acc = 0;
    const Segment *chosen = &segs->back();
    for (const auto &s : *segs) {
      acc += (s.b - s.a).norm();
      if (target < acc) {
        chosen = &s;
        break;
      }
    }
    const double t = rng.uniform();
    return chosen->a + t * (chosen->b - chosen->a);
  }
  const auto &pts = *m.as_point_set();
  auto k = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(pts.size()));
  return pts.point(std::min(k, pts.size() - 1));
}

} // namespace

double ManifoldWeight::operator()(const ManifoldSpec &m, const Vector &z) const {
  if (const auto *c = m.as_circle())
    return 1 + cosine_amplitude * std::cos(circle_angle(*c, z));
  return 1.0;
}

ManifoldWeightFn ManifoldWeight::bind(const ManifoldSpec &m) const {
  return [w = *this, m](const Vector &z) { return w(m, z); };
}

double AxisBox::volume() const {
  double v = 1;
  for (const auto &[lo, hi] : intervals)
    v *= std::max(0.0, hi - lo);
  return v;
}

void HiddenManifoldModel::validate() const {
  if (!(eta >= 0 && eta <= 1))
    throw DomainError("hidden manifold model: eta must be in [0, 1]");
  if (!(sigma >= 0) || !std::isfinite(sigma))
    throw DomainError("hidden manifold model: sigma must be nonnegative");
  if (!(weight.cosine_amplitude >= 0 && weight.cosine_amplitude < 1))
    throw DomainError("hidden manifold model: cosine amplitude must be in [0, 1)");
  if (weight.cosine_amplitude > 0 && !manifold.as_circle())
    throw DomainError("hidden manifold model: nonuniform weight needs a circle");
  if (box.dim() != manifold.dim())
    throw DomainError("hidden manifold model: box dimension mismatch");
  if (eta < 1 && !(box.volume() > 0))
    throw DomainError("hidden manifold model: degenerate clutter box");
  const auto needed = bounding_box(manifold, sigma);
  for (std::size_t k = 0; k < box.intervals.size(); ++k) {
    if (box.intervals[k].first > needed.intervals[k].first ||
        box.intervals[k].second < needed.intervals[k].second)
      throw DomainError("hidden manifold model: box does not contain the "
                        "sigma-neighborhood of the manifold");
  }
}

AxisBox bounding_box(const ManifoldSpec &m, double margin) {
  const auto D = m.dim();
  Vector lo = Vector::Constant(D, std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  if (const auto *c = m.as_circle()) {
    lo = hi = c->center;
    lo.head(2).array() -= c->radius;
    hi.head(2).array() += c->radius;
  } else if (const auto *segs = m.as_segments()) {
    for (const auto &s : *segs) {
      lo = lo.cwiseMin(s.a).cwiseMin(s.b);
      hi = hi.cwiseMax(s.a).cwiseMax(s.b);
    }
  } else {
    lo = m.as_point_set()->matrix().rowwise().minCoeff();
    hi = m.as_point_set()->matrix().rowwise().maxCoeff();
  }
  AxisBox box;
  for (Eigen::Index k = 0; k < D; ++k)
    box.intervals.emplace_back(lo(k) - margin, hi(k) + margin);
  return box;
}

PointCloud sample(const HiddenManifoldModel &model, Eigen::Index n, unsigned threads) {
  if (n < 1)
    throw DomainError("sample: n must be >= 1");
  model.validate();
  const auto D = model.manifold.dim();
  Matrix out(D, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    auto rng = Xoshiro256::substream(model.seed, i);
    const bool signal = rng.uniform() < model.eta;
    Vector x(D);
    if (signal) {
      x = draw_on_manifold(model, rng);
      for (Eigen::Index k = 0; k < D; ++k)
        x(k) += model.sigma * rng.normal();
    } else {
      for (Eigen::Index k = 0; k < D; ++k) {
        const auto &[lo, hi] = model.box.intervals[static_cast<std::size_t>(k)];
        x(k) = rng.uniform(lo, hi);
      }
    }
    out.col(static_cast<Eigen::Index>(i)) = x;
  });
  return PointCloud(std::move(out));
}

std::vector<Segment> default_cosmic_web_layout() {
  auto seg = [](double x0, double y0, double x1, double y1) {
    return Segment{Vector{{x0, y0}}, Vector{{x1, y1}}};
  };
  return {seg(1, 1, 9, 9), seg(1, 9, 9, 1), seg(3, 1, 3, 9), seg(1, 6.5, 9, 6.5),
          seg(6, 8, 8.5, 9)};
}

CosmicWeb cosmic_web(std::uint64_t seed, Eigen::Index n,
                     const std::vector<Segment> &layout, double sigma,
                     double clutter_frac) {
  if (layout.empty())
    throw DomainError("cosmic_web: segment layout is empty");
  if (!(clutter_frac >= 0 && clutter_frac <= 1))
    throw DomainError("cosmic_web: clutter_frac must be in [0, 1]");
  auto truth = ManifoldSpec::segments(layout);
  HiddenManifoldModel model{truth, {}, sigma, 1 - clutter_frac,
                            bounding_box(truth, std::max(4 * sigma, 1.0)), seed};
  auto pts = sample(model, n);
  return CosmicWeb{std::move(pts), std::move(truth), std::move(model)};
}

} // namespace surf
