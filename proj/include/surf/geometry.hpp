#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "surf/errors.hpp"
#include "surf/point_cloud.hpp"

namespace surf {

// ---------------------------------------------------------------------------
// Known manifolds used as ground truth.

template <typename Scalar> struct CircleT {
  VectorT<Scalar> center;
  Scalar radius;
};

template <typename Scalar> struct SegmentT {
  VectorT<Scalar> a;
  VectorT<Scalar> b;
};

template <typename Scalar> class ManifoldSpecT {
public:
  using Circle = CircleT<Scalar>;
  using Segment = SegmentT<Scalar>;
  using Segments = std::vector<Segment>;
  using Variant = std::variant<Circle, Segments, PointCloudT<Scalar>>;

  static ManifoldSpecT circle(VectorT<Scalar> center, Scalar radius) {
    if (!(radius > 0))
      throw DomainError("circle radius must be positive");
    if (center.size() < 2)
      throw DomainError("circle needs an ambient dimension >= 2");
    return ManifoldSpecT(Circle{std::move(center), radius});
  }

  static ManifoldSpecT segments(Segments segs) {
    if (segs.empty())
      throw DomainError("segment list is empty");
    const auto dim = segs.front().a.size();
    for (const auto &s : segs) {
      if (s.a.size() != dim || s.b.size() != dim)
        throw DomainError("segment endpoints have inconsistent dimension");
      if ((s.a - s.b).norm() == 0)
        throw DomainError("segment endpoints must be distinct");
    }
    return ManifoldSpecT(std::move(segs));
  }

  static ManifoldSpecT point_set(PointCloudT<Scalar> pts) {
    if (pts.empty())
      throw DomainError("point-set manifold is empty");
    return ManifoldSpecT(std::move(pts));
  }

  Eigen::Index dim() const {
    return std::visit(
        [](const auto &v) -> Eigen::Index {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Circle>)
            return v.center.size();
          else if constexpr (std::is_same_v<T, Segments>)
            return v.front().a.size();
          else
            return v.dim();
        },
        variant_);
  }

  const Variant &variant() const { return variant_; }
  const Circle *as_circle() const { return std::get_if<Circle>(&variant_); }
  const Segments *as_segments() const { return std::get_if<Segments>(&variant_); }
  const PointCloudT<Scalar> *as_point_set() const {
    return std::get_if<PointCloudT<Scalar>>(&variant_);
  }

  /// Total arclength (circle, segments); zero for a point set.
  Scalar length() const {
    if (auto c = as_circle())
      return Scalar(2 * M_PI) * c->radius;
    if (auto s = as_segments()) {
      Scalar total = 0;
      for (const auto &seg : *s)
        total += (seg.b - seg.a).norm();
      return total;
    }
    return 0;
  }

private:
  explicit ManifoldSpecT(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

using Circle = CircleT<double>;
using Segment = SegmentT<double>;
using ManifoldSpec = ManifoldSpecT<double>;

// ---------------------------------------------------------------------------
// Distances between points and finite sets.

template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar distance_to_set(const Eigen::MatrixBase<Derived> &x,
                       const PointCloudT<Scalar> &set) {
  if (set.empty())
    throw DomainError("distance_to_set: empty set");
  if (x.size() != set.dim())
    throw DomainError("distance_to_set: dimension mismatch");
  return std::sqrt((set.matrix().colwise() - x.derived()).colwise().squaredNorm().minCoeff());
}

namespace detail {

template <typename Scalar>
void check_pair(const PointCloudT<Scalar> &a, const PointCloudT<Scalar> &b) {
  if (a.empty() || b.empty())
    throw DomainError("hausdorff: empty point set");
  if (a.dim() != b.dim())
    throw DomainError("hausdorff: dimension mismatch");
}

// Directed distance max_a min_b |a-b|, squared. Stops scanning b as soon as
// a's running minimum drops below the current maximum, since a cannot raise it.
template <typename Scalar>
Scalar directed_hausdorff_sq(const PointCloudT<Scalar> &from,
                             const PointCloudT<Scalar> &to) {
  const auto &A = from.matrix();
  const auto &B = to.matrix();
  Scalar cmax = 0;
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    Scalar cmin = std::numeric_limits<Scalar>::infinity();
    bool pruned = false;
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      const Scalar d = (A.col(i) - B.col(j)).squaredNorm();
      if (d < cmin) {
        cmin = d;
        if (cmin < cmax) {
          pruned = true;
          break;
        }
      }
    }
    if (!pruned && cmin > cmax)
      cmax = cmin;
  }
  return cmax;
}

} // namespace detail

/// Exact Hausdorff distance between two finite sets, with early-break
/// pruning. Returns the same value as the brute-force double loop.
template <typename Scalar>
Scalar hausdorff(const PointCloudT<Scalar> &a, const PointCloudT<Scalar> &b) {
  detail::check_pair(a, b);
  return std::sqrt(std::max(detail::directed_hausdorff_sq(a, b),
                            detail::directed_hausdorff_sq(b, a)));
}

/// O(nm) reference implementation of hausdorff().
template <typename Scalar>
Scalar hausdorff_brute_force(const PointCloudT<Scalar> &a,
                             const PointCloudT<Scalar> &b) {
  detail::check_pair(a, b);
  Scalar h = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    h = std::max(h, distance_to_set(a.point(i), b));
  for (Eigen::Index j = 0; j < b.size(); ++j)
    h = std::max(h, distance_to_set(b.point(j), a));
  return h;
}

/// Connected components of the union of eps-balls around the points, i.e.
/// of the graph joining points at distance <= 2 eps.
template <typename Scalar>
Eigen::Index dilation_components(const PointCloudT<Scalar> &set, Scalar eps) {
  if (set.empty())
    throw DomainError("dilation_components: empty set");
  if (!(eps > 0))
    throw DomainError("dilation_components: eps must be positive");
  const auto &P = set.matrix();
  const Eigen::Index n = P.cols();
  const Scalar reach = 2 * eps;
  const Scalar reach_sq = reach * reach;

  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };

  // Sweep along the first coordinate; only pairs within `reach` in x0 can link.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return P(0, i) < P(0, j); });

  Eigen::Index components = n;
  for (std::size_t s = 0; s < order.size(); ++s) {
    const auto i = order[s];
    for (std::size_t t = s + 1; t < order.size(); ++t) {
      const auto j = order[t];
      if (P(0, j) - P(0, i) > reach)
        break;
      if ((P.col(i) - P.col(j)).squaredNorm() <= reach_sq) {
        const auto ri = find(i), rj = find(j);
        if (ri != rj) {
          parent[std::max(ri, rj)] = std::min(ri, rj);
          --components;
        }
      }
    }
  }
  return components;
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar distance_to_segment(const Eigen::MatrixBase<Derived> &x,
                           const SegmentT<Scalar> &seg) {
  const VectorT<Scalar> ab = seg.b - seg.a;
  Scalar t = (x.derived() - seg.a).dot(ab) / ab.squaredNorm();
  t = std::clamp(t, Scalar(0), Scalar(1));
  return (x.derived() - (seg.a + t * ab)).norm();
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar distance_to_manifold(const Eigen::MatrixBase<Derived> &x,
                            const ManifoldSpecT<Scalar> &m) {
  if (x.size() != m.dim())
    throw DomainError("distance_to_manifold: dimension mismatch");
  if (const auto *c = m.as_circle()) {
    // Circle lives in the plane of the first two coordinates through center.
    const VectorT<Scalar> off = x.derived() - c->center;
    const Scalar in_plane = off.head(2).norm();
    const Scalar normal_sq = off.size() > 2 ? off.tail(off.size() - 2).squaredNorm() : Scalar(0);
    const Scalar radial = in_plane - c->radius;
    return std::sqrt(radial * radial + normal_sq);
  }
  if (const auto *segs = m.as_segments()) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const auto &s : *segs)
      best = std::min(best, distance_to_segment(x, s));
    return best;
  }
  return distance_to_set(x, *m.as_point_set());
}

/// Deterministic probes on M: equal angles on a circle starting at angle 0;
/// on segments, equally spaced points (endpoints included) with counts
/// proportional to segment length; a point set is returned as is.
template <typename Scalar>
PointCloudT<Scalar> manifold_probes(const ManifoldSpecT<Scalar> &m,
                                    Eigen::Index probe_count) {
  if (probe_count < 2)
    throw DomainError("probe_count must be >= 2");
  if (const auto *c = m.as_circle()) {
    MatrixT<Scalar> P(c->center.size(), probe_count);
    for (Eigen::Index k = 0; k < probe_count; ++k) {
      const Scalar theta = Scalar(2 * M_PI) * Scalar(k) / Scalar(probe_count);
      P.col(k) = c->center;
      P(0, k) += c->radius * std::cos(theta);
      P(1, k) += c->radius * std::sin(theta);
    }
    return PointCloudT<Scalar>(std::move(P));
  }
  if (const auto *segs = m.as_segments()) {
    const Scalar total = m.length();
    std::vector<Eigen::Index> counts;
    Eigen::Index sum = 0;
    for (const auto &s : *segs) {
      const auto k = std::max<Eigen::Index>(
          2, static_cast<Eigen::Index>(std::llround(Scalar(probe_count) * (s.b - s.a).norm() / total)));
      counts.push_back(k);
      sum += k;
    }
    MatrixT<Scalar> P(m.dim(), sum);
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < segs->size(); ++i) {
      const auto &s = (*segs)[i];
      for (Eigen::Index k = 0; k < counts[i]; ++k) {
        const Scalar t = Scalar(k) / Scalar(counts[i] - 1);
        P.col(col++) = s.a + t * (s.b - s.a);
      }
    }
    return PointCloudT<Scalar>(std::move(P));
  }
  return *m.as_point_set();
}

/// Hausdorff distance between a finite set and a known manifold, with the
/// manifold side discretized by manifold_probes().
template <typename Scalar>
Scalar hausdorff_to_manifold(const PointCloudT<Scalar> &a,
                             const ManifoldSpecT<Scalar> &m,
                             Eigen::Index probe_count) {
  if (a.empty())
    throw DomainError("hausdorff_to_manifold: empty set");
  const auto probes = manifold_probes(m, probe_count);
  Scalar h = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    h = std::max(h, distance_to_manifold(a.point(i), m));
  return std::sqrt(std::max(h * h, detail::directed_hausdorff_sq(probes, a)));
}

} // namespace surf
