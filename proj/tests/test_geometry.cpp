#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <thread>

#include "surf/geometry.hpp"
#include "test_util.hpp"

using namespace surf;
using surf::test::uniform_cloud;

namespace {

double brute_min_distance(const Vector &x, const PointCloud &a) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double s = 0;
    for (Eigen::Index k = 0; k < a.dim(); ++k)
      s += (x(k) - a.matrix()(k, i)) * (x(k) - a.matrix()(k, i));
    best = std::min(best, std::sqrt(s));
  }
  return best;
}

double brute_hausdorff(const PointCloud &a, const PointCloud &b) {
  double h = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    h = std::max(h, brute_min_distance(a.point(i), b));
  for (Eigen::Index j = 0; j < b.size(); ++j)
    h = std::max(h, brute_min_distance(b.point(j), a));
  return h;
}

// BFS over an explicit adjacency matrix.
Eigen::Index brute_components(const PointCloud &a, double eps) {
  const auto n = a.size();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      adj(i, j) = (a.point(i) - a.point(j)).norm() <= 2 * eps;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  Eigen::Index comps = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (seen[s])
      continue;
    ++comps;
    std::queue<Eigen::Index> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const auto i = q.front();
      q.pop();
      for (Eigen::Index j = 0; j < n; ++j)
        if (adj(i, j) && !seen[j]) {
          seen[j] = true;
          q.push(j);
        }
    }
  }
  return comps;
}

PointCloud circle_points(Eigen::Index n, double r) {
  Matrix m(2, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = 2 * M_PI * k / n;
    m(0, k) = r * std::cos(t);
    m(1, k) = r * std::sin(t);
  }
  return PointCloud(m);
}

} // namespace

TEST_CASE("point cloud rejects non-finite coordinates") {
  Matrix m(2, 1);
  m << 1, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(PointCloud{m}, DomainError);
  CHECK_THROWS_AS(PointCloud(Matrix(0, 3)), DomainError);
}

TEST_CASE("distance_to_set") {
  const auto one = PointCloud::from_rows({{3, 4}}, 2);
  CHECK(distance_to_set(Vector::Zero(2), one) == doctest::Approx(5.0));

  const auto two = PointCloud::from_rows({{1, 1}, {9, 9}}, 2);
  CHECK(distance_to_set(Vector::Ones(2), two) == 0.0);

  Xoshiro256 rng(11);
  const auto cloud = uniform_cloud(rng, 2, 100);
  CHECK(distance_to_set(Vector::Zero(2), cloud) ==
        doctest::Approx(brute_min_distance(Vector::Zero(2), cloud)).epsilon(1e-14));

  CHECK_THROWS_AS(distance_to_set(Vector::Zero(2), PointCloud(2)), DomainError);
  CHECK_THROWS_AS(distance_to_set(Vector::Zero(3), cloud), DomainError);

  // x added to the set is at distance zero.
  auto with_x = cloud;
  Vector x(2);
  x << 0.123, -0.456;
  with_x.push_back(x);
  CHECK(distance_to_set(x, with_x) == 0.0);
}

TEST_CASE("hausdorff hand cases and errors") {
  const auto a = PointCloud::from_rows({{0, 0}, {1, 0}}, 2);
  const auto b = PointCloud::from_rows({{0.5, 0}}, 2);
  CHECK(hausdorff(a, b) == doctest::Approx(0.5));
  CHECK(hausdorff(a, a) == 0.0);
  CHECK_THROWS_AS(hausdorff(a, PointCloud(2)), DomainError);
  CHECK_THROWS_AS(hausdorff(a, PointCloud::from_rows({{0, 0, 0}}, 3)), DomainError);
}

TEST_CASE("hausdorff matches brute force on random clouds") {
  Xoshiro256 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = uniform_cloud(rng, 3, 50, 0, 1);
    const auto b = uniform_cloud(rng, 3, 70, 0, 1);
    const double ref = brute_hausdorff(a, b);
    CHECK(std::abs(hausdorff(a, b) - ref) <= 1e-12);
    CHECK(std::abs(hausdorff_brute_force(a, b) - ref) <= 1e-12);
  }
}

TEST_CASE("hausdorff metric properties") {
  Xoshiro256 rng(17);
  for (int trial = 0; trial < 120; ++trial) {
    const auto D = 1 + static_cast<Eigen::Index>(trial % 3);
    const auto a = uniform_cloud(rng, D, 5 + trial % 13);
    const auto b = uniform_cloud(rng, D, 3 + trial % 7);
    const auto c = uniform_cloud(rng, D, 4 + trial % 11);
    CHECK(hausdorff(a, b) == hausdorff(b, a));
    CHECK(hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-15);
  }
}

TEST_CASE("hausdorff is zero exactly for equal sets") {
  Xoshiro256 rng(3);
  const auto a = uniform_cloud(rng, 2, 30);
  // Same set with repeats and shuffled order.
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = a.size() - 1; i >= 0; --i) {
    idx.push_back(i);
    if (i % 3 == 0)
      idx.push_back(i);
  }
  CHECK(hausdorff(a, a.subset(idx)) == 0.0);
  // Drop one point: no longer equal as sets.
  idx.erase(std::remove(idx.begin(), idx.end(), Eigen::Index{7}), idx.end());
  CHECK(hausdorff(a, a.subset(idx)) > 0.0);
}

TEST_CASE("dilation_components") {
  CHECK(dilation_components(circle_points(64, 3), 0.5) == 1);
  CHECK(dilation_components(PointCloud::from_rows({{0, 0}, {10, 0}}, 2), 1.0) == 2);
  CHECK_THROWS_AS(dilation_components(PointCloud(2), 1.0), DomainError);
  CHECK_THROWS_AS(dilation_components(circle_points(4, 1), 0.0), DomainError);

  Xoshiro256 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    // Clustered data: a few centers with tight noise.
    Matrix m(2, 120);
    const Matrix centers = surf::test::uniform_matrix(rng, 2, 6, -5, 5);
    for (Eigen::Index i = 0; i < m.cols(); ++i)
      m.col(i) = centers.col(i % 6) + 0.3 * surf::test::uniform_matrix(rng, 2, 1);
    const PointCloud pts(m);
    for (double eps : {0.05, 0.2, 0.5, 1.0, 3.0})
      CHECK(dilation_components(pts, eps) == brute_components(pts, eps));
  }
}

TEST_CASE("dilation_components is nonincreasing in eps") {
  Xoshiro256 rng(29);
  const auto pts = uniform_cloud(rng, 2, 200, 0, 10);
  Eigen::Index prev = std::numeric_limits<Eigen::Index>::max();
  for (double eps = 0.01; eps < 3; eps *= 1.3) {
    const auto c = dilation_components(pts, eps);
    CHECK(c <= prev);
    prev = c;
  }
  CHECK(prev == 1);
}

TEST_CASE("distance_to_manifold") {
  const auto circle = ManifoldSpec::circle(Vector::Zero(2), 3);
  CHECK(distance_to_manifold(Vector{{3.0, 0.0}}, circle) == doctest::Approx(0.0));
  CHECK(distance_to_manifold(Vector::Zero(2), circle) == doctest::Approx(3.0));

  const auto seg = ManifoldSpec::segments({{Vector{{0.0, 0.0}}, Vector{{2.0, 0.0}}}});
  CHECK(distance_to_manifold(Vector{{1.0, 1.0}}, seg) == doctest::Approx(1.0));
  CHECK(distance_to_manifold(Vector{{3.0, 0.0}}, seg) == doctest::Approx(1.0));

  CHECK_THROWS_AS(ManifoldSpec::circle(Vector::Zero(2), 0), DomainError);
  CHECK_THROWS_AS(ManifoldSpec::segments({{Vector::Zero(2), Vector::Zero(2)}}), DomainError);
  CHECK_THROWS_AS(distance_to_manifold(Vector::Zero(3), circle), DomainError);
}

TEST_CASE("hausdorff_to_manifold") {
  const auto circle = ManifoldSpec::circle(Vector::Zero(2), 3);
  {
    // Concentric circles: radial gap 0.1 plus the angular offset between each
    // probe and the nearest of the 360 points, computed in closed form.
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
      const double deg = 360.0 * k / 1000;
      const double off = std::abs(deg - std::round(deg)) * M_PI / 180;
      worst = std::max(worst, std::sqrt(0.01 + 2 * 3 * 2.9 * (1 - std::cos(off))));
    }
    const double got = hausdorff_to_manifold(circle_points(360, 2.9), circle, 1000);
    CHECK(std::abs(got - worst) <= 1e-12);
    CHECK(got >= 0.1);
    CHECK(got <= 0.1 + 5e-3);
  }
  CHECK(hausdorff_to_manifold(manifold_probes(circle, 500), circle, 500) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(hausdorff_to_manifold(circle_points(10, 1), circle, 1), DomainError);

  const auto segs = ManifoldSpec::segments({{Vector{{0.0, 0.0}}, Vector{{4.0, 0.0}}},
                                            {Vector{{2.0, -2.0}}, Vector{{2.0, 2.0}}}});
  CHECK(hausdorff_to_manifold(manifold_probes(segs, 300), segs, 300) == 0.0);

  Xoshiro256 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix m(2, 80);
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      const double t = rng.uniform(0, 4);
      m.col(i) = i % 2 ? Vector{{t, 0.0}} : Vector{{2.0, t - 2}};
      m.col(i) += 0.05 * surf::test::uniform_matrix(rng, 2, 1);
    }
    const PointCloud a(m);
    const double coarse = hausdorff_to_manifold(a, segs, 500);
    const double dense = hausdorff_to_manifold(a, segs, 5000);
    CHECK(std::abs(coarse - dense) <= 1e-2);
  }
}

TEST_CASE("geometry is callable concurrently") {
  Xoshiro256 rng(41);
  const auto a = uniform_cloud(rng, 3, 300);
  const auto b = uniform_cloud(rng, 3, 200);
  const double ref = hausdorff(a, b);
  std::vector<double> got(4);
  std::vector<std::thread> ts;
  for (std::size_t t = 0; t < got.size(); ++t)
    ts.emplace_back([&, t] { got[t] = hausdorff(a, b); });
  for (auto &t : ts)
    t.join();
  for (double g : got)
    CHECK(g == ref);
}
