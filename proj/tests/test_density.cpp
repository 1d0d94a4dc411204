#include <doctest.h>

#include <cmath>
#include <thread>

#include "surf/density.hpp"
#include "surf/spectral.hpp"
#include "test_util.hpp"

using namespace surf;
using namespace surf::test;

namespace {

// Finite-difference check of g, H and H' against p (or log p).
struct FdErrors {
  double g, H, Hprime;
};

FdErrors fd_errors(const DensityModel &model, const Vector &x, bool log) {
  const double h = 1e-4;
  auto value = [&](const Vector &y) { return log ? model.log_eval(y).value : model.eval(y).value; };
  auto grad = [&](const Vector &y) -> Matrix { return log ? model.log_eval(y).g : model.eval(y).g; };
  auto hess = [&](const Vector &y) -> Matrix { return log ? model.log_eval(y).H : model.eval(y).H; };
  const auto info = log ? model.log_eval(x, true) : model.eval(x, true);
  return {rel_err(info.g, fd_gradient(value, x, h)), rel_err(info.H, fd_jacobian(grad, x, h)),
          rel_err(*info.Hprime, fd_jacobian(hess, x, h))};
}

DensityModel random_kde(Xoshiro256 &rng, Eigen::Index D, Eigen::Index n) {
  return DensityModel::kde(uniform_cloud(rng, D, n), 0.5);
}

DensityModel random_mixture(Xoshiro256 &rng, Eigen::Index D, int m) {
  std::vector<MixtureComponent> comps;
  double total = 0;
  for (int j = 0; j < m; ++j) {
    comps.push_back({rng.uniform(0.2, 1.0), uniform_matrix(rng, D, 1), rng.uniform(0.3, 0.8)});
    total += comps.back().weight;
  }
  for (auto &c : comps)
    c.weight /= total;
  return DensityModel::mixture(comps);
}

} // namespace

TEST_CASE("silverman_bandwidth") {
  // Unit per-coordinate sample standard deviation: +-1 pattern scaled.
  const Eigen::Index n = 1000;
  Matrix m(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(0, i) = (i % 2 ? 1.0 : -1.0);
    m(1, i) = (i % 4 < 2 ? 1.0 : -1.0);
  }
  const double sd = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
  const PointCloud unit(m / sd);
  CHECK(silverman_bandwidth(unit) == doctest::Approx(std::pow(4.0 / 4000.0, 1.0 / 6.0)));
  CHECK(silverman_bandwidth(unit) == doctest::Approx(0.31623).epsilon(1e-4));

  // D = 1, n = 100, std 2.
  Matrix one(1, 100);
  for (Eigen::Index i = 0; i < 100; ++i)
    one(0, i) = i % 2 ? 1.0 : -1.0;
  const PointCloud two(one * (2.0 / std::sqrt(100.0 / 99.0)));
  CHECK(silverman_bandwidth(two) == doctest::Approx(2 * std::pow(4.0 / 300.0, 0.2)));
  CHECK(silverman_bandwidth(two) == doctest::Approx(0.843369).epsilon(1e-5));

  Xoshiro256 rng(1);
  const auto x = uniform_cloud(rng, 3, 40);
  CHECK(silverman_bandwidth(PointCloud(x.matrix() * 3.5)) ==
        doctest::Approx(3.5 * silverman_bandwidth(x)).epsilon(1e-14));

  CHECK_THROWS_AS(silverman_bandwidth(PointCloud::from_rows({{1, 2}}, 2)), DomainError);
  CHECK_THROWS_AS(silverman_bandwidth(PointCloud::from_rows({{1, 2}, {1, 2}, {1, 2}}, 2)),
                  DomainError);
}

TEST_CASE("kde at the kernel center") {
  const auto model = DensityModel::kde(PointCloud::from_rows({{0, 0}}, 2), 1.0);
  const auto info = model.eval(Vector::Zero(2));
  CHECK(info.value == doctest::Approx(1 / (2 * M_PI)));
  CHECK(info.g.norm() == 0.0);
  CHECK((info.H + Matrix::Identity(2, 2) / (2 * M_PI)).norm() <= 1e-15);

  const auto mix = DensityModel::mixture({{1.0, Vector::Zero(2), 1.0}});
  Xoshiro256 rng(2);
  for (int t = 0; t < 5; ++t) {
    const Vector x = uniform_matrix(rng, 2, 1, -3, 3);
    const auto a = model.eval(x, true), b = mix.eval(x, true);
    CHECK(a.value == b.value);
    CHECK((a.g - b.g).norm() == 0.0);
    CHECK((a.H - b.H).norm() == 0.0);
    CHECK((*a.Hprime - *b.Hprime).norm() == 0.0);
  }
}

TEST_CASE("model construction errors") {
  CHECK_THROWS_AS(DensityModel::kde(PointCloud(2), 1.0), DomainError);
  CHECK_THROWS_AS(DensityModel::kde(PointCloud::from_rows({{0, 0}}, 2), 0.0), DomainError);
  CHECK_THROWS_AS(DensityModel::mixture({{0.5, Vector::Zero(2), 1.0}}), DomainError);
  CHECK_THROWS_AS(DensityModel::mixture({{1.0, Vector::Zero(2), -1.0}}), DomainError);
  CHECK_THROWS_AS(DensityModel::kde(PointCloud::from_rows({{0, 0}}, 2), 1.0).eval(Vector::Zero(3)),
                  DomainError);
}

TEST_CASE("derivatives match finite differences") {
  Xoshiro256 rng(3);
  SUBCASE("random kde, n = 50, D = 3") {
    const auto model = random_kde(rng, 3, 50);
    for (int t = 0; t < 20; ++t) {
      const Vector x = uniform_matrix(rng, 3, 1);
      const auto e = fd_errors(model, x, false);
      CHECK(e.g <= 1e-5);
      CHECK(e.H <= 1e-5);
      CHECK(e.Hprime <= 1e-5);
      const auto el = fd_errors(model, x, true);
      CHECK(el.g <= 1e-5);
      CHECK(el.H <= 1e-5);
      CHECK(el.Hprime <= 1e-3);
    }
  }
  SUBCASE("random mixtures, D = 1..3") {
    for (Eigen::Index D = 1; D <= 3; ++D) {
      const auto model = random_mixture(rng, D, 6);
      for (int t = 0; t < 20; ++t) {
        const Vector x = uniform_matrix(rng, D, 1, -1.5, 1.5);
        const auto e = fd_errors(model, x, false);
        CHECK(e.g <= 1e-5);
        CHECK(e.H <= 1e-5);
        CHECK(e.Hprime <= 1e-3);
      }
    }
  }
  SUBCASE("anisotropic component") {
    Matrix cov(2, 2);
    cov << 2.0, 0.6, 0.6, 0.7;
    const auto model = DensityModel::mixture(
        {{0.4, Vector{{0.5, 0.0}}, 1.0, cov}, {0.6, Vector{{-0.5, 0.3}}, 0.6, Matrix()}});
    for (int t = 0; t < 20; ++t) {
      const Vector x = uniform_matrix(rng, 2, 1, -2, 2);
      const auto e = fd_errors(model, x, false);
      CHECK(e.g <= 1e-5);
      CHECK(e.H <= 1e-5);
      CHECK(e.Hprime <= 1e-3);
    }
  }
}

TEST_CASE("log_eval on Gaussians") {
  const auto iso = DensityModel::mixture({{1.0, Vector::Zero(2), 1.0}});
  const auto li = iso.log_eval(Vector{{1.0, 0.0}});
  CHECK(li.g(0) == doctest::Approx(-1.0));
  CHECK(li.g(1) == doctest::Approx(0.0));

  Matrix cov(2, 2);
  cov << 4, 0, 0, 1;
  const auto aniso = DensityModel::gaussian(Vector::Zero(2), cov);
  Xoshiro256 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Vector x = uniform_matrix(rng, 2, 1, -4, 4);
    const auto info = aniso.log_eval(x);
    CHECK(info.H(0, 0) == doctest::Approx(-0.25));
    CHECK(info.H(1, 1) == doctest::Approx(-1.0));
    CHECK(std::abs(info.H(0, 1)) <= 1e-12);
  }
}

TEST_CASE("log_eval reports underflow far from the data") {
  const auto model = DensityModel::kde(PointCloud::from_rows({{0, 0}}, 2), 0.1);
  CHECK_THROWS_AS(model.log_eval(Vector{{100.0, 0.0}}), UnderflowError);
  CHECK(model.eval(Vector{{100.0, 0.0}}).value == 0.0);
  // Still fine near the data.
  CHECK_NOTHROW(model.log_eval(Vector{{1.0, 0.0}}));
}

TEST_CASE("mean-shift target") {
  const auto data = PointCloud::from_rows({{0, 0}, {2, 0}, {0, 4}}, 2);
  const auto model = DensityModel::kde(data, 0.7);
  const Vector x{{0.3, 0.9}};
  Vector num = Vector::Zero(2);
  double den = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double c = std::exp(-(x - data.point(i)).squaredNorm() / (2 * 0.49));
    num += c * data.point(i);
    den += c;
  }
  CHECK((model.mean_shift_target(x) - num / den).norm() <= 1e-12);
  // m(x) - x = h^2 grad p / p for a kde.
  const auto info = model.eval(x);
  CHECK((model.mean_shift_target(x) - x - 0.49 * info.g / info.value).norm() <= 1e-12);
}

TEST_CASE("kde integrates to one") {
  Xoshiro256 rng(5);
  const auto data = uniform_cloud(rng, 2, 30);
  const double h = 0.3;
  const auto model = DensityModel::kde(data, h);
  const double lo = -1 - 3 * h, hi = 1 + 3 * h;
  const int N = 200000;
  double acc = 0;
  for (int i = 0; i < N; ++i)
    acc += model.eval(uniform_matrix(rng, 2, 1, lo, hi)).value;
  const double integral = acc / N * (hi - lo) * (hi - lo);
  CHECK(std::abs(integral - 1.0) <= 0.02);
}

TEST_CASE("eval is translation equivariant") {
  Xoshiro256 rng(6);
  const auto data = uniform_cloud(rng, 3, 20);
  const Vector shift{{3.0, -2.0, 0.5}};
  const auto a = DensityModel::kde(data, 0.4);
  const auto b = DensityModel::kde(PointCloud(data.matrix().colwise() + shift), 0.4);
  for (int t = 0; t < 10; ++t) {
    const Vector x = uniform_matrix(rng, 3, 1);
    const auto ia = a.eval(x, true), ib = b.eval(x + shift, true);
    CHECK(std::abs(ia.value - ib.value) <= 1e-12);
    CHECK((ia.g - ib.g).norm() <= 1e-12);
    CHECK((ia.H - ib.H).norm() <= 1e-12);
    CHECK((*ia.Hprime - *ib.Hprime).norm() <= 1e-12);
  }
}

TEST_CASE("manifold_oracle") {
  const auto circle = ManifoldSpec::circle(Vector::Zero(2), 3);
  CHECK_THROWS_AS(manifold_oracle(circle, uniform_weight, 0.5, 4), DomainError);

  const auto m8 = manifold_oracle(circle, uniform_weight, 0.5, 8);
  const auto comps = m8.components();
  REQUIRE(comps.size() == 8);
  double total = 0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double t = 2 * M_PI * static_cast<double>(k) / 8;
    CHECK((comps[k].mean - Vector{{3 * std::cos(t), 3 * std::sin(t)}}).norm() <= 1e-14);
    CHECK(comps[k].weight == doctest::Approx(0.125));
    total += comps[k].weight;
  }
  CHECK(std::abs(total - 1) <= 1e-12);

  // Quadrature refinement changes the density by a negligible amount.
  const auto coarse = manifold_oracle(circle, uniform_weight, 0.5, 512);
  const auto fine = manifold_oracle(circle, uniform_weight, 0.5, 2048);
  for (const Vector &x : {Vector{{3.0, 0.0}}, Vector{{2.2, 1.9}}, Vector{{0.0, -3.4}}}) {
    const double a = coarse.eval(x).value, b = fine.eval(x).value;
    CHECK(std::abs(a - b) / b <= 1e-6);
  }

  const auto segs = ManifoldSpec::segments({{Vector{{0.0, 0.0}}, Vector{{4.0, 0.0}}},
                                            {Vector{{0.0, 1.0}}, Vector{{0.0, 3.0}}}});
  const auto so = manifold_oracle(segs, uniform_weight, 0.3, 60);
  double st = 0;
  for (const auto &c : so.components())
    st += c.weight;
  CHECK(std::abs(st - 1) <= 1e-12);
  CHECK(so.size() == 60);

  CHECK_THROWS_AS(manifold_oracle(ManifoldSpec::point_set(PointCloud::from_rows({{0, 0}}, 2)),
                                  uniform_weight, 0.5, 16),
                  DomainError);
}

TEST_CASE("circle oracle Hessian eigenstructure near the manifold") {
  // Within sigma of M: one strongly negative eigenvalue ~ -p / sigma^2 and
  // one small one.
  const double sigma = 0.1;
  const auto circle = ManifoldSpec::circle(Vector::Zero(2), 3);
  const auto oracle = manifold_oracle(circle, uniform_weight, sigma, 4096);
  for (double off : {-0.08, -0.03, 0.0, 0.05}) {
    for (double t : {0.0, 0.7, 2.9}) {
      const Vector x{{(3 + off) * std::cos(t), (3 + off) * std::sin(t)}};
      const auto info = oracle.eval(x);
      const auto eig = jacobi_eigen(info.H);
      const double normal = eig.values(1);
      CHECK(normal < 0);
      CHECK(std::abs(eig.values(0)) * 10 <= std::abs(normal));
      const double expected = info.value / (sigma * sigma) * (1 - off * off / (sigma * sigma));
      CHECK(std::abs(normal) == doctest::Approx(expected).epsilon(0.25));
    }
  }
}

TEST_CASE("eval is safe to call concurrently") {
  Xoshiro256 rng(7);
  const auto model = random_kde(rng, 2, 200);
  const Vector x{{0.1, 0.2}};
  const auto ref = model.eval(x, true);
  std::vector<double> got(4);
  std::vector<std::thread> ts;
  for (std::size_t t = 0; t < got.size(); ++t)
    ts.emplace_back([&, t] { got[t] = model.eval(x, true).value; });
  for (auto &t : ts)
    t.join();
  for (double g : got)
    CHECK(g == ref.value);
}
