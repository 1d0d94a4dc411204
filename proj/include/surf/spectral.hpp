#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "surf/errors.hpp"
#include "surf/point_cloud.hpp"

namespace surf {

template <typename Scalar> struct SymmetricEigenT {
  VectorT<Scalar> values;  // descending
  MatrixT<Scalar> vectors; // column k pairs with values(k)
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
///
/// Sweeps over all (p, q) rotations until the off-diagonal Frobenius norm is
/// at most `tol` times the Frobenius norm of the input, or `max_sweeps` is
/// hit. Eigenvalues are sorted descending and every eigenvector is flipped so
/// that its largest-magnitude entry is positive (first such entry on ties).
template <typename Derived, typename Scalar = typename Derived::Scalar>
SymmetricEigenT<Scalar> jacobi_eigen(const Eigen::MatrixBase<Derived> &input,
                                     Scalar tol = Scalar(1e-12),
                                     int max_sweeps = 100) {
  const Eigen::Index n = input.rows();
  if (n != input.cols())
    throw DomainError("jacobi_eigen: matrix is not square");
  MatrixT<Scalar> a = input;
  MatrixT<Scalar> v = MatrixT<Scalar>::Identity(n, n);
  const Scalar scale = a.norm();

  auto off_norm = [&] {
    Scalar s = 0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p)
        s += 2 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  SymmetricEigenT<Scalar> out;
  while (scale > 0 && off_norm() > tol * scale && out.sweeps < max_sweeps) {
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == 0)
          continue;
        // Rotation angle that zeroes a(p, q); t = tan(theta), smaller root.
        const Scalar theta = (a(q, q) - a(p, p)) / (2 * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const Scalar c = 1 / std::sqrt(t * t + 1);
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    VectorT<Scalar> col = v.col(src);
    Eigen::Index arg = 0;
    Scalar best = -1;
    for (Eigen::Index r = 0; r < n; ++r) {
      // Slack keeps the choice stable when two entries tie up to rounding.
      if (std::abs(col(r)) > best * (1 + 64 * std::numeric_limits<Scalar>::epsilon())) {
        best = std::abs(col(r));
        arg = r;
      }
    }
    if (col(arg) < 0)
      col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

template <typename Scalar> struct SpectralFrameT {
  VectorT<Scalar> eigenvalues; // descending
  MatrixT<Scalar> eigenvectors;
  MatrixT<Scalar> V; // D x (D - d), eigenvectors of the D - d smallest
  MatrixT<Scalar> L; // V V^T
  VectorT<Scalar> G; // L g
  Scalar eigengap;   // lambda_d - lambda_{d+1}; +inf when d = 0
  Scalar lambda_next; // lambda_{d+1}
  int d = 0;
};

using SpectralFrame = SpectralFrameT<double>;
using SymmetricEigen = SymmetricEigenT<double>;

/// Relative symmetry tolerance accepted by spectral_frame().
inline constexpr double kSymmetryTolerance = 1e-10;

template <typename GDerived, typename HDerived,
          typename Scalar = typename GDerived::Scalar>
SpectralFrameT<Scalar> spectral_frame(const Eigen::MatrixBase<GDerived> &g,
                                      const Eigen::MatrixBase<HDerived> &H,
                                      int d) {
  const Eigen::Index D = H.rows();
  if (H.cols() != D || g.size() != D)
    throw DomainError("spectral_frame: dimension mismatch");
  if (d < 0 || d >= D)
    throw DomainError("spectral_frame: d must be in [0, D-1]");
  const Scalar asym = (H - H.transpose()).norm();
  if (asym > Scalar(kSymmetryTolerance) * std::max(H.norm(), Scalar(1e-300)))
    throw DomainError("spectral_frame: Hessian is not symmetric");

  const MatrixT<Scalar> Hs = (H + H.transpose()) / 2;
  auto eig = jacobi_eigen(Hs);

  SpectralFrameT<Scalar> f;
  f.d = d;
  f.V = eig.vectors.rightCols(D - d);
  f.L = f.V * f.V.transpose();
  f.G = f.L * g;
  f.lambda_next = eig.values(d);
  f.eigengap = d == 0 ? std::numeric_limits<Scalar>::infinity()
                      : eig.values(d - 1) - eig.values(d);
  f.eigenvalues = std::move(eig.values);
  f.eigenvectors = std::move(eig.vectors);
  return f;
}

template <typename Scalar> struct ConditionReportT {
  bool a1_holds = false;
  bool a2_holds = false;
  Scalar beta_used = 0;
  Scalar lambda_next = 0;
  Scalar eigengap = 0;
  Scalar a2_lhs = 0; // |L_perp g| * max|H'|
  Scalar a2_rhs = 0; // beta^2 / (2 D^{3/2})
};

using ConditionReport = ConditionReportT<double>;

/// Eigengap and path-smoothness diagnostics at one point, given g, H and the
/// D^2 x D derivative of vec(H).
template <typename Scalar>
ConditionReportT<Scalar>
check_conditions(const VectorT<Scalar> &g, const MatrixT<Scalar> &H,
                 const std::optional<MatrixT<Scalar>> &Hprime, int d, Scalar beta) {
  if (!Hprime)
    throw DomainError("check_conditions: Hessian derivative not available");
  if (!(beta > 0))
    throw DomainError("check_conditions: beta must be positive");
  const auto f = spectral_frame(g, H, d);
  const Eigen::Index D = H.rows();

  ConditionReportT<Scalar> r;
  r.beta_used = beta;
  r.lambda_next = f.lambda_next;
  r.eigengap = f.eigengap;
  r.a1_holds = f.lambda_next < -beta && f.eigengap > beta;
  const VectorT<Scalar> tangential = g - f.G;
  r.a2_lhs = tangential.norm() * Hprime->cwiseAbs().maxCoeff();
  r.a2_rhs = beta * beta / (2 * std::pow(Scalar(D), Scalar(1.5)));
  r.a2_holds = r.a2_lhs < r.a2_rhs;
  return r;
}

template <typename Scalar> struct PerturbationBoundsT {
  Scalar weyl_lhs; // max_i |lambda_i(H) - lambda_i(Htilde)|
  Scalar weyl_rhs; // ||H - Htilde||_2
  Scalar dk_lhs;   // ||L - Ltilde||_2
  Scalar dk_rhs;   // ||H - Htilde||_F / eigengap(H)
};

using PerturbationBounds = PerturbationBoundsT<double>;

template <typename Scalar>
PerturbationBoundsT<Scalar> perturbation_bounds(const MatrixT<Scalar> &H,
                                                const MatrixT<Scalar> &Htilde,
                                                int d) {
  if (H.rows() != Htilde.rows() || H.cols() != Htilde.cols())
    throw DomainError("perturbation_bounds: dimension mismatch");
  const VectorT<Scalar> zero = VectorT<Scalar>::Zero(H.rows());
  const auto f = spectral_frame(zero, H, d);
  const auto ft = spectral_frame(zero, Htilde, d);
  if (!(f.eigengap > 0))
    throw DomainError("perturbation_bounds: gap degenerate");

  const MatrixT<Scalar> E = H - Htilde;
  auto op_norm = [](const MatrixT<Scalar> &S) {
    return jacobi_eigen(S).values.cwiseAbs().maxCoeff();
  };
  PerturbationBoundsT<Scalar> b;
  b.weyl_lhs = (f.eigenvalues - ft.eigenvalues).cwiseAbs().maxCoeff();
  b.weyl_rhs = op_norm(E);
  b.dk_lhs = op_norm(f.L - ft.L);
  b.dk_rhs = E.norm() / f.eigengap;
  return b;
}

} // namespace surf
