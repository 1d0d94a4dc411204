#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "surf/errors.hpp"

namespace surf {

template <typename Scalar> using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorT<double>;
using Matrix = MatrixT<double>;

/// n points in R^D stored as the columns of a D x n matrix.
template <typename Scalar> class PointCloudT {
public:
  using Storage = MatrixT<Scalar>;

  explicit PointCloudT(Eigen::Index dim = 1) : points_(dim, 0) {
    if (dim < 1)
      throw DomainError("point cloud dimension must be >= 1");
  }

  /// Columns are points. Throws on non-finite coordinates.
  explicit PointCloudT(Storage columns) : points_(std::move(columns)) {
    if (points_.rows() < 1)
      throw DomainError("point cloud dimension must be >= 1");
    if (!points_.allFinite())
      throw DomainError("point cloud contains non-finite coordinates");
  }

  static PointCloudT from_rows(const std::vector<std::vector<Scalar>> &rows,
                               Eigen::Index dim) {
    Storage m(dim, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != dim)
        throw DomainError("point has wrong number of coordinates");
      for (Eigen::Index k = 0; k < dim; ++k)
        m(k, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(k)];
    }
    return PointCloudT(std::move(m));
  }

  Eigen::Index dim() const { return points_.rows(); }
  Eigen::Index size() const { return points_.cols(); }
  bool empty() const { return points_.cols() == 0; }

  auto point(Eigen::Index i) const { return points_.col(i); }
  const Storage &matrix() const { return points_; }

  void push_back(const Eigen::Ref<const VectorT<Scalar>> &x) {
    if (x.size() != dim())
      throw DomainError("point dimension mismatch");
    if (!x.allFinite())
      throw DomainError("non-finite coordinate");
    points_.conservativeResize(Eigen::NoChange, points_.cols() + 1);
    points_.col(points_.cols() - 1) = x;
  }

  /// Points selected by index, in the given order.
  PointCloudT subset(const std::vector<Eigen::Index> &indices) const {
    Storage m(dim(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j)
      m.col(static_cast<Eigen::Index>(j)) = points_.col(indices[j]);
    return PointCloudT(std::move(m));
  }

private:
  Storage points_;
};

using PointCloud = PointCloudT<double>;

} // namespace surf
