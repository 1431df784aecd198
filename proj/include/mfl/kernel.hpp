#ifndef MFL_KERNEL_HPP
#define MFL_KERNEL_HPP

#include <Eigen/Dense>

#include <cmath>

namespace mfl {

/// Gaussian RBF kernel exp(-gamma * |x - z|^2).
template <typename DerivedX, typename DerivedZ>
typename DerivedX::Scalar rbf_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedZ>& z,
                                     typename DerivedX::Scalar gamma) {
  using std::exp;
  return exp(-gamma * (x - z).squaredNorm());
}

/// Kernel matrix between the rows of `a` and the rows of `b`.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> cross_kernel(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, typename DerivedA::Scalar gamma) {
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      k(i, j) = rbf_kernel(a.row(i), b.row(j), gamma);
    }
  }
  return k;
}

/// Symmetric Gram matrix of the rows of `x`; the diagonal is exactly 1.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> gram_matrix(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = Scalar(1);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      k(i, j) = rbf_kernel(x.row(i), x.row(j), gamma);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

}  // namespace mfl

#endif  // MFL_KERNEL_HPP
