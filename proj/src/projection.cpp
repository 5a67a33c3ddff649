#include "rdhmm/projection.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

#include "rdhmm/errors.hpp"

namespace rdhmm {

Projection compute_projection(const Eigen::MatrixXd& P21, int m,
                              double rank_tol) {
  if (m < 1 || m > std::min(P21.rows(), P21.cols())) {
    throw std::invalid_argument("projection dimension out of range");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P21, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv[m - 1] < rank_tol) {
    throw RankDeficiencyError(
        "P21 numerically rank-deficient at m=" + std::to_string(m) +
            ": singular value " + std::to_string(sv[m - 1]),
        sv[m - 1]);
  }
  Eigen::MatrixXd U = svd.matrixU().leftCols(m);
  // Sign convention: the largest-magnitude entry of each column is
  // positive; on ties the lowest row index decides.
  for (int j = 0; j < m; ++j) {
    int arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      const double a = std::abs(U(i, j));
      if (a > best) {
        best = a;
        arg = static_cast<int>(i);
      }
    }
    if (U(arg, j) < 0.0) U.col(j) = -U.col(j);
  }
  return Projection{std::move(U), ProjectionKind::kOrthonormalSvd};
}

Projection rescale_projection(const Projection& proj) {
  if (proj.kind != ProjectionKind::kOrthonormalSvd) {
    throw std::invalid_argument("rescale expects an orthonormal projection");
  }
  Eigen::MatrixXd U = proj.U;
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const double mx = U.row(i).cwiseAbs().maxCoeff();
    if (mx > 0.0) U.row(i) /= mx;
  }
  return Projection{std::move(U), ProjectionKind::kRescaled};
}

double range_residual(const Eigen::MatrixXd& U, const Eigen::MatrixXd& O) {
  return (O - U * (U.transpose() * O)).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd weighted_projection(const Eigen::MatrixXd& P21,
                                    const Eigen::VectorXd& q, int m,
                                    double rank_tol) {
  if (q.size() != P21.rows()) {
    throw std::invalid_argument("weight vector length != vocabulary");
  }
  if ((q.array() <= 0.0).any()) {
    throw std::invalid_argument("weights must be strictly positive");
  }
  const Eigen::MatrixXd weighted =
      q.asDiagonal() * P21 * q.asDiagonal();
  const Projection star = compute_projection(weighted, m, rank_tol);
  return q.cwiseInverse().asDiagonal() * star.U;
}

}  // namespace rdhmm
