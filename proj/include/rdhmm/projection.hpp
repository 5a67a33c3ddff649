#pragma once

#include <Eigen/Core>

namespace rdhmm {

enum class ProjectionKind {
  kOrthonormalSvd,  // columns orthonormal (left singular vectors)
  kRescaled,        // rows scaled so each nonzero row's max |entry| is 1
};

// v x m map from observation indicators to the reduced space,
// y = U^T delta_x.
struct Projection {
  Eigen::MatrixXd U;
  ProjectionKind kind = ProjectionKind::kOrthonormalSvd;
};

// Top-m left singular vectors of P21. Column signs are fixed so the
// largest-magnitude entry of each column is positive (ties: lowest row
// index wins). Throws RankDeficiencyError when the m-th singular value
// falls below rank_tol.
Projection compute_projection(const Eigen::MatrixXd& P21, int m,
                              double rank_tol = 1e-12);

// Divides every nonzero row by its max |entry|, so each nonzero row
// attains |entry| = 1 exactly. Zero rows pass through. Input must be
// the orthonormal kind.
Projection rescale_projection(const Projection& proj);

// max |((I - U U^T) O)_ij|; meaningful only for orthonormal U where
// U U^T is a projector. Requires knowing O, so this is a test-side check.
double range_residual(const Eigen::MatrixXd& U, const Eigen::MatrixXd& O);

// The projection to pair with per-symbol weights q in the weighted
// (likelihood-ratio) model. Returns U = diag(q)^-1 U* where U* holds the
// top-m left singular vectors of diag(q) P21 diag(q); diag(q) U is then
// orthonormal and spans the weighted bigram's range, which is what the
// weighted representation identity needs. With q = 1 this reduces to
// compute_projection.
Eigen::MatrixXd weighted_projection(const Eigen::MatrixXd& P21,
                                    const Eigen::VectorXd& q, int m,
                                    double rank_tol = 1e-12);

}  // namespace rdhmm
