#ifndef PREDDF_LINALG_HPP
#define PREDDF_LINALG_HPP

#include <Eigen/Dense>

namespace preddf::linalg {

// Singular values below max(n,p) * eps * sigma_max count as zero.
int numerical_rank(const Eigen::MatrixXd& X);

// Orthogonal projector onto the column space: Q1 Q1^T from a QR factorization.
// Throws input_error when X is column-rank deficient.
Eigen::MatrixXd projection_hat(const Eigen::MatrixXd& X);

// tr[(X^T X)^{-1} B] via the triangular factor of a column-pivoted QR of X.
// Avoids forming the normal equations, which matters near p = n.
double trace_inv_xtx(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B);

// tr[X^T (X X^T)^{-2} X B] for a full-row-rank X (p >= n).
double trace_gram_inv2(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B);

// Checks symmetry to 1e-12 relative and eigenvalues >= -1e-10 * scale.
bool is_symmetric_psd(const Eigen::MatrixXd& S, double* min_eig = nullptr);

// Factor L with L L^T = S. Cholesky first; on failure, eigendecomposition
// with negative eigenvalues clamped to zero (tolerance 1e-10).
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S);

double largest_eigenvalue_gram(const Eigen::MatrixXd& X);  // lambda_max(X^T X)

}  // namespace preddf::linalg

#endif
