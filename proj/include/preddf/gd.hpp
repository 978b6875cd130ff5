#ifndef PREDDF_GD_HPP
#define PREDDF_GD_HPP

#include <Eigen/Dense>
#include <vector>

#include "preddf/procedures.hpp"

namespace preddf {

struct GdConfig {
    double alpha = 0.0;  // step size; convergent iff 0 < alpha < 2 / lambda_max(X^T X)
    int max_iter = 10000;
    double tol = 1e-10;  // on ||beta_k - beta_{k-1}||
    Eigen::VectorXd beta0;
};

struct GdRun {
    Eigen::VectorXd beta;
    int iterations = 0;
    bool converged = false;
};

GdRun gd_run(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GdConfig& cfg);

// Closed-form limit beta_hat + V2 V2^T beta0 via thin SVD; p > n, full row rank.
Eigen::VectorXd gd_limit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta0);

double max_step(const Eigen::MatrixXd& X);  // 2 / lambda_max(X^T X)

enum class FProvenance { zero, simple_regression };

struct FMatrix {
    Eigen::MatrixXd F;  // p x n
    FProvenance provenance = FProvenance::zero;
    std::vector<int> subset;
    Eigen::VectorXd theta;
};

FMatrix zero_f_matrix(int p, int n);

// beta0_j = theta_j x_(j)^T y / ||x_(j)||^2 on j in S, zero elsewhere;
// the returned F reproduces it as beta0 = F y.
std::pair<Eigen::VectorXd, FMatrix> init_simple_regression(const Eigen::MatrixXd& X,
                                                           const Eigen::VectorXd& y,
                                                           const std::vector<int>& subset,
                                                           const Eigen::VectorXd& theta);

// h*_inf = (X X^T)^{-1} X x* + F^T V2 V2^T x*.
Eigen::VectorXd interpolant_hat_vector(const Eigen::MatrixXd& X, const Eigen::MatrixXd& F,
                                       const Eigen::VectorXd& xstar);

// n/2 + (n/2) tr[M^T M Sigma] with M = F^T V2 V2^T + (X X^T)^{-1} X.
double interpolant_df(const Eigen::MatrixXd& X, const Eigen::MatrixXd& F,
                      const Eigen::MatrixXd& Sigma);

struct ExcessBiasParts {
    double total = 0.0;         // excess bias of the limit interpolant
    double minnorm_part = 0.0;  // excess bias of the min-norm solution
    double norm2_v2beta = 0.0;  // ||V2 V2^T beta||^2
    double norm2_v2z = 0.0;     // ||V2 V2^T z||^2, z = beta - P X^T X beta
};

// Linear truth mu(x) = x^T beta with Sigma = I assumed.
ExcessBiasParts interpolant_excess_bias(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_true,
                                        const FMatrix& fm);

// E||beta_tilde* - beta||^2 under the ||x_(j)|| = sqrt(n) convention; exact
// for that normalization, approximate on raw data.
double expected_init_distance(const Eigen::VectorXd& beta, const std::vector<int>& subset, int n);

HatSystem fit_gd_interpolant(const Eigen::MatrixXd& X, const FMatrix& fm);

}  // namespace preddf

#endif
