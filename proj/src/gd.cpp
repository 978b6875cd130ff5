#include "preddf/gd.hpp"

#include <cmath>

#include "preddf/linalg.hpp"

namespace preddf {

GdRun gd_run(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GdConfig& cfg) {
    if (cfg.alpha <= 0.0) throw input_error("gd_run: step size must be positive");
    if (y.size() != X.rows()) throw input_error("gd_run: y length mismatch");
    if (cfg.beta0.size() != X.cols()) throw input_error("gd_run: beta0 length mismatch");

    GdRun out;
    out.beta = cfg.beta0;
    Eigen::VectorXd resid = y - X * out.beta;
    for (int k = 1; k <= cfg.max_iter; ++k) {
        const Eigen::VectorXd step = cfg.alpha * (X.transpose() * resid);
        out.beta += step;
        resid = y - X * out.beta;
        out.iterations = k;
        if (step.norm() <= cfg.tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

namespace {

struct ThinSvd {
    Eigen::MatrixXd u;   // n x n
    Eigen::MatrixXd v1;  // p x n
    Eigen::VectorXd psi;
};

ThinSvd thin_svd_full_row_rank(const Eigen::MatrixXd& X, const char* who) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (p <= n) throw input_error(std::string(who) + ": requires p > n");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = std::max(n, p) * std::numeric_limits<double>::epsilon() * sv(0);
    if (sv(n - 1) <= tol) throw input_error(std::string(who) + ": design is row-rank deficient");
    return {svd.matrixU(), svd.matrixV(), sv};
}

}  // namespace

Eigen::VectorXd gd_limit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta0) {
    if (y.size() != X.rows()) throw input_error("gd_limit: y length mismatch");
    if (beta0.size() != X.cols()) throw input_error("gd_limit: beta0 length mismatch");
    const ThinSvd svd = thin_svd_full_row_rank(X, "gd_limit");
    const Eigen::VectorXd beta_hat =
        svd.v1 * svd.psi.cwiseInverse().asDiagonal() * (svd.u.transpose() * y);
    // V2 V2^T beta0 = beta0 - V1 V1^T beta0
    return beta_hat + beta0 - svd.v1 * (svd.v1.transpose() * beta0);
}

double max_step(const Eigen::MatrixXd& X) { return 2.0 / linalg::largest_eigenvalue_gram(X); }

FMatrix zero_f_matrix(int p, int n) {
    FMatrix fm;
    fm.F = Eigen::MatrixXd::Zero(p, n);
    fm.provenance = FProvenance::zero;
    return fm;
}

std::pair<Eigen::VectorXd, FMatrix> init_simple_regression(const Eigen::MatrixXd& X,
                                                           const Eigen::VectorXd& y,
                                                           const std::vector<int>& subset,
                                                           const Eigen::VectorXd& theta) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (y.size() != n) throw input_error("init_simple_regression: y length mismatch");
    if (static_cast<int>(subset.size()) > n)
        throw input_error("init_simple_regression: |S| must be <= n");
    if (theta.size() != static_cast<int>(subset.size()))
        throw input_error("init_simple_regression: theta must match the subset size");

    FMatrix fm;
    fm.F = Eigen::MatrixXd::Zero(p, n);
    fm.provenance = FProvenance::simple_regression;
    fm.subset = subset;
    fm.theta = theta;
    Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(p);
    for (std::size_t k = 0; k < subset.size(); ++k) {
        const int j = subset[k];
        if (j < 0 || j >= p) throw input_error("init_simple_regression: subset index out of range");
        const double th = theta(static_cast<int>(k));
        if (th < 0.0 || th > 1.0)
            throw input_error("init_simple_regression: theta entries must lie in [0, 1]");
        const double norm2 = X.col(j).squaredNorm();
        if (norm2 <= 0.0) throw input_error("init_simple_regression: zero-norm column in S");
        fm.F.row(j) = (th / norm2) * X.col(j).transpose();
        beta0(j) = th * X.col(j).dot(y) / norm2;
    }
    return {beta0, fm};
}

Eigen::VectorXd interpolant_hat_vector(const Eigen::MatrixXd& X, const Eigen::MatrixXd& F,
                                       const Eigen::VectorXd& xstar) {
    if (xstar.size() != X.cols())
        throw input_error("interpolant_hat_vector: test point dimension mismatch");
    if (F.rows() != X.cols() || F.cols() != X.rows())
        throw input_error("interpolant_hat_vector: F must be p x n");
    const ThinSvd svd = thin_svd_full_row_rank(X, "interpolant_hat_vector");
    const Eigen::VectorXd v1x = svd.v1.transpose() * xstar;
    return svd.u * svd.psi.cwiseInverse().asDiagonal() * v1x +
           F.transpose() * (xstar - svd.v1 * v1x);
}

double interpolant_df(const Eigen::MatrixXd& X, const Eigen::MatrixXd& F,
                      const Eigen::MatrixXd& Sigma) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (F.rows() != p || F.cols() != n) throw input_error("interpolant_df: F must be p x n");
    if (Sigma.rows() != p || Sigma.cols() != p)
        throw input_error("interpolant_df: Sigma must be p x p");
    const ThinSvd svd = thin_svd_full_row_rank(X, "interpolant_df");
    // M = F^T V2 V2^T + (X X^T)^{-1} X, both written through the thin SVD.
    const Eigen::MatrixXd ft = F.transpose();
    const Eigen::MatrixXd m = ft - (ft * svd.v1) * svd.v1.transpose() +
                              svd.u * svd.psi.cwiseInverse().asDiagonal() * svd.v1.transpose();
    const double tr = ((m * Sigma).array() * m.array()).sum();
    return 0.5 * n + 0.5 * n * tr;
}

ExcessBiasParts interpolant_excess_bias(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_true,
                                        const FMatrix& fm) {
    const int p = static_cast<int>(X.cols());
    if (beta_true.size() != p) throw input_error("interpolant_excess_bias: beta length mismatch");
    const ThinSvd svd = thin_svd_full_row_rank(X, "interpolant_excess_bias");
    const auto null_project = [&svd](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return v - svd.v1 * (svd.v1.transpose() * v);
    };
    // z = beta - P X^T X beta = beta - F X beta for the simple-regression F.
    const Eigen::VectorXd z = beta_true - fm.F * (X * beta_true);
    ExcessBiasParts out;
    out.norm2_v2beta = null_project(beta_true).squaredNorm();
    out.norm2_v2z = null_project(z).squaredNorm();
    out.minnorm_part = out.norm2_v2beta;  // Sigma = I: excess bias of min-norm LS
    out.total = out.minnorm_part - out.norm2_v2beta + out.norm2_v2z;
    return out;
}

double expected_init_distance(const Eigen::VectorXd& beta, const std::vector<int>& subset,
                              int n) {
    if (n < 1) throw input_error("expected_init_distance: n must be >= 1");
    const double norm2 = beta.squaredNorm();
    double captured = 0.0;
    for (int j : subset) {
        if (j < 0 || j >= beta.size())
            throw input_error("expected_init_distance: subset index out of range");
        captured += beta(j) * beta(j);
    }
    const double q = static_cast<double>(subset.size());
    const double nn = n;
    return (nn + 1.0) / nn * norm2 * ((nn + q) / (nn + 1.0) - captured / norm2);
}

HatSystem fit_gd_interpolant(const Eigen::MatrixXd& X, const FMatrix& fm) {
    return fit(GdInterpSpec{fm.F}, X);
}

}  // namespace preddf
