#include "preddf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "preddf/common.hpp"

namespace preddf::linalg {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

int numerical_rank(const Eigen::MatrixXd& X) {
    if (X.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double tol = std::max(X.rows(), X.cols()) * kEps * sv(0);
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++r;
    return r;
}

Eigen::MatrixXd projection_hat(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (p == 0) return Eigen::MatrixXd::Zero(n, n);
    if (numerical_rank(X) < p) throw input_error("projection_hat: design is column-rank deficient");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    return q1 * q1.transpose();
}

double trace_inv_xtx(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B) {
    const int p = static_cast<int>(X.cols());
    if (p == 0) return 0.0;
    if (numerical_rank(X) < p) throw input_error("trace_inv_xtx: design is column-rank deficient");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    const Eigen::MatrixXd r = qr.matrixR().topRows(p).triangularView<Eigen::Upper>();
    const auto perm = qr.colsPermutation();
    // (X^T X)^{-1} = P R^{-1} R^{-T} P^T, so the trace is tr[R^{-1} R^{-T} P^T B P].
    Eigen::MatrixXd bp = perm.transpose() * B * perm;
    Eigen::MatrixXd c = r.transpose().triangularView<Eigen::Lower>().solve(bp);
    Eigen::MatrixXd d = r.triangularView<Eigen::Upper>().solve(c);
    return d.trace();
}

double trace_gram_inv2(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B) {
    const int n = static_cast<int>(X.rows());
    if (numerical_rank(X) < n) throw input_error("trace_gram_inv2: design is row-rank deficient");
    const Eigen::MatrixXd gram = X * X.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
        throw numeric_error("trace_gram_inv2: Gram factorization failed");
    const Eigen::MatrixXd k = ldlt.solve(X);  // (X X^T)^{-1} X, n x p
    // tr[K B K^T] with symmetric B.
    const Eigen::MatrixXd kb = k * B;
    return (kb.array() * k.array()).sum();
}

bool is_symmetric_psd(const Eigen::MatrixXd& S, double* min_eig) {
    if (S.rows() != S.cols()) return false;
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (min_eig != nullptr) *min_eig = lo;
    return lo >= -1e-10 * scale;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& S) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    Eigen::VectorXd vals = eig.eigenvalues();
    for (int i = 0; i < vals.size(); ++i) {
        if (vals(i) < -1e-10 * scale)
            throw input_error("psd_factor: matrix is not positive semidefinite");
        vals(i) = std::max(vals(i), 0.0);
    }
    return eig.eigenvectors() * vals.cwiseSqrt().asDiagonal();
}

double largest_eigenvalue_gram(const Eigen::MatrixXd& X) {
    if (X.size() == 0 || X.cwiseAbs().maxCoeff() == 0.0)
        throw input_error("largest_eigenvalue_gram: zero matrix");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const double s = svd.singularValues()(0);
    return s * s;
}

}  // namespace preddf::linalg
