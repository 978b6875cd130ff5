#include "preddf/dof.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "preddf/linalg.hpp"

namespace preddf {

namespace {

Eigen::MatrixXd subset_cov(const Eigen::MatrixXd& Sigma, const std::vector<int>& s) {
    Eigen::MatrixXd out(static_cast<int>(s.size()), static_cast<int>(s.size()));
    for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = 0; b < s.size(); ++b)
            out(static_cast<int>(a), static_cast<int>(b)) = Sigma(s[a], s[b]);
    return out;
}

Eigen::MatrixXd subset_design(const Eigen::MatrixXd& X, const std::vector<int>& s) {
    Eigen::MatrixXd out(X.rows(), static_cast<int>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) out.col(static_cast<int>(k)) = X.col(s[k]);
    return out;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate01(const std::function<double(double)>& f, double tol) {
    const double fa = f(0.0), fm = f(0.5), fb = f(1.0);
    const double whole = (fa + 4.0 * fm + fb) / 6.0;
    return adaptive_simpson(f, 0.0, 1.0, fa, fm, fb, whole, tol, 40);
}

}  // namespace

XSampler gaussian_sampler(const Eigen::MatrixXd& Sigma) {
    const Eigen::MatrixXd chol = linalg::psd_factor(Sigma);
    const int d = static_cast<int>(Sigma.rows());
    return [chol, d](rng::Stream& stream) {
        Eigen::VectorXd z(d);
        for (int j = 0; j < d; ++j) z(j) = stream.normal();
        return Eigen::VectorXd(chol * z);
    };
}

XSampler empirical_sampler(const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd rows = X;
    const std::uint64_t n = static_cast<std::uint64_t>(X.rows());
    return [rows, n](rng::Stream& stream) {
        return Eigen::VectorXd(rows.row(static_cast<int>(stream.below(n))));
    };
}

XSampler uniform1d_sampler(double a, double b) {
    return [a, b](rng::Stream& stream) {
        Eigen::VectorXd x(1);
        x(0) = stream.uniform(a, b);
        return x;
    };
}

double df_fixed(const HatSystem& hs) { return hs.H.trace(); }

DofReport df_random(const HatSystem& hs, const Eigen::MatrixXd& Sigma) {
    const int n = hs.n();
    const int d = static_cast<int>(hs.X.cols());
    if (Sigma.rows() != d || Sigma.cols() != d)
        throw input_error("df_random: Sigma dimension must match the training design");

    DofReport rep;
    if (const auto* ols = std::get_if<OlsSpec>(&hs.spec)) {
        const int p = static_cast<int>(ols->subset.size());
        rep.method = DofMethod::exact_ls;
        rep.df_fixed = p;
        rep.trace_hth_over_n = static_cast<double>(p) / n;
        rep.e_h_norm2 =
            p == 0 ? 0.0
                   : linalg::trace_inv_xtx(subset_design(hs.X, ols->subset),
                                           subset_cov(Sigma, ols->subset));
        rep.df_random = 0.5 * p + 0.5 * n * rep.e_h_norm2;
        return rep;
    }
    if (const auto* mn = std::get_if<MinNormSpec>(&hs.spec)) {
        rep.method = DofMethod::exact_ls;
        rep.df_fixed = n;
        rep.trace_hth_over_n = 1.0;
        rep.e_h_norm2 = linalg::trace_gram_inv2(subset_design(hs.X, mn->subset),
                                                subset_cov(Sigma, mn->subset));
        rep.df_random = 0.5 * n + 0.5 * n * rep.e_h_norm2;
        return rep;
    }
    if (const auto* ridge = std::get_if<RidgeSpec>(&hs.spec)) {
        rep.method = DofMethod::exact_ridge;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hs.X.transpose() * hs.X);
        const Eigen::VectorXd omega = eig.eigenvalues();
        const Eigen::MatrixXd u = eig.eigenvectors();
        double trh = 0.0, trhth = 0.0, e = 0.0;
        for (int j = 0; j < omega.size(); ++j) {
            const double w = std::max(omega(j), 0.0);
            const double denom = w + ridge->lambda;
            const double vjj = u.col(j).dot(Sigma * u.col(j));
            trh += w / denom;
            trhth += w * w / (denom * denom);
            e += vjj * w / (denom * denom);
        }
        rep.df_fixed = trh;
        rep.trace_hth_over_n = trhth / n;
        rep.e_h_norm2 = e;
        rep.df_random = trh + 0.5 * n * (e - trhth / n);
        return rep;
    }
    throw input_error("df_random: analytic path only covers ols/min_norm/ridge; use df_random_mc");
}

DofReport df_random_mc(const HatSystem& hs, const XSampler& sampler, int n_draws,
                       std::uint64_t seed, par::Mode mode) {
    if (n_draws < 1000) throw input_error("df_random_mc: need at least 1000 draws");
    const int n = hs.n();
    std::vector<double> values(static_cast<std::size_t>(n_draws));
    par::for_index(static_cast<std::size_t>(n_draws), mode, [&](std::size_t i) {
        rng::Stream stream = rng::Stream::keyed(seed, static_cast<std::uint64_t>(i));
        values[i] = hs.hat_norm2(sampler(stream));
    });
    const par::MeanSe stats = par::mean_se(values);

    DofReport rep;
    rep.method = DofMethod::monte_carlo;
    rep.n_draws = n_draws;
    rep.se = stats.se;
    rep.e_h_norm2 = stats.mean;
    rep.df_fixed = hs.H.trace();
    rep.trace_hth_over_n = hs.interpolating ? 1.0 : (hs.H.transpose() * hs.H).trace() / n;
    rep.df_random = rep.df_fixed + 0.5 * n * (rep.e_h_norm2 - rep.trace_hth_over_n);
    return rep;
}

double df_random_ls_closed(const Eigen::MatrixXd& X_S, const Eigen::MatrixXd& Sigma_S) {
    const int n = static_cast<int>(X_S.rows());
    const int p = static_cast<int>(X_S.cols());
    if (Sigma_S.rows() != p || Sigma_S.cols() != p)
        throw input_error("df_random_ls_closed: Sigma_S must be p x p");
    if (p == 0) return 0.0;
    if (p <= n) return 0.5 * p + 0.5 * n * linalg::trace_inv_xtx(X_S, Sigma_S);
    return 0.5 * n + 0.5 * n * linalg::trace_gram_inv2(X_S, Sigma_S);
}

double df_random_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Sigma, double lambda) {
    if (lambda <= 0.0) throw input_error("df_random_ridge: lambda must be positive");
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (Sigma.rows() != p || Sigma.cols() != p)
        throw input_error("df_random_ridge: Sigma must be p x p");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X.transpose() * X);
    const Eigen::VectorXd omega = eig.eigenvalues();
    const Eigen::MatrixXd u = eig.eigenvectors();
    double df = 0.0;
    for (int j = 0; j < p; ++j) {
        const double w = std::max(omega(j), 0.0);
        const double denom = w + lambda;
        const double vjj = u.col(j).dot(Sigma * u.col(j));
        df += (w * w + (2.0 * lambda + n * vjj) * w) / (2.0 * denom * denom);
    }
    return df;
}

double df_increment(const Eigen::MatrixXd& X_S1, const Eigen::VectorXd& x_j,
                    const Eigen::MatrixXd& Sigma_S1, const Eigen::VectorXd& sigma_S1j,
                    double sigma_j2) {
    const int n = static_cast<int>(X_S1.rows());
    const int p = static_cast<int>(X_S1.cols());
    if (x_j.size() != n) throw input_error("df_increment: new column has wrong length");
    if (p >= n) throw input_error("df_increment: requires |S1| < n");
    if (Sigma_S1.rows() != p || sigma_S1j.size() != p)
        throw input_error("df_increment: covariance blocks mismatch the subset size");

    Eigen::VectorXd zeta;
    double num_quad = 0.0;
    double denom;
    if (p == 0) {
        if (sigma_j2 <= 0.0) throw input_error("df_increment: sigma_j2 must be positive");
        zeta = x_j / std::sqrt(sigma_j2);
        denom = zeta.squaredNorm();
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(Sigma_S1);
        if (llt.info() != Eigen::Success)
            throw input_error("df_increment: Sigma_S1 is not positive definite");
        const Eigen::VectorXd w = llt.solve(sigma_S1j);
        const double cond_var = sigma_j2 - sigma_S1j.dot(w);
        if (cond_var <= 0.0)
            throw input_error("df_increment: Sigma_S2 is not positive definite");
        zeta = (x_j - X_S1 * w) / std::sqrt(cond_var);

        if (linalg::numerical_rank(X_S1) < p)
            throw input_error("df_increment: X_S1 is column-rank deficient");
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X_S1);
        const Eigen::MatrixXd r = qr.matrixR().topRows(p).triangularView<Eigen::Upper>();
        const auto perm = qr.colsPermutation();
        // zeta^T C zeta with C = X (X^T X)^{-1} Sigma (X^T X)^{-1} X^T.
        Eigen::VectorXd t = perm.transpose() * (X_S1.transpose() * zeta);
        t = r.transpose().triangularView<Eigen::Lower>().solve(t);
        t = r.triangularView<Eigen::Upper>().solve(t);
        const Eigen::VectorXd g = perm * t;
        num_quad = g.dot(Sigma_S1 * g);
        denom = zeta.squaredNorm() - zeta.dot(X_S1 * g);
    }
    if (denom <= 1e-10 * std::max(1.0, zeta.squaredNorm()))
        throw input_error("df_increment: new column is collinear with X_S1");
    return 0.5 + 0.5 * n * (num_quad + 1.0) / denom;
}

double df_approx(int n, int p, DfApproxFamily family) {
    if (p == n) throw input_error("df_approx: undefined at the interpolation threshold p = n");
    if (n < 1 || p < 0) throw input_error("df_approx: bad (n, p)");
    if (family == DfApproxFamily::asymptotic_equicorrelated) {
        const double m = std::min(p, n);
        return 0.5 * m * (1.0 + static_cast<double>(n) / std::abs(n - p));
    }
    if (p < n) {
        if (p >= n - 1) throw input_error("df_approx: gaussian form requires p < n - 1");
        return 0.5 * p * (1.0 + static_cast<double>(n) / (n - p - 1));
    }
    if (p <= n + 1) throw input_error("df_approx: gaussian form requires p > n + 1");
    return static_cast<double>(n) * (p - 1) / (2.0 * (p - n - 1));
}

double df_weight_limit(const std::function<double(double)>& K) {
    for (int i = 0; i <= 64; ++i) {
        const double v = K(static_cast<double>(i) / 64.0);
        if (v < -1e-12 || v > 1.0 + 1e-12)
            throw input_error("df_weight_limit: weight function leaves [0, 1]");
    }
    const double ck =
        integrate01([&K](double z) { const double k = K(z); return k * k + (1.0 - k) * (1.0 - k); },
                    1e-12);
    return 0.5 * (ck + 1.0);
}

double df_weight_limit(WeightKind kind) {
    return df_weight_limit([kind](double z) { return weight_function(kind, z); });
}

double df_local_constant_closed(const Eigen::VectorXd& xs, double omega, double a, double b) {
    const int n = static_cast<int>(xs.size());
    if (n < 2) throw input_error("df_local_constant_closed: need at least two points");
    double lbar = 0.0, lmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i) {
        const double gap = xs(i + 1) - xs(i);
        if (gap <= 0.0) throw input_error("df_local_constant_closed: x points must be sorted");
        lbar = std::max(lbar, gap);
        lmin = std::min(lmin, gap);
    }
    if (omega < 0.5 * lbar - 1e-12 || omega > lmin + 1e-12)
        throw input_error("df_local_constant_closed: omega outside the interpolation band");
    return n + n * (xs(n - 1) - xs(0)) / (4.0 * (b - a)) -
           n * (n - 1.0) * omega / (2.0 * (b - a));
}

GapCheck df_gap_representation_check(const HatSystem& hs, const XSampler& sampler,
                                     double sigma_eps2, int n_draws, std::uint64_t seed) {
    const int n = hs.n();
    const double s2 = sigma_eps2;
    std::vector<double> norm_direct(n_draws), norm_cov(n_draws), norm_gdf(n_draws);
    for (int i = 0; i < n_draws; ++i) {
        rng::Stream stream = rng::Stream::keyed(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd h = hs.hat_vector(sampler(stream));
        norm_direct[i] = h.squaredNorm();
        double c = 0.0, g = 0.0;
        for (int k = 0; k < n; ++k) {
            const double cov = s2 * h(k);           // Cov(y_k, mu_hat* | x*, X)
            c += cov * cov / (s2 * s2);
            const double sens = h(k);               // d E(mu_hat*) / d mu_k
            g += sens * sens;
        }
        norm_cov[i] = c;
        norm_gdf[i] = g;
    }
    double train_cov = 0.0, train_gdf = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double cov = s2 * hs.H(j, i);
            train_cov += cov * cov / (s2 * s2);
            train_gdf += hs.H(j, i) * hs.H(j, i);
        }
    const double trhth = (hs.H.transpose() * hs.H).trace();

    GapCheck out;
    out.direct = 0.5 * n * (par::pairwise_sum(norm_direct) / n_draws - trhth / n);
    out.covariance = 0.5 * n * (par::pairwise_sum(norm_cov) / n_draws - train_cov / n);
    out.gdf = 0.5 * n * (par::pairwise_sum(norm_gdf) / n_draws - train_gdf / n);
    return out;
}

}  // namespace preddf
