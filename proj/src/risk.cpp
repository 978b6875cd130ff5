#include "preddf/risk.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "preddf/linalg.hpp"

namespace preddf {

namespace {
constexpr double kLeverageTol = 1e-10;

std::vector<double> mc_buffer(int n_draws) {
    if (n_draws < 100) throw input_error("risk: need at least 100 Monte Carlo draws");
    return std::vector<double>(static_cast<std::size_t>(n_draws));
}
}  // namespace

double training_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    if (y.size() != yhat.size()) throw input_error("training_error: length mismatch");
    if (y.size() == 0) throw input_error("training_error: empty input");
    return (y - yhat).squaredNorm() / y.size();
}

double err_fixed_true(const HatSystem& hs, const Eigen::VectorXd& mu, double sigma_eps2) {
    const int n = hs.n();
    if (mu.size() != n) throw input_error("err_fixed_true: mu length mismatch");
    const double bias2 = (mu - hs.H * mu).squaredNorm() / n;
    const double var = sigma_eps2 * (hs.H.transpose() * hs.H).trace() / n;
    return sigma_eps2 + bias2 + var;
}

McValue err_random_true(const HatSystem& hs, const Eigen::VectorXd& y, const XSampler& sampler,
                        const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                        double sigma_eps2, int n_draws, std::uint64_t seed, par::Mode mode) {
    if (y.size() != hs.n()) throw input_error("err_random_true: y length mismatch");
    auto values = mc_buffer(n_draws);
    const double sd = std::sqrt(sigma_eps2);
    par::for_index(values.size(), mode, [&](std::size_t i) {
        rng::Stream stream = rng::Stream::keyed(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd x = sampler(stream);
        const double ystar = mean_fn(x) + sd * stream.normal();
        const double pred = hs.hat_vector(x).dot(y);
        values[i] = (ystar - pred) * (ystar - pred);
    });
    const par::MeanSe stats = par::mean_se(values);
    return {stats.mean, stats.se};
}

McValue err_random_expected(const HatSystem& hs, const Eigen::VectorXd& mu,
                            const XSampler& sampler,
                            const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                            double sigma_eps2, int n_draws, std::uint64_t seed, par::Mode mode) {
    if (mu.size() != hs.n()) throw input_error("err_random_expected: mu length mismatch");
    auto values = mc_buffer(n_draws);
    par::for_index(values.size(), mode, [&](std::size_t i) {
        rng::Stream stream = rng::Stream::keyed(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd x = sampler(stream);
        const Eigen::VectorXd h = hs.hat_vector(x);
        const double bias = mean_fn(x) - h.dot(mu);
        values[i] = bias * bias + sigma_eps2 * h.squaredNorm();
    });
    const par::MeanSe stats = par::mean_se(values);
    return {sigma_eps2 + stats.mean, stats.se};
}

McValue excess_bias_true(const HatSystem& hs, const Eigen::VectorXd& mu, const XSampler& sampler,
                         const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                         int n_draws, std::uint64_t seed, par::Mode mode) {
    const int n = hs.n();
    if (mu.size() != n) throw input_error("excess_bias_true: mu length mismatch");
    auto values = mc_buffer(n_draws);
    par::for_index(values.size(), mode, [&](std::size_t i) {
        rng::Stream stream = rng::Stream::keyed(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd x = sampler(stream);
        const double bias = mean_fn(x) - hs.hat_vector(x).dot(mu);
        values[i] = bias * bias;
    });
    const par::MeanSe stats = par::mean_se(values);
    const double insample = (mu - hs.H * mu).squaredNorm() / n;
    return {stats.mean - insample, stats.se};
}

double err_tilde(const Eigen::MatrixXd& X_S, const Eigen::VectorXd& y, double df_R) {
    const int n = static_cast<int>(X_S.rows());
    const int p = static_cast<int>(X_S.cols());
    if (y.size() != n) throw input_error("err_tilde: y length mismatch");
    if (p >= n) throw input_error("err_tilde: requires p < n");
    double errt;
    if (p == 0) {
        errt = y.squaredNorm() / n;
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X_S);
        if (qr.rank() < p) throw input_error("err_tilde: X_S is column-rank deficient");
        errt = (y - X_S * qr.solve(y)).squaredNorm() / n;
    }
    const double sigma2_hat = n * errt / (n - p);
    return errt + 2.0 * sigma2_hat * df_R / n;
}

double loocv_error(const HatSystem& hs, const Eigen::VectorXd& y) {
    const int n = hs.n();
    if (y.size() != n) throw input_error("loocv_error: y length mismatch");
    const Eigen::VectorXd resid = y - hs.H * y;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lever = hs.H(i, i);
        if (lever > 1.0 - kLeverageTol)
            throw input_error("loocv_error: leverage at 1, model interpolates observation " +
                              std::to_string(i));
        const double r = resid(i) / (1.0 - lever);
        sum += r * r;
    }
    return sum / n;
}

double loocv_error_min_norm(const Eigen::MatrixXd& X_S, const Eigen::VectorXd& y) {
    const int n = static_cast<int>(X_S.rows());
    if (y.size() != n) throw input_error("loocv_error_min_norm: y length mismatch");
    if (X_S.cols() <= n) throw input_error("loocv_error_min_norm: requires p > n");
    Eigen::LLT<Eigen::MatrixXd> llt(X_S * X_S.transpose());
    if (llt.info() != Eigen::Success)
        throw input_error("loocv_error_min_norm: design is row-rank deficient");
    const Eigen::MatrixXd ginv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd gy = ginv * y;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = gy(i) / ginv(i, i);
        sum += r * r;
    }
    return sum / n;
}

AMatrix a_matrix_under(const HatSystem& hs) {
    const int n = hs.n();
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        const double lever = hs.H(i, i);
        if (lever > 1.0 - kLeverageTol)
            throw input_error("a_matrix_under: leverage at 1, use the overparameterized form");
        const double inv = 1.0 / (1.0 - lever);
        d(i) = inv * inv - 1.0;
    }
    const Eigen::MatrixXd imh = Eigen::MatrixXd::Identity(n, n) - hs.H;
    AMatrix out;
    out.A = imh.transpose() * d.asDiagonal() * imh;
    out.trace = out.A.trace();
    out.regime = Regime::under;
    return out;
}

AMatrix a_matrix_over(const Eigen::MatrixXd& X_S) {
    const int n = static_cast<int>(X_S.rows());
    if (X_S.cols() <= n) throw input_error("a_matrix_over: requires p > n");
    Eigen::LLT<Eigen::MatrixXd> llt(X_S * X_S.transpose());
    if (llt.info() != Eigen::Success) throw input_error("a_matrix_over: singular X X^T");
    const Eigen::MatrixXd ginv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = 1.0 / (ginv(i, i) * ginv(i, i));
    AMatrix out;
    out.A = ginv * d.asDiagonal() * ginv;
    out.trace = out.A.trace();
    out.regime = Regime::over;
    return out;
}

double delta_hat(const AMatrix& am, const Eigen::VectorXd& y, double sigma_eps2) {
    const int n = static_cast<int>(y.size());
    if (am.A.rows() != n) throw input_error("delta_hat: dimension mismatch");
    return (y.dot(am.A * y) - sigma_eps2 * am.trace) / n;
}

double delta_hat_under_per_obs(const HatSystem& hs, const Eigen::VectorXd& y, double sigma_eps2) {
    const int n = hs.n();
    if (y.size() != n) throw input_error("delta_hat_under_per_obs: y length mismatch");
    const Eigen::VectorXd resid = y - hs.H * y;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lever = hs.H(i, i);
        if (lever > 1.0 - kLeverageTol)
            throw input_error("delta_hat_under_per_obs: leverage at 1");
        const double inv = 1.0 / (1.0 - lever);
        sum += (resid(i) * resid(i) - (1.0 - lever) * sigma_eps2) * (inv * inv - 1.0);
    }
    return sum / n;
}

ErrHat err_hat(const AMatrix& am, double err_train, const Eigen::VectorXd& y, double sigma_eps2,
               double df_R) {
    const int n = static_cast<int>(y.size());
    const double dhat = delta_hat(am, y, sigma_eps2);
    ErrHat out;
    out.value = err_train + dhat + 2.0 * sigma_eps2 * df_R / n;
    out.xi = 2.0 * df_R - am.trace;
    return out;
}

double delta_plus(double dhat) { return std::max(dhat, 0.0); }

double delta_plusplus(double dhat, double yAy, double trA, double sigma_eps2, int n) {
    if (trA < 0.0 || yAy < 0.0) throw input_error("delta_plusplus: quadratic forms must be >= 0");
    if (dhat >= 0.0) return dhat;
    const double denom = n * (yAy + sigma_eps2 * trA);
    if (denom == 0.0) return 0.0;
    return yAy * yAy / denom;
}

double xi_expectation_closed(int n, int p, Regime regime) {
    if (regime == Regime::under) {
        if (!(5 < p && p < n - 2))
            throw input_error("xi_expectation_closed: under form needs 5 < p < n - 2");
        const double nn = n, pp = p;
        return (2.0 * nn * nn - 3.0 * nn * pp - 5.0 * nn + 3.0 * pp + 3.0) /
               ((nn - pp - 2.0) * (nn - pp - 1.0));
    }
    if (p <= n + 1) throw input_error("xi_expectation_closed: over form needs p > n + 1");
    const double nn = n, pp = p;
    return nn * (pp - 1.0) / ((pp - nn - 1.0) * (pp - nn));
}

LeverageMoments leverage_moments(int n, int p) {
    if (!(5 < p && p < n - 2)) throw input_error("leverage_moments: needs 5 < p < n - 2");
    const double nn = n, pp = p;
    LeverageMoments out;
    out.mean_inv = (nn - 1.0) / nn * (nn - 3.0) / (nn - pp - 2.0);
    if (p < n - 4) {
        const double f = (nn - 1.0) / nn;
        out.var_inv = f * f * 2.0 * (pp - 1.0) * (nn - 3.0) /
                      ((nn - pp - 4.0) * (nn - pp - 2.0) * (nn - pp - 2.0));
    } else {
        out.var_inv = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

RiskReport risk_report(const HatSystem& hs, const Eigen::VectorXd& y, double sigma_eps2,
                       const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& mu,
                       const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                       const RiskOptions& opts) {
    const int n = hs.n();
    if (y.size() != n) throw input_error("risk_report: y length mismatch");

    RiskReport rep;
    rep.err_train = training_error(y, hs.H * y);
    rep.df_fixed = df_fixed(hs);

    const bool analytic = std::holds_alternative<OlsSpec>(hs.spec) ||
                          std::holds_alternative<MinNormSpec>(hs.spec) ||
                          std::holds_alternative<RidgeSpec>(hs.spec);
    if (analytic) {
        rep.df_random = df_random(hs, Sigma).df_random;
    } else {
        rep.df_random =
            df_random_mc(hs, gaussian_sampler(Sigma), std::max(opts.n_draws, 1000), opts.seed,
                         opts.mode)
                .df_random;
    }

    const bool over = std::holds_alternative<MinNormSpec>(hs.spec);
    AMatrix am;
    if (over) {
        const auto& mn = std::get<MinNormSpec>(hs.spec);
        Eigen::MatrixXd xsub(hs.X.rows(), static_cast<int>(mn.subset.size()));
        for (std::size_t k = 0; k < mn.subset.size(); ++k)
            xsub.col(static_cast<int>(k)) = hs.X.col(mn.subset[k]);
        am = a_matrix_over(xsub);
        rep.estimators["loocv"] = loocv_error_min_norm(xsub, y);
    } else {
        am = a_matrix_under(hs);
        rep.estimators["loocv"] = loocv_error(hs, y);
    }

    const double dhat = delta_hat(am, y, sigma_eps2);
    const double yay = y.dot(am.A * y);
    const ErrHat eh = err_hat(am, rep.err_train, y, sigma_eps2, rep.df_random);
    rep.xi = eh.xi;
    rep.estimators["delta_hat"] = dhat;
    rep.estimators["err_hat"] = eh.value;
    rep.estimators["err_hat_plus"] =
        rep.err_train + delta_plus(dhat) + 2.0 * sigma_eps2 * rep.df_random / n;
    rep.estimators["err_hat_plusplus"] =
        rep.err_train + delta_plusplus(dhat, yay, am.trace, sigma_eps2, n) +
        2.0 * sigma_eps2 * rep.df_random / n;

    if (const auto* ols = std::get_if<OlsSpec>(&hs.spec)) {
        if (static_cast<int>(ols->subset.size()) < n) {
            Eigen::MatrixXd xsub(hs.X.rows(), static_cast<int>(ols->subset.size()));
            for (std::size_t k = 0; k < ols->subset.size(); ++k)
                xsub.col(static_cast<int>(k)) = hs.X.col(ols->subset[k]);
            rep.estimators["cp_tilde"] = err_tilde(xsub, y, rep.df_random);
        }
    }

    if (mu.size() == n && mean_fn) {
        rep.err_fixed = err_fixed_true(hs, mu, sigma_eps2);
        const XSampler sampler = gaussian_sampler(Sigma);
        rep.err_random = err_random_true(hs, y, sampler, mean_fn, sigma_eps2,
                                         std::max(opts.n_draws, 100), opts.seed, opts.mode);
        rep.excess_bias = excess_bias_true(hs, mu, sampler, mean_fn, std::max(opts.n_draws, 100),
                                           opts.seed, opts.mode)
                              .value;
    }
    return rep;
}

}  // namespace preddf
