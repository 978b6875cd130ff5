#ifndef PREDDF_RISK_HPP
#define PREDDF_RISK_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>

#include "preddf/dof.hpp"
#include "preddf/procedures.hpp"

namespace preddf {

enum class Regime { under, over };

struct AMatrix {
    Eigen::MatrixXd A;
    double trace = 0.0;
    Regime regime = Regime::under;
};

struct McValue {
    double value = 0.0;
    double se = 0.0;
};

double training_error(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// sigma^2 + ||(I - H) mu||^2 / n + sigma^2 tr(H^T H) / n.
double err_fixed_true(const HatSystem& hs, const Eigen::VectorXd& mu, double sigma_eps2);

// E[(y* - mu_hat*)^2 | X, y] by Monte Carlo over (x*, y*).
McValue err_random_true(const HatSystem& hs, const Eigen::VectorXd& y, const XSampler& sampler,
                        const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                        double sigma_eps2, int n_draws, std::uint64_t seed,
                        par::Mode mode = par::default_mode());

// E_y version via the bias-variance form:
// sigma^2 + E(mu* - h*^T mu)^2 + sigma^2 E ||h*||^2.
McValue err_random_expected(const HatSystem& hs, const Eigen::VectorXd& mu,
                            const XSampler& sampler,
                            const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                            double sigma_eps2, int n_draws, std::uint64_t seed,
                            par::Mode mode = par::default_mode());

// E(mu* - h*^T mu)^2 - ||mu - H mu||^2 / n, first term by Monte Carlo.
McValue excess_bias_true(const HatSystem& hs, const Eigen::VectorXd& mu, const XSampler& sampler,
                         const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                         int n_draws, std::uint64_t seed, par::Mode mode = par::default_mode());

// ErrT + (2/n) sigma_hat^2 df_R with sigma_hat^2 = n ErrT / (n - p); p < n.
double err_tilde(const Eigen::MatrixXd& X_S, const Eigen::VectorXd& y, double df_R);

// (1/n) sum [(y_i - h_i^T y) / (1 - h_ii)]^2; rejects leverages at 1.
double loocv_error(const HatSystem& hs, const Eigen::VectorXd& y);

// Leave-one-out error of min-norm least squares via the Gram identity
// r_i = [G^{-1} y]_i / [G^{-1}]_ii, G = X X^T; valid for p > n.
double loocv_error_min_norm(const Eigen::MatrixXd& X_S, const Eigen::VectorXd& y);

AMatrix a_matrix_under(const HatSystem& hs);
AMatrix a_matrix_over(const Eigen::MatrixXd& X_S);

// (1/n) y^T A y - (1/n) sigma^2 tr(A); may be negative.
double delta_hat(const AMatrix& am, const Eigen::VectorXd& y, double sigma_eps2);

// Per-observation form for ordinary least squares; equals delta_hat.
double delta_hat_under_per_obs(const HatSystem& hs, const Eigen::VectorXd& y, double sigma_eps2);

struct ErrHat {
    double value = 0.0;
    double xi = 0.0;  // 2 df_R - tr(A)
};

ErrHat err_hat(const AMatrix& am, double err_train, const Eigen::VectorXd& y, double sigma_eps2,
               double df_R);

double delta_plus(double dhat);
double delta_plusplus(double dhat, double yAy, double trA, double sigma_eps2, int n);

// Closed-form E(xi) for Gaussian designs. The over form is exact for
// mean-zero designs; the under form assumes centered-fit leverages on
// (1/n, 1) and does not describe raw no-intercept fits, whose leverages
// follow Beta(p/2, (n-p)/2).
double xi_expectation_closed(int n, int p, Regime regime);

struct LeverageMoments {
    double mean_inv = 0.0;  // E[1 / (1 - h_ii)]
    double var_inv = 0.0;   // Var[1 / (1 - h_ii)]; NaN when p >= n - 4
};

// Same centered-fit leverage convention as the under form above.
LeverageMoments leverage_moments(int n, int p);

struct RiskReport {
    double err_train = 0.0;
    std::optional<double> err_fixed;
    std::optional<McValue> err_random;
    std::optional<double> excess_bias;
    double df_fixed = 0.0;
    double df_random = 0.0;
    double xi = 0.0;
    std::map<std::string, double> estimators;
};

struct RiskOptions {
    int n_draws = 10000;
    std::uint64_t seed = 0;
    par::Mode mode = par::default_mode();
};

// Full per-fit report for an ols/min_norm/ridge HatSystem. Truth quantities
// are filled only when mu and a mean oracle are supplied.
RiskReport risk_report(const HatSystem& hs, const Eigen::VectorXd& y, double sigma_eps2,
                       const Eigen::MatrixXd& Sigma, const Eigen::VectorXd& mu,
                       const std::function<double(const Eigen::VectorXd&)>& mean_fn,
                       const RiskOptions& opts = {});

}  // namespace preddf

#endif
