#ifndef PREDDF_DOF_HPP
#define PREDDF_DOF_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "preddf/parallel.hpp"
#include "preddf/procedures.hpp"
#include "preddf/rng.hpp"

namespace preddf {

enum class DofMethod { exact_ls, exact_ridge, monte_carlo };

struct DofReport {
    double df_fixed = 0.0;
    double df_random = 0.0;
    double e_h_norm2 = 0.0;          // E ||h*||^2 given X
    double trace_hth_over_n = 0.0;   // tr(H^T H) / n
    DofMethod method = DofMethod::exact_ls;
    int n_draws = 0;
    double se = 0.0;  // standard error of the E ||h*||^2 estimate (MC only)
};

// Draws a fresh test covariate; consumes only the given stream.
using XSampler = std::function<Eigen::VectorXd(rng::Stream&)>;

XSampler gaussian_sampler(const Eigen::MatrixXd& Sigma);
XSampler empirical_sampler(const Eigen::MatrixXd& X);
XSampler uniform1d_sampler(double a, double b);

double df_fixed(const HatSystem& hs);

// Analytic path; requires an ols/min_norm/ridge HatSystem and the full
// feature covariance (subset extraction is handled internally).
DofReport df_random(const HatSystem& hs, const Eigen::MatrixXd& Sigma);

// Monte Carlo path for any procedure. Draw i uses the stream keyed
// (seed, i), so the estimate is identical in serial and OpenMP modes.
DofReport df_random_mc(const HatSystem& hs, const XSampler& sampler, int n_draws,
                       std::uint64_t seed, par::Mode mode = par::default_mode());

// p/2 + (n/2) tr[(X^T X)^{-1} Sigma] when p <= n, the Gram-based form beyond.
double df_random_ls_closed(const Eigen::MatrixXd& X_S, const Eigen::MatrixXd& Sigma_S);

// Spectral form; also reachable through df_random on a ridge HatSystem.
double df_random_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Sigma, double lambda);

// Change when column x_j joins X_S1. Sigma blocks follow the covariance
// partition [Sigma_S1, sigma_S1j; ., sigma_j2].
double df_increment(const Eigen::MatrixXd& X_S1, const Eigen::VectorXd& x_j,
                    const Eigen::MatrixXd& Sigma_S1, const Eigen::VectorXd& sigma_S1j,
                    double sigma_j2);

enum class DfApproxFamily { gaussian_exact_expectation, asymptotic_equicorrelated };

double df_approx(int n, int p, DfApproxFamily family);

// Large-n limit ratio (C_K + 1)/2 with C_K = int_0^1 [K^2 + (1-K)^2] dz.
double df_weight_limit(const std::function<double(double)>& K);
double df_weight_limit(WeightKind kind);

// Closed form valid on the bandwidth range Lbar/2 <= omega <= Lmin with
// x* ~ Uniform(a, b); outside the band callers must use the MC path.
double df_local_constant_closed(const Eigen::VectorXd& xs, double omega, double a, double b);

// df_R - df_F computed three ways: directly, through squared prediction
// covariances, and through squared mean sensitivities.
struct GapCheck {
    double direct = 0.0;
    double covariance = 0.0;
    double gdf = 0.0;
};

GapCheck df_gap_representation_check(const HatSystem& hs, const XSampler& sampler,
                                     double sigma_eps2, int n_draws, std::uint64_t seed);

}  // namespace preddf

#endif
