#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "preddf/dataset.hpp"
#include "preddf/dof.hpp"
#include "preddf/linalg.hpp"
#include "preddf/risk.hpp"
#include "oracles.hpp"

using namespace preddf;

namespace {
// Sylvester construction; rows all have norm sqrt(p) -> equal leverages p/n.
Eigen::MatrixXd hadamard(int n) {
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = 1.0;
    while (h.rows() < n) {
        const int m = static_cast<int>(h.rows());
        Eigen::MatrixXd next(2 * m, 2 * m);
        next.topLeftCorner(m, m) = h;
        next.topRightCorner(m, m) = h;
        next.bottomLeftCorner(m, m) = h;
        next.bottomRightCorner(m, m) = -h;
        h = next;
    }
    return h;
}
}  // namespace

TEST_CASE("training_error basics") {
    Eigen::VectorXd y(2), zero(2);
    y << 1.0, -1.0;
    zero.setZero();
    CHECK(training_error(y, zero) == doctest::Approx(1.0));
    CHECK(training_error(y, y) == 0.0);

    rng::Stream s = rng::Stream::keyed(70);
    const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 10, 3);
    const Eigen::VectorXd yy = oracle::gaussian_vector(s, 10);
    const HatSystem hs = fit(OlsSpec{all_columns(3)}, x);
    const Eigen::VectorXd resid = yy - x * oracle::svd_solve(x, yy);
    CHECK(training_error(yy, hs.H * yy) ==
          doctest::Approx(resid.squaredNorm() / 10.0).epsilon(1e-10));
}

TEST_CASE("err_fixed_true special cases") {
    rng::Stream s = rng::Stream::keyed(71);
    const int n = 8;
    const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, 3);
    const Eigen::VectorXd mu = x * Eigen::Vector3d(1.0, -2.0, 0.5);
    const double sig2 = 1.3;

    const HatSystem h0 = fit(OlsSpec{{}}, x);
    CHECK(err_fixed_true(h0, mu, sig2) ==
          doctest::Approx(sig2 + mu.squaredNorm() / n).epsilon(1e-12));

    const HatSystem hp = fit(OlsSpec{all_columns(3)}, x);
    CHECK(err_fixed_true(hp, mu, sig2) ==
          doctest::Approx(sig2 * (1.0 + 3.0 / n)).epsilon(1e-9));

    const Eigen::MatrixXd xw = oracle::gaussian_matrix(s, n, 17);
    const HatSystem hi = fit(MinNormSpec{all_columns(17)}, xw);
    CHECK(err_fixed_true(hi, mu, sig2) == doctest::Approx(2.0 * sig2).epsilon(1e-8));
}

TEST_CASE("Monte Carlo risk paths reject tiny draw counts") {
    rng::Stream s = rng::Stream::keyed(69);
    const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 8, 3);
    const Eigen::VectorXd y = oracle::gaussian_vector(s, 8);
    const HatSystem hs = fit(OlsSpec{all_columns(3)}, x);
    const auto mean_fn = [](const Eigen::VectorXd&) { return 0.0; };
    CHECK_THROWS_AS(err_random_true(hs, y, gaussian_sampler(Eigen::MatrixXd::Identity(3, 3)),
                                    mean_fn, 1.0, 50, 0),
                    input_error);
}

TEST_CASE("err_random_true of the null procedure equals sigma^2 + beta' Sigma beta") {
    GenConfig cfg;
    cfg.n = 30;
    cfg.d = 10;
    cfg.beta_kind = PolyDecay{1.0};
    cfg.beta_norm2 = 10.0;
    cfg.sigma_eps2 = 1.0;
    cfg.seed = 72;
    const Dataset ds = generate_dataset(cfg);
    const HatSystem h0 = fit(OlsSpec{{}}, ds.X);
    const McValue mc = err_random_true(h0, ds.y, gaussian_sampler(ds.Sigma), ds.mean_fn,
                                       ds.sigma_eps2, 40000, 5);
    CHECK(std::abs(mc.value - 11.0) < 3.0 * mc.se);
}

TEST_CASE("err_random_expected MC matches its closed form for least squares") {
    for (int rep = 0; rep < 20; ++rep) {
        rng::Stream s = rng::Stream::keyed(73, rep);
        const int n = 15, p = 4;
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, p);
        const Eigen::VectorXd beta = oracle::gaussian_vector(s, p);
        const Eigen::VectorXd mu = x * beta;
        const double sig2 = 0.8;
        const HatSystem hs = fit(OlsSpec{all_columns(p)}, x);
        const auto mean_fn = [&beta](const Eigen::VectorXd& v) { return beta.dot(v); };
        const McValue mc =
            err_random_expected(hs, mu, gaussian_sampler(Eigen::MatrixXd::Identity(p, p)),
                                mean_fn, sig2, 4000, 100 + rep);
        // closed form: sigma^2 (1 + tr[(X'X)^{-1}]) with zero excess bias terms:
        // mu in span(X) makes the bias part (beta - b_mu)' (beta - b_mu) = 0.
        const double closed =
            sig2 * (1.0 + linalg::trace_inv_xtx(x, Eigen::MatrixXd::Identity(p, p)));
        CHECK(std::abs(mc.value - closed) < 3.0 * mc.se + 1e-12);
    }
}

TEST_CASE("excess bias: trivial cases and the Gaussian-linear identity") {
    rng::Stream s = rng::Stream::keyed(74);
    SUBCASE("zero mean function gives zero excess bias") {
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 10, 4);
        const HatSystem hs = fit(OlsSpec{all_columns(4)}, x);
        const auto zero_fn = [](const Eigen::VectorXd&) { return 0.0; };
        const McValue mc =
            excess_bias_true(hs, Eigen::VectorXd::Zero(10),
                             gaussian_sampler(Eigen::MatrixXd::Identity(4, 4)), zero_fn, 500, 3);
        CHECK(mc.value == 0.0);
    }
    SUBCASE("replicate average matches (2/n) sigma_S^2 df_R(S)") {
        // subset model: S = first 3 of 6, identity covariance
        const int n = 30, d = 6, p = 3, reps = 400;
        const Eigen::VectorXd beta = coefficient_vector(d, PolyDecay{1.0}, 5.0);
        std::vector<double> lhs(reps), rhs(reps);
        for (int r = 0; r < reps; ++r) {
            rng::Stream sr = rng::Stream::keyed(75, r);
            const Eigen::MatrixXd x = oracle::gaussian_matrix(sr, n, d);
            const Eigen::VectorXd mu = x * beta;
            const Eigen::MatrixXd xs = x.leftCols(p);
            // exact conditional excess bias for ols on X_S (identity Sigma):
            const Eigen::VectorXd bmu = oracle::svd_solve(xs, mu);
            Eigen::VectorXd emb = Eigen::VectorXd::Zero(d);
            emb.head(p) = bmu;
            const double first = (beta - emb).squaredNorm();
            const double second = (mu - xs * bmu).squaredNorm() / n;
            lhs[r] = first - second;
            const double sigma_s2 = beta.tail(d - p).squaredNorm();
            rhs[r] = 2.0 / n * sigma_s2 *
                     df_random_ls_closed(xs, Eigen::MatrixXd::Identity(p, p));
        }
        const auto dl = par::mean_se(lhs);
        const auto dr = par::mean_se(rhs);
        CHECK(std::abs(dl.mean - dr.mean) < 3.0 * std::sqrt(dl.se * dl.se + dr.se * dr.se));
    }
    SUBCASE("interpolator: excess bias equals the out-of-sample bias term") {
        const Eigen::MatrixXd xw = oracle::gaussian_matrix(s, 6, 12);
        const Eigen::VectorXd beta = oracle::gaussian_vector(s, 12);
        const Eigen::VectorXd mu = xw * beta;
        const HatSystem hs = fit(MinNormSpec{all_columns(12)}, xw);
        const auto mean_fn = [&beta](const Eigen::VectorXd& v) { return beta.dot(v); };
        const XSampler sampler = gaussian_sampler(Eigen::MatrixXd::Identity(12, 12));
        const McValue mc = excess_bias_true(hs, mu, sampler, mean_fn, 2000, 6);
        // same draws, first term only
        std::vector<double> vals(2000);
        for (int i = 0; i < 2000; ++i) {
            rng::Stream st = rng::Stream::keyed(6, i);
            const Eigen::VectorXd xstar = sampler(st);
            const double b = mean_fn(xstar) - hs.hat_vector(xstar).dot(mu);
            vals[i] = b * b;
        }
        CHECK(mc.value ==
              doctest::Approx(par::pairwise_sum(vals) / 2000.0).epsilon(1e-9));
    }
}

TEST_CASE("err_tilde: degenerate case and unbiasedness at the full true model") {
    SUBCASE("zero training error yields zero") {
        Eigen::MatrixXd x(4, 2);
        rng::Stream s = rng::Stream::keyed(76);
        x = oracle::gaussian_matrix(s, 4, 2);
        const Eigen::VectorXd y = x * Eigen::Vector2d(1.0, 2.0);
        CHECK(err_tilde(x, y, 3.0) == doctest::Approx(0.0));
    }
    SUBCASE("replicate mean matches the true out-of-sample risk") {
        const int n = 50, p = 10, reps = 2000;
        const Eigen::VectorXd beta = coefficient_vector(p, PolyDecay{1.0}, 4.0);
        std::vector<double> est(reps), truth(reps);
        for (int r = 0; r < reps; ++r) {
            rng::Stream s = rng::Stream::keyed(77, r);
            const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, p);
            const Eigen::VectorXd y = x * beta + oracle::gaussian_vector(s, n);
            const double df = df_random_ls_closed(x, Eigen::MatrixXd::Identity(p, p));
            est[r] = err_tilde(x, y, df);
            const Eigen::VectorXd bhat = oracle::svd_solve(x, y);
            truth[r] = 1.0 + (beta - bhat).squaredNorm();  // ErrR_{X,y}, Sigma = I
        }
        const auto de = par::mean_se(est);
        const auto dt = par::mean_se(truth);
        CHECK(std::abs(de.mean - dt.mean) < 3.0 * std::sqrt(de.se * de.se + dt.se * dt.se));
    }
    SUBCASE("p >= n is rejected") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Identity(3, 3);
        CHECK_THROWS_AS(err_tilde(x, Eigen::VectorXd::Ones(3), 1.0), input_error);
    }
}

TEST_CASE("LOOCV identity matches brute-force refits") {
    rng::Stream s = rng::Stream::keyed(78);
    SUBCASE("ordinary least squares across p") {
        for (int p : {3, 7, 11}) {
            for (int rep = 0; rep < 4; ++rep) {
                const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 15, p);
                const Eigen::VectorXd y = oracle::gaussian_vector(s, 15);
                const HatSystem hs = fit(OlsSpec{all_columns(p)}, x);
                const double brute = oracle::brute_loocv(x, y, oracle::ols_fitter);
                CHECK(std::abs(loocv_error(hs, y) - brute) < 1e-8);
            }
        }
    }
    SUBCASE("ridge") {
        const double lambda = 0.42;
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 12, 5);
        const Eigen::VectorXd y = oracle::gaussian_vector(s, 12);
        const HatSystem hs = fit(RidgeSpec{lambda}, x);
        const double brute = oracle::brute_loocv(x, y, oracle::ridge_fitter(lambda));
        CHECK(std::abs(loocv_error(hs, y) - brute) < 1e-8);
    }
    SUBCASE("min-norm identity for p > n") {
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 8, 20);
        const Eigen::VectorXd y = oracle::gaussian_vector(s, 8);
        const double brute = oracle::brute_loocv(x, y, oracle::ols_fitter);  // svd = min-norm
        CHECK(std::abs(loocv_error_min_norm(x, y) - brute) < 1e-8);
    }
    SUBCASE("null model and interpolation guard") {
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 6, 2);
        const Eigen::VectorXd y = oracle::gaussian_vector(s, 6);
        const HatSystem h0 = fit(OlsSpec{{}}, x);
        CHECK(loocv_error(h0, y) == doctest::Approx(y.squaredNorm() / 6.0));
        const Eigen::MatrixXd xsq = oracle::gaussian_matrix(s, 4, 4);
        const HatSystem hsq = fit(OlsSpec{all_columns(4)}, xsq);
        CHECK_THROWS_AS(loocv_error(hsq, Eigen::VectorXd::Ones(4)), input_error);
    }
}

TEST_CASE("A-matrix: trace identity, PSD, ridge limit") {
    rng::Stream s = rng::Stream::keyed(79);
    SUBCASE("null model gives A = 0") {
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, 6, 2);
        const AMatrix am = a_matrix_under(fit(OlsSpec{{}}, x));
        CHECK(am.A.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("under-regime trace identity for least squares") {
        const int n = 12, p = 5;
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, p);
        const HatSystem hs = fit(OlsSpec{all_columns(p)}, x);
        const AMatrix am = a_matrix_under(hs);
        double lever_sum = 0.0;
        for (int i = 0; i < n; ++i) lever_sum += 1.0 / (1.0 - hs.H(i, i));
        CHECK(am.trace == doctest::Approx(lever_sum + p - n).epsilon(1e-9));
    }
    SUBCASE("over-regime A is PSD and equals the ridge-limit construction") {
        const int n = 5, p = 8;
        const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, p);
        const AMatrix am = a_matrix_over(x);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(am.A, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues()(0) > -1e-9 * am.A.norm());

        const double lambda = 1e-8;
        const HatSystem hr = fit(RidgeSpec{lambda}, x);
        Eigen::VectorXd d(n);
        for (int i = 0; i < n; ++i) {
            const double inv = 1.0 / (1.0 - hr.H(i, i));
            d(i) = inv * inv - 1.0;
        }
        const Eigen::MatrixXd imh = Eigen::MatrixXd::Identity(n, n) - hr.H;
        const Eigen::MatrixXd a_ridge = imh.transpose() * d.asDiagonal() * imh;
        CHECK((a_ridge - am.A).norm() / am.A.norm() < 1e-4);
    }
}

TEST_CASE("delta_hat: sign, expectation, per-observation identity") {
    rng::Stream s = rng::Stream::keyed(80);
    const int n = 15, p = 6;
    const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, p);
    const HatSystem hs = fit(OlsSpec{all_columns(p)}, x);
    const AMatrix am = a_matrix_under(hs);
    const double sig2 = 1.1;

    CHECK(delta_hat(am, Eigen::VectorXd::Zero(n), sig2) ==
          doctest::Approx(-sig2 * am.trace / n));
    CHECK(delta_hat(am, Eigen::VectorXd::Zero(n), sig2) <= 0.0);

    const Eigen::VectorXd mu = x * oracle::gaussian_vector(s, p) +
                               0.3 * oracle::gaussian_vector(s, n);
    SUBCASE("E[delta_hat] = mu' A mu / n over noise replicates") {
        const int reps = 5000;
        std::vector<double> vals(reps);
        for (int r = 0; r < reps; ++r) {
            rng::Stream sr = rng::Stream::keyed(81, r);
            const Eigen::VectorXd y = mu + std::sqrt(sig2) * oracle::gaussian_vector(sr, n);
            vals[r] = delta_hat(am, y, sig2);
        }
        const auto stats = par::mean_se(vals);
        CHECK(std::abs(stats.mean - mu.dot(am.A * mu) / n) < 3.0 * stats.se);
    }
    SUBCASE("per-observation form agrees to 1e-10") {
        const Eigen::VectorXd y = mu + oracle::gaussian_vector(s, n);
        CHECK(std::abs(delta_hat(am, y, sig2) - delta_hat_under_per_obs(hs, y, sig2)) < 1e-10);
    }
}

TEST_CASE("err_hat equals the adjusted LOOCV error") {
    rng::Stream s = rng::Stream::keyed(82);
    const int n = 14, p = 5;
    const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, p);
    const Eigen::VectorXd y = oracle::gaussian_vector(s, n);
    const double sig2 = 0.9;
    const HatSystem hs = fit(OlsSpec{all_columns(p)}, x);
    const AMatrix am = a_matrix_under(hs);
    const double df = df_random_ls_closed(x, Eigen::MatrixXd::Identity(p, p));
    const double errt = training_error(y, hs.H * y);
    const ErrHat eh = err_hat(am, errt, y, sig2, df);
    CHECK(eh.value ==
          doctest::Approx(loocv_error(hs, y) + sig2 * eh.xi / n).epsilon(1e-10));

    // under-regime xi identity: 2 df + n - p - sum 1/(1-h_ii)
    double lever_sum = 0.0;
    for (int i = 0; i < n; ++i) lever_sum += 1.0 / (1.0 - hs.H(i, i));
    CHECK(eh.xi == doctest::Approx(2.0 * df + n - p - lever_sum).epsilon(1e-9));
}

TEST_CASE("equal leverages with the asymptotic df give xi = 0") {
    const int n = 16, p = 8;
    const Eigen::MatrixXd x = hadamard(n).leftCols(p);
    const HatSystem hs = fit(OlsSpec{all_columns(p)}, x);
    for (int i = 0; i < n; ++i)
        CHECK(hs.H(i, i) == doctest::Approx(static_cast<double>(p) / n).epsilon(1e-12));
    const AMatrix am = a_matrix_under(hs);
    const double df_asym = df_approx(n, p, DfApproxFamily::asymptotic_equicorrelated);
    CHECK(2.0 * df_asym - am.trace == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("delta corrections") {
    CHECK(delta_plus(-0.3) == 0.0);
    CHECK(delta_plus(0.7) == 0.7);
    CHECK(delta_plusplus(0.7, 1.0, 1.0, 1.0, 10) == 0.7);
    CHECK(delta_plusplus(-0.1, 2.0, 5.0, 1.0, 10) == doctest::Approx(4.0 / 70.0));
    CHECK(delta_plusplus(-0.1, 0.0, 0.0, 1.0, 10) == 0.0);
    // randomized nonnegativity
    rng::Stream s = rng::Stream::keyed(83);
    for (int rep = 0; rep < 200; ++rep) {
        const double yay = std::abs(s.normal());
        const double tra = std::abs(s.normal());
        const double dhat = (yay - tra) / 7.0;
        CHECK(delta_plus(dhat) >= 0.0);
        CHECK(delta_plusplus(dhat, yay, tra, 1.0, 7) >= 0.0);
        if (dhat >= 0.0) {
            CHECK(delta_plus(dhat) == dhat);
            CHECK(delta_plusplus(dhat, yay, tra, 1.0, 7) == dhat);
        }
    }
}

TEST_CASE("xi expectation closed forms") {
    CHECK(xi_expectation_closed(100, 50, Regime::under) ==
          doctest::Approx(4653.0 / 2352.0).epsilon(1e-12));
    CHECK(xi_expectation_closed(100, 200, Regime::over) ==
          doctest::Approx(100.0 * 199.0 / (99.0 * 100.0)).epsilon(1e-12));
    CHECK_THROWS_AS(xi_expectation_closed(10, 5, Regime::under), input_error);
    CHECK_THROWS_AS(xi_expectation_closed(10, 11, Regime::over), input_error);
}

TEST_CASE("leverage moments at (20, 10)") {
    const LeverageMoments lm = leverage_moments(20, 10);
    CHECK(lm.mean_inv == doctest::Approx(2.01875).epsilon(1e-12));
    CHECK(lm.var_inv ==
          doctest::Approx(std::pow(19.0 / 20.0, 2) * 2.0 * 9.0 * 17.0 / (6.0 * 64.0))
              .epsilon(1e-12));
    CHECK_THROWS_AS(leverage_moments(20, 4), input_error);
}

TEST_CASE("xi interpretation: prediction-error variance difference") {
    rng::Stream s = rng::Stream::keyed(84);
    const int n = 12, p = 5;
    const Eigen::MatrixXd sig = Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, p);
    const HatSystem hs = fit(OlsSpec{all_columns(p)}, x);
    const AMatrix am = a_matrix_under(hs);
    const double sig2 = 1.4;
    const double df = df_random(hs, sig).df_random;
    const double xi = 2.0 * df - am.trace;

    // E Var(eps_hat_* | x*, X) = sigma^2 (1 + E||h*||^2), analytic expectation
    const double e_norm = df_random(hs, sig).e_h_norm2;
    const double lhs_term = sig2 * (1.0 + e_norm);
    // (1/n) sum Var(eps_hat_i^{-i} | X) from H
    const Eigen::MatrixXd imh = Eigen::MatrixXd::Identity(n, n) - hs.H;
    double sum_var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double row_norm2 = imh.row(i).squaredNorm();
        const double denom = 1.0 - hs.H(i, i);
        sum_var += sig2 * row_norm2 / (denom * denom);
    }
    CHECK(sig2 * xi / n ==
          doctest::Approx(lhs_term - sum_var / n).epsilon(1e-9));
}

TEST_CASE("risk_report assembles consistent estimators") {
    GenConfig cfg;
    cfg.n = 25;
    cfg.d = 8;
    cfg.beta_kind = PolyDecay{2.0};
    cfg.beta_norm2 = 6.0;
    cfg.sigma_eps2 = 1.0;
    cfg.seed = 85;
    const Dataset ds = generate_dataset(cfg);
    const HatSystem hs = fit(OlsSpec{{0, 1, 2, 3}}, ds.X);
    RiskOptions opts;
    opts.n_draws = 2000;
    opts.seed = 4;
    const RiskReport rep = risk_report(hs, ds.y, ds.sigma_eps2, ds.Sigma, ds.mu, ds.mean_fn, opts);

    CHECK(rep.estimators.count("loocv") == 1);
    CHECK(rep.estimators.count("err_hat") == 1);
    CHECK(rep.estimators.count("cp_tilde") == 1);
    CHECK(rep.estimators.at("err_hat_plus") >= rep.err_train);
    CHECK(rep.estimators.at("err_hat_plusplus") >= rep.err_train);
    const double dhat = rep.estimators.at("delta_hat");
    if (dhat >= 0.0) {
        CHECK(rep.estimators.at("err_hat_plus") ==
              doctest::Approx(rep.estimators.at("err_hat")));
    }
    CHECK(rep.err_fixed.has_value());
    CHECK(rep.err_random.has_value());
    // decomposition sanity: err_hat = loocv + sigma^2 xi / n
    CHECK(rep.estimators.at("err_hat") ==
          doctest::Approx(rep.estimators.at("loocv") + ds.sigma_eps2 * rep.xi / 25.0)
              .epsilon(1e-9));
}

TEST_CASE("risk_report covers the overparameterized regime") {
    GenConfig cfg;
    cfg.n = 12;
    cfg.d = 30;
    cfg.beta_kind = PolyDecay{3.0};
    cfg.beta_norm2 = 8.0;
    cfg.sigma_eps2 = 1.0;
    cfg.seed = 88;
    const Dataset ds = generate_dataset(cfg);
    const HatSystem hs = fit(MinNormSpec{all_columns(30)}, ds.X);
    RiskOptions opts;
    opts.n_draws = 1000;
    const RiskReport rep = risk_report(hs, ds.y, ds.sigma_eps2, ds.Sigma, ds.mu, ds.mean_fn, opts);
    CHECK(rep.err_train < 1e-12);
    CHECK(rep.df_fixed == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(rep.estimators.count("loocv") == 1);
    CHECK(rep.estimators.count("cp_tilde") == 0);  // needs p < n
    CHECK(rep.estimators.at("err_hat_plus") >= 0.0);
    // min-norm loocv agrees with brute-force refits
    Eigen::MatrixXd xsub = ds.X;
    CHECK(rep.estimators.at("loocv") ==
          doctest::Approx(oracle::brute_loocv(xsub, ds.y, oracle::ols_fitter)).epsilon(1e-7));
}

TEST_CASE("risk invariants hold in expectation over noise replicates") {
    // ErrR_X = ErrT_X + DeltaB_X + (2/n) sigma^2 df_R for a fixed design
    rng::Stream s = rng::Stream::keyed(86);
    const int n = 20, d = 6, p = 4;
    const Eigen::VectorXd beta = coefficient_vector(d, PolyDecay{1.0}, 5.0);
    const Eigen::MatrixXd x = oracle::gaussian_matrix(s, n, d);
    const Eigen::VectorXd mu = x * beta;
    const Eigen::MatrixXd xs = x.leftCols(p);
    const double sig2 = 1.0;

    const Eigen::VectorXd bmu = oracle::svd_solve(xs, mu);
    Eigen::VectorXd emb = Eigen::VectorXd::Zero(d);
    emb.head(p) = bmu;
    const double delta_b = (beta - emb).squaredNorm() - (mu - xs * bmu).squaredNorm() / n;
    const double df = df_random_ls_closed(xs, Eigen::MatrixXd::Identity(p, p));

    const int reps = 3000;
    std::vector<double> gap(reps);
    for (int r = 0; r < reps; ++r) {
        rng::Stream sr = rng::Stream::keyed(87, r);
        const Eigen::VectorXd y = mu + oracle::gaussian_vector(sr, n);
        const Eigen::VectorXd bhat = oracle::svd_solve(xs, y);
        Eigen::VectorXd bemb = Eigen::VectorXd::Zero(d);
        bemb.head(p) = bhat;
        const double err_r = sig2 + (beta - bemb).squaredNorm();  // ErrR_{X,y}
        const double err_t = (y - xs * bhat).squaredNorm() / n;
        gap[r] = err_r - err_t;
    }
    const auto stats = par::mean_se(gap);
    CHECK(std::abs(stats.mean - (delta_b + 2.0 * sig2 * df / n)) < 3.0 * stats.se);
}
