#include "preddf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include "preddf/dataset.hpp"
#include "preddf/dof.hpp"
#include "preddf/gd.hpp"
#include "preddf/linalg.hpp"
#include "preddf/risk.hpp"
#include "preddf/selection.hpp"

namespace preddf {

namespace {

using ReplicateFn =
    std::function<std::vector<LongRecord>(int rep, std::uint64_t master_seed, bool full_scale)>;

struct ScenarioDef {
    ScenarioInfo info;
    ReplicateFn replicate;
};

std::uint64_t sub_seed(std::uint64_t master, int rep, std::uint64_t tag = 0) {
    return rng::hash_combine(rng::hash_combine(master, static_cast<std::uint64_t>(rep)), tag);
}

void emit(std::vector<LongRecord>& out, int rep, double sweep, const std::string& metric,
          double value) {
    out.push_back({rep, sweep, metric, value});
}

// ---------------------------------------------------------------------------
// Shared least-squares sweep point: everything the subset-regression
// scenarios need at one (dataset, ordering, p).
// ---------------------------------------------------------------------------

struct LsPoint {
    double err_train = std::numeric_limits<double>::quiet_NaN();
    double df_random = std::numeric_limits<double>::quiet_NaN();
    double err_test = std::numeric_limits<double>::quiet_NaN();
    double loocv = std::numeric_limits<double>::quiet_NaN();
    double err_hat = std::numeric_limits<double>::quiet_NaN();
    double err_hat_plus = std::numeric_limits<double>::quiet_NaN();
    double cp = std::numeric_limits<double>::quiet_NaN();
    double delta_hat_v = std::numeric_limits<double>::quiet_NaN();
    double delta_plus_v = std::numeric_limits<double>::quiet_NaN();
    double delta_pp_v = std::numeric_limits<double>::quiet_NaN();
    double delta_true = std::numeric_limits<double>::quiet_NaN();
};

// Common test draws for non-linear truth, shared across p within a replicate.
struct TestDraws {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> means;
};

TestDraws make_test_draws(const Dataset& ds, int count, std::uint64_t seed) {
    TestDraws draws;
    const XSampler sampler = gaussian_sampler(ds.Sigma);
    draws.points.resize(count);
    draws.means.resize(count);
    for (int t = 0; t < count; ++t) {
        rng::Stream stream = rng::Stream::keyed(seed, 0xE57, t);
        draws.points[t] = sampler(stream);
        draws.means[t] = ds.mean_fn(draws.points[t]);
    }
    return draws;
}

LsPoint ls_sweep_point(const Dataset& ds, const std::vector<int>& order, int p,
                       bool want_estimators, const TestDraws* draws = nullptr) {
    const int n = ds.n();
    const int d = ds.d();
    const double sig2 = ds.sigma_eps2;
    LsPoint pt;

    Eigen::MatrixXd xsub(n, p);
    for (int k = 0; k < p; ++k) xsub.col(k) = ds.X.col(order[k]);
    Eigen::MatrixXd sigsub(p, p);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) sigsub(a, b) = ds.Sigma(order[a], order[b]);

    Eigen::VectorXd bhat = Eigen::VectorXd::Zero(d);       // embedded coefficients from y
    Eigen::VectorXd bmu = Eigen::VectorXd::Zero(d);        // embedded coefficients from mu
    const bool truth = ds.has_truth();
    double insample_bias2 = 0.0;

    if (p == 0) {
        pt.err_train = ds.y.squaredNorm() / n;
        pt.df_random = 0.0;
        pt.loocv = pt.err_train;
        if (want_estimators) {
            pt.cp = pt.err_train;
            pt.delta_hat_v = 0.0;
            pt.delta_plus_v = 0.0;
            pt.delta_pp_v = 0.0;
            pt.err_hat = pt.err_train;
            pt.err_hat_plus = pt.err_train;
        }
        if (truth) insample_bias2 = ds.mu.squaredNorm() / n;
    } else if (p <= n) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xsub);
        if (qr.rank() < p) throw input_error("ls_sweep_point: rank-deficient design");
        const Eigen::VectorXd b = qr.solve(ds.y);
        for (int k = 0; k < p; ++k) bhat(order[k]) = b(k);
        const Eigen::VectorXd resid = ds.y - xsub * b;
        pt.err_train = resid.squaredNorm() / n;
        pt.df_random = df_random_ls_closed(xsub, sigsub);

        if (truth) {
            const Eigen::VectorXd bm = qr.solve(ds.mu);
            for (int k = 0; k < p; ++k) bmu(order[k]) = bm(k);
            insample_bias2 = (ds.mu - xsub * bm).squaredNorm() / n;
        }

        if (want_estimators && p < n) {
            pt.cp = pt.err_train + 2.0 * sig2 * p / n;
            const Eigen::MatrixXd q1 =
                Eigen::HouseholderQR<Eigen::MatrixXd>(xsub).householderQ() *
                Eigen::MatrixXd::Identity(n, p);
            const Eigen::MatrixXd h = q1 * q1.transpose();
            bool lever_ok = true;
            for (int i = 0; i < n; ++i) lever_ok = lever_ok && h(i, i) < 1.0 - 1e-10;
            if (lever_ok) {
                double loo = 0.0;
                Eigen::VectorXd dvec(n);
                for (int i = 0; i < n; ++i) {
                    const double r = resid(i) / (1.0 - h(i, i));
                    loo += r * r;
                    const double inv = 1.0 / (1.0 - h(i, i));
                    dvec(i) = inv * inv - 1.0;
                }
                pt.loocv = loo / n;
                const Eigen::MatrixXd imh = Eigen::MatrixXd::Identity(n, n) - h;
                const Eigen::MatrixXd amat = imh.transpose() * dvec.asDiagonal() * imh;
                const double tra = amat.trace();
                const double yay = ds.y.dot(amat * ds.y);
                pt.delta_hat_v = (yay - sig2 * tra) / n;
                pt.delta_plus_v = delta_plus(pt.delta_hat_v);
                pt.delta_pp_v = delta_plusplus(pt.delta_hat_v, yay, tra, sig2, n);
                pt.err_hat = pt.err_train + pt.delta_hat_v + 2.0 * sig2 * pt.df_random / n;
                pt.err_hat_plus =
                    pt.err_train + pt.delta_plus_v + 2.0 * sig2 * pt.df_random / n;
            }
        }
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(xsub * xsub.transpose());
        if (llt.info() != Eigen::Success) throw input_error("ls_sweep_point: singular Gram");
        const Eigen::VectorXd b = xsub.transpose() * llt.solve(ds.y);
        for (int k = 0; k < p; ++k) bhat(order[k]) = b(k);
        pt.err_train = 0.0;
        pt.df_random = df_random_ls_closed(xsub, sigsub);
        if (truth) {
            const Eigen::VectorXd bm = xsub.transpose() * llt.solve(ds.mu);
            for (int k = 0; k < p; ++k) bmu(order[k]) = bm(k);
            insample_bias2 = 0.0;
        }
        if (want_estimators) {
            const Eigen::MatrixXd ginv = llt.solve(Eigen::MatrixXd::Identity(n, n));
            const Eigen::VectorXd gy = ginv * ds.y;
            double loo = 0.0;
            for (int i = 0; i < n; ++i) {
                const double r = gy(i) / ginv(i, i);
                loo += r * r;
            }
            pt.loocv = loo / n;
            Eigen::VectorXd dvec(n);
            for (int i = 0; i < n; ++i) dvec(i) = 1.0 / (ginv(i, i) * ginv(i, i));
            const Eigen::MatrixXd amat = ginv * dvec.asDiagonal() * ginv;
            const double tra = amat.trace();
            const double yay = ds.y.dot(amat * ds.y);
            pt.delta_hat_v = (yay - sig2 * tra) / n;
            pt.delta_plus_v = delta_plus(pt.delta_hat_v);
            pt.delta_pp_v = delta_plusplus(pt.delta_hat_v, yay, tra, sig2, n);
            pt.err_hat = pt.delta_hat_v + 2.0 * sig2 * pt.df_random / n;
            pt.err_hat_plus = pt.delta_plus_v + 2.0 * sig2 * pt.df_random / n;
        }
    }

    if (truth) {
        if (draws == nullptr) {
            // linear truth: the bias terms are exact quadratic forms
            const Eigen::VectorXd diff = ds.beta - bhat;
            pt.err_test = sig2 + diff.dot(ds.Sigma * diff);
            const Eigen::VectorXd diff_mu = ds.beta - bmu;
            pt.delta_true = diff_mu.dot(ds.Sigma * diff_mu) - insample_bias2;
        } else {
            std::vector<double> sq(draws->points.size()), sqmu(draws->points.size());
            for (std::size_t t = 0; t < draws->points.size(); ++t) {
                const double pred = draws->points[t].dot(bhat);
                sq[t] = (draws->means[t] - pred) * (draws->means[t] - pred);
                const double predmu = draws->points[t].dot(bmu);
                sqmu[t] = (draws->means[t] - predmu) * (draws->means[t] - predmu);
            }
            pt.err_test = sig2 + par::pairwise_sum(sq) / sq.size();
            pt.delta_true = par::pairwise_sum(sqmu) / sqmu.size() - insample_bias2;
        }
    }
    return pt;
}

GenConfig study_config(int n, int d, double kappa, MeanKind mean, std::uint64_t seed) {
    GenConfig cfg;
    cfg.n = n;
    cfg.d = d;
    cfg.mean_kind = mean;
    cfg.beta_kind = PolyDecay{kappa};
    cfg.beta_norm2 = 10.0;
    cfg.cov_kind = CovIdentity{};
    cfg.sigma_eps2 = 1.0;
    cfg.seed = seed;
    return cfg;
}

GenConfig sparse_linear_config(int n, int d, double kappa, std::uint64_t seed) {
    return study_config(n, d, kappa, MeanKind::linear, seed);
}

// ---------------------------------------------------------------------------
// Scenario replicate functions
// ---------------------------------------------------------------------------

std::vector<LongRecord> rep_double_descent(int rep, std::uint64_t master, bool) {
    GenConfig cfg;
    cfg.n = 20;
    cfg.d = 100;
    cfg.mean_kind = MeanKind::linear;
    cfg.beta_kind = InverseIndex{};
    cfg.beta_norm2 = 10.0;
    cfg.cov_kind = CovIdentity{};
    cfg.sigma_eps2 = 1.0;
    cfg.seed = sub_seed(master, rep);
    const Dataset ds = generate_dataset(cfg);
    const std::vector<int> order = order_variables(ds.X, ds.y, Prescient{ds.beta});

    std::vector<LongRecord> out;
    for (int p = 0; p <= cfg.d; ++p) {
        try {
            const LsPoint pt = ls_sweep_point(ds, order, p, false);
            emit(out, rep, p, "err_test", pt.err_test);
            emit(out, rep, p, "err_train", pt.err_train);
            emit(out, rep, p, "df_random", pt.df_random);
            emit(out, rep, p, "df_fixed", std::min(p, cfg.n));
        } catch (const input_error&) {
        }
    }
    return out;
}

std::vector<LongRecord> rep_ridge_df(int rep, std::uint64_t master, bool) {
    const int n = 20;
    std::vector<LongRecord> out;
    for (int p : {10, 80}) {
        rng::Stream stream = rng::Stream::keyed(sub_seed(master, rep, p));
        Eigen::MatrixXd x(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) x(i, j) = stream.normal();
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
        const std::string tag = "_p" + std::to_string(p);
        for (int g = 0; g <= 40; ++g) {
            const double lambda = std::pow(10.0, -3.0 + 6.0 * g / 40.0);
            double trh = 0.0;
            for (int j = 0; j < p; ++j) {
                const double w = std::max(eig.eigenvalues()(j), 0.0);
                trh += w / (w + lambda);
            }
            emit(out, rep, lambda, "df_fixed" + tag, trh);
            emit(out, rep, lambda, "df_random" + tag, df_random_ridge(x, eye, lambda));
        }
    }
    return out;
}

std::vector<LongRecord> rep_df_limit(int rep, std::uint64_t master, bool) {
    GenConfig cfg;
    cfg.n = 20;
    cfg.d = 100;
    cfg.beta_kind = InverseIndex{};
    cfg.beta_norm2 = 10.0;
    cfg.cov_kind = CovEquicorrelated{0.5};
    cfg.sigma_eps2 = 1.0;
    cfg.seed = sub_seed(master, rep);
    const Dataset ds = generate_dataset(cfg);
    const std::vector<int> order =
        order_variables(ds.X, ds.y, RandomOrder{sub_seed(master, rep, 2)});

    std::vector<LongRecord> out;
    for (int p = 1; p <= cfg.d; ++p) {
        try {
            const LsPoint pt = ls_sweep_point(ds, order, p, false);
            emit(out, rep, p, "df_random", pt.df_random);
        } catch (const input_error&) {
        }
        if (p != cfg.n)
            emit(out, rep, p, "df_approx",
                 df_approx(cfg.n, p, DfApproxFamily::asymptotic_equicorrelated));
    }
    return out;
}

std::vector<LongRecord> rep_optimal_size(int rep, std::uint64_t, bool) {
    std::vector<LongRecord> out;
    const int n = 100;
    int idx = 0;
    for (int ia = 0; ia < 20; ++ia) {
        const double alpha = std::pow(10.0, -1.0 + 2.0 * ia / 19.0);
        for (int ie = 0; ie < 20; ++ie) {
            const double eta = 1.0 + 4.0 * ie / 19.0;
            const OptimalSizes sizes = analytic_optimal_size(alpha, eta, n);
            emit(out, rep, idx, "alpha", alpha);
            emit(out, rep, idx, "eta", eta);
            emit(out, rep, idx, "gamma_f", sizes.gamma_f);
            emit(out, rep, idx, "gamma_r", sizes.gamma_r);
            ++idx;
        }
    }
    return out;
}

std::vector<LongRecord> subset_estimator_records(int rep, std::uint64_t master, double kappa,
                                                 MeanKind mean,
                                                 const std::vector<std::string>& metrics,
                                                 const std::vector<int>& ps) {
    const Dataset ds =
        generate_dataset(study_config(50, 120, kappa, mean, sub_seed(master, rep)));
    const std::vector<int> order = order_variables(ds.X, ds.y, Prescient{ds.beta});
    const bool nonlinear = mean == MeanKind::nonlinear_exp;
    TestDraws draws;
    if (nonlinear) draws = make_test_draws(ds, 2000, sub_seed(master, rep, 0xd7a));
    std::vector<LongRecord> out;
    for (int p : ps) {
        if (p == ds.n()) continue;
        try {
            const LsPoint pt = ls_sweep_point(ds, order, p, true, nonlinear ? &draws : nullptr);
            for (const auto& m : metrics) {
                double v = std::numeric_limits<double>::quiet_NaN();
                if (m == "delta_hat") v = pt.delta_hat_v;
                else if (m == "delta_plus") v = pt.delta_plus_v;
                else if (m == "delta_plusplus") v = pt.delta_pp_v;
                else if (m == "delta_true") v = pt.delta_true;
                else if (m == "loocv") v = pt.loocv;
                else if (m == "err_hat_plus") v = pt.err_hat_plus;
                else if (m == "err_hat") v = pt.err_hat;
                else if (m == "err_true") v = pt.err_test;
                if (std::isfinite(v)) emit(out, rep, p, m, v);
            }
        } catch (const input_error&) {
        }
    }
    return out;
}

std::vector<int> full_p_range(int d) {
    std::vector<int> ps(d + 1);
    for (int p = 0; p <= d; ++p) ps[p] = p;
    return ps;
}

std::vector<LongRecord> rep_delta_comparison(int rep, std::uint64_t master, bool) {
    return subset_estimator_records(
        rep, master, 5.0, MeanKind::linear,
        {"delta_hat", "delta_plus", "delta_plusplus", "delta_true"}, full_p_range(120));
}

std::vector<LongRecord> rep_delta_comparison_dense(int rep, std::uint64_t master, bool) {
    return subset_estimator_records(
        rep, master, 1.0, MeanKind::linear,
        {"delta_hat", "delta_plus", "delta_plusplus", "delta_true"}, full_p_range(120));
}

std::vector<LongRecord> rep_delta_comparison_nonlinear(int rep, std::uint64_t master, bool) {
    return subset_estimator_records(
        rep, master, 5.0, MeanKind::nonlinear_exp,
        {"delta_hat", "delta_plus", "delta_plusplus", "delta_true"}, full_p_range(120));
}

std::vector<LongRecord> rep_estimator_comparison(int rep, std::uint64_t master, bool) {
    return subset_estimator_records(rep, master, 5.0, MeanKind::linear,
                                    {"loocv", "err_hat", "err_hat_plus", "err_true"},
                                    full_p_range(120));
}

std::vector<LongRecord> rep_relative_mse(int rep, std::uint64_t master, bool) {
    return subset_estimator_records(rep, master, 5.0, MeanKind::linear,
                                    {"loocv", "err_hat_plus", "err_true"}, full_p_range(120));
}

std::vector<LongRecord> rep_selection_hist_impl(int rep, std::uint64_t master, MeanKind mean) {
    const Dataset ds =
        generate_dataset(study_config(50, 120, 5.0, mean, sub_seed(master, rep)));
    const int n = ds.n(), d = ds.d();
    const std::vector<int> order = order_variables(ds.X, ds.y, Prescient{ds.beta});
    const bool nonlinear = mean == MeanKind::nonlinear_exp;
    TestDraws draws;
    if (nonlinear) draws = make_test_draws(ds, 2000, sub_seed(master, rep, 0xd7a));

    const double inf = std::numeric_limits<double>::infinity();
    std::map<std::string, std::pair<double, int>> best;  // criterion -> (value, p)
    for (const auto& c :
         {"err_hat_plus", "loocv", "kfold5", "cp", "err_test"})
        best[c] = {inf, -1};
    auto consider = [&](const std::string& c, double v, int p) {
        if (std::isfinite(v) && v < best[c].first) best[c] = {v, p};
    };

    for (int p = 0; p <= d; ++p) {
        if (p == n) continue;
        try {
            const LsPoint pt = ls_sweep_point(ds, order, p, true, nonlinear ? &draws : nullptr);
            consider("err_hat_plus", pt.err_hat_plus, p);
            consider("loocv", pt.loocv, p);
            consider("cp", pt.cp, p);
            consider("err_test", pt.err_test, p);
            consider("kfold5", kfold_cv(ds, order, p, 5, sub_seed(master, rep, 5)), p);
        } catch (const input_error&) {
        }
    }
    std::vector<LongRecord> out;
    emit(out, rep, 0, "pstar", best["err_test"].second);
    emit(out, rep, 0, "phat_err_hat_plus", best["err_hat_plus"].second);
    emit(out, rep, 0, "phat_loocv", best["loocv"].second);
    emit(out, rep, 0, "phat_kfold5", best["kfold5"].second);
    emit(out, rep, 0, "phat_cp", best["cp"].second);
    return out;
}

std::vector<LongRecord> rep_selection_hist(int rep, std::uint64_t master, bool) {
    return rep_selection_hist_impl(rep, master, MeanKind::linear);
}

std::vector<LongRecord> rep_selection_hist_nonlinear(int rep, std::uint64_t master, bool) {
    return rep_selection_hist_impl(rep, master, MeanKind::nonlinear_exp);
}

Dataset gd_dataset(int rep, std::uint64_t master) {
    return generate_dataset(sparse_linear_config(20, 60, 5.0, sub_seed(master, rep)));
}

std::vector<LongRecord> rep_gd_single_theta(int rep, std::uint64_t master, bool) {
    const Dataset ds = gd_dataset(rep, master);
    const int n = ds.n(), p = ds.d();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    const double sig2 = ds.sigma_eps2;
    struct Choice {
        const char* tag;
        int j;
    };
    const Choice choices[] = {{"top", 0}, {"mid", p / 2}, {"low", p - 2}};

    std::vector<LongRecord> out;
    for (int g = 0; g <= 10; ++g) {
        const double theta = g / 10.0;
        for (const auto& ch : choices) {
            Eigen::VectorXd th(1);
            th(0) = theta;
            const auto [beta0, fm] = init_simple_regression(ds.X, ds.y, {ch.j}, th);
            const double df = interpolant_df(ds.X, fm.F, eye);
            const double db = interpolant_excess_bias(ds.X, ds.beta, fm).total;
            emit(out, rep, theta, std::string("df_") + ch.tag, df);
            emit(out, rep, theta, std::string("excess_bias_") + ch.tag, db);
            emit(out, rep, theta, std::string("err_") + ch.tag, sig2 * 2.0 * df / n + db);
        }
    }
    return out;
}

std::vector<LongRecord> rep_gd_q_sweep(int rep, std::uint64_t master, bool) {
    const Dataset ds = gd_dataset(rep, master);
    const int n = ds.n(), p = ds.d();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    const double sig2 = ds.sigma_eps2;

    std::vector<int> prescient(p);
    std::iota(prescient.begin(), prescient.end(), 0);
    std::stable_sort(prescient.begin(), prescient.end(), [&](int a, int b) {
        return std::abs(ds.beta(a)) > std::abs(ds.beta(b));
    });
    std::vector<int> random_order(p);
    std::iota(random_order.begin(), random_order.end(), 0);
    rng::Stream stream = rng::Stream::keyed(sub_seed(master, rep, 2));
    stream.shuffle(random_order);

    std::vector<LongRecord> out;
    for (int q = 0; q <= 10; ++q) {
        for (const auto& [tag, ord] :
             {std::pair<const char*, const std::vector<int>*>{"prescient", &prescient},
              {"random", &random_order}}) {
            const std::vector<int> subset(ord->begin(), ord->begin() + q);
            const Eigen::VectorXd th = Eigen::VectorXd::Ones(q);
            const auto [beta0, fm] = init_simple_regression(ds.X, ds.y, subset, th);
            const double df = interpolant_df(ds.X, fm.F, eye);
            const double db = interpolant_excess_bias(ds.X, ds.beta, fm).total;
            emit(out, rep, q, std::string("df_") + tag, df);
            emit(out, rep, q, std::string("excess_bias_") + tag, db);
            emit(out, rep, q, std::string("err_") + tag, sig2 * 2.0 * df / n + db);
        }
    }
    return out;
}

std::vector<LongRecord> rep_gd_norm_by_q(int rep, std::uint64_t master, bool) {
    const Dataset ds = gd_dataset(rep, master);
    const int n = ds.n(), p = ds.d();
    std::vector<int> prescient(p);
    std::iota(prescient.begin(), prescient.end(), 0);
    std::stable_sort(prescient.begin(), prescient.end(), [&](int a, int b) {
        return std::abs(ds.beta(a)) > std::abs(ds.beta(b));
    });

    Eigen::BDCSVD<Eigen::MatrixXd> svd(ds.X, Eigen::ComputeThinV);
    const Eigen::MatrixXd v1 = svd.matrixV();

    std::vector<LongRecord> out;
    for (int q = 0; q <= 10; ++q) {
        const std::vector<int> subset(prescient.begin(), prescient.begin() + q);
        const Eigen::VectorXd th = Eigen::VectorXd::Ones(q);
        const auto [beta0, fm] = init_simple_regression(ds.X, ds.y, subset, th);
        const Eigen::VectorXd z = ds.beta - fm.F * (ds.X * ds.beta);
        const Eigen::VectorXd v2z = z - v1 * (v1.transpose() * z);
        emit(out, rep, q, "norm2_diff", z.squaredNorm());
        emit(out, rep, q, "norm2_null_diff", v2z.squaredNorm());
        emit(out, rep, q, "expected_norm2", expected_init_distance(ds.beta, subset, n));
    }
    return out;
}

std::vector<LongRecord> rep_weight_table(int rep, std::uint64_t master, bool full_scale) {
    const int n = 2000;
    const int draws = full_scale ? 20000 : 10000;
    rng::Stream stream = rng::Stream::keyed(sub_seed(master, rep, 0x71));
    std::vector<double> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = stream.uniform_open();
    std::sort(pts.begin(), pts.end());
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = pts[i];

    const WeightKind kinds[] = {WeightKind::constant, WeightKind::linear, WeightKind::quadratic,
                                 WeightKind::cosine};
    std::vector<LongRecord> out;
    for (int k = 0; k < 4; ++k) {
        const HatSystem hs = fit(WeightInterpSpec{kinds[k], 0.0, 1.0}, x);
        const DofReport rep_df = df_random_mc(hs, uniform1d_sampler(0.0, 1.0), draws,
                                              sub_seed(master, rep, 0xd0 + k), par::Mode::serial);
        emit(out, rep, k, "df_ratio", rep_df.df_random / n);
        emit(out, rep, k, "df_ratio_limit", df_weight_limit(kinds[k]));
    }
    return out;
}

std::vector<LongRecord> rep_spline_table(int rep, std::uint64_t master, bool) {
    const int n = 21;
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i) / (n - 1);
    std::vector<LongRecord> out;
    for (int s = 1; s <= 6; ++s) {
        const HatSystem hs = fit(SplineSpec{s}, x);
        const DofReport rep_df = df_random_mc(hs, uniform1d_sampler(0.0, 1.0), 10000,
                                              sub_seed(master, rep, 0x5e + s), par::Mode::serial);
        emit(out, rep, 2 * s - 1, "df_ratio", rep_df.df_random / n);
    }
    return out;
}

const std::vector<ScenarioDef>& registry() {
    static const std::vector<ScenarioDef> defs = {
        {{"double_descent_fig1",
          "risk and degrees of freedom across the interpolation threshold (n=20, d=100, "
          "coefficients ~ 1/j, prescient ordering)",
          "fig1", 200, 500, 20250801}, rep_double_descent},
        {{"double_descent_fold",
          "risk against predictive degrees of freedom, folding the two regimes (n=20, d=100)",
          "fig-dd-fold", 100, 500, 20250802}, rep_double_descent},
        {{"ridge_df",
          "fixed vs predictive degrees of freedom of ridge regression over lambda (n=20, p=10 "
          "and p=80)",
          "fig-ridge-df", 50, 200, 20250803}, rep_ridge_df},
        {{"df_limit",
          "predictive degrees of freedom under equicorrelated features vs the asymptotic "
          "approximation (n=20, d=100, rho=0.5, random orderings)",
          "fig-df-limit", 100, 100, 20250804}, rep_df_limit},
        {{"optimal_size_grid",
          "analytic optimal model fractions gamma_F and gamma_R over an (alpha, eta) grid "
          "(n=100)",
          "fig-optimal-size", 1, 1, 20250805}, rep_optimal_size},
        {{"delta_comparison",
          "excess-bias estimators delta_hat, delta_plus, delta_plusplus against the truth "
          "(n=50, d=120, kappa=5, linear mean)",
          "fig-delta", 200, 500, 20250806}, rep_delta_comparison},
        {{"delta_comparison_dense",
          "excess-bias estimators under the dense coefficient profile (kappa=1, linear mean)",
          "fig-delta", 200, 500, 20250815}, rep_delta_comparison_dense},
        {{"delta_comparison_nonlinear",
          "excess-bias estimators under the centered-exponential mean (kappa=5)",
          "fig-delta", 100, 500, 20250816}, rep_delta_comparison_nonlinear},
        {{"estimator_comparison",
          "LOOCV vs the adjusted out-of-sample risk estimators per subset size (n=50, d=120, "
          "kappa=5)",
          "fig-estimators", 200, 500, 20250807}, rep_estimator_comparison},
        {{"relative_mse",
          "squared-error ratio of the corrected risk estimator to LOOCV (n=50, d=120, kappa=5)",
          "fig-relative-mse", 500, 500, 20250818}, rep_relative_mse},
        {{"selection_histograms",
          "selected-size offsets p_hat - p_star for several criteria (n=50, d=120, kappa=5, "
          "linear mean)",
          "fig-selection-hist", 500, 500, 20250809}, rep_selection_hist},
        {{"selection_histograms_nonlinear",
          "selected-size offsets under the centered-exponential mean (kappa=5)",
          "fig-selection-hist", 200, 500, 20250817}, rep_selection_hist_nonlinear},
        {{"gd_single_theta",
          "gradient-descent interpolants from a single-variable initialization as the "
          "shrinkage theta varies (n=20, p=60)",
          "fig-gd-theta", 500, 500, 20250810}, rep_gd_single_theta},
        {{"gd_q_sweep",
          "gradient-descent interpolants as the initialization subset grows, prescient vs "
          "random (n=20, p=60)",
          "fig-gd-q", 500, 500, 20250811}, rep_gd_q_sweep},
        {{"gd_sq_norm_by_q",
          "initialization distance and its null-space part by subset size (n=20, p=60)",
          "fig-gd-norm", 200, 500, 20250812}, rep_gd_norm_by_q},
        {{"weight_table1",
          "df ratio of the four weight-function interpolants at n=2000 against the large-n "
          "limits",
          "table1", 50, 50, 20250813}, rep_weight_table},
        {{"spline_table2",
          "df ratio of interpolating polynomial splines of degree 1..11 at n=21",
          "table2", 1, 1, 20250814}, rep_spline_table},
    };
    return defs;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_registry() {
    static const std::vector<ScenarioInfo> infos = [] {
        std::vector<ScenarioInfo> out;
        for (const auto& def : registry()) out.push_back(def.info);
        return out;
    }();
    return infos;
}

std::vector<SummaryRecord> summarize(const std::vector<LongRecord>& records) {
    std::map<std::pair<std::string, double>, std::vector<double>> groups;
    std::map<std::pair<std::string, double>, int> reps_seen;
    for (const auto& r : records) groups[{r.metric, r.sweep_value}].push_back(r.value);
    std::vector<SummaryRecord> out;
    for (const auto& [key, values] : groups) {
        const par::MeanSe stats = par::mean_se(values);
        SummaryRecord s;
        s.metric = key.first;
        s.sweep_value = key.second;
        s.mean = stats.mean;
        s.sd = stats.sd;
        s.se = stats.se;
        s.n_reps = static_cast<int>(values.size());
        out.push_back(s);
    }
    return out;
}

ExperimentResult run_scenario(const std::string& name, const RunOptions& opts) {
    const ScenarioDef* def = nullptr;
    for (const auto& d : registry())
        if (d.info.name == name) def = &d;
    if (def == nullptr) {
        std::string names;
        for (const auto& d : registry()) names += " " + d.info.name;
        throw input_error("run_scenario: unknown scenario '" + name + "'; valid:" + names);
    }

    ExperimentResult result;
    result.scenario = name;
    result.master_seed =
        opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed) : def->info.default_seed;
    result.replicates = opts.reps > 0
                            ? opts.reps
                            : (opts.full_scale ? def->info.full_reps : def->info.desk_reps);

    std::vector<std::vector<LongRecord>> per_rep(result.replicates);
    const std::uint64_t master = result.master_seed;
    const bool full = opts.full_scale;
    par::for_index(static_cast<std::size_t>(result.replicates), opts.mode, [&](std::size_t r) {
        per_rep[r] = def->replicate(static_cast<int>(r), master, full);
    });
    for (auto& recs : per_rep)
        result.long_records.insert(result.long_records.end(), recs.begin(), recs.end());
    result.summary = summarize(result.long_records);
    return result;
}

void write_result(const std::string& out_dir, const ExperimentResult& result,
                  const std::vector<std::string>& meta_lines) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_dir) / result.scenario;
    fs::create_directories(dir);
    char buf[64];
    {
        std::ofstream out(dir / "long.csv");
        if (!out) throw input_error("write_result: cannot open long.csv");
        out << "scenario,replicate,sweep_value,metric,value\n";
        for (const auto& r : result.long_records) {
            std::snprintf(buf, sizeof(buf), "%.17g", r.sweep_value);
            out << result.scenario << "," << r.replicate << "," << buf << "," << r.metric << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", r.value);
            out << buf << "\n";
        }
    }
    {
        std::ofstream out(dir / "summary.csv");
        if (!out) throw input_error("write_result: cannot open summary.csv");
        out << "scenario,sweep_value,metric,mean,sd,se,n_reps\n";
        for (const auto& s : result.summary) {
            std::snprintf(buf, sizeof(buf), "%.17g", s.sweep_value);
            out << result.scenario << "," << buf << "," << s.metric << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", s.mean);
            out << buf << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", s.sd);
            out << buf << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", s.se);
            out << buf << "," << s.n_reps << "\n";
        }
    }
    {
        std::ofstream out(dir / "meta");
        if (!out) throw input_error("write_result: cannot open meta");
        out << "scenario: " << result.scenario << "\n";
        out << "master_seed: " << result.master_seed << "\n";
        out << "replicates: " << result.replicates << "\n";
        out << "version: " << version_string() << "\n";
        for (const auto& line : meta_lines) out << line << "\n";
    }
}

std::vector<RelMsePoint> relative_mse(const ExperimentResult& result,
                                      const std::string& estimator_metric,
                                      const std::string& reference_metric,
                                      const std::string& truth_metric) {
    // (sweep, replicate) -> values
    std::map<double, std::map<int, std::array<double, 3>>> table;
    std::map<double, std::map<int, std::array<bool, 3>>> seen;
    auto record = [&](const LongRecord& r, int slot) {
        table[r.sweep_value][r.replicate][slot] = r.value;
        seen[r.sweep_value][r.replicate][slot] = true;
    };
    for (const auto& r : result.long_records) {
        if (r.metric == estimator_metric) record(r, 0);
        else if (r.metric == reference_metric) record(r, 1);
        else if (r.metric == truth_metric) record(r, 2);
    }
    std::vector<RelMsePoint> out;
    for (const auto& [sweep, reps] : table) {
        double num = 0.0, den = 0.0;
        int matched = 0;
        for (const auto& [rep, vals] : reps) {
            const auto& ok = seen[sweep].at(rep);
            if (!(ok[0] && ok[1] && ok[2])) continue;
            ++matched;
            num += (vals[0] - vals[2]) * (vals[0] - vals[2]);
            den += (vals[1] - vals[2]) * (vals[1] - vals[2]);
        }
        if (matched == 0) continue;
        RelMsePoint pt;
        pt.sweep_value = sweep;
        pt.defined = den > 0.0;
        pt.pi = pt.defined ? num / den : std::numeric_limits<double>::quiet_NaN();
        out.push_back(pt);
    }
    return out;
}

SelectionHistogram selection_histogram(const ExperimentResult& result,
                                       const std::vector<std::string>& criteria) {
    std::map<int, double> pstar;
    std::map<std::string, std::map<int, double>> phat;
    for (const auto& r : result.long_records) {
        if (r.metric == "pstar") pstar[r.replicate] = r.value;
        else if (r.metric.rfind("phat_", 0) == 0) phat[r.metric.substr(5)][r.replicate] = r.value;
    }
    SelectionHistogram hist;
    for (const auto& c : criteria) {
        const auto it = phat.find(c);
        if (it == phat.end())
            throw input_error("selection_histogram: no phat records for criterion " + c);
        int within = 0, total = 0;
        for (const auto& [rep, p] : it->second) {
            const auto ps = pstar.find(rep);
            if (ps == pstar.end()) continue;
            const int offset = static_cast<int>(std::lround(p - ps->second));
            hist.counts[c][offset] += 1;
            ++total;
            if (std::abs(offset) <= 2) ++within;
        }
        hist.mass_within_2[c] = total > 0 ? static_cast<double>(within) / total : 0.0;
        hist.total = total;
    }
    return hist;
}

}  // namespace preddf
