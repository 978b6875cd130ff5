// Command-line surface for the predictive degrees-of-freedom library.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "preddf/dataset.hpp"
#include "preddf/dof.hpp"
#include "preddf/experiments.hpp"
#include "preddf/gd.hpp"
#include "preddf/risk.hpp"
#include "preddf/selection.hpp"

using namespace preddf;

namespace {

void print_kv(const std::string& key, double value) {
    std::printf("%s=%.12g\n", key.c_str(), value);
}

// "3..7" (inclusive) or "1,4,9"; 1-based on the command line.
std::vector<int> parse_subset(const std::string& text) {
    std::vector<int> out;
    if (text.empty()) return out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = std::stoi(text.substr(0, dots));
        const int hi = std::stoi(text.substr(dots + 2));
        if (lo < 1 || hi < lo) throw input_error("subset: bad range " + text);
        for (int j = lo; j <= hi; ++j) out.push_back(j - 1);
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const int j = std::stoi(tok);
        if (j < 1) throw input_error("subset: indices are 1-based");
        out.push_back(j - 1);
    }
    return out;
}

CovKind parse_cov(const std::string& text) {
    if (text == "identity" || text.empty()) return CovIdentity{};
    if (text.rfind("equicorr:", 0) == 0) return CovEquicorrelated{std::stod(text.substr(9))};
    if (text.rfind("random:", 0) == 0)
        return CovRandomCorrelation{static_cast<std::uint64_t>(std::stoull(text.substr(7)))};
    if (text.rfind("file:", 0) == 0) {
        const Dataset raw = read_dataset_csv(text.substr(5));
        Eigen::MatrixXd full(raw.X.rows(), raw.X.cols() + 1);
        full.leftCols(raw.X.cols()) = raw.X;
        full.col(raw.X.cols()) = raw.y;
        return CovExplicit{full};
    }
    throw input_error("covariance: expected identity, equicorr:<rho>, random:<seed> or "
                      "file:<csv> but got '" + text + "'");
}

struct DataArgs {
    std::string input;
    int gen_n = 0;
    int gen_d = 0;
    std::string gen_mean = "linear";
    std::string gen_beta = "poly:5";
    double gen_beta_norm2 = 10.0;
    std::string gen_cov = "identity";
    double gen_sigma_eps2 = 1.0;
    std::uint64_t gen_seed = 1;
    std::string sigma = "identity";
    double sigma_eps2 = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "dataset CSV (columns x1..xd,y)");
        cmd->add_option("--gen-n", gen_n, "generate: sample size");
        cmd->add_option("--gen-d", gen_d, "generate: number of features");
        cmd->add_option("--gen-mean", gen_mean, "generate: linear|nonlinear");
        cmd->add_option("--gen-beta", gen_beta, "generate: poly:<kappa>|inverse");
        cmd->add_option("--gen-beta-norm2", gen_beta_norm2, "generate: squared coefficient norm");
        cmd->add_option("--gen-cov", gen_cov,
                        "generate: identity|equicorr:<rho>|random:<seed>|file:<csv>");
        cmd->add_option("--gen-sigma-eps2", gen_sigma_eps2, "generate: error variance");
        cmd->add_option("--gen-seed", gen_seed, "generate: seed");
        cmd->add_option("--sigma", sigma,
                        "feature covariance for analytic df (input data only)");
        cmd->add_option("--sigma-eps2", sigma_eps2, "error variance (input data only)");
    }

    Dataset load() const {
        if (!input.empty()) {
            Dataset ds = read_dataset_csv(input);
            ds.Sigma = make_covariance(parse_cov(sigma), ds.d());
            ds.sigma_eps2 = sigma_eps2;
            return ds;
        }
        if (gen_n <= 0 || gen_d <= 0)
            throw input_error("either --input or --gen-n/--gen-d is required");
        GenConfig cfg;
        cfg.n = gen_n;
        cfg.d = gen_d;
        if (gen_mean == "linear") cfg.mean_kind = MeanKind::linear;
        else if (gen_mean == "nonlinear") cfg.mean_kind = MeanKind::nonlinear_exp;
        else throw input_error("--gen-mean: expected linear or nonlinear");
        if (gen_beta.rfind("poly:", 0) == 0)
            cfg.beta_kind = PolyDecay{std::stod(gen_beta.substr(5))};
        else if (gen_beta == "inverse") cfg.beta_kind = InverseIndex{};
        else throw input_error("--gen-beta: expected poly:<kappa> or inverse");
        cfg.beta_norm2 = gen_beta_norm2;
        cfg.cov_kind = parse_cov(gen_cov);
        cfg.sigma_eps2 = gen_sigma_eps2;
        cfg.seed = gen_seed;
        return generate_dataset(cfg);
    }
};

struct ProcArgs {
    std::string proc = "ols";
    std::string subset;
    double lambda = 1.0;
    std::string weight_kind = "linear";
    double omega = 0.0;
    std::vector<double> interval{0.0, 1.0};
    int spline_s = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--proc", proc, "ols|min_norm|ridge|weight|local|spline")
            ->required();
        cmd->add_option("--subset", subset, "1-based column subset: a..b or i,j,k");
        cmd->add_option("--lambda", lambda, "ridge penalty");
        cmd->add_option("--weight-kind", weight_kind, "constant|linear|quadratic|cosine");
        cmd->add_option("--omega", omega, "local constant bandwidth");
        cmd->add_option("--interval", interval, "domain endpoints a b")->expected(2);
        cmd->add_option("--spline-s", spline_s, "spline order s (degree 2s-1)");
    }

    ProcedureSpec build(const Dataset& ds) const {
        if (proc == "ols") {
            std::vector<int> s = subset.empty() ? all_columns(ds.d()) : parse_subset(subset);
            if (static_cast<int>(s.size()) == ds.n())
                throw input_error("ols: subset size p equals n, the interpolation threshold; "
                                  "df_R estimators are undefined here");
            return OlsSpec{std::move(s)};
        }
        if (proc == "min_norm") {
            std::vector<int> s = subset.empty() ? all_columns(ds.d()) : parse_subset(subset);
            return MinNormSpec{std::move(s)};
        }
        if (proc == "ridge") return RidgeSpec{lambda};
        if (proc == "weight") {
            WeightKind kind;
            if (weight_kind == "constant") kind = WeightKind::constant;
            else if (weight_kind == "linear") kind = WeightKind::linear;
            else if (weight_kind == "quadratic") kind = WeightKind::quadratic;
            else if (weight_kind == "cosine") kind = WeightKind::cosine;
            else throw input_error("--weight-kind: unknown kind " + weight_kind);
            return WeightInterpSpec{kind, interval[0], interval[1]};
        }
        if (proc == "local") return LocalConstantSpec{omega, interval[0], interval[1]};
        if (proc == "spline") return SplineSpec{spline_s};
        throw input_error("--proc: unknown procedure " + proc);
    }
};

bool is_1d(const ProcedureSpec& spec) {
    return std::holds_alternative<WeightInterpSpec>(spec) ||
           std::holds_alternative<LocalConstantSpec>(spec) ||
           std::holds_alternative<SplineSpec>(spec);
}

int cmd_dof(const DataArgs& data, const ProcArgs& proc, bool force_mc, int draws,
            std::uint64_t mc_seed) {
    const Dataset ds = data.load();
    const ProcedureSpec spec = proc.build(ds);
    const HatSystem hs = fit(spec, ds.X);

    DofReport rep;
    const bool analytic = !force_mc && !is_1d(spec);
    if (analytic) {
        rep = df_random(hs, ds.Sigma);
    } else if (is_1d(spec)) {
        double a = 0.0, b = 1.0;
        if (const auto* w = std::get_if<WeightInterpSpec>(&spec)) a = w->a, b = w->b;
        if (const auto* l = std::get_if<LocalConstantSpec>(&spec)) a = l->a, b = l->b;
        rep = df_random_mc(hs, uniform1d_sampler(a, b), draws, mc_seed);
    } else {
        rep = df_random_mc(hs, gaussian_sampler(ds.Sigma), draws, mc_seed);
    }
    print_kv("df_fixed", rep.df_fixed);
    print_kv("df_random", rep.df_random);
    print_kv("e_h_norm2", rep.e_h_norm2);
    print_kv("trace_hth_over_n", rep.trace_hth_over_n);
    std::printf("method=%s\n", rep.method == DofMethod::exact_ls
                                   ? "exact_ls"
                                   : (rep.method == DofMethod::exact_ridge ? "exact_ridge"
                                                                           : "monte_carlo"));
    if (rep.method == DofMethod::monte_carlo) {
        print_kv("n_draws", rep.n_draws);
        print_kv("se_e_h_norm2", rep.se);
    }
    return 0;
}

int cmd_risk(const DataArgs& data, const ProcArgs& proc, int draws, std::uint64_t seed) {
    const Dataset ds = data.load();
    const ProcedureSpec spec = proc.build(ds);
    const HatSystem hs = fit(spec, ds.X);
    RiskOptions opts;
    opts.n_draws = draws;
    opts.seed = seed;
    const RiskReport rep =
        risk_report(hs, ds.y, ds.sigma_eps2, ds.Sigma, ds.mu, ds.mean_fn, opts);
    print_kv("err_train", rep.err_train);
    print_kv("df_fixed", rep.df_fixed);
    print_kv("df_random", rep.df_random);
    print_kv("xi", rep.xi);
    for (const auto& [name, value] : rep.estimators) print_kv(name, value);
    if (rep.err_fixed) print_kv("err_fixed_true", *rep.err_fixed);
    if (rep.err_random) {
        print_kv("err_random_true", rep.err_random->value);
        print_kv("err_random_true_se", rep.err_random->se);
    }
    if (rep.excess_bias) print_kv("excess_bias_true", *rep.excess_bias);
    return 0;
}

int cmd_sweep(const DataArgs& data, const std::string& order_name, const std::string& criteria,
              const std::string& select_crit, const std::string& out_path, int kfold_k,
              std::uint64_t cv_seed) {
    const Dataset ds = data.load();
    OrderStrategy strategy = ForwardRss{};
    if (order_name == "prescient") {
        if (ds.beta.size() == 0)
            throw input_error("sweep: prescient ordering needs generated data");
        strategy = Prescient{ds.beta};
    } else if (order_name == "forward") {
        strategy = ForwardRss{};
    } else if (order_name.rfind("random:", 0) == 0) {
        strategy = RandomOrder{static_cast<std::uint64_t>(std::stoull(order_name.substr(7)))};
    } else {
        throw input_error("sweep: unknown ordering " + order_name);
    }
    const std::vector<int> order = order_variables(ds.X, ds.y, strategy);

    SweepOptions opts;
    opts.cv.k = kfold_k;
    opts.cv.seed = cv_seed;
    if (!criteria.empty()) {
        std::stringstream ss(criteria);
        std::string tok;
        while (std::getline(ss, tok, ',')) opts.criteria.push_back(tok);
    }
    const SweepTable table = criterion_sweep(ds, order, ds.sigma_eps2, ds.Sigma, opts);
    if (!out_path.empty()) write_sweep_csv(out_path, table);
    if (!select_crit.empty()) std::printf("selected_p=%d\n", select(table, select_crit));
    if (out_path.empty() && select_crit.empty()) {
        // default: table to stdout
        for (std::size_t i = 0; i < table.ps.size(); ++i)
            for (const auto& c : table.criteria) {
                const auto& cell = table.rows[i].at(c);
                std::printf("%d,%s,%.12g,%d\n", table.ps[i], c.c_str(), cell.value,
                            cell.defined ? 1 : 0);
            }
    }
    return 0;
}

int cmd_gd(const DataArgs& data, const std::string& subset_text, double theta, double alpha_frac,
           int iters) {
    const Dataset ds = data.load();
    if (ds.d() <= ds.n()) throw input_error("gd: needs p > n");
    const std::vector<int> subset = parse_subset(subset_text);
    const Eigen::VectorXd th = Eigen::VectorXd::Constant(subset.size(), theta);
    const auto [beta0, fm] = init_simple_regression(ds.X, ds.y, subset, th);

    const double bound = max_step(ds.X);
    print_kv("max_step", bound);

    GdConfig cfg;
    cfg.alpha = alpha_frac * bound;
    cfg.max_iter = iters;
    cfg.tol = 1e-12;
    cfg.beta0 = beta0;
    const GdRun run = gd_run(ds.X, ds.y, cfg);
    const Eigen::VectorXd limit = gd_limit(ds.X, ds.y, beta0);
    print_kv("iterations", run.iterations);
    print_kv("converged", run.converged ? 1.0 : 0.0);
    print_kv("run_vs_limit_gap", (run.beta - limit).norm());
    print_kv("interpolation_residual", (ds.X * limit - ds.y).norm() / ds.y.norm());
    print_kv("df_random", interpolant_df(ds.X, fm.F, ds.Sigma));
    print_kv("df_random_min_norm", df_random_ls_closed(ds.X, ds.Sigma));
    if (ds.beta.size() == ds.d()) {
        const ExcessBiasParts parts = interpolant_excess_bias(ds.X, ds.beta, fm);
        print_kv("excess_bias", parts.total);
        print_kv("excess_bias_min_norm", parts.minnorm_part);
        print_kv("norm2_null_beta", parts.norm2_v2beta);
        print_kv("norm2_null_z", parts.norm2_v2z);
    }
    return 0;
}

int cmd_experiment(const std::string& name, bool list, int reps, std::int64_t seed,
                   const std::string& out_root, bool full_scale, bool serial) {
    if (list) {
        for (const auto& info : scenario_registry())
            std::printf("%-24s [%s] reps=%d  %s\n", info.name.c_str(), info.anchor.c_str(),
                        info.desk_reps, info.description.c_str());
        return 0;
    }
    if (name.empty()) throw input_error("experiment: scenario name required (or --list)");
    RunOptions opts;
    opts.reps = reps;
    opts.seed = seed;
    opts.full_scale = full_scale;
    if (serial) opts.mode = par::Mode::serial;
    const ExperimentResult result = run_scenario(name, opts);

    std::vector<std::string> meta;
    meta.push_back(std::string("mode: ") +
                   (opts.mode == par::Mode::serial ? "serial" : "openmp"));
    meta.push_back(std::string("full_scale: ") + (full_scale ? "true" : "false"));
    if (reps > 0) meta.push_back("reps_override: " + std::to_string(reps));
    if (seed >= 0) meta.push_back("seed_override: " + std::to_string(seed));
    for (const auto& info : scenario_registry())
        if (info.name == name) {
            meta.push_back("anchor: " + info.anchor);
            meta.push_back("description: " + info.description);
        }
    write_result(out_root, result, meta);
    std::printf("wrote %s/%s (replicates=%d, seed=%llu)\n", out_root.c_str(), name.c_str(),
                result.replicates, static_cast<unsigned long long>(result.master_seed));
    return 0;
}

int cmd_ingest(const std::string& csv, std::size_t train_size, std::size_t test_size,
               const std::string& strata, const std::vector<std::string>& transforms,
               const std::string& impute_group, bool no_impute, const std::string& target,
               std::uint64_t seed, const std::string& out_dir) {
    PipelineConfig cfg;
    cfg.train_size = train_size;
    cfg.test_size = test_size;
    cfg.strata_column = strata;
    cfg.imputation = no_impute ? Imputation::none : Imputation::group_median;
    cfg.impute_group_column = impute_group;
    cfg.target_column = target;
    cfg.seed = seed;
    for (const auto& t : transforms) {
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw input_error("ingest: --transform expects col=log|logit");
        const std::string col = t.substr(0, eq);
        const std::string kind = t.substr(eq + 1);
        if (kind == "log") cfg.transforms[col] = Transform::log_e;
        else if (kind == "logit") cfg.transforms[col] = Transform::logit;
        else if (kind == "none") cfg.transforms[col] = Transform::none;
        else throw input_error("ingest: unknown transform " + kind);
    }
    const IngestResult result = ingest_csv(csv, cfg);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_dataset_csv(out_dir + "/train.csv", result.train);
    write_dataset_csv(out_dir + "/test.csv", result.test);
    write_dataset_csv(out_dir + "/aux.csv", result.aux);
    {
        std::ofstream out(out_dir + "/sigma.csv");
        char buf[64];
        for (int i = 0; i < result.sigma_hat.rows(); ++i) {
            for (int j = 0; j < result.sigma_hat.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", result.sigma_hat(i, j));
                out << buf << (j + 1 < result.sigma_hat.cols() ? "," : "\n");
            }
        }
    }
    {
        std::ofstream out(out_dir + "/meta");
        out << "source: " << csv << "\n";
        out << "seed: " << seed << "\n";
        out << "train: " << result.train.n() << "\n";
        out << "test: " << result.test.n() << "\n";
        out << "aux: " << result.aux.n() << "\n";
        out << "sigma_eps2_hat: " << result.sigma_eps2_hat << "\n";
        out << "features:";
        for (const auto& f : result.feature_names) out << " " << f;
        out << "\n";
        out << "version: " << version_string() << "\n";
    }
    std::printf("wrote %s (train=%d test=%d aux=%d, sigma_eps2_hat=%.6g)\n", out_dir.c_str(),
                result.train.n(), result.test.n(), result.aux.n(), result.sigma_eps2_hat);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"predictive model degrees of freedom toolkit"};
    // global option, placed before the subcommand: preddf --config file <cmd>
    // file sections are named after the subcommand; flags override the file
    app.set_config("--config", "", "key-value config file; flags override file values");
    app.require_subcommand(1);

    // dof
    auto* dof_cmd = app.add_subcommand("dof", "degrees of freedom of a fitted procedure");
    dof_cmd->configurable();
    DataArgs dof_data;
    ProcArgs dof_proc;
    dof_data.attach(dof_cmd);
    dof_proc.attach(dof_cmd);
    bool dof_mc = false;
    int dof_draws = 10000;
    std::uint64_t dof_seed = 0;
    dof_cmd->add_flag("--mc", dof_mc, "force the Monte Carlo path");
    dof_cmd->add_option("--draws", dof_draws, "Monte Carlo draws");
    dof_cmd->add_option("--mc-seed", dof_seed, "Monte Carlo seed");

    // risk
    auto* risk_cmd = app.add_subcommand("risk", "risk estimators for a fitted procedure");
    risk_cmd->configurable();
    DataArgs risk_data;
    ProcArgs risk_proc;
    risk_data.attach(risk_cmd);
    risk_proc.attach(risk_cmd);
    int risk_draws = 10000;
    std::uint64_t risk_seed = 0;
    risk_cmd->add_option("--draws", risk_draws, "Monte Carlo draws for truth quantities");
    risk_cmd->add_option("--mc-seed", risk_seed, "Monte Carlo seed");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "criterion sweep over subset size");
    sweep_cmd->configurable();
    DataArgs sweep_data;
    sweep_data.attach(sweep_cmd);
    std::string sweep_order = "forward";
    std::string sweep_criteria;
    std::string sweep_select;
    std::string sweep_out;
    int sweep_k = 5;
    std::uint64_t sweep_cv_seed = 0;
    sweep_cmd->add_option("--order", sweep_order, "prescient|forward|random:<seed>");
    sweep_cmd->add_option("--criteria", sweep_criteria, "comma-separated criteria list");
    sweep_cmd->add_option("--select", sweep_select, "print the argmin of this criterion");
    sweep_cmd->add_option("--out", sweep_out, "write the sweep table CSV here");
    sweep_cmd->add_option("--kfold", sweep_k, "folds for kfold_cv (AIC/BIC conventions: "
                          "n log ErrT + 2p and n log ErrT + p log n, p < n)");
    sweep_cmd->add_option("--cv-seed", sweep_cv_seed, "fold shuffling seed");

    // gd
    auto* gd_cmd = app.add_subcommand("gd", "gradient-descent interpolant analysis");
    gd_cmd->configurable();
    DataArgs gd_data;
    gd_data.attach(gd_cmd);
    std::string gd_subset = "1..1";
    double gd_theta = 1.0;
    double gd_alpha_frac = 0.5;
    int gd_iters = 20000;
    gd_cmd->add_option("--subset", gd_subset, "initialization variables (1-based)");
    gd_cmd->add_option("--theta", gd_theta, "shrinkage factor in [0, 1]");
    gd_cmd->add_option("--alpha-frac", gd_alpha_frac, "step size as a fraction of 2/lambda_max");
    gd_cmd->add_option("--iters", gd_iters, "iteration budget for the run/limit check");

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "run a registered scenario");
    exp_cmd->configurable();
    std::string exp_name;
    bool exp_list = false;
    int exp_reps = -1;
    std::int64_t exp_seed = -1;
    std::string exp_out = "out";
    bool exp_full = false;
    bool exp_serial = false;
    exp_cmd->add_option("name", exp_name, "scenario name");
    exp_cmd->add_flag("--list", exp_list, "list registered scenarios");
    exp_cmd->add_option("--reps", exp_reps, "replicate override");
    exp_cmd->add_option("--seed", exp_seed, "master seed override");
    exp_cmd->add_option("--out", exp_out, "output root directory")->envname("PREDDF_OUT");
    exp_cmd->add_flag("--full-scale", exp_full, "full replicate counts");
    exp_cmd->add_flag("--serial", exp_serial, "disable OpenMP for this run");

    // ingest
    auto* ing_cmd = app.add_subcommand("ingest", "stratified split pipeline for a CSV");
    ing_cmd->configurable();
    std::string ing_csv;
    std::size_t ing_train = 0, ing_test = 0;
    std::string ing_strata, ing_group, ing_target, ing_out = "ingested";
    std::vector<std::string> ing_transforms;
    bool ing_noimpute = false;
    std::uint64_t ing_seed = 0;
    ing_cmd->add_option("csv", ing_csv, "input CSV with a header row")->required();
    ing_cmd->add_option("--train-size", ing_train, "training rows")->required();
    ing_cmd->add_option("--test-size", ing_test, "test rows")->required();
    ing_cmd->add_option("--strata", ing_strata, "stratification column");
    ing_cmd->add_option("--transform", ing_transforms, "col=log|logit, repeatable");
    ing_cmd->add_option("--impute-group", ing_group, "group column for median imputation");
    ing_cmd->add_flag("--no-impute", ing_noimpute, "fail on missing values");
    ing_cmd->add_option("--target", ing_target, "response column (default: last)");
    ing_cmd->add_option("--seed", ing_seed, "split seed");
    ing_cmd->add_option("--out", ing_out, "output directory")->envname("PREDDF_OUT");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dof_cmd->parsed()) return cmd_dof(dof_data, dof_proc, dof_mc, dof_draws, dof_seed);
        if (risk_cmd->parsed()) return cmd_risk(risk_data, risk_proc, risk_draws, risk_seed);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_data, sweep_order, sweep_criteria, sweep_select, sweep_out,
                             sweep_k, sweep_cv_seed);
        if (gd_cmd->parsed())
            return cmd_gd(gd_data, gd_subset, gd_theta, gd_alpha_frac, gd_iters);
        if (exp_cmd->parsed())
            return cmd_experiment(exp_name, exp_list, exp_reps, exp_seed, exp_out, exp_full,
                                  exp_serial);
        if (ing_cmd->parsed())
            return cmd_ingest(ing_csv, ing_train, ing_test, ing_strata, ing_transforms,
                              ing_group, ing_noimpute, ing_target, ing_seed, ing_out);
    } catch (const input_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 3;
    }
    return 0;
}
