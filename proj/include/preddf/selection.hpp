#ifndef PREDDF_SELECTION_HPP
#define PREDDF_SELECTION_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "preddf/dataset.hpp"
#include "preddf/parallel.hpp"

namespace preddf {

struct SweepCell {
    double value = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
};

// Long-format table over subset size p. Criteria that need n - p > 0 or
// leverages below 1 are left undefined at and beyond the threshold.
struct SweepTable {
    std::vector<std::string> criteria;
    std::vector<int> ps;
    std::vector<std::map<std::string, SweepCell>> rows;  // aligned with ps

    const SweepCell& cell(int p, const std::string& criterion) const;
};

struct Prescient {
    Eigen::VectorXd beta;
};
struct ForwardRss {};
struct RandomOrder {
    std::uint64_t seed = 0;
};
struct GivenOrder {
    std::vector<int> perm;
};
using OrderStrategy = std::variant<Prescient, ForwardRss, RandomOrder, GivenOrder>;

// Permutation of 0..d-1. Forward selection greedily minimizes training RSS
// up to min(n - 1, d) variables, then appends the rest in index order.
std::vector<int> order_variables(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const OrderStrategy& strategy);

struct CvConfig {
    int k = 5;
    std::uint64_t seed = 0;
};

struct SweepOptions {
    std::vector<std::string> criteria;  // empty = all available
    CvConfig cv;
    bool want_err_test = true;  // filled only when the dataset carries truth
    int err_test_draws = 2000;  // Monte Carlo draws for non-linear truth
    std::uint64_t seed = 0;
    std::vector<int> p_values;  // empty = 0..d
};

SweepTable criterion_sweep(const Dataset& data, const std::vector<int>& order, double sigma_eps2,
                           const Eigen::MatrixXd& Sigma, const SweepOptions& opts = {});

// Argmin over defined rows; ties break toward smaller p.
int select(const SweepTable& table, const std::string& criterion);

// Mean squared held-out error with per-fold refits; min-norm least squares
// steps in when a fold's training rows fall below p.
double kfold_cv(const Dataset& data, const std::vector<int>& order, int p, int k,
                std::uint64_t seed);

struct OptimalSizes {
    double gamma_f = 0.0;
    double gamma_r = 0.0;
};

// Optimal fractions gamma = p/n of the expected in-sample and out-of-sample
// error curves under sigma_S^2(p) = alpha (1 - p/d)^eta with d = n.
OptimalSizes analytic_optimal_size(double alpha, double eta, int n);

enum class Transform { none, log_e, logit };
enum class Imputation { none, group_median };

struct PipelineConfig {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::string strata_column;  // empty = single stratum
    std::map<std::string, Transform> transforms;
    Imputation imputation = Imputation::none;
    std::string impute_group_column;  // empty = global median
    std::string target_column;        // empty = last column
    std::uint64_t seed = 0;
};

struct IngestResult {
    Dataset train;
    Dataset test;
    Dataset aux;
    Eigen::MatrixXd sigma_hat;     // aux sample covariance of the features
    double sigma_eps2_hat = 0.0;   // full-model residual variance on aux
    std::vector<std::string> feature_names;
    Eigen::VectorXd center_x;
    double center_y = 0.0;
};

// Stratified train/test/aux split with transforms, group-median imputation
// and centering by aux means; covariance and error variance come from aux.
IngestResult ingest_csv(const std::string& path, const PipelineConfig& cfg);

void write_sweep_csv(const std::string& path, const SweepTable& table);

}  // namespace preddf

#endif
