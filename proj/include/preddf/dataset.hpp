#ifndef PREDDF_DATASET_HPP
#define PREDDF_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include "preddf/common.hpp"
#include "preddf/rng.hpp"

namespace preddf {

enum class MeanKind { linear, nonlinear_exp };

struct PolyDecay {
    double kappa = 1.0;  // beta_j = alpha (1 - j/d)^kappa, kappa >= 1
};
struct InverseIndex {};  // beta_j = alpha / j
using BetaKind = std::variant<PolyDecay, InverseIndex>;

struct CovIdentity {};
struct CovEquicorrelated {
    double rho = 0.0;  // (1 - rho) I + rho 1 1^T, 0 <= rho < 1
};
struct CovExplicit {
    Eigen::MatrixXd sigma;
};
struct CovRandomCorrelation {
    std::uint64_t seed = 0;
};
using CovKind = std::variant<CovIdentity, CovEquicorrelated, CovExplicit, CovRandomCorrelation>;

struct GenConfig {
    int n = 0;
    int d = 0;
    MeanKind mean_kind = MeanKind::linear;
    BetaKind beta_kind = PolyDecay{1.0};
    double beta_norm2 = 1.0;
    CovKind cov_kind = CovIdentity{};
    double sigma_eps2 = 1.0;
    std::uint64_t seed = 0;
};

// Immutable after construction; safe to share across threads.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd mu;  // true means; empty when unknown (real data)
    double sigma_eps2 = 0.0;
    Eigen::MatrixXd Sigma;
    Eigen::VectorXd beta;  // true coefficients; empty when unknown
    std::function<double(const Eigen::VectorXd&)> mean_fn;  // oracle, may be null

    int n() const { return static_cast<int>(X.rows()); }
    int d() const { return static_cast<int>(X.cols()); }
    bool has_truth() const { return mu.size() == X.rows() && static_cast<bool>(mean_fn); }
};

// ||beta||^2 = beta_norm2 to 1e-12 relative; entries nonincreasing in j.
Eigen::VectorXd coefficient_vector(int d, const BetaKind& kind, double beta_norm2);

Eigen::MatrixXd make_covariance(const CovKind& kind, int d);

// Exact mean oracle for the configured mean kind (centered so E mu(x) = 0
// under x_j ~ N(0, 1) in the nonlinear case).
double mean_value(MeanKind kind, const Eigen::VectorXd& beta, const Eigen::VectorXd& x);

Dataset generate_dataset(const GenConfig& cfg);

// CSV: header x1..xd,y then one row per observation, 17 significant digits.
void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y);
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

}  // namespace preddf

#endif
