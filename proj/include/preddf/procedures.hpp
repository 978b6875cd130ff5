#ifndef PREDDF_PROCEDURES_HPP
#define PREDDF_PROCEDURES_HPP

#include <Eigen/Dense>
#include <functional>
#include <variant>
#include <vector>

#include "preddf/common.hpp"

namespace preddf {

// Variable subsets are 0-based column indices; an empty ols subset is the
// null model that predicts 0.
struct OlsSpec {
    std::vector<int> subset;
};

std::vector<int> all_columns(int d);
struct MinNormSpec {
    std::vector<int> subset;
};
struct RidgeSpec {
    double lambda = 0.0;
};

enum class WeightKind { constant, linear, quadratic, cosine };

struct WeightInterpSpec {
    WeightKind kind = WeightKind::linear;
    double a = 0.0;
    double b = 1.0;
};
struct LocalConstantSpec {
    double omega = 0.0;
    double a = 0.0;
    double b = 1.0;
};
struct SplineSpec {
    int s = 1;  // polynomial degree 2s - 1
};
struct GdInterpSpec {
    Eigen::MatrixXd F;  // p x n initializer matrix, beta0 = F y
};

using ProcedureSpec = std::variant<OlsSpec, MinNormSpec, RidgeSpec, WeightInterpSpec,
                                   LocalConstantSpec, SplineSpec, GdInterpSpec>;

const char* procedure_name(const ProcedureSpec& spec);

// Hat matrix plus the deterministic map x* -> h*. Immutable after fit; the
// closures are pure and safe for concurrent evaluation.
struct HatSystem {
    Eigen::MatrixXd H;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> hat_vector;
    std::function<double(const Eigen::VectorXd&)> hat_norm2;  // ||h*||^2
    ProcedureSpec spec;
    Eigen::MatrixXd X;  // training design (n x 1 for the 1-D procedures)
    bool interpolating = false;

    int n() const { return static_cast<int>(X.rows()); }
};

// For 1-D procedures X must be a single sorted column inside [a, b].
HatSystem fit(const ProcedureSpec& spec, const Eigen::MatrixXd& X);

double predict(const HatSystem& hs, const Eigen::VectorXd& y, const Eigen::VectorXd& xstar);
double predict(const HatSystem& hs, const Eigen::VectorXd& y, double xstar);

double weight_function(WeightKind kind, double z);

// e_1 left of x_1; K(z) e_i + (1-K(z)) e_{i+1} inside cell i; e_n right of x_n.
Eigen::VectorXd weight_hat_vector(WeightKind kind, const Eigen::VectorXd& xs, double xstar,
                                  double a, double b);

// Uniform weights over the closed window |x* - x_i| <= omega; boundary zones
// fall back to the nearest end point.
Eigen::VectorXd local_constant_hat_vector(const Eigen::VectorXd& xs, double omega, double xstar,
                                          double a, double b);

// R(u, v) = int_0^1 (u-z)_+^{s-1} (v-z)_+^{s-1} / ((s-1)!)^2 dz in closed form.
double kernel_R(double u, double v, int s);

// Precomputed pieces of the interpolating polynomial spline of degree 2s - 1
// on nodes 0 = x_1 < ... < x_n = 1: coefficients are c = U y, d = V y.
struct SplineSystem {
    Eigen::VectorXd xs;
    int s = 1;
    Eigen::MatrixXd U;  // n x n
    Eigen::MatrixXd V;  // s x n
};

SplineSystem build_spline_system(const Eigen::VectorXd& xs, int s);
Eigen::VectorXd spline_hat_vector(const SplineSystem& sys, double xstar);

}  // namespace preddf

#endif
