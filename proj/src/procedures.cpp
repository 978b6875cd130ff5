#include "preddf/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "preddf/linalg.hpp"

namespace preddf {

namespace {

// An empty subset is the null model (p = 0); use all_columns for the full fit.
std::vector<int> resolve_subset(const std::vector<int>& subset, int d, const char* who) {
    std::vector<bool> seen(d, false);
    for (int j : subset) {
        if (j < 0 || j >= d)
            throw input_error(std::string(who) + ": subset index out of range");
        if (seen[j]) throw input_error(std::string(who) + ": duplicate subset index");
        seen[j] = true;
    }
    return subset;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<int>& s) {
    Eigen::MatrixXd out(X.rows(), static_cast<int>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) out.col(static_cast<int>(k)) = X.col(s[k]);
    return out;
}

Eigen::VectorXd select_entries(const Eigen::VectorXd& x, const std::vector<int>& s) {
    Eigen::VectorXd out(static_cast<int>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) out(static_cast<int>(k)) = x(s[k]);
    return out;
}

Eigen::VectorXd as_points(const Eigen::MatrixXd& X, const char* who) {
    if (X.cols() != 1) throw input_error(std::string(who) + ": expected a single x column");
    Eigen::VectorXd xs = X.col(0);
    for (int i = 1; i < xs.size(); ++i)
        if (!(xs(i) > xs(i - 1)))
            throw input_error(std::string(who) + ": x points must be sorted and distinct");
    return xs;
}

double scalar_arg(const Eigen::VectorXd& xstar, const char* who) {
    if (xstar.size() != 1) throw input_error(std::string(who) + ": expected a scalar test point");
    return xstar(0);
}

// Cell of x* among sorted points: -1 left of x_1, n-1 at/right of x_n,
// otherwise i with x_i <= x* < x_{i+1}.
int locate_cell(const Eigen::VectorXd& xs, double xstar) {
    const int n = static_cast<int>(xs.size());
    if (xstar < xs(0)) return -1;
    if (xstar >= xs(n - 1)) return n - 1;
    const double* begin = xs.data();
    int i = static_cast<int>(std::upper_bound(begin, begin + n, xstar) - begin) - 1;
    return i;
}

HatSystem fit_ols(const OlsSpec& raw, const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    OlsSpec spec{resolve_subset(raw.subset, d, "ols")};
    const int p = static_cast<int>(spec.subset.size());
    if (p > n) throw input_error("ols: subset larger than n; use min_norm");
    const Eigen::MatrixXd xsub = select_columns(X, spec.subset);
    if (p > 0 && linalg::numerical_rank(xsub) < p)
        throw input_error("ols: design X_S is column-rank deficient");

    struct Impl {
        Eigen::MatrixXd xs;
        Eigen::MatrixXd r;
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm;
        std::vector<int> subset;
        int n = 0;
    };
    auto impl = std::make_shared<Impl>();
    impl->xs = xsub;
    impl->subset = spec.subset;
    impl->n = n;

    HatSystem hs;
    if (p == 0) {
        hs.H = Eigen::MatrixXd::Zero(n, n);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xsub);
        impl->r = qr.matrixR().topRows(p).triangularView<Eigen::Upper>();
        impl->perm = qr.colsPermutation();
        Eigen::MatrixXd q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
        hs.H = q1 * q1.transpose();
    }
    hs.spec = spec;
    hs.X = X;
    hs.interpolating = false;
    const int dd = d;
    hs.hat_vector = [impl, dd](const Eigen::VectorXd& xstar) -> Eigen::VectorXd {
        if (xstar.size() != dd) throw input_error("ols hat_vector: test point dimension mismatch");
        if (impl->xs.cols() == 0) return Eigen::VectorXd::Zero(impl->n);
        Eigen::VectorXd t = impl->perm.transpose() * select_entries(xstar, impl->subset);
        t = impl->r.transpose().triangularView<Eigen::Lower>().solve(t);
        t = impl->r.triangularView<Eigen::Upper>().solve(t);
        return impl->xs * (impl->perm * t);
    };
    const auto hv = hs.hat_vector;
    hs.hat_norm2 = [hv](const Eigen::VectorXd& xstar) { return hv(xstar).squaredNorm(); };
    return hs;
}

HatSystem fit_min_norm(const MinNormSpec& raw, const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    MinNormSpec spec{resolve_subset(raw.subset, d, "min_norm")};
    const int p = static_cast<int>(spec.subset.size());
    if (p <= n) throw input_error("min_norm: requires subset size > n");
    const Eigen::MatrixXd xsub = select_columns(X, spec.subset);
    if (linalg::numerical_rank(xsub) < n)
        throw input_error("min_norm: design X_S is row-rank deficient");

    struct Impl {
        Eigen::MatrixXd xs;
        Eigen::LLT<Eigen::MatrixXd> llt;
        std::vector<int> subset;
    };
    auto impl = std::make_shared<Impl>();
    impl->xs = xsub;
    impl->subset = spec.subset;
    const Eigen::MatrixXd gram = xsub * xsub.transpose();
    impl->llt.compute(gram);
    if (impl->llt.info() != Eigen::Success)
        throw numeric_error("min_norm: Gram factorization failed");

    HatSystem hs;
    hs.H = impl->llt.solve(gram);  // identity up to solver error
    hs.spec = spec;
    hs.X = X;
    hs.interpolating = true;
    const int dd = d;
    hs.hat_vector = [impl, dd](const Eigen::VectorXd& xstar) -> Eigen::VectorXd {
        if (xstar.size() != dd)
            throw input_error("min_norm hat_vector: test point dimension mismatch");
        return impl->llt.solve(impl->xs * select_entries(xstar, impl->subset));
    };
    const auto hv = hs.hat_vector;
    hs.hat_norm2 = [hv](const Eigen::VectorXd& xstar) { return hv(xstar).squaredNorm(); };
    return hs;
}

HatSystem fit_ridge(const RidgeSpec& spec, const Eigen::MatrixXd& X) {
    if (spec.lambda <= 0.0) throw input_error("ridge: lambda must be positive");
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());

    struct Impl {
        Eigen::MatrixXd x;
        Eigen::LLT<Eigen::MatrixXd> llt;
        bool tall = false;  // p <= n: factor of X^T X + lambda I, else X X^T + lambda I
    };
    auto impl = std::make_shared<Impl>();
    impl->x = X;
    impl->tall = (p <= n);
    if (impl->tall) {
        Eigen::MatrixXd m = X.transpose() * X;
        m.diagonal().array() += spec.lambda;
        impl->llt.compute(m);
    } else {
        Eigen::MatrixXd m = X * X.transpose();
        m.diagonal().array() += spec.lambda;
        impl->llt.compute(m);
    }
    if (impl->llt.info() != Eigen::Success) throw numeric_error("ridge: factorization failed");

    HatSystem hs;
    hs.H = impl->tall ? Eigen::MatrixXd(X * impl->llt.solve(X.transpose()))
                      : Eigen::MatrixXd(impl->llt.solve(X * X.transpose()));
    hs.spec = spec;
    hs.X = X;
    hs.interpolating = false;
    hs.hat_vector = [impl, p](const Eigen::VectorXd& xstar) -> Eigen::VectorXd {
        if (xstar.size() != p) throw input_error("ridge hat_vector: test point dimension mismatch");
        if (impl->tall) return impl->x * impl->llt.solve(xstar);
        return impl->llt.solve(impl->x * xstar);
    };
    const auto hv = hs.hat_vector;
    hs.hat_norm2 = [hv](const Eigen::VectorXd& xstar) { return hv(xstar).squaredNorm(); };
    return hs;
}

HatSystem fit_weight(const WeightInterpSpec& spec, const Eigen::MatrixXd& X) {
    const Eigen::VectorXd xs = as_points(X, "weight_interp");
    const int n = static_cast<int>(xs.size());
    if (!(spec.a < spec.b)) throw input_error("weight_interp: need a < b");
    if (xs(0) < spec.a || xs(n - 1) > spec.b)
        throw input_error("weight_interp: x points must lie in [a, b]");

    HatSystem hs;
    hs.H = Eigen::MatrixXd::Identity(n, n);
    hs.spec = spec;
    hs.X = X;
    hs.interpolating = true;
    const WeightKind kind = spec.kind;
    const double a = spec.a, b = spec.b;
    hs.hat_vector = [xs, kind, a, b](const Eigen::VectorXd& xstar) {
        return weight_hat_vector(kind, xs, scalar_arg(xstar, "weight_interp"), a, b);
    };
    hs.hat_norm2 = [xs, kind, a, b](const Eigen::VectorXd& xstar) -> double {
        const double x = scalar_arg(xstar, "weight_interp");
        if (x < a || x > b) throw input_error("weight_interp: test point outside [a, b]");
        const int i = locate_cell(xs, x);
        if (i < 0 || i == xs.size() - 1) return 1.0;
        const double z = (x - xs(i)) / (xs(i + 1) - xs(i));
        const double w = weight_function(kind, z);
        return w * w + (1.0 - w) * (1.0 - w);
    };
    return hs;
}

HatSystem fit_local_constant(const LocalConstantSpec& spec, const Eigen::MatrixXd& X) {
    const Eigen::VectorXd xs = as_points(X, "local_constant");
    const int n = static_cast<int>(xs.size());
    if (n < 2) throw input_error("local_constant: need at least two points");
    if (!(spec.a < spec.b)) throw input_error("local_constant: need a < b");
    if (xs(0) < spec.a || xs(n - 1) > spec.b)
        throw input_error("local_constant: x points must lie in [a, b]");
    double lbar = 0.0, lmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i) {
        const double gap = xs(i + 1) - xs(i);
        lbar = std::max(lbar, gap);
        lmin = std::min(lmin, gap);
    }
    if (spec.omega < 0.5 * lbar - 1e-12)
        throw input_error("local_constant: omega below Lbar/2, neighborhoods can be empty");

    HatSystem hs;
    hs.spec = spec;
    hs.X = X;
    hs.interpolating = spec.omega < lmin;
    const double omega = spec.omega, a = spec.a, b = spec.b;
    hs.hat_vector = [xs, omega, a, b](const Eigen::VectorXd& xstar) {
        return local_constant_hat_vector(xs, omega, scalar_arg(xstar, "local_constant"), a, b);
    };
    hs.hat_norm2 = [xs, omega, a, b](const Eigen::VectorXd& xstar) -> double {
        const double x = scalar_arg(xstar, "local_constant");
        if (x < a || x > b) throw input_error("local_constant: test point outside [a, b]");
        const int n2 = static_cast<int>(xs.size());
        if (x < xs(0) || x >= xs(n2 - 1)) return 1.0;
        const auto lo = std::lower_bound(xs.data(), xs.data() + n2, x - omega);
        const auto hi = std::upper_bound(xs.data(), xs.data() + n2, x + omega);
        const int count = static_cast<int>(hi - lo);
        if (count <= 0) throw numeric_error("local_constant: empty neighborhood");
        return 1.0 / count;
    };
    hs.H.resize(n, n);
    Eigen::VectorXd point(1);
    for (int i = 0; i < n; ++i) {
        point(0) = xs(i);
        hs.H.row(i) = hs.hat_vector(point).transpose();
    }
    return hs;
}

HatSystem fit_spline(const SplineSpec& spec, const Eigen::MatrixXd& X) {
    const Eigen::VectorXd xs = as_points(X, "spline");
    auto sys = std::make_shared<SplineSystem>(build_spline_system(xs, spec.s));
    const int n = static_cast<int>(xs.size());

    HatSystem hs;
    hs.spec = spec;
    hs.X = X;
    hs.interpolating = true;
    hs.hat_vector = [sys](const Eigen::VectorXd& xstar) {
        return spline_hat_vector(*sys, scalar_arg(xstar, "spline"));
    };
    const auto hv = hs.hat_vector;
    hs.hat_norm2 = [hv](const Eigen::VectorXd& xstar) { return hv(xstar).squaredNorm(); };
    hs.H.resize(n, n);
    Eigen::VectorXd point(1);
    for (int i = 0; i < n; ++i) {
        point(0) = xs(i);
        hs.H.row(i) = hs.hat_vector(point).transpose();
    }
    return hs;
}

HatSystem fit_gd_interp(const GdInterpSpec& spec, const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (p <= n) throw input_error("gd_interp: requires p > n");
    if (spec.F.rows() != p || spec.F.cols() != n)
        throw input_error("gd_interp: F must be p x n");
    if (linalg::numerical_rank(X) < n) throw input_error("gd_interp: design is row-rank deficient");

    struct Impl {
        Eigen::MatrixXd f;        // p x n
        Eigen::MatrixXd v1;       // p x n
        Eigen::MatrixXd upsiinv;  // U Psi^{-1}, n x n
    };
    auto impl = std::make_shared<Impl>();
    impl->f = spec.F;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    impl->v1 = svd.matrixV();
    impl->upsiinv = svd.matrixU() * svd.singularValues().cwiseInverse().asDiagonal();

    HatSystem hs;
    hs.spec = spec;
    hs.X = X;
    hs.interpolating = true;
    // h* = (X X^T)^{-1} X x* + F^T (I - V1 V1^T) x*
    hs.hat_vector = [impl, p](const Eigen::VectorXd& xstar) -> Eigen::VectorXd {
        if (xstar.size() != p)
            throw input_error("gd_interp hat_vector: test point dimension mismatch");
        const Eigen::VectorXd v1x = impl->v1.transpose() * xstar;
        const Eigen::VectorXd null_part = xstar - impl->v1 * v1x;
        return impl->upsiinv * v1x + impl->f.transpose() * null_part;
    };
    const auto hv = hs.hat_vector;
    hs.hat_norm2 = [hv](const Eigen::VectorXd& xstar) { return hv(xstar).squaredNorm(); };
    hs.H.resize(n, n);
    for (int i = 0; i < n; ++i) hs.H.row(i) = hs.hat_vector(X.row(i)).transpose();
    return hs;
}

}  // namespace

std::vector<int> all_columns(int d) {
    std::vector<int> s(d);
    std::iota(s.begin(), s.end(), 0);
    return s;
}

const char* procedure_name(const ProcedureSpec& spec) {
    switch (spec.index()) {
        case 0: return "ols";
        case 1: return "min_norm";
        case 2: return "ridge";
        case 3: return "weight_interp";
        case 4: return "local_constant";
        case 5: return "spline";
        default: return "gd_interp";
    }
}

HatSystem fit(const ProcedureSpec& spec, const Eigen::MatrixXd& X) {
    return std::visit(
        [&X](const auto& s) -> HatSystem {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, OlsSpec>) return fit_ols(s, X);
            else if constexpr (std::is_same_v<T, MinNormSpec>) return fit_min_norm(s, X);
            else if constexpr (std::is_same_v<T, RidgeSpec>) return fit_ridge(s, X);
            else if constexpr (std::is_same_v<T, WeightInterpSpec>) return fit_weight(s, X);
            else if constexpr (std::is_same_v<T, LocalConstantSpec>)
                return fit_local_constant(s, X);
            else if constexpr (std::is_same_v<T, SplineSpec>) return fit_spline(s, X);
            else return fit_gd_interp(s, X);
        },
        spec);
}

double predict(const HatSystem& hs, const Eigen::VectorXd& y, const Eigen::VectorXd& xstar) {
    if (y.size() != hs.X.rows()) throw input_error("predict: y length mismatch");
    return hs.hat_vector(xstar).dot(y);
}

double predict(const HatSystem& hs, const Eigen::VectorXd& y, double xstar) {
    Eigen::VectorXd x(1);
    x(0) = xstar;
    return predict(hs, y, x);
}

double weight_function(WeightKind kind, double z) {
    switch (kind) {
        case WeightKind::constant: return z < 0.5 ? 1.0 : 0.0;
        case WeightKind::linear: return 1.0 - z;
        case WeightKind::quadratic: return 1.0 - z * z;
        default: return std::cos(0.5 * M_PI * z);
    }
}

Eigen::VectorXd weight_hat_vector(WeightKind kind, const Eigen::VectorXd& xs, double xstar,
                                  double a, double b) {
    const int n = static_cast<int>(xs.size());
    if (xstar < a || xstar > b) throw input_error("weight_hat_vector: x* outside [a, b]");
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    const int i = locate_cell(xs, xstar);
    if (i < 0) {
        h(0) = 1.0;
    } else if (i == n - 1) {
        h(n - 1) = 1.0;
    } else {
        const double z = (xstar - xs(i)) / (xs(i + 1) - xs(i));
        const double w = weight_function(kind, z);
        h(i) = w;
        h(i + 1) = 1.0 - w;
    }
    return h;
}

Eigen::VectorXd local_constant_hat_vector(const Eigen::VectorXd& xs, double omega, double xstar,
                                          double a, double b) {
    const int n = static_cast<int>(xs.size());
    if (xstar < a || xstar > b) throw input_error("local_constant_hat_vector: x* outside [a, b]");
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    if (xstar < xs(0)) {
        h(0) = 1.0;
        return h;
    }
    if (xstar >= xs(n - 1)) {
        h(n - 1) = 1.0;
        return h;
    }
    const auto lo = std::lower_bound(xs.data(), xs.data() + n, xstar - omega);
    const auto hi = std::upper_bound(xs.data(), xs.data() + n, xstar + omega);
    const int first = static_cast<int>(lo - xs.data());
    const int count = static_cast<int>(hi - lo);
    if (count <= 0) throw numeric_error("local_constant_hat_vector: empty neighborhood");
    for (int k = 0; k < count; ++k) h(first + k) = 1.0 / count;
    return h;
}

double kernel_R(double u, double v, int s) {
    if (s < 1) throw input_error("kernel_R: s must be >= 1");
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0)
        throw input_error("kernel_R: arguments must lie in [0, 1]");
    const double m = std::min(u, v);
    if (m == 0.0) return 0.0;
    const double gap = std::max(u, v) - m;
    double fact = 1.0;
    for (int t = 2; t <= s - 1; ++t) fact *= t;
    // int_0^m w^{s-1} (gap + w)^{s-1} dw expanded binomially.
    double sum = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= s - 1; ++k) {
        if (k > 0) binom = binom * (s - k) / k;
        sum += binom * std::pow(gap, s - 1 - k) * std::pow(m, s + k) / (s + k);
    }
    return sum / (fact * fact);
}

SplineSystem build_spline_system(const Eigen::VectorXd& xs, int s) {
    const int n = static_cast<int>(xs.size());
    if (s < 1) throw input_error("spline: s must be >= 1");
    if (n <= s) throw input_error("spline: need n > s nodes");
    for (int i = 1; i < n; ++i)
        if (!(xs(i) > xs(i - 1))) throw input_error("spline: nodes must be sorted and distinct");
    if (std::abs(xs(0)) > 1e-12 || std::abs(xs(n - 1) - 1.0) > 1e-12)
        throw input_error("spline: nodes must span [0, 1]");

    Eigen::MatrixXd smat(n, s);
    for (int i = 0; i < n; ++i) {
        double fact = 1.0;
        for (int t = 0; t < s; ++t) {
            if (t > 0) fact *= t;
            smat(i, t) = std::pow(xs(i), t) / fact;
        }
    }
    Eigen::MatrixXd tmat(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            tmat(i, j) = kernel_R(xs(i), xs(j), s);
            tmat(j, i) = tmat(i, j);
        }

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(smat);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd q1 = q.leftCols(s);
    const Eigen::MatrixXd q2 = q.rightCols(n - s);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(s).triangularView<Eigen::Upper>();

    const Eigen::MatrixXd core = q2.transpose() * tmat * q2;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(core);

    SplineSystem sys;
    sys.xs = xs;
    sys.s = s;
    sys.U = q2 * lu.solve(q2.transpose());
    sys.V = r.triangularView<Eigen::Upper>().solve(
        q1.transpose() * (Eigen::MatrixXd::Identity(n, n) - tmat * sys.U));
    if (!sys.U.allFinite() || !sys.V.allFinite())
        throw numeric_error("spline: singular interpolation system for s = " + std::to_string(s));
    return sys;
}

Eigen::VectorXd spline_hat_vector(const SplineSystem& sys, double xstar) {
    if (xstar < 0.0 || xstar > 1.0) throw input_error("spline_hat_vector: x* outside [0, 1]");
    const int n = static_cast<int>(sys.xs.size());
    Eigen::VectorXd phi(sys.s);
    double fact = 1.0;
    for (int t = 0; t < sys.s; ++t) {
        if (t > 0) fact *= t;
        phi(t) = std::pow(xstar, t) / fact;
    }
    Eigen::VectorXd rho(n);
    for (int i = 0; i < n; ++i) rho(i) = kernel_R(xstar, sys.xs(i), sys.s);
    return sys.V.transpose() * phi + sys.U.transpose() * rho;
}

}  // namespace preddf
