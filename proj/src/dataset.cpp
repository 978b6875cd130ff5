#include "preddf/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "preddf/linalg.hpp"

namespace preddf {

Eigen::VectorXd coefficient_vector(int d, const BetaKind& kind, double beta_norm2) {
    if (d < 1) throw input_error("coefficient_vector: d must be >= 1");
    if (beta_norm2 <= 0.0) throw input_error("coefficient_vector: beta_norm2 must be positive");
    Eigen::VectorXd shape(d);
    if (const auto* pd = std::get_if<PolyDecay>(&kind)) {
        if (pd->kappa < 1.0) throw input_error("coefficient_vector: kappa must be >= 1");
        for (int j = 1; j <= d; ++j)
            shape(j - 1) = std::pow(1.0 - static_cast<double>(j) / d, pd->kappa);
    } else {
        for (int j = 1; j <= d; ++j) shape(j - 1) = 1.0 / static_cast<double>(j);
    }
    const double norm2 = shape.squaredNorm();
    if (norm2 <= 0.0) throw input_error("coefficient_vector: degenerate shape (d too small)");
    return shape * std::sqrt(beta_norm2 / norm2);
}

namespace {

// Vine construction: partial correlations drawn from symmetric Beta laws,
// converted layer by layer, yielding a positive definite correlation matrix.
Eigen::MatrixXd random_correlation(int d, std::uint64_t seed) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(d, d);
    if (d < 2) return r;
    rng::Stream stream = rng::Stream::keyed(seed, 0x636f7272ULL);
    Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(d, d);
    const double eta = 1.0;
    double a = eta + (d - 1) / 2.0;
    for (int k = 0; k < d - 1; ++k) {
        a -= 0.5;
        for (int i = k + 1; i < d; ++i) {
            partial(k, i) = stream.beta_symmetric_pm1(a);
            double rho = partial(k, i);
            for (int l = k - 1; l >= 0; --l) {
                rho = rho * std::sqrt((1.0 - partial(l, i) * partial(l, i)) *
                                      (1.0 - partial(l, k) * partial(l, k))) +
                      partial(l, i) * partial(l, k);
            }
            r(k, i) = rho;
            r(i, k) = rho;
        }
    }
    return r;
}

}  // namespace

Eigen::MatrixXd make_covariance(const CovKind& kind, int d) {
    if (d < 1) throw input_error("make_covariance: d must be >= 1");
    if (std::holds_alternative<CovIdentity>(kind)) {
        return Eigen::MatrixXd::Identity(d, d);
    }
    if (const auto* eq = std::get_if<CovEquicorrelated>(&kind)) {
        if (eq->rho < 0.0 || eq->rho >= 1.0)
            throw input_error("make_covariance: equicorrelated rho must be in [0, 1)");
        Eigen::MatrixXd s = Eigen::MatrixXd::Constant(d, d, eq->rho);
        s.diagonal().setOnes();
        return s;
    }
    if (const auto* ex = std::get_if<CovExplicit>(&kind)) {
        if (ex->sigma.rows() != d || ex->sigma.cols() != d)
            throw input_error("make_covariance: explicit Sigma has wrong dimensions");
        if (!linalg::is_symmetric_psd(ex->sigma))
            throw input_error("make_covariance: explicit Sigma is not symmetric PSD");
        return ex->sigma;
    }
    const auto& rc = std::get<CovRandomCorrelation>(kind);
    return random_correlation(d, rc.seed);
}

double mean_value(MeanKind kind, const Eigen::VectorXd& beta, const Eigen::VectorXd& x) {
    if (kind == MeanKind::linear) return beta.dot(x);
    // Centered so that E exp(x/2) = exp(1/8) under x ~ N(0, 1).
    const double center = std::exp(0.125);
    double s = 0.0;
    for (int j = 0; j < beta.size(); ++j) s += beta(j) * (std::exp(0.5 * x(j)) - center);
    return s;
}

Dataset generate_dataset(const GenConfig& cfg) {
    if (cfg.n < 2) throw input_error("generate_dataset: n must be >= 2");
    if (cfg.d < 1) throw input_error("generate_dataset: d must be >= 1");
    if (cfg.sigma_eps2 < 0.0) throw input_error("generate_dataset: sigma_eps2 must be >= 0");

    Dataset data;
    data.Sigma = make_covariance(cfg.cov_kind, cfg.d);
    data.beta = coefficient_vector(cfg.d, cfg.beta_kind, cfg.beta_norm2);
    data.sigma_eps2 = cfg.sigma_eps2;

    const Eigen::MatrixXd chol = linalg::psd_factor(data.Sigma);
    rng::Stream stream = rng::Stream::keyed(cfg.seed);

    Eigen::MatrixXd z(cfg.n, cfg.d);
    for (int i = 0; i < cfg.n; ++i)
        for (int j = 0; j < cfg.d; ++j) z(i, j) = stream.normal();
    data.X = z * chol.transpose();

    const MeanKind mk = cfg.mean_kind;
    const Eigen::VectorXd beta = data.beta;
    data.mean_fn = [mk, beta](const Eigen::VectorXd& x) { return mean_value(mk, beta, x); };

    data.mu.resize(cfg.n);
    for (int i = 0; i < cfg.n; ++i) data.mu(i) = data.mean_fn(data.X.row(i));

    const double sd = std::sqrt(cfg.sigma_eps2);
    data.y.resize(cfg.n);
    for (int i = 0; i < cfg.n; ++i) data.y(i) = data.mu(i) + sd * stream.normal();
    return data;
}

void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw input_error("write_dataset_csv: X/y size mismatch");
    std::ofstream out(path);
    if (!out) throw input_error("write_dataset_csv: cannot open " + path);
    for (int j = 0; j < X.cols(); ++j) out << "x" << (j + 1) << ",";
    out << "y\n";
    char buf[64];
    for (int i = 0; i < X.rows(); ++i) {
        for (int j = 0; j < X.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", X(i, j));
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", y(i));
        out << buf << "\n";
    }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    write_dataset_csv(path, data.X, data.y);
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("read_dataset_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw input_error("read_dataset_csv: empty file");
    int ncols = 1;
    for (char c : line)
        if (c == ',') ++ncols;
    const int d = ncols - 1;
    if (d < 1) throw input_error("read_dataset_csv: need at least one x column");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw input_error("read_dataset_csv: unparseable cell '" + cell + "'");
            }
        }
        if (static_cast<int>(row.size()) != ncols)
            throw input_error("read_dataset_csv: ragged row");
        rows.push_back(std::move(row));
    }
    Dataset data;
    const int n = static_cast<int>(rows.size());
    data.X.resize(n, d);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.X(i, j) = rows[i][j];
        data.y(i) = rows[i][d];
    }
    return data;
}

}  // namespace preddf
