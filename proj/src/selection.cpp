#include "preddf/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "preddf/dof.hpp"
#include "preddf/linalg.hpp"
#include "preddf/procedures.hpp"
#include "preddf/risk.hpp"

namespace preddf {

const SweepCell& SweepTable::cell(int p, const std::string& criterion) const {
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i] == p) {
            const auto it = rows[i].find(criterion);
            if (it == rows[i].end())
                throw input_error("SweepTable: unknown criterion " + criterion);
            return it->second;
        }
    }
    throw input_error("SweepTable: no row for p = " + std::to_string(p));
}

std::vector<int> order_variables(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const OrderStrategy& strategy) {
    const int d = static_cast<int>(X.cols());
    const int n = static_cast<int>(X.rows());

    if (const auto* pre = std::get_if<Prescient>(&strategy)) {
        if (pre->beta.size() != d) throw input_error("order_variables: prescient needs beta");
        std::vector<int> order(d);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(pre->beta(a)) > std::abs(pre->beta(b));
        });
        return order;
    }
    if (const auto* given = std::get_if<GivenOrder>(&strategy)) {
        std::vector<bool> seen(d, false);
        if (static_cast<int>(given->perm.size()) != d)
            throw input_error("order_variables: given order has wrong length");
        for (int j : given->perm) {
            if (j < 0 || j >= d || seen[j])
                throw input_error("order_variables: given order is not a permutation");
            seen[j] = true;
        }
        return given->perm;
    }
    if (const auto* rnd = std::get_if<RandomOrder>(&strategy)) {
        std::vector<int> order(d);
        std::iota(order.begin(), order.end(), 0);
        rng::Stream stream = rng::Stream::keyed(rnd->seed, 0x07de7ULL);
        stream.shuffle(order);
        return order;
    }

    // Greedy forward selection on training RSS via an orthonormal basis of
    // the selected columns; stable index order beyond min(n - 1, d).
    if (y.size() != n) throw input_error("order_variables: y length mismatch");
    const int steps = std::min(n - 1, d);
    std::vector<int> order;
    order.reserve(d);
    std::vector<bool> used(d, false);
    Eigen::MatrixXd basis(n, steps);
    Eigen::VectorXd resid = y;
    int nb = 0;
    for (int step = 0; step < steps; ++step) {
        int best = -1;
        double best_gain = -1.0;
        for (int j = 0; j < d; ++j) {
            if (used[j]) continue;
            Eigen::VectorXd q = X.col(j);
            if (nb > 0) q -= basis.leftCols(nb) * (basis.leftCols(nb).transpose() * q);
            const double norm = q.norm();
            if (norm < 1e-10 * std::max(1.0, X.col(j).norm())) continue;
            const double proj = q.dot(resid) / norm;
            const double gain = proj * proj;
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        if (best < 0) break;
        used[best] = true;
        order.push_back(best);
        Eigen::VectorXd q = X.col(best);
        if (nb > 0) q -= basis.leftCols(nb) * (basis.leftCols(nb).transpose() * q);
        q.normalize();
        basis.col(nb++) = q;
        resid -= q * q.dot(resid);
    }
    for (int j = 0; j < d; ++j)
        if (!used[j]) order.push_back(j);
    return order;
}

namespace {

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& X, const std::vector<int>& order, int p) {
    Eigen::MatrixXd out(X.rows(), p);
    for (int k = 0; k < p; ++k) out.col(k) = X.col(order[k]);
    return out;
}

Eigen::MatrixXd take_cov(const Eigen::MatrixXd& Sigma, const std::vector<int>& order, int p) {
    Eigen::MatrixXd out(p, p);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) out(a, b) = Sigma(order[a], order[b]);
    return out;
}

// Least squares coefficients of the chosen regime, embedded into R^d.
Eigen::VectorXd embedded_coefficients(const Eigen::MatrixXd& xsub, const Eigen::VectorXd& y,
                                      const std::vector<int>& order, int d) {
    const int n = static_cast<int>(xsub.rows());
    const int p = static_cast<int>(xsub.cols());
    Eigen::VectorXd bsub;
    if (p <= n) {
        bsub = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(xsub).solve(y);
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(xsub * xsub.transpose());
        if (llt.info() != Eigen::Success) throw input_error("sweep: singular Gram matrix");
        bsub = xsub.transpose() * llt.solve(y);
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < p; ++k) full(order[k]) = bsub(k);
    return full;
}

}  // namespace

SweepTable criterion_sweep(const Dataset& data, const std::vector<int>& order, double sigma_eps2,
                           const Eigen::MatrixXd& Sigma, const SweepOptions& opts) {
    const int n = data.n();
    const int d = data.d();
    if (static_cast<int>(order.size()) != d) throw input_error("criterion_sweep: bad ordering");

    SweepTable table;
    table.criteria = {"err_train", "cp",       "aic",      "bic",      "loocv",
                      "kfold_cv",  "err_tilde", "err_hat",  "err_hat_plus", "df_fixed",
                      "df_random", "err_test"};
    if (opts.p_values.empty()) {
        for (int p = 0; p <= d; ++p) table.ps.push_back(p);
    } else {
        table.ps = opts.p_values;
    }

    const bool truth = data.has_truth() && opts.want_err_test;
    // Common test draws shared across p so the error surface is comparable.
    std::vector<Eigen::VectorXd> test_points;
    std::vector<double> test_means;
    const bool linear_truth = truth && data.beta.size() == d &&
                              [&] {
                                  // linear when mu(x) = x^T beta reproduces the stored mu
                                  double diff = 0.0;
                                  for (int i = 0; i < std::min(n, 4); ++i)
                                      diff += std::abs(data.mu(i) - data.X.row(i).dot(data.beta));
                                  return diff < 1e-8;
                              }();
    if (truth && !linear_truth) {
        const XSampler sampler = gaussian_sampler(Sigma);
        test_points.resize(opts.err_test_draws);
        test_means.resize(opts.err_test_draws);
        for (int t = 0; t < opts.err_test_draws; ++t) {
            rng::Stream stream = rng::Stream::keyed(opts.seed, 0xE57, t);
            test_points[t] = sampler(stream);
            test_means[t] = data.mean_fn(test_points[t]);
        }
    }

    for (int p : table.ps) {
        std::map<std::string, SweepCell> row;
        for (const auto& c : table.criteria) row[c] = SweepCell{};
        auto set = [&row](const std::string& c, double v) {
            row[c].value = v;
            row[c].defined = std::isfinite(v);
        };
        try {
            if (p < 0 || p > d) throw input_error("criterion_sweep: p out of range");
            const Eigen::MatrixXd xsub = take_columns(data.X, order, p);
            const Eigen::MatrixXd sigsub = take_cov(Sigma, order, p);

            double err_train;
            Eigen::VectorXd resid;
            std::optional<HatSystem> hs;
            if (p <= n) {
                std::vector<int> subset(order.begin(), order.begin() + p);
                hs = fit(OlsSpec{subset}, data.X);
                resid = data.y - hs->H * data.y;
                err_train = resid.squaredNorm() / n;
            } else {
                err_train = 0.0;
            }
            set("err_train", err_train);
            set("df_fixed", std::min(p, n));
            set("df_random", df_random_ls_closed(xsub, sigsub));

            if (p < n) {
                set("cp", err_train + 2.0 * sigma_eps2 * p / n);
                if (err_train > 0.0) {
                    set("aic", n * std::log(err_train) + 2.0 * p);
                    set("bic", n * std::log(err_train) + p * std::log(static_cast<double>(n)));
                }
                try {
                    set("loocv", loocv_error(*hs, data.y));
                } catch (const input_error&) {
                }
                set("err_tilde", err_tilde(xsub, data.y, row["df_random"].value));
                try {
                    const AMatrix am = a_matrix_under(*hs);
                    const ErrHat eh =
                        err_hat(am, err_train, data.y, sigma_eps2, row["df_random"].value);
                    set("err_hat", eh.value);
                    const double dhat = delta_hat(am, data.y, sigma_eps2);
                    set("err_hat_plus", err_train + delta_plus(dhat) +
                                            2.0 * sigma_eps2 * row["df_random"].value / n);
                } catch (const input_error&) {
                }
            } else if (p > n) {
                set("loocv", loocv_error_min_norm(xsub, data.y));
                const AMatrix am = a_matrix_over(xsub);
                const ErrHat eh = err_hat(am, 0.0, data.y, sigma_eps2, row["df_random"].value);
                set("err_hat", eh.value);
                const double dhat = delta_hat(am, data.y, sigma_eps2);
                set("err_hat_plus",
                    delta_plus(dhat) + 2.0 * sigma_eps2 * row["df_random"].value / n);
            }

            if (p != n) {
                try {
                    set("kfold_cv", kfold_cv(data, order, p, opts.cv.k, opts.cv.seed));
                } catch (const input_error&) {
                }
            }

            if (truth) {
                const Eigen::VectorXd bhat =
                    p == 0 ? Eigen::VectorXd::Zero(d)
                           : embedded_coefficients(xsub, data.y, order, d);
                if (linear_truth) {
                    const Eigen::VectorXd diff = data.beta - bhat;
                    set("err_test", sigma_eps2 + diff.dot(Sigma * diff));
                } else {
                    std::vector<double> sq(test_points.size());
                    for (std::size_t t = 0; t < test_points.size(); ++t) {
                        const double e = test_means[t] - test_points[t].dot(bhat);
                        sq[t] = e * e;
                    }
                    set("err_test", sigma_eps2 + par::pairwise_sum(sq) / sq.size());
                }
            }
        } catch (const input_error&) {
            // rank failure at this p; row stays undefined
        } catch (const numeric_error&) {
        }
        table.rows.push_back(std::move(row));
    }

    if (!opts.criteria.empty()) {
        for (const auto& c : opts.criteria)
            if (std::find(table.criteria.begin(), table.criteria.end(), c) ==
                table.criteria.end())
                throw input_error("criterion_sweep: unknown criterion " + c);
    }
    return table;
}

int select(const SweepTable& table, const std::string& criterion) {
    int best_p = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.ps.size(); ++i) {
        const auto it = table.rows[i].find(criterion);
        if (it == table.rows[i].end())
            throw input_error("select: unknown criterion " + criterion);
        if (!it->second.defined) continue;
        const double v = it->second.value;
        const int p = table.ps[i];
        if (v < best || (v == best && (best_p < 0 || p < best_p))) {
            best = v;
            best_p = p;
        }
    }
    if (best_p < 0) throw input_error("select: criterion " + criterion + " has no defined rows");
    return best_p;
}

double kfold_cv(const Dataset& data, const std::vector<int>& order, int p, int k,
                std::uint64_t seed) {
    const int n = data.n();
    if (k < 2 || k > n) throw input_error("kfold_cv: need 2 <= k <= n");
    if (p < 0 || p > static_cast<int>(order.size())) throw input_error("kfold_cv: p out of range");

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng::Stream stream = rng::Stream::keyed(seed, 0xF01D);
    stream.shuffle(idx);

    const Eigen::MatrixXd xsub = take_columns(data.X, order, p);
    std::vector<double> sq;
    sq.reserve(n);
    int start = 0;
    const int base = n / k, extra = n % k;
    for (int f = 0; f < k; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        const int train_rows = n - size;
        Eigen::MatrixXd xtr(train_rows, p), xte(size, p);
        Eigen::VectorXd ytr(train_rows), yte(size);
        int it = 0, ie = 0;
        for (int i = 0; i < n; ++i) {
            const bool held = i >= start && i < start + size;
            if (held) {
                xte.row(ie) = xsub.row(idx[i]);
                yte(ie++) = data.y(idx[i]);
            } else {
                xtr.row(it) = xsub.row(idx[i]);
                ytr(it++) = data.y(idx[i]);
            }
        }
        start += size;
        try {
            Eigen::VectorXd b;
            if (p == 0) {
                b = Eigen::VectorXd::Zero(0);
            } else if (p <= train_rows) {
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtr);
                if (qr.rank() < p) throw input_error("kfold_cv: rank-deficient fold");
                b = qr.solve(ytr);
            } else {
                Eigen::LLT<Eigen::MatrixXd> llt(xtr * xtr.transpose());
                if (llt.info() != Eigen::Success)
                    throw input_error("kfold_cv: rank-deficient fold");
                b = xtr.transpose() * llt.solve(ytr);
            }
            for (int i = 0; i < size; ++i) {
                const double e = yte(i) - (p == 0 ? 0.0 : xte.row(i).dot(b));
                sq.push_back(e * e);
            }
        } catch (const input_error&) {
            // fold skipped; averaged over valid folds
        }
    }
    if (sq.empty()) throw input_error("kfold_cv: no valid folds");
    return par::pairwise_sum(sq) / static_cast<double>(sq.size());
}

namespace {

double err_r_curve(double gamma, double alpha, double eta, int n) {
    const double om = 1.0 - gamma;
    const double denom = om - 1.0 / n;
    return 1.0 + alpha * std::pow(om, eta + 1.0) + alpha * gamma * std::pow(om, eta) +
           alpha * gamma * std::pow(om, eta) / denom + gamma / denom;
}

}  // namespace

OptimalSizes analytic_optimal_size(double alpha, double eta, int n) {
    if (alpha <= 0.0) throw input_error("analytic_optimal_size: alpha must be positive");
    if (eta < 1.0) throw input_error("analytic_optimal_size: eta must be >= 1");
    if (n < 3) throw input_error("analytic_optimal_size: n must be >= 3");

    OptimalSizes out;
    const double c = alpha * (eta + 1.0);
    out.gamma_f = std::max(0.0, 1.0 - std::pow(c, -1.0 / eta));

    const double hi = 1.0 - 1.0 / n - 1e-6;
    const auto f = [&](double g) { return err_r_curve(g, alpha, eta, n); };
    // Coarse scan to bracket the minimum, then golden-section refinement.
    const int grid = 512;
    int best_i = 0;
    double best_v = f(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double g = hi * i / grid;
        const double v = f(g);
        if (v < best_v) {
            best_v = v;
            best_i = i;
        }
    }
    double lo_b = hi * std::max(0, best_i - 1) / grid;
    double hi_b = hi * std::min(grid, best_i + 1) / grid;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi_b - gr * (hi_b - lo_b), x2 = lo_b + gr * (hi_b - lo_b);
    double f1 = f(x1), f2 = f(x2);
    while (hi_b - lo_b > 1e-8) {
        if (f1 < f2) {
            hi_b = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi_b - gr * (hi_b - lo_b);
            f1 = f(x1);
        } else {
            lo_b = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo_b + gr * (hi_b - lo_b);
            f2 = f(x2);
        }
    }
    out.gamma_r = 0.5 * (lo_b + hi_b);
    if (f(0.0) <= f(out.gamma_r)) out.gamma_r = 0.0;
    return out;
}

namespace {

struct CsvFrame {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> cells;  // row-major
};

CsvFrame parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("ingest_csv: cannot open " + path);
    CsvFrame frame;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (char ch : line) {
            if (ch == '"') {
                quoted = !quoted;
            } else if (ch == ',' && !quoted) {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        cells.push_back(cur);
        if (header) {
            frame.names = cells;
            header = false;
        } else {
            if (cells.size() != frame.names.size()) throw input_error("ingest_csv: ragged row");
            frame.cells.push_back(std::move(cells));
        }
    }
    if (frame.names.empty()) throw input_error("ingest_csv: empty file");
    return frame;
}

bool missing_cell(const std::string& s) {
    if (s.empty()) return true;
    std::string t;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan" || t == "NULL";
}

double apply_transform(Transform t, double v, const std::string& col) {
    switch (t) {
        case Transform::none: return v;
        case Transform::log_e:
            if (v <= 0.0) throw input_error("ingest_csv: log transform needs " + col + " > 0");
            return std::log(v);
        default:
            if (v <= 0.0 || v >= 1.0)
                throw input_error("ingest_csv: logit transform needs " + col + " in (0, 1)");
            return std::log(v / (1.0 - v));
    }
}

}  // namespace

IngestResult ingest_csv(const std::string& path, const PipelineConfig& cfg) {
    const CsvFrame frame = parse_csv(path);
    const int ncol = static_cast<int>(frame.names.size());
    const int nrow = static_cast<int>(frame.cells.size());
    if (nrow == 0) throw input_error("ingest_csv: no data rows");
    if (cfg.train_size + cfg.test_size > static_cast<std::size_t>(nrow))
        throw input_error("ingest_csv: train_size + test_size exceeds the row count");

    auto col_index = [&](const std::string& name) {
        for (int j = 0; j < ncol; ++j)
            if (frame.names[j] == name) return j;
        throw input_error("ingest_csv: no column named " + name);
    };

    const int target = cfg.target_column.empty() ? ncol - 1 : col_index(cfg.target_column);
    const int strata = cfg.strata_column.empty() ? -1 : col_index(cfg.strata_column);
    const int group = cfg.impute_group_column.empty() ? -1 : col_index(cfg.impute_group_column);

    std::vector<int> feature_cols;
    for (int j = 0; j < ncol; ++j)
        if (j != target && j != strata && j != group) feature_cols.push_back(j);
    const int d = static_cast<int>(feature_cols.size());
    if (d < 1) throw input_error("ingest_csv: no feature columns");

    // Parse numerics; missing entries filled by (group) medians.
    Eigen::MatrixXd values(nrow, d + 1);  // features then target
    std::vector<std::vector<bool>> missing(nrow, std::vector<bool>(d + 1, false));
    auto parse_at = [&](int i, int j_src, int j_dst) {
        const std::string& s = frame.cells[i][j_src];
        if (missing_cell(s)) {
            missing[i][j_dst] = true;
            return;
        }
        try {
            values(i, j_dst) = std::stod(s);
        } catch (const std::exception&) {
            throw input_error("ingest_csv: unparseable cell '" + s + "' in column " +
                              frame.names[j_src]);
        }
    };
    for (int i = 0; i < nrow; ++i) {
        for (int k = 0; k < d; ++k) parse_at(i, feature_cols[k], k);
        parse_at(i, target, d);
    }

    std::vector<std::string> group_of(nrow);
    for (int i = 0; i < nrow; ++i) group_of[i] = group < 0 ? "" : frame.cells[i][group];

    for (int k = 0; k <= d; ++k) {
        bool any = false;
        for (int i = 0; i < nrow; ++i) any = any || missing[i][k];
        if (!any) continue;
        if (cfg.imputation == Imputation::none) {
            throw input_error("ingest_csv: missing values with imputation disabled in column " +
                              (k == d ? frame.names[target] : frame.names[feature_cols[k]]));
        }
        std::map<std::string, std::vector<double>> present;
        for (int i = 0; i < nrow; ++i)
            if (!missing[i][k]) present[group_of[i]].push_back(values(i, k));
        for (int i = 0; i < nrow; ++i) {
            if (!missing[i][k]) continue;
            auto it = present.find(group_of[i]);
            if (it == present.end() || it->second.empty()) it = present.find("");
            if (it == present.end()) {
                // fall back to the pooled median
                std::vector<double> all;
                for (auto& kv : present)
                    all.insert(all.end(), kv.second.begin(), kv.second.end());
                if (all.empty())
                    throw input_error("ingest_csv: column entirely missing");
                present[""] = std::move(all);
                it = present.find("");
            }
            std::vector<double> v = it->second;
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            double med = v[v.size() / 2];
            if (v.size() % 2 == 0) {
                std::nth_element(v.begin(), v.begin() + v.size() / 2 - 1, v.end());
                med = 0.5 * (med + v[v.size() / 2 - 1]);
            }
            values(i, k) = med;
        }
    }

    for (const auto& [name, t] : cfg.transforms) {
        const int j = col_index(name);
        int k = -1;
        if (j == target) {
            k = d;
        } else {
            for (int q = 0; q < d; ++q)
                if (feature_cols[q] == j) k = q;
        }
        if (k < 0) throw input_error("ingest_csv: transform names a non-numeric column " + name);
        for (int i = 0; i < nrow; ++i) values(i, k) = apply_transform(t, values(i, k), name);
    }

    // Stratified allocation with largest-remainder rounding.
    std::vector<std::string> stratum_names;
    std::map<std::string, std::vector<int>> strata_rows;
    for (int i = 0; i < nrow; ++i) {
        const std::string s = strata < 0 ? "" : frame.cells[i][strata];
        if (strata_rows.find(s) == strata_rows.end()) stratum_names.push_back(s);
        strata_rows[s].push_back(i);
    }
    for (const auto& name : stratum_names)
        if (strata_rows[name].empty()) throw input_error("ingest_csv: empty stratum");

    auto allocate = [&](std::size_t total) {
        std::map<std::string, int> quota;
        std::vector<std::pair<double, std::string>> rem;
        int assigned = 0;
        for (const auto& name : stratum_names) {
            const double share =
                static_cast<double>(total) * strata_rows[name].size() / nrow;
            quota[name] = static_cast<int>(std::floor(share));
            assigned += quota[name];
            rem.push_back({share - std::floor(share), name});
        }
        std::stable_sort(rem.begin(), rem.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (int i = 0; assigned < static_cast<int>(total); ++i, ++assigned)
            quota[rem[i % rem.size()].second] += 1;
        return quota;
    };
    auto train_quota = allocate(cfg.train_size);
    auto test_quota = allocate(cfg.test_size);

    std::vector<int> train_rows, test_rows, aux_rows;
    for (std::size_t si = 0; si < stratum_names.size(); ++si) {
        const auto& name = stratum_names[si];
        std::vector<int> rows = strata_rows[name];
        const int qtr = train_quota[name], qte = test_quota[name];
        if (qtr + qte > static_cast<int>(rows.size()))
            throw input_error("ingest_csv: stratum '" + name + "' too small for the split");
        rng::Stream stream = rng::Stream::keyed(cfg.seed, 0x5712a7a, si);
        stream.shuffle(rows);
        for (int i = 0; i < qtr; ++i) train_rows.push_back(rows[i]);
        for (int i = qtr; i < qtr + qte; ++i) test_rows.push_back(rows[i]);
        for (std::size_t i = qtr + qte; i < rows.size(); ++i) aux_rows.push_back(rows[i]);
    }
    if (aux_rows.size() <= static_cast<std::size_t>(d))
        throw input_error("ingest_csv: aux split too small to estimate the covariance");

    IngestResult out;
    for (int k = 0; k < d; ++k) out.feature_names.push_back(frame.names[feature_cols[k]]);

    // Centering constants from the aux split only.
    out.center_x = Eigen::VectorXd::Zero(d);
    out.center_y = 0.0;
    for (int i : aux_rows) {
        out.center_x += values.row(i).head(d).transpose();
        out.center_y += values(i, d);
    }
    out.center_x /= static_cast<double>(aux_rows.size());
    out.center_y /= static_cast<double>(aux_rows.size());

    auto build = [&](const std::vector<int>& rows) {
        Dataset ds;
        ds.X.resize(static_cast<int>(rows.size()), d);
        ds.y.resize(static_cast<int>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            ds.X.row(static_cast<int>(i)) =
                values.row(rows[i]).head(d) - out.center_x.transpose();
            ds.y(static_cast<int>(i)) = values(rows[i], d) - out.center_y;
        }
        return ds;
    };
    out.train = build(train_rows);
    out.test = build(test_rows);
    out.aux = build(aux_rows);

    const int na = out.aux.n();
    out.sigma_hat = out.aux.X.transpose() * out.aux.X / (na - 1.0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(out.aux.X);
    if (qr.rank() < d) throw input_error("ingest_csv: aux features are collinear");
    const Eigen::VectorXd resid = out.aux.y - out.aux.X * qr.solve(out.aux.y);
    out.sigma_eps2_hat = resid.squaredNorm() / (na - d);

    out.train.Sigma = out.sigma_hat;
    out.test.Sigma = out.sigma_hat;
    out.aux.Sigma = out.sigma_hat;
    out.train.sigma_eps2 = out.sigma_eps2_hat;
    out.test.sigma_eps2 = out.sigma_eps2_hat;
    out.aux.sigma_eps2 = out.sigma_eps2_hat;
    return out;
}

void write_sweep_csv(const std::string& path, const SweepTable& table) {
    std::ofstream out(path);
    if (!out) throw input_error("write_sweep_csv: cannot open " + path);
    out << "p,criterion,value,defined\n";
    char buf[64];
    for (std::size_t i = 0; i < table.ps.size(); ++i) {
        for (const auto& c : table.criteria) {
            const auto& cell = table.rows[i].at(c);
            if (cell.defined) {
                std::snprintf(buf, sizeof(buf), "%.17g", cell.value);
                out << table.ps[i] << "," << c << "," << buf << ",1\n";
            } else {
                out << table.ps[i] << "," << c << ",nan,0\n";
            }
        }
    }
}

}  // namespace preddf
