#ifndef COARSEWAGE_REGRESSION_HPP
#define COARSEWAGE_REGRESSION_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "coarsewage/errors.hpp"

namespace coarsewage {

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
};

struct OlsFit {
    std::vector<Coefficient> coefficients;
    std::int64_t n_obs = 0;
    std::int64_t n_clusters = 0;

    const Coefficient& operator[](const std::string& name) const {
        for (const auto& c : coefficients)
            if (c.name == name) return c;
        throw std::invalid_argument("no coefficient named " + name);
    }
};

/// OLS with cluster-robust (sandwich) standard errors and small-sample
/// multiplier G/(G-1) * (n-1)/(n-k). Singleton clusters give HC1. Collinear
/// columns are reported by name.
inline OlsFit ols_cluster(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<std::int64_t>& clusters,
                          const std::vector<std::string>& names) {
    const auto n = X.rows();
    const auto k = X.cols();
    if (n != y.size() || static_cast<std::size_t>(n) != clusters.size() ||
        static_cast<std::size_t>(k) != names.size())
        throw std::invalid_argument("ols_cluster: dimension mismatch");
    if (n <= k) throw FitError("ols_cluster: need more observations than regressors");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        const auto perm = qr.colsPermutation().indices();
        throw FitError("ols_cluster: collinear covariate '" + names[static_cast<std::size_t>(perm(k - 1))] + "'");
    }
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * beta;

    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));

    std::unordered_map<std::int64_t, Eigen::VectorXd> scores;
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [it, fresh] = scores.try_emplace(clusters[static_cast<std::size_t>(i)], Eigen::VectorXd::Zero(k));
        it->second += X.row(i).transpose() * resid(i);
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (const auto& [id, s] : scores) meat += s * s.transpose();

    const double g = static_cast<double>(scores.size());
    const double adj = g > 1.0
                           ? (g / (g - 1.0)) * (static_cast<double>(n - 1) / static_cast<double>(n - k))
                           : 1.0;
    const Eigen::MatrixXd vcov = adj * xtx_inv * meat * xtx_inv;

    OlsFit fit;
    fit.n_obs = n;
    fit.n_clusters = static_cast<std::int64_t>(scores.size());
    for (Eigen::Index j = 0; j < k; ++j)
        fit.coefficients.push_back({names[static_cast<std::size_t>(j)], beta(j),
                                    std::sqrt(std::max(0.0, vcov(j, j)))});
    return fit;
}

// ---------------------------------------------------------------------------
// High-dimensional fixed effects by iterated within-group demeaning
// ---------------------------------------------------------------------------

struct DemeanReport {
    int sweeps = 0;
    double max_group_mean = 0.0;
};

/// Absorbs the fixed-effect groups from every column of `data` (outcome and
/// regressors alike) by alternating within-group demeaning until every group
/// mean is below `tol` in absolute value. One FE dimension converges in a
/// single sweep (the within transformation).
inline DemeanReport absorb_fixed_effects(Eigen::MatrixXd& data,
                                         const std::vector<std::vector<std::int64_t>>& fe_groups,
                                         double tol = 1e-8, int max_sweeps = 10000) {
    const auto n = data.rows();
    for (const auto& g : fe_groups)
        if (static_cast<Eigen::Index>(g.size()) != n)
            throw std::invalid_argument("absorb_fixed_effects: group column length mismatch");
    if (fe_groups.empty()) return {0, 0.0};

    // Dense re-indexing of group labels per dimension.
    std::vector<std::vector<std::int32_t>> idx(fe_groups.size());
    std::vector<std::int32_t> n_levels(fe_groups.size());
    for (std::size_t dimi = 0; dimi < fe_groups.size(); ++dimi) {
        std::unordered_map<std::int64_t, std::int32_t> remap;
        idx[dimi].resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            auto [it, fresh] = remap.try_emplace(fe_groups[dimi][static_cast<std::size_t>(i)],
                                                 static_cast<std::int32_t>(remap.size()));
            idx[dimi][static_cast<std::size_t>(i)] = it->second;
        }
        n_levels[dimi] = static_cast<std::int32_t>(remap.size());
    }

    DemeanReport report;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t dimi = 0; dimi < fe_groups.size(); ++dimi) {
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_levels[dimi], data.cols());
            Eigen::VectorXd cnt = Eigen::VectorXd::Zero(n_levels[dimi]);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(idx[dimi][static_cast<std::size_t>(i)]) += data.row(i);
                cnt(idx[dimi][static_cast<std::size_t>(i)]) += 1.0;
            }
            for (Eigen::Index l = 0; l < sums.rows(); ++l) sums.row(l) /= cnt(l);
            worst = std::max(worst, sums.array().abs().maxCoeff());
            for (Eigen::Index i = 0; i < n; ++i)
                data.row(i) -= sums.row(idx[dimi][static_cast<std::size_t>(i)]);
        }
        report.sweeps = sweep;
        report.max_group_mean = worst;
        if (worst <= tol) return report;
    }
    throw FitError("absorb_fixed_effects: no convergence after " + std::to_string(max_sweeps) +
                   " sweeps (max group mean " + std::to_string(report.max_group_mean) + ")");
}

} // namespace coarsewage

#endif
