#ifndef COARSEWAGE_LPM_HPP
#define COARSEWAGE_LPM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coarsewage/errors.hpp"
#include "coarsewage/records.hpp"
#include "coarsewage/regression.hpp"

namespace coarsewage {

/// Design table for linear probability models: outcome, covariate columns,
/// fixed-effect group labels, and a cluster label per row.
struct LpmTable {
    Eigen::VectorXd y;
    Eigen::MatrixXd covariates; // no intercept column
    std::vector<std::string> names;
    std::vector<std::vector<std::int64_t>> fe;
    std::vector<std::string> fe_names;
    std::vector<std::int64_t> clusters;
};

struct LpmFit {
    std::vector<Coefficient> coefficients;
    std::vector<std::string> absorbed;
    std::int64_t n_obs = 0;
    std::int64_t n_clusters = 0;
    std::int64_t n_skipped = 0; // records without the data the outcome needs
    bool standardized = false;
    DemeanReport demean;

    const Coefficient& operator[](const std::string& name) const {
        for (const auto& c : coefficients)
            if (c.name == name) return c;
        throw std::invalid_argument("no coefficient named " + name);
    }
};

namespace detail {

inline bool is_dummy_column(const Eigen::VectorXd& col) {
    for (Eigen::Index i = 0; i < col.size(); ++i)
        if (col(i) != 0.0 && col(i) != 1.0) return false;
    return true;
}

inline double sample_sd(const Eigen::VectorXd& col) {
    const double mean = col.mean();
    const double ss = (col.array() - mean).square().sum();
    return std::sqrt(ss / static_cast<double>(col.size() - 1));
}

} // namespace detail

/// Least squares on the table after absorbing fixed effects by iterated
/// within-group demeaning; cluster-robust SEs. Non-dummy covariates are
/// scaled to unit sample SD when standardize_covariates is set; the outcome
/// likewise when standardize_outcome is set (then a single-regressor slope
/// equals the sample correlation).
inline LpmFit fit_lpm_table(LpmTable table, bool standardize_covariates = true,
                            bool standardize_outcome = false, double demean_tol = 1e-8,
                            int max_sweeps = 10000) {
    const Eigen::Index n = table.y.size();
    const Eigen::Index k = table.covariates.cols();
    if (table.covariates.rows() != n || static_cast<Eigen::Index>(table.clusters.size()) != n)
        throw std::invalid_argument("fit_lpm_table: dimension mismatch");
    if (k == 0) throw std::invalid_argument("fit_lpm_table: no covariates");

    LpmFit fit;
    fit.standardized = standardize_covariates;
    fit.absorbed = table.fe_names;

    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd col = table.covariates.col(j);
        if (standardize_covariates && !detail::is_dummy_column(col)) {
            const double sd = detail::sample_sd(col);
            if (sd <= 0.0) throw FitError("fit_lpm_table: covariate '" + table.names[static_cast<std::size_t>(j)] +
                                          "' is constant");
            table.covariates.col(j) /= sd;
        }
    }
    if (standardize_outcome) {
        const double sd = detail::sample_sd(table.y);
        if (sd <= 0.0) throw FitError("fit_lpm_table: outcome is constant; cannot standardize");
        table.y /= sd;
    }

    Eigen::MatrixXd X;
    std::vector<std::string> names = table.names;
    if (table.fe.empty()) {
        X.resize(n, k + 1);
        X.col(0).setOnes();
        X.rightCols(k) = table.covariates;
        names.insert(names.begin(), "const");
    } else {
        Eigen::MatrixXd data(n, k + 1);
        data.col(0) = table.y;
        data.rightCols(k) = table.covariates;
        fit.demean = absorb_fixed_effects(data, table.fe, demean_tol, max_sweeps);
        table.y = data.col(0);
        X = data.rightCols(k);
    }

    const OlsFit ols = ols_cluster(X, table.y, table.clusters, names);
    fit.coefficients = ols.coefficients;
    fit.n_obs = ols.n_obs;
    fit.n_clusters = ols.n_clusters;
    return fit;
}

// ---------------------------------------------------------------------------
// Record-level front end
// ---------------------------------------------------------------------------

/// Binary outcomes derivable from a record. Outcomes that need the next-year
/// wage skip records lacking it.
inline bool lpm_outcome(const WageRecord& r, const std::string& name, bool* ok) {
    *ok = true;
    if (name == "round10") return is_divisible(r.contracted_wage, Grain::k10);
    if (name == "round100") return is_divisible(r.contracted_wage, Grain::k100);
    if (name == "round1000") return is_divisible(r.contracted_wage, Grain::k1000);
    if (name == "resigned") return r.resigned;
    if (name == "separated") return r.separated;
    if (name == "sticky") {
        if (!r.wage_next_year) { *ok = false; return false; }
        return *r.wage_next_year == r.contracted_wage;
    }
    if (name == "round_raise") {
        if (!r.wage_next_year) { *ok = false; return false; }
        return is_round_increase(r.contracted_wage, *r.wage_next_year);
    }
    if (name == "int_pct_raise") {
        if (!r.wage_next_year) { *ok = false; return false; }
        return is_integer_pct_increase(r.contracted_wage, *r.wage_next_year);
    }
    throw std::invalid_argument("unknown LPM outcome: " + name);
}

inline std::int64_t fe_group_id(const WageRecord& r, const std::string& name) {
    if (name == "firm") return r.firm_id;
    if (name == "year") return r.year;
    if (name == "region") return r.region;
    if (name == "occupation") return r.occupation;
    if (name == "education") return r.education;
    throw std::invalid_argument("unknown fixed-effect group: " + name);
}

struct LpmSpec {
    std::string outcome = "round10";
    std::vector<std::string> covariates = {"log_cpi", "firm_size", "hiring_experience"};
    std::vector<std::string> fe_groups = {"firm", "year", "region"};
    std::string cluster = "firm";
    bool standardize_covariates = true;
    bool standardize_outcome = false;
};

/// reg-style linear probability model on hire records.
inline LpmFit lpm_fit(const std::vector<WageRecord>& records, const LpmSpec& spec) {
    std::vector<std::size_t> keep;
    keep.reserve(records.size());
    std::int64_t skipped = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        bool ok = true;
        lpm_outcome(records[i], spec.outcome, &ok);
        (ok ? (void)keep.push_back(i) : (void)++skipped);
    }
    if (keep.size() < spec.covariates.size() + 2) throw FitError("lpm_fit: too few usable records");

    LpmTable t;
    const auto n = static_cast<Eigen::Index>(keep.size());
    t.y.resize(n);
    t.covariates.resize(n, static_cast<Eigen::Index>(spec.covariates.size()));
    t.names = spec.covariates;
    t.fe_names = spec.fe_groups;
    t.fe.assign(spec.fe_groups.size(), {});
    for (auto& g : t.fe) g.resize(keep.size());
    t.clusters.resize(keep.size());

    for (Eigen::Index row = 0; row < n; ++row) {
        const WageRecord& r = records[keep[static_cast<std::size_t>(row)]];
        bool ok = true;
        t.y(row) = lpm_outcome(r, spec.outcome, &ok) ? 1.0 : 0.0;
        for (std::size_t j = 0; j < spec.covariates.size(); ++j)
            t.covariates(row, static_cast<Eigen::Index>(j)) = covariate_value(r, spec.covariates[j]);
        for (std::size_t g = 0; g < spec.fe_groups.size(); ++g)
            t.fe[g][static_cast<std::size_t>(row)] = fe_group_id(r, spec.fe_groups[g]);
        t.clusters[static_cast<std::size_t>(row)] =
            spec.cluster == "worker" ? r.worker_id : fe_group_id(r, spec.cluster == "firm" ? "firm" : spec.cluster);
    }

    LpmFit fit = fit_lpm_table(std::move(t), spec.standardize_covariates, spec.standardize_outcome);
    fit.n_skipped = skipped;
    return fit;
}

/// Same estimator with a firm-level bunching flag as the focal regressor.
/// `flags` maps firm ids to the bunching-firm indicator.
inline LpmFit firm_outcome_regression(const std::vector<WageRecord>& records, const std::string& outcome,
                                      const std::map<std::int64_t, bool>& flags,
                                      const std::vector<std::string>& controls,
                                      const std::vector<std::string>& fe_groups,
                                      const std::string& cluster = "firm") {
    std::vector<std::size_t> keep;
    std::int64_t skipped = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        bool ok = true;
        lpm_outcome(records[i], outcome, &ok);
        if (ok && flags.count(records[i].firm_id)) keep.push_back(i);
        else ++skipped;
    }
    if (keep.size() < controls.size() + 3) throw FitError("firm_outcome_regression: too few usable records");

    LpmTable t;
    const auto n = static_cast<Eigen::Index>(keep.size());
    t.y.resize(n);
    t.covariates.resize(n, static_cast<Eigen::Index>(controls.size()) + 1);
    t.names.push_back("bunching_firm");
    for (const auto& c : controls) t.names.push_back(c);
    t.fe_names = fe_groups;
    t.fe.assign(fe_groups.size(), {});
    for (auto& g : t.fe) g.resize(keep.size());
    t.clusters.resize(keep.size());

    for (Eigen::Index row = 0; row < n; ++row) {
        const WageRecord& r = records[keep[static_cast<std::size_t>(row)]];
        bool ok = true;
        t.y(row) = lpm_outcome(r, outcome, &ok) ? 1.0 : 0.0;
        t.covariates(row, 0) = flags.at(r.firm_id) ? 1.0 : 0.0;
        for (std::size_t j = 0; j < controls.size(); ++j)
            t.covariates(row, static_cast<Eigen::Index>(j) + 1) = covariate_value(r, controls[j]);
        for (std::size_t g = 0; g < fe_groups.size(); ++g)
            t.fe[g][static_cast<std::size_t>(row)] = fe_group_id(r, fe_groups[g]);
        t.clusters[static_cast<std::size_t>(row)] = cluster == "worker" ? r.worker_id : fe_group_id(r, cluster);
    }

    LpmFit fit = fit_lpm_table(std::move(t), /*standardize_covariates=*/false);
    fit.n_skipped = skipped;
    return fit;
}

} // namespace coarsewage

#endif
