#ifndef COARSEWAGE_BUNCHING_HPP
#define COARSEWAGE_BUNCHING_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "coarsewage/errors.hpp"
#include "coarsewage/histogram.hpp"
#include "coarsewage/money.hpp"
#include "coarsewage/records.hpp"
#include "coarsewage/rng.hpp"

namespace coarsewage {

enum class Kernel { Uniform, Triangular, Epanechnikov };

inline double kernel_weight(Kernel k, double u) {
    switch (k) {
    case Kernel::Uniform: return 1.0;
    case Kernel::Triangular: return 1.0 - std::abs(u);
    case Kernel::Epanechnikov: return 0.75 * (1.0 - u * u);
    }
    return 0.0;
}

/// Local-polynomial counterfactual specification. Bins at multiples of
/// `exclusion_grain` never enter a fit; the bin holding the excluded minimum
/// wage and the winsorized top bin are excluded as well.
struct FitSpec {
    int degree = 7;
    int bandwidth_bins = 500;
    Kernel kernel = Kernel::Uniform;
    Grain exclusion_grain = Grain::k10;
    bool exclude_mw_bin = true;
    bool exclude_top_bin = true;
    std::vector<std::int64_t> extra_excluded_bins;
};

struct CounterfactualFit {
    std::vector<double> predicted;       // C_hat per bin, before reweighting
    double lambda = 1.0;                 // sum(C) / sum(C_hat)
    bool negative_prediction_flag = false;
    FitSpec spec;

    double reweighted(std::int64_t bin) const { return lambda * predicted[static_cast<std::size_t>(bin)]; }
};

namespace detail {

inline std::vector<char> excluded_bins(const WageHistogram& hist, const FitSpec& spec) {
    std::vector<char> excl(static_cast<std::size_t>(hist.n_bins()), 0);
    for (std::int64_t i = 0; i < hist.n_bins(); ++i)
        if (is_divisible(hist.bin_value(i), spec.exclusion_grain)) excl[static_cast<std::size_t>(i)] = 1;
    if (spec.exclude_mw_bin && hist.excluded_mw >= hist.support_lo && hist.excluded_mw <= hist.support_hi)
        excl[static_cast<std::size_t>(hist.bin_index(hist.excluded_mw))] = 1;
    if (spec.exclude_top_bin) excl.back() = 1;
    for (std::int64_t i : spec.extra_excluded_bins)
        if (i >= 0 && i < hist.n_bins()) excl[static_cast<std::size_t>(i)] = 1;
    return excl;
}

/// Legendre basis values P_0..P_d at u, via the three-term recurrence.
inline void legendre(double u, int degree, double* out) {
    out[0] = 1.0;
    if (degree >= 1) out[1] = u;
    for (int k = 1; k < degree; ++k)
        out[k + 1] = ((2.0 * k + 1.0) * u * out[k] - k * out[k - 1]) / (k + 1.0);
}

} // namespace detail

/// Kernel-weighted local polynomial fit of bin counts on non-excluded bins,
/// evaluated at every bin. Excluded bins (round numbers, the MW bin, the top
/// bin) get predictions from their neighbors' fit. Negative predictions set
/// negative_prediction_flag but are used as-is.
inline CounterfactualFit fit_counterfactual(const WageHistogram& hist, const FitSpec& spec) {
    if (spec.degree < 0) throw ConfigError("fit_counterfactual: degree must be >= 0");
    if (spec.bandwidth_bins < 1) throw ConfigError("fit_counterfactual: bandwidth must be >= 1 bin");

    const std::int64_t nb = hist.n_bins();
    const int d = spec.degree;
    const int bw = spec.bandwidth_bins;
    const auto excl = detail::excluded_bins(hist, spec);

    CounterfactualFit fit;
    fit.spec = spec;
    fit.predicted.assign(static_cast<std::size_t>(nb), 0.0);

    // u takes only 2*bw+1 values across all windows; cache kernel weights and
    // Legendre basis rows per offset.
    Eigen::MatrixXd basis(2 * bw + 1, d + 1);
    Eigen::VectorXd kweight(2 * bw + 1);
    {
        std::vector<double> row(static_cast<std::size_t>(d) + 1);
        for (int off = -bw; off <= bw; ++off) {
            const double u = static_cast<double>(off) / static_cast<double>(bw);
            kweight(off + bw) = kernel_weight(spec.kernel, u);
            detail::legendre(u, d, row.data());
            for (int k = 0; k <= d; ++k) basis(off + bw, k) = row[static_cast<std::size_t>(k)];
        }
    }
    Eigen::VectorXd basis0(d + 1);
    {
        std::vector<double> row(static_cast<std::size_t>(d) + 1);
        detail::legendre(0.0, d, row.data());
        for (int k = 0; k <= d; ++k) basis0(k) = row[static_cast<std::size_t>(k)];
    }

    std::string error_msg;
    bool negative = false;

    auto fit_range = [&](std::int64_t b_lo, std::int64_t b_hi, std::string* err, bool* neg) {
        Eigen::MatrixXd gram(d + 1, d + 1);
        Eigen::VectorXd rhs(d + 1);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(d + 1);
        for (std::int64_t b = b_lo; b < b_hi; ++b) {
            const std::int64_t lo = std::max<std::int64_t>(0, b - bw);
            const std::int64_t hi = std::min<std::int64_t>(nb - 1, b + bw);

            gram.setZero();
            rhs.setZero();
            int usable = 0;
            for (std::int64_t j = lo; j <= hi; ++j) {
                if (excl[static_cast<std::size_t>(j)]) continue;
                const auto off = static_cast<Eigen::Index>(j - b + bw);
                const double w = kweight(off);
                if (w <= 0.0) continue;
                const double y = static_cast<double>(hist.counts[static_cast<std::size_t>(j)]);
                gram.selfadjointView<Eigen::Upper>().rankUpdate(basis.row(off).transpose(), w);
                rhs.noalias() += (w * y) * basis.row(off).transpose();
                ++usable;
            }
            if (usable < d + 1) {
                *err = "fit_counterfactual: infeasible window at bin R$" +
                       std::to_string(hist.bin_value(b).whole_reais()) + " (" + std::to_string(usable) +
                       " usable bins, need " + std::to_string(d + 1) +
                       "); widen the bandwidth or lower the degree";
                return;
            }
            ldlt.compute(gram.selfadjointView<Eigen::Upper>());
            Eigen::VectorXd beta = ldlt.solve(rhs);
            if (ldlt.info() != Eigen::Success || !beta.allFinite()) {
                // fall back to a rank-revealing solve for the diagnostic
                gram.template triangularView<Eigen::Lower>() = gram.transpose();
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
                if (qr.rank() < d + 1) {
                    *err = "fit_counterfactual: rank-deficient design at bin R$" +
                           std::to_string(hist.bin_value(b).whole_reais()) +
                           "; lower the degree or widen the bandwidth";
                    return;
                }
                beta = qr.solve(rhs);
            }
            const double pred = basis0.dot(beta);
            fit.predicted[static_cast<std::size_t>(b)] = pred;
            if (pred < 0.0) *neg = true;
        }
    };

    if (nb >= 512) {
        std::string err2;
        bool neg2 = false;
        std::thread half([&] { fit_range(nb / 2, nb, &err2, &neg2); });
        fit_range(0, nb / 2, &error_msg, &negative);
        half.join();
        if (error_msg.empty()) error_msg = err2;
        negative = negative || neg2;
    } else {
        fit_range(0, nb, &error_msg, &negative);
    }
    if (!error_msg.empty()) throw FitError(error_msg);
    fit.negative_prediction_flag = negative;

    const double total_pred = std::accumulate(fit.predicted.begin(), fit.predicted.end(), 0.0);
    if (!(total_pred > 0.0)) throw FitError("fit_counterfactual: nonpositive predicted total");
    fit.lambda = static_cast<double>(hist.n) / total_pred;
    return fit;
}

// ---------------------------------------------------------------------------
// Excess mass, theta, missing-mass windows
// ---------------------------------------------------------------------------

struct RoundExcess {
    Money round{};
    double excess = 0.0; // C_r - lambda * C_hat_r
};

/// Per-round excess over the reweighted counterfactual. Rounds falling in the
/// excluded MW bin or the winsorized top bin are skipped (their spikes are
/// floor/cap artifacts, not wage-setting).
inline std::vector<RoundExcess> excess_mass(const WageHistogram& hist, const CounterfactualFit& fit,
                                            const RoundSet& rounds) {
    std::vector<RoundExcess> out;
    const std::int64_t mw_bin = (hist.excluded_mw >= hist.support_lo && hist.excluded_mw <= hist.support_hi)
                                    ? hist.bin_index(hist.excluded_mw)
                                    : -1;
    for (Money r : rounds.values()) {
        if (r < hist.support_lo || r > hist.support_hi) continue;
        const std::int64_t b = hist.bin_index(r);
        if (fit.spec.exclude_mw_bin && b == mw_bin) continue;
        if (fit.spec.exclude_top_bin && hist.is_top_bin(b)) continue;
        out.push_back({r, static_cast<double>(hist.counts[static_cast<std::size_t>(b)]) - fit.reweighted(b)});
    }
    return out;
}

struct MissingMassWindow {
    Money lo{}, hi{};
    double missing = 0.0;
    bool balanced = false; // false: cap reached before the shortfall matched the excess
};

struct BunchingEstimate {
    std::vector<RoundExcess> per_round;
    double b_hat = 0.0;
    double theta = 0.0; // raw, unclamped
    std::int64_t n = 0;
    std::optional<double> bootstrap_se;
    std::map<std::int64_t, MissingMassWindow> windows; // keyed by round in centavos

    double theta_clamped() const { return std::min(1.0, std::max(0.0, theta)); }
};

/// theta_hat = sum_r B_r / N.
inline BunchingEstimate theta_hat(std::vector<RoundExcess> excess, std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("theta_hat: N must be positive");
    BunchingEstimate e;
    e.per_round = std::move(excess);
    for (const auto& r : e.per_round) e.b_hat += r.excess;
    e.n = n;
    e.theta = e.b_hat / static_cast<double>(n);
    return e;
}

/// Narrowest symmetric window around r whose integrated shortfall over
/// non-round bins matches the excess at r within `tolerance`. Capped at
/// grain/6 bins of the coarsest grain dividing r (166 for multiples of 1000,
/// 16 for multiples of 100, 1 otherwise); hitting the cap without balancing
/// reports balanced = false rather than an error.
inline MissingMassWindow missing_mass_window(const WageHistogram& hist, const CounterfactualFit& fit, Money r,
                                             std::optional<double> tolerance = std::nullopt) {
    if (r < hist.support_lo || r > hist.support_hi) throw std::invalid_argument("missing_mass_window: round outside support");
    const std::int64_t rb = hist.bin_index(r);
    const double excess = static_cast<double>(hist.counts[static_cast<std::size_t>(rb)]) - fit.reweighted(rb);
    const double tol = tolerance.value_or(std::max(0.005 * std::abs(excess), 1.0));

    std::int64_t cap = 1;
    if (is_divisible(r, Grain::k1000)) cap = 1000 / 6;
    else if (is_divisible(r, Grain::k100)) cap = 100 / 6;

    MissingMassWindow w;
    w.lo = r;
    w.hi = r;
    if (excess <= tol) { // nothing to offset
        w.balanced = true;
        return w;
    }

    const auto excl = detail::excluded_bins(hist, fit.spec);
    double missing = 0.0;
    for (std::int64_t k = 1; k <= cap; ++k) {
        for (std::int64_t b : {rb - k, rb + k}) {
            if (b < 0 || b >= hist.n_bins()) continue;
            if (excl[static_cast<std::size_t>(b)]) continue; // other rounds keep their own excess
            const double short_b = fit.reweighted(b) - static_cast<double>(hist.counts[static_cast<std::size_t>(b)]);
            if (short_b > 0.0) missing += short_b;
        }
        w.lo = hist.bin_value(std::max<std::int64_t>(0, rb - k));
        w.hi = hist.bin_value(std::min<std::int64_t>(hist.n_bins() - 1, rb + k));
        if (missing >= excess - tol) {
            w.missing = missing;
            w.balanced = true;
            return w;
        }
    }
    w.missing = missing;
    w.balanced = false;
    return w;
}

// ---------------------------------------------------------------------------
// One-call pipeline, conditional cells, and the cluster bootstrap
// ---------------------------------------------------------------------------

struct BunchingSpec {
    HistogramSpec hist;
    FitSpec fit;
    Grain aggregation_grain = Grain::k10;
    bool with_windows = false;
};

inline BunchingEstimate estimate_bunching(const std::vector<WageRecord>& records, const BunchingSpec& spec) {
    const WageHistogram hist = build_histogram(records, spec.hist);
    const CounterfactualFit fit = fit_counterfactual(hist, spec.fit);
    const RoundSet rounds(spec.aggregation_grain, hist.support_lo, hist.support_hi);
    BunchingEstimate est = theta_hat(excess_mass(hist, fit, rounds), hist.n);
    if (spec.with_windows)
        for (const auto& re : est.per_round)
            est.windows[re.round.centavos] = missing_mass_window(hist, fit, re.round);
    return est;
}

/// Firm-cluster nonparametric bootstrap of any statistic of the records.
/// Deterministic given the seed; replicate streams derive from
/// (seed, replicate index).
struct BootstrapResult {
    double se = 0.0;
    std::vector<double> replicates;
};

template <class Stat>
BootstrapResult bootstrap_stat(const std::vector<WageRecord>& records, int replications, std::uint64_t seed,
                               Stat&& stat) {
    if (replications < 2) throw std::invalid_argument("bootstrap_stat: need at least 2 replications");

    std::map<std::int64_t, std::vector<std::size_t>> by_firm;
    for (std::size_t i = 0; i < records.size(); ++i) by_firm[records[i].firm_id].push_back(i);
    std::vector<const std::vector<std::size_t>*> firms;
    firms.reserve(by_firm.size());
    for (const auto& [id, idx] : by_firm) firms.push_back(&idx);

    BootstrapResult out;
    out.replicates.reserve(static_cast<std::size_t>(replications));
    std::vector<WageRecord> sample;
    for (int rep = 0; rep < replications; ++rep) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(rep) + 1));
        std::uniform_int_distribution<std::size_t> pick(0, firms.size() - 1);
        sample.clear();
        sample.reserve(records.size());
        for (std::size_t f = 0; f < firms.size(); ++f)
            for (std::size_t i : *firms[pick(rng)]) sample.push_back(records[i]);
        out.replicates.push_back(stat(static_cast<const std::vector<WageRecord>&>(sample)));
    }

    const double mean = std::accumulate(out.replicates.begin(), out.replicates.end(), 0.0) /
                        static_cast<double>(replications);
    double ss = 0.0;
    for (double t : out.replicates) ss += (t - mean) * (t - mean);
    out.se = std::sqrt(ss / static_cast<double>(replications - 1));
    return out;
}

inline BootstrapResult bootstrap_theta(const std::vector<WageRecord>& records, const BunchingSpec& spec,
                                       int replications, std::uint64_t seed) {
    return bootstrap_stat(records, replications, seed,
                          [&spec](const std::vector<WageRecord>& s) { return estimate_bunching(s, spec).theta; });
}

// ---------------------------------------------------------------------------
// Conditional theta by covariate cells
// ---------------------------------------------------------------------------

struct ThetaCell {
    std::string covariate;
    std::string label;
    double theta = 0.0;
    double se = 0.0;
    std::int64_t n = 0;
    double mean_covariate = 0.0; // cell mean of the first partitioning covariate
};

enum class SmallCellPolicy { Drop, Error };

struct CellSpec {
    std::vector<std::string> covariates; // cell key = tuple of their values
    int quantile_cells = 0;              // >0: continuous covariates cut at quantiles
    std::int64_t min_cell_n = 1000;
    SmallCellPolicy policy = SmallCellPolicy::Drop;
};

namespace detail {

inline std::vector<double> quantile_edges(std::vector<double> values, int cells) {
    std::sort(values.begin(), values.end());
    std::vector<double> edges;
    for (int k = 1; k < cells; ++k) {
        const auto rank = static_cast<std::size_t>(
            std::ceil(static_cast<double>(k) / cells * static_cast<double>(values.size())));
        edges.push_back(values[std::min(values.size() - 1, rank == 0 ? 0 : rank - 1)]);
    }
    return edges;
}

} // namespace detail

/// Runs the full bunching pipeline per covariate cell (cell-specific fit
/// windows). Continuous covariates are cut into quantile cells when
/// spec.quantile_cells > 0, else each distinct value is its own cell.
inline std::vector<ThetaCell> conditional_theta(const std::vector<WageRecord>& records, const CellSpec& cells,
                                                const BunchingSpec& spec, int bootstrap_b = 0,
                                                std::uint64_t seed = 1) {
    if (cells.covariates.empty()) throw std::invalid_argument("conditional_theta: no covariates");

    std::map<std::string, std::vector<double>> edges;
    if (cells.quantile_cells > 0) {
        for (const auto& name : cells.covariates) {
            std::vector<double> vals;
            vals.reserve(records.size());
            for (const auto& r : records) vals.push_back(covariate_value(r, name));
            edges[name] = detail::quantile_edges(std::move(vals), cells.quantile_cells);
        }
    }

    auto cell_of = [&](const WageRecord& r, const std::string& name) {
        const double v = covariate_value(r, name);
        if (cells.quantile_cells <= 0) return name + "=" + std::to_string(v);
        const auto& e = edges[name];
        const auto it = std::upper_bound(e.begin(), e.end(), v);
        return name + "#q" + std::to_string(it - e.begin() + 1);
    };

    std::map<std::string, std::vector<WageRecord>> groups;
    for (const auto& r : records) {
        std::string key;
        for (const auto& name : cells.covariates) {
            if (!key.empty()) key += ",";
            key += cell_of(r, name);
        }
        groups[key].push_back(r);
    }

    const std::string covname = std::accumulate(
        std::next(cells.covariates.begin()), cells.covariates.end(), cells.covariates.front(),
        [](std::string a, const std::string& b) { return std::move(a) + "," + b; });

    std::vector<ThetaCell> out;
    std::uint64_t cell_idx = 0;
    for (auto& [label, recs] : groups) {
        ++cell_idx;
        if (static_cast<std::int64_t>(recs.size()) < cells.min_cell_n) {
            if (cells.policy == SmallCellPolicy::Error)
                throw FitError("conditional_theta: cell " + label + " has only " + std::to_string(recs.size()) +
                               " records (min " + std::to_string(cells.min_cell_n) + ")");
            continue;
        }
        ThetaCell cell;
        cell.covariate = covname;
        cell.label = label;
        cell.n = static_cast<std::int64_t>(recs.size());
        for (const auto& r : recs) cell.mean_covariate += covariate_value(r, cells.covariates.front());
        cell.mean_covariate /= static_cast<double>(recs.size());
        const BunchingEstimate est = estimate_bunching(recs, spec);
        cell.theta = est.theta;
        if (bootstrap_b >= 2) cell.se = bootstrap_theta(recs, spec, bootstrap_b, mix_seed(seed, cell_idx)).se;
        out.push_back(std::move(cell));
    }
    if (out.empty()) throw FitError("conditional_theta: all cells infeasible or undersized");
    return out;
}

} // namespace coarsewage

#endif
