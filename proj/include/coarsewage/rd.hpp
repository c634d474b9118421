#ifndef COARSEWAGE_RD_HPP
#define COARSEWAGE_RD_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "coarsewage/errors.hpp"
#include "coarsewage/histogram.hpp"
#include "coarsewage/records.hpp"
#include "coarsewage/regression.hpp"

namespace coarsewage {

enum class RdOutcome { Resigned, Separated };
enum class RdCluster { Worker, Firm };

/// Discontinuity in a worker outcome at a round salary r:
///   y_i = alpha + nu*(w_i - r) + beta*1{w_i = r} + gamma*1{w_i > r}
///         + delta*(w_i - r)*1{w_i > r},  estimated on |w_i - r| <= h.
/// beta contrasts earners of exactly r against just-below earners; gamma
/// contrasts just-above against just-below.
struct RdFit {
    Money target{};
    double bandwidth = 0.0; // reais
    OlsFit ols;
    std::int64_t n_below = 0, n_at = 0, n_above = 0;

    double beta() const { return ols["beta_r"].estimate; }
    double beta_se() const { return ols["beta_r"].se; }
    double gamma() const { return ols["gamma_r"].estimate; }
    double gamma_se() const { return ols["gamma_r"].se; }
};

inline RdFit rd_outcome(const std::vector<WageRecord>& records, Money r, double bandwidth_reais,
                        RdOutcome outcome, RdCluster cluster = RdCluster::Worker) {
    const std::int64_t h_c = static_cast<std::int64_t>(std::llround(bandwidth_reais * 100.0));

    std::vector<std::size_t> in;
    std::int64_t below = 0, at = 0, above = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::int64_t d = records[i].contracted_wage.centavos - r.centavos;
        if (d < -h_c || d > h_c) continue;
        in.push_back(i);
        if (d < 0) ++below;
        else if (d == 0) ++at;
        else ++above;
    }
    if (below < 10) throw FitError("rd_outcome: insufficient support below R$" + std::to_string(r.whole_reais()) +
                                   " (" + std::to_string(below) + " obs)");
    if (above < 10) throw FitError("rd_outcome: insufficient support above R$" + std::to_string(r.whole_reais()) +
                                   " (" + std::to_string(above) + " obs)");
    if (at < 1) throw FitError("rd_outcome: no observations at R$" + std::to_string(r.whole_reais()));

    const auto n = static_cast<Eigen::Index>(in.size());
    Eigen::MatrixXd X(n, 5);
    Eigen::VectorXd y(n);
    std::vector<std::int64_t> clusters(in.size());
    for (Eigen::Index row = 0; row < n; ++row) {
        const WageRecord& rec = records[in[static_cast<std::size_t>(row)]];
        const double w_c = to_reais(rec.contracted_wage) - to_reais(r); // centered running wage
        const bool is_at = rec.contracted_wage == r;
        const bool is_above = rec.contracted_wage > r;
        X(row, 0) = 1.0;
        X(row, 1) = w_c;
        X(row, 2) = is_at ? 1.0 : 0.0;
        X(row, 3) = is_above ? 1.0 : 0.0;
        X(row, 4) = is_above ? w_c : 0.0;
        y(row) = (outcome == RdOutcome::Resigned ? rec.resigned : rec.separated) ? 1.0 : 0.0;
        clusters[static_cast<std::size_t>(row)] = cluster == RdCluster::Worker ? rec.worker_id : rec.firm_id;
    }

    RdFit fit;
    fit.target = r;
    fit.bandwidth = bandwidth_reais;
    fit.ols = ols_cluster(X, y, clusters, {"alpha", "nu", "beta_r", "gamma_r", "delta_r"});
    fit.n_below = below;
    fit.n_at = at;
    fit.n_above = above;
    return fit;
}

/// Discontinuity in the bin shares around r (the bin at r itself excluded):
///   C_b/N = alpha + beta*1{w_b > r} + nu*(w_b - r) + delta*(w_b - r)*1{w_b > r}.
/// N is the window total excluding the r bin, so shares sum to one.
struct DensityRdFit {
    Money target{};
    double bandwidth = 0.0;
    OlsFit ols;
    std::int64_t window_total = 0;
    int n_bins = 0;

    double beta() const { return ols["beta_r"].estimate; }
    double beta_se() const { return ols["beta_r"].se; }
};

inline DensityRdFit rd_density(const WageHistogram& hist, Money r, double bandwidth_reais) {
    const std::int64_t h_c = static_cast<std::int64_t>(std::llround(bandwidth_reais * 100.0));

    std::vector<std::int64_t> bins;
    int per_side_lo = 0, per_side_hi = 0;
    for (std::int64_t b = 0; b < hist.n_bins(); ++b) {
        const std::int64_t d = hist.bin_value(b).centavos - r.centavos;
        if (d == 0 || d < -h_c || d > h_c) continue;
        if (hist.is_top_bin(b)) continue;
        bins.push_back(b);
        (d < 0 ? per_side_lo : per_side_hi)++;
    }
    if (per_side_lo < 3 || per_side_hi < 3)
        throw FitError("rd_density: need at least 3 bins on each side of R$" + std::to_string(r.whole_reais()));

    std::int64_t total = 0;
    for (std::int64_t b : bins) total += hist.counts[static_cast<std::size_t>(b)];
    if (total <= 0) throw FitError("rd_density: empty window around R$" + std::to_string(r.whole_reais()));

    const auto n = static_cast<Eigen::Index>(bins.size());
    Eigen::MatrixXd X(n, 4);
    Eigen::VectorXd y(n);
    std::vector<std::int64_t> clusters(bins.size());
    for (Eigen::Index row = 0; row < n; ++row) {
        const std::int64_t b = bins[static_cast<std::size_t>(row)];
        const double w_c = to_reais(hist.bin_value(b)) - to_reais(r);
        const bool above = hist.bin_value(b) > r;
        X(row, 0) = 1.0;
        X(row, 1) = above ? 1.0 : 0.0;
        X(row, 2) = w_c;
        X(row, 3) = above ? w_c : 0.0;
        y(row) = static_cast<double>(hist.counts[static_cast<std::size_t>(b)]) / static_cast<double>(total);
        clusters[static_cast<std::size_t>(row)] = b; // singleton clusters: HC1
    }

    DensityRdFit fit;
    fit.target = r;
    fit.bandwidth = bandwidth_reais;
    fit.ols = ols_cluster(X, y, clusters, {"alpha", "beta_r", "nu", "delta"});
    fit.window_total = total;
    fit.n_bins = static_cast<int>(bins.size());
    return fit;
}

/// N-weighted average of per-round RD coefficients (the paper's summary line
/// across all round numbers).
struct WeightedRd {
    double beta = 0.0, beta_se = 0.0;
    double gamma = 0.0, gamma_se = 0.0;
};

inline WeightedRd weighted_rd_average(const std::vector<RdFit>& fits) {
    if (fits.empty()) throw std::invalid_argument("weighted_rd_average: no fits");
    double wsum = 0.0;
    WeightedRd out;
    double vb = 0.0, vg = 0.0;
    for (const auto& f : fits) {
        const double w = static_cast<double>(f.ols.n_obs);
        wsum += w;
        out.beta += w * f.beta();
        out.gamma += w * f.gamma();
        vb += w * w * f.beta_se() * f.beta_se();
        vg += w * w * f.gamma_se() * f.gamma_se();
    }
    out.beta /= wsum;
    out.gamma /= wsum;
    out.beta_se = std::sqrt(vb) / wsum;
    out.gamma_se = std::sqrt(vg) / wsum;
    return out;
}

} // namespace coarsewage

#endif
