#ifndef COARSEWAGE_DESCRIPTIVES_HPP
#define COARSEWAGE_DESCRIPTIVES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "coarsewage/money.hpp"
#include "coarsewage/records.hpp"

namespace coarsewage {

/// Gini coefficient: mean absolute difference over twice the mean, computed
/// with the sorted-prefix identity sum_i (2i - n - 1) x_(i) / (n^2 * mean).
inline double gini(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("gini: empty input");
    double total = 0.0;
    for (double v : values) {
        if (v < 0.0) throw std::invalid_argument("gini: negative value");
        total += v;
    }
    if (total <= 0.0) throw std::invalid_argument("gini: all values zero");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        acc += (2.0 * (static_cast<double>(i) + 1.0) - n - 1.0) * values[i];
    return acc / (n * total);
}

/// Nearest-rank empirical quantile: smallest order statistic whose rank
/// fraction reaches p (p in percent).
inline double nearest_rank_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    if (!(p > 0.0 && p < 100.0)) throw std::invalid_argument("quantile: p must lie in (0,100)");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

/// Ratio of the hi-th to the lo-th percentile (nearest-rank definition).
inline double percentile_ratio(const std::vector<double>& values, double hi, double lo) {
    if (values.size() < 2) throw std::invalid_argument("percentile_ratio: need at least 2 values");
    if (!(0.0 < lo && lo < hi && hi < 100.0)) throw std::invalid_argument("percentile_ratio: need 0 < lo < hi < 100");
    const double denom = nearest_rank_quantile(values, lo);
    if (denom == 0.0) throw std::domain_error("percentile_ratio: zero denominator quantile");
    return nearest_rank_quantile(values, hi) / denom;
}

// ---------------------------------------------------------------------------
// Bunching-firm classification
// ---------------------------------------------------------------------------

struct FirmProfile {
    std::int64_t firm_id = 0;
    std::int64_t n_hires = 0;
    std::int64_t n_round = 0;       // divisible by 10
    std::int64_t n_round100 = 0;    // divisible by 100
    std::int64_t n_yearly_round = 0; // 12x monthly wage divisible by 10
    double share_round = 0.0;
    bool all_round = false;
    bool more_than_half = false;     // strict: n_round * 2 > n
    bool more_than_two_thirds = false;
    bool all_round100 = false;
    bool all_yearly_round = false;
};

/// Per-firm round-hiring shares and the bunching-firm definition flags.
/// Callers are expected to have pre-excluded MW hires and non-monthly
/// contracts (ingestion handles both filters).
inline std::vector<FirmProfile> classify_firms(const std::vector<WageRecord>& records) {
    std::map<std::int64_t, FirmProfile> by_firm;
    for (const auto& r : records) {
        FirmProfile& f = by_firm[r.firm_id];
        f.firm_id = r.firm_id;
        ++f.n_hires;
        if (is_divisible(r.contracted_wage, Grain::k10)) ++f.n_round;
        if (is_divisible(r.contracted_wage, Grain::k100)) ++f.n_round100;
        if (is_divisible(Money{r.contracted_wage.centavos * 12}, Grain::k10)) ++f.n_yearly_round;
    }
    std::vector<FirmProfile> out;
    out.reserve(by_firm.size());
    for (auto& [id, f] : by_firm) {
        f.share_round = static_cast<double>(f.n_round) / static_cast<double>(f.n_hires);
        f.all_round = f.n_round == f.n_hires;
        f.more_than_half = 2 * f.n_round > f.n_hires;
        f.more_than_two_thirds = 3 * f.n_round > 2 * f.n_hires;
        f.all_round100 = f.n_round100 == f.n_hires;
        f.all_yearly_round = f.n_yearly_round == f.n_hires;
        out.push_back(f);
    }
    return out;
}

enum class BunchingDefinition { AllRound, MoreThanHalf, MoreThanTwoThirds, AllRound100, AllYearlyRound };

inline std::map<std::int64_t, bool> bunching_flags(const std::vector<FirmProfile>& profiles,
                                                   BunchingDefinition def = BunchingDefinition::AllRound) {
    std::map<std::int64_t, bool> flags;
    for (const auto& f : profiles) {
        switch (def) {
        case BunchingDefinition::AllRound: flags[f.firm_id] = f.all_round; break;
        case BunchingDefinition::MoreThanHalf: flags[f.firm_id] = f.more_than_half; break;
        case BunchingDefinition::MoreThanTwoThirds: flags[f.firm_id] = f.more_than_two_thirds; break;
        case BunchingDefinition::AllRound100: flags[f.firm_id] = f.all_round100; break;
        case BunchingDefinition::AllYearlyRound: flags[f.firm_id] = f.all_yearly_round; break;
        }
    }
    return flags;
}

// ---------------------------------------------------------------------------
// Nominal stickiness
// ---------------------------------------------------------------------------

struct StickinessSummary {
    std::vector<char> sticky;    // aligned with the records that had a next-year wage
    std::vector<std::size_t> index; // positions of those records in the input
    std::int64_t n_with_next = 0;
    std::int64_t n_skipped = 0;
    double share_sticky = 0.0;
};

/// Indicator for the nominal salary staying exactly constant into the next
/// year (exact centavo comparison).
inline StickinessSummary stickiness_indicator(const std::vector<WageRecord>& records) {
    StickinessSummary s;
    std::int64_t n_sticky = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.wage_next_year) {
            ++s.n_skipped;
            continue;
        }
        const bool st = *r.wage_next_year == r.contracted_wage;
        s.sticky.push_back(st ? 1 : 0);
        s.index.push_back(i);
        ++s.n_with_next;
        if (st) ++n_sticky;
    }
    if (s.n_with_next > 0)
        s.share_sticky = static_cast<double>(n_sticky) / static_cast<double>(s.n_with_next);
    return s;
}

} // namespace coarsewage

#endif
