#ifndef COARSEWAGE_SPILLOVER_HPP
#define COARSEWAGE_SPILLOVER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coarsewage/errors.hpp"
#include "coarsewage/money.hpp"
#include "coarsewage/records.hpp"

namespace coarsewage {

/// Wage-transition accounting around a minimum-wage increase.
/// Panels by origin wage: A at MW_t, B in (MW_t, MW_{t+1}), C at or above
/// MW_{t+1}; rows split by round vs non-round origin. Destination shares:
/// at the new MW, round, non-round, and the two excluding-the-new-MW columns.
/// Within each row, at_mw + round_excl_mw + nonround_excl_mw = 1 and
/// round + nonround = 1.
struct TransitionRow {
    std::string panel;   // "A", "B", "C"
    bool round_origin = false;
    std::int64_t n = 0;
    double origin_share = 0.0;
    double at_mw = 0.0;
    double round = 0.0;
    double nonround = 0.0;
    double round_excl_mw = 0.0;
    double nonround_excl_mw = 0.0;
};

struct TransitionTable {
    Money mw_t{}, mw_t1{};
    std::array<TransitionRow, 6> rows; // A-round, A-nonround, B-round, B-nonround, C-round, C-nonround
    std::int64_t n_total = 0;
    std::int64_t n_excluded_below_mw = 0;
    std::int64_t n_missing_next = 0;
    std::optional<double> did;                // B-round minus C-round nonround_excl_mw shares
    std::optional<double> ratio_to_benchmark; // B-round share over C-nonround share

    const TransitionRow& row(char panel, bool round_origin) const {
        const std::size_t base = panel == 'A' ? 0 : panel == 'B' ? 2 : 4;
        return rows[base + (round_origin ? 0 : 1)];
    }
};

/// Build the transition table from records carrying next-year wages.
/// Records hired below MW_t are excluded; records lacking a next-year wage
/// are counted and skipped.
inline TransitionTable spillover_table(const std::vector<WageRecord>& records, Money mw_t, Money mw_t1) {
    if (mw_t1 < mw_t) throw ConfigError("spillover_table: MW_{t+1} below MW_t");

    TransitionTable tab;
    tab.mw_t = mw_t;
    tab.mw_t1 = mw_t1;
    const char* panels = "ABC";
    for (int p = 0; p < 3; ++p)
        for (int o = 0; o < 2; ++o) {
            tab.rows[static_cast<std::size_t>(2 * p + o)].panel = std::string(1, panels[p]);
            tab.rows[static_cast<std::size_t>(2 * p + o)].round_origin = o == 0;
        }

    std::array<std::array<std::int64_t, 4>, 6> counts{}; // per row: [at_mw, round_excl, nonround_excl, n]
    for (const auto& r : records) {
        if (r.contracted_wage < mw_t) {
            ++tab.n_excluded_below_mw;
            continue;
        }
        if (!r.wage_next_year) {
            ++tab.n_missing_next;
            continue;
        }
        int p;
        if (r.contracted_wage == mw_t) p = 0;
        else if (r.contracted_wage < mw_t1) p = 1;
        else p = 2;
        const int o = is_divisible(r.contracted_wage, Grain::k10) ? 0 : 1;
        auto& c = counts[static_cast<std::size_t>(2 * p + o)];
        const Money next = *r.wage_next_year;
        if (next == mw_t1) ++c[0];
        else if (is_divisible(next, Grain::k10)) ++c[1];
        else ++c[2];
        ++c[3];
        ++tab.n_total;
    }

    const bool mw1_round = is_divisible(mw_t1, Grain::k10);
    for (std::size_t i = 0; i < 6; ++i) {
        auto& row = tab.rows[i];
        row.n = counts[i][3];
        if (tab.n_total > 0) row.origin_share = static_cast<double>(row.n) / static_cast<double>(tab.n_total);
        if (row.n == 0) continue;
        const double n = static_cast<double>(row.n);
        row.at_mw = static_cast<double>(counts[i][0]) / n;
        row.round_excl_mw = static_cast<double>(counts[i][1]) / n;
        row.nonround_excl_mw = static_cast<double>(counts[i][2]) / n;
        row.round = row.round_excl_mw + (mw1_round ? row.at_mw : 0.0);
        row.nonround = row.nonround_excl_mw + (mw1_round ? 0.0 : row.at_mw);
    }

    const TransitionRow& b_round = tab.row('B', true);
    const TransitionRow& c_round = tab.row('C', true);
    const TransitionRow& c_nonround = tab.row('C', false);
    if (b_round.n > 0 && c_round.n > 0) tab.did = b_round.nonround_excl_mw - c_round.nonround_excl_mw;
    if (b_round.n > 0 && c_nonround.n > 0 && c_nonround.nonround_excl_mw > 0.0)
        tab.ratio_to_benchmark = b_round.nonround_excl_mw / c_nonround.nonround_excl_mw;
    return tab;
}

} // namespace coarsewage

#endif
