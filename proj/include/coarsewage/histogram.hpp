#ifndef COARSEWAGE_HISTOGRAM_HPP
#define COARSEWAGE_HISTOGRAM_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coarsewage/money.hpp"
#include "coarsewage/records.hpp"

namespace coarsewage {

struct HistogramSpec {
    Money bin_width = from_reais(std::int64_t{1});
    Money support_hi = from_centavos(1010000); // winsorization cap, R$10,100
    Money excluded_mw = from_centavos(0);      // wages exactly at the MW are dropped
};

/// R$1-bin counts over [support_lo, support_hi]. Bin b covers wages in
/// [b, b + width); wages above support_hi accumulate into the top bin.
struct WageHistogram {
    Money bin_width{};
    Money support_lo{};
    Money support_hi{};
    Money excluded_mw{};
    std::vector<std::int64_t> counts; // indexed by bin, counts[i] is bin support_lo + i*width
    std::int64_t n = 0;               // total count in bins
    std::int64_t dropped_at_mw = 0;

    std::int64_t n_bins() const { return static_cast<std::int64_t>(counts.size()); }

    Money bin_value(std::int64_t i) const {
        return from_centavos(support_lo.centavos + i * bin_width.centavos);
    }

    /// Bin index containing wage w; the top bin absorbs everything above it.
    std::int64_t bin_index(Money w) const {
        if (w < support_lo) throw std::out_of_range("wage below histogram support");
        std::int64_t i = (w.centavos - support_lo.centavos) / bin_width.centavos;
        return i >= n_bins() ? n_bins() - 1 : i;
    }

    bool is_top_bin(std::int64_t i) const { return i == n_bins() - 1; }
};

/// Bin all record wages. Wages exactly at spec.excluded_mw are dropped and
/// counted in dropped_at_mw; support_lo defaults to the floor of the lowest
/// retained wage.
inline WageHistogram build_histogram(const std::vector<WageRecord>& records, const HistogramSpec& spec) {
    if (spec.bin_width.centavos <= 0) throw std::invalid_argument("build_histogram: bin width must be positive");

    Money lo = spec.support_hi;
    bool any = false;
    for (const auto& r : records) {
        if (r.contracted_wage == spec.excluded_mw) continue;
        any = true;
        if (r.contracted_wage < lo) lo = r.contracted_wage;
    }
    if (!any) throw std::runtime_error("build_histogram: no records left after excluding the minimum wage");

    WageHistogram h;
    h.bin_width = spec.bin_width;
    // Align the support to the bin grid (whole-real grid for R$1 bins).
    h.support_lo = from_centavos((lo.centavos / spec.bin_width.centavos) * spec.bin_width.centavos);
    h.support_hi = spec.support_hi;
    h.excluded_mw = spec.excluded_mw;
    if (h.support_hi < h.support_lo) throw std::invalid_argument("build_histogram: winsorization cap below lowest wage");

    const std::int64_t nb = (h.support_hi.centavos - h.support_lo.centavos) / spec.bin_width.centavos + 1;
    h.counts.assign(static_cast<std::size_t>(nb), 0);

    for (const auto& r : records) {
        if (r.contracted_wage == spec.excluded_mw) {
            ++h.dropped_at_mw;
            continue;
        }
        ++h.counts[static_cast<std::size_t>(h.bin_index(r.contracted_wage))];
        ++h.n;
    }
    return h;
}

} // namespace coarsewage

#endif
