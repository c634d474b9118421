#ifndef COARSEWAGE_MONEY_HPP
#define COARSEWAGE_MONEY_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace coarsewage {

/// Monetary amount as an exact count of centavos (1/100 R$).
/// All divisibility and integer-percent predicates are exact-integer
/// statements; floating point would produce false negatives.
struct Money {
    std::int64_t centavos = 0;

    constexpr std::int64_t whole_reais() const { return centavos / 100; }
    constexpr std::int64_t cents() const { return centavos % 100; }

    friend constexpr bool operator==(Money a, Money b) { return a.centavos == b.centavos; }
    friend constexpr bool operator!=(Money a, Money b) { return a.centavos != b.centavos; }
    friend constexpr bool operator<(Money a, Money b) { return a.centavos < b.centavos; }
    friend constexpr bool operator<=(Money a, Money b) { return a.centavos <= b.centavos; }
    friend constexpr bool operator>(Money a, Money b) { return a.centavos > b.centavos; }
    friend constexpr bool operator>=(Money a, Money b) { return a.centavos >= b.centavos; }
};

constexpr Money from_centavos(std::int64_t c) { return Money{c}; }
constexpr Money from_reais(std::int64_t r) { return Money{r * 100}; }

/// Nearest-centavo representation of a real-valued wage in reais.
inline Money from_reais(double r) {
    return Money{static_cast<std::int64_t>(std::llround(r * 100.0))};
}

inline double to_reais(Money m) { return static_cast<double>(m.centavos) / 100.0; }

/// Grain of a round number, in whole reais. {10, 100, 1000} in the data;
/// 1 appears only as the finest rung of the precision ladder.
enum class Grain : std::int64_t {
    k1 = 1,
    k10 = 10,
    k100 = 100,
    k1000 = 1000,
};

constexpr std::int64_t grain_reais(Grain g) { return static_cast<std::int64_t>(g); }
constexpr std::int64_t grain_centavos(Grain g) { return grain_reais(g) * 100; }

inline Grain grain_from_int(std::int64_t g) {
    switch (g) {
    case 1: return Grain::k1;
    case 10: return Grain::k10;
    case 100: return Grain::k100;
    case 1000: return Grain::k1000;
    default: throw std::domain_error("grain must be one of {1,10,100,1000}, got " + std::to_string(g));
    }
}

/// True iff w has zero centavos and its whole-real value is a multiple of g.
constexpr bool is_divisible(Money w, Grain g) {
    return w.cents() == 0 && (w.whole_reais() % grain_reais(g)) == 0;
}

/// Multiple of g nearest to w; exact halves round away from zero.
inline Money round_to_nearest(Money w, Grain g) {
    if (w.centavos < 0) throw std::domain_error("round_to_nearest: negative amount");
    const std::int64_t gc = grain_centavos(g);
    const std::int64_t q = w.centavos / gc;
    const std::int64_t rem = w.centavos % gc;
    return Money{(2 * rem >= gc ? q + 1 : q) * gc};
}

/// True iff the wage change is a nonzero multiple of R$10 in absolute value.
constexpr bool is_round_increase(Money w0, Money w1) {
    const std::int64_t d = w1.centavos >= w0.centavos ? w1.centavos - w0.centavos
                                                      : w0.centavos - w1.centavos;
    return d > 0 && is_divisible(Money{d}, Grain::k10);
}

/// True iff the percent change from w0 to w1 is a nonzero integer,
/// decided in exact centavo arithmetic: 100*(w1-w0) ≡ 0 (mod w0).
constexpr bool is_integer_pct_increase(Money w0, Money w1) {
    if (w0.centavos <= 0) throw std::domain_error("is_integer_pct_increase: base wage must be positive");
    const std::int64_t d = w1.centavos - w0.centavos;
    return d != 0 && (100 * d) % w0.centavos == 0;
}

/// Tolerance variant for float-typed external data: |pct - nearest integer| < tol.
inline bool is_integer_pct_increase_approx(double w0, double w1, double tol = 1e-9) {
    if (w0 <= 0.0) throw std::domain_error("is_integer_pct_increase_approx: base wage must be positive");
    const double pct = 100.0 * (w1 - w0) / w0;
    if (pct == 0.0) return false;
    return std::abs(pct - std::round(pct)) < tol;
}

/// The multiples of `grain` with zero centavos inside [support_lo, support_hi].
class RoundSet {
public:
    RoundSet(Grain grain, Money support_lo, Money support_hi)
        : grain_(grain), lo_(support_lo), hi_(support_hi) {
        if (support_hi < support_lo) throw std::domain_error("RoundSet: empty support");
    }

    Grain grain() const { return grain_; }
    Money support_lo() const { return lo_; }
    Money support_hi() const { return hi_; }

    bool contains(Money w) const { return w >= lo_ && w <= hi_ && is_divisible(w, grain_); }

    std::vector<Money> values() const {
        std::vector<Money> out;
        const std::int64_t gc = grain_centavos(grain_);
        std::int64_t first = ((lo_.centavos + gc - 1) / gc) * gc;
        for (std::int64_t c = first; c <= hi_.centavos; c += gc) out.push_back(Money{c});
        return out;
    }

private:
    Grain grain_;
    Money lo_, hi_;
};

struct DivisibilityShare {
    double share = 0.0;           // fraction of wages divisible by the grain
    double uniform_baseline = 0.0; // 1/g, the share under uniformly distributed last digits
    std::int64_t count = 0;
};

/// Fraction of wages divisible by each grain, with uniform-distribution baselines.
inline std::map<std::int64_t, DivisibilityShare>
divisibility_shares(const std::vector<Money>& wages, const std::vector<Grain>& grains) {
    if (wages.empty()) throw std::invalid_argument("divisibility_shares: no wages");
    std::map<std::int64_t, DivisibilityShare> out;
    for (Grain g : grains) {
        DivisibilityShare s;
        for (Money w : wages)
            if (is_divisible(w, g)) ++s.count;
        s.share = static_cast<double>(s.count) / static_cast<double>(wages.size());
        s.uniform_baseline = 1.0 / static_cast<double>(grain_reais(g));
        out[grain_reais(g)] = s;
    }
    return out;
}

} // namespace coarsewage

#endif
