#ifndef COARSEWAGE_LABOR_MODEL_HPP
#define COARSEWAGE_LABOR_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "coarsewage/money.hpp"

namespace coarsewage {

// ---------------------------------------------------------------------------
// Labor supply curves
// ---------------------------------------------------------------------------

/// Constant-elasticity labor supply l(w) = scale * (w / reference_wage)^elasticity.
/// The point elasticity l'(w)w/l(w) equals `elasticity` at every wage, so the
/// closed-form optimum w* = p*eta/(1+eta) holds globally.
struct PowerSupply {
    double scale = 1.0;
    double elasticity = 1.0;
    double reference_wage = 1.0;

    double l(double w) const { return scale * std::pow(w / reference_wage, elasticity); }
    double dl(double w) const { return elasticity * l(w) / w; }
    double point_elasticity(double) const { return elasticity; }
};

/// Linear labor supply l(w) = slope * (w - reservation_wage). The point
/// elasticity w/(w - reservation_wage) varies along the curve; profit is
/// quadratic, so the first-order expansion of l is exact.
struct LinearSupply {
    double slope = 1.0;
    double reservation_wage = 0.0;

    double l(double w) const { return slope * (w - reservation_wage); }
    double dl(double) const { return slope; }
    double point_elasticity(double w) const { return w / (w - reservation_wage); }
};

using LaborSupply = std::variant<PowerSupply, LinearSupply>;

inline double supply_l(const LaborSupply& s, double w) {
    return std::visit([w](const auto& c) { return c.l(w); }, s);
}
inline double supply_elasticity(const LaborSupply& s, double w) {
    return std::visit([w](const auto& c) { return c.point_elasticity(w); }, s);
}

/// Linear supply calibrated so that at productivity p the profit-maximizing
/// wage is p*eta/(1+eta) with point elasticity eta there.
inline LinearSupply linear_supply_with_elasticity(double p, double eta, double slope = 1.0) {
    if (p <= 0.0 || eta <= 0.0) throw std::domain_error("linear_supply_with_elasticity: p, eta must be positive");
    return LinearSupply{slope, p * (eta - 1.0) / (1.0 + eta)};
}

// ---------------------------------------------------------------------------
// Frictionless optimum, profit, and gain functions
// ---------------------------------------------------------------------------

/// Profit-maximizing posted wage under wage posting: w* = p * eta / (1 + eta).
inline double optimal_wage(double p, double eta) {
    if (p <= 0.0) throw std::domain_error("optimal_wage: productivity must be positive");
    if (eta <= 0.0) throw std::domain_error("optimal_wage: elasticity must be positive");
    return p * eta / (1.0 + eta);
}

/// Expected profit from posting w: l(w) * (p - w). Negative for w > p.
inline double profit(double w, double p, const LaborSupply& supply) {
    if (w <= 0.0) throw std::domain_error("profit: wage must be positive");
    return supply_l(supply, w) * (p - w);
}

/// Profit-maximizing wage under `supply` at productivity p: closed-form for
/// PowerSupply, (p + reservation_wage)/2 for LinearSupply.
inline double supply_optimum(const LaborSupply& supply, double p) {
    if (const auto* pow = std::get_if<PowerSupply>(&supply)) return optimal_wage(p, pow->elasticity);
    return 0.5 * (p + std::get<LinearSupply>(supply).reservation_wage);
}

/// Exact profit forgone by posting w_r instead of the optimum of `supply` at p.
/// Linear supply has quadratic profit, so the gain is slope*(w_r - w*)^2
/// exactly; evaluating it that way avoids cancellation near the optimum.
inline double gain_exact(double w_r, double p, const LaborSupply& supply) {
    if (w_r <= 0.0) throw std::domain_error("gain_exact: wage must be positive");
    const double w_star = supply_optimum(supply, p);
    if (const auto* lin = std::get_if<LinearSupply>(&supply))
        return lin->slope * (w_r - w_star) * (w_r - w_star);
    return profit(w_star, p, supply) - profit(w_r, p, supply);
}

/// Second-hand gain approximation pi(w*) * eta^2 * wedge^2, with
/// wedge = (w_r - w*)/w*. Exact for linear supply at any wedge.
inline double gain_taylor(double w_r, double p, double eta, const LaborSupply& supply) {
    if (w_r <= 0.0) throw std::domain_error("gain_taylor: wage must be positive");
    const double w_star = optimal_wage(p, eta);
    const double wedge = (w_r - w_star) / w_star;
    return profit(w_star, p, supply) * eta * eta * wedge * wedge;
}

// ---------------------------------------------------------------------------
// Optimization-cost distribution F_tau
// ---------------------------------------------------------------------------

/// Distribution of the profit fraction tau forgone to optimize.
/// Families: uniform on [a,b) in [0,1); point mass; empirical sample.
class CostDistribution {
public:
    static CostDistribution uniform(double a, double b) {
        if (!(0.0 <= a && a <= b && b < 1.0)) throw std::domain_error("CostDistribution::uniform: need 0 <= a <= b < 1");
        CostDistribution d;
        d.kind_ = Kind::Uniform;
        d.a_ = a;
        d.b_ = b;
        return d;
    }
    static CostDistribution point_mass(double tau) {
        if (!(0.0 <= tau && tau < 1.0)) throw std::domain_error("CostDistribution::point_mass: need tau in [0,1)");
        CostDistribution d;
        d.kind_ = Kind::Point;
        d.a_ = tau;
        return d;
    }
    static CostDistribution empirical(std::vector<double> sample) {
        if (sample.empty()) throw std::domain_error("CostDistribution::empirical: empty sample");
        for (double t : sample)
            if (!(0.0 <= t && t < 1.0)) throw std::domain_error("CostDistribution::empirical: values must lie in [0,1)");
        CostDistribution d;
        d.kind_ = Kind::Empirical;
        d.sample_ = std::move(sample);
        std::sort(d.sample_.begin(), d.sample_.end());
        return d;
    }

    /// F_tau(x) = P(tau <= x).
    double cdf(double x) const {
        switch (kind_) {
        case Kind::Uniform:
            if (x < a_) return 0.0;
            if (x >= b_) return 1.0;
            return b_ == a_ ? 1.0 : (x - a_) / (b_ - a_);
        case Kind::Point:
            return x >= a_ ? 1.0 : 0.0;
        case Kind::Empirical: {
            const auto it = std::upper_bound(sample_.begin(), sample_.end(), x);
            return static_cast<double>(it - sample_.begin()) / static_cast<double>(sample_.size());
        }
        }
        return 0.0;
    }

    /// Inverse-CDF draw from a uniform variate in [0,1).
    double quantile(double u) const {
        switch (kind_) {
        case Kind::Uniform:
            return a_ + u * (b_ - a_);
        case Kind::Point:
            return a_;
        case Kind::Empirical: {
            auto idx = static_cast<std::size_t>(u * static_cast<double>(sample_.size()));
            if (idx >= sample_.size()) idx = sample_.size() - 1;
            return sample_[idx];
        }
        }
        return 0.0;
    }

private:
    enum class Kind { Uniform, Point, Empirical };
    Kind kind_ = Kind::Point;
    double a_ = 0.0, b_ = 0.0;
    std::vector<double> sample_;
};

/// theta = P(tau > eta^2 * wedge^2) = 1 - F_tau(eta^2 * wedge^2):
/// the probability that a firm posts the coarse wage.
inline double coarse_probability(double eta, double wedge, const CostDistribution& costs) {
    if (!std::isfinite(wedge)) throw std::domain_error("coarse_probability: wedge must be finite");
    return 1.0 - costs.cdf(eta * eta * wedge * wedge);
}

// ---------------------------------------------------------------------------
// Mixture of coarse and fully-optimal wage distributions
// ---------------------------------------------------------------------------

using Cdf = std::function<double(double)>;

/// F_w = theta * F_coarse + (1 - theta) * F_optimal, evaluable at any wage.
inline Cdf mixture_cdf(double theta, Cdf coarse_cdf, Cdf optimal_cdf) {
    if (!(0.0 <= theta && theta <= 1.0)) throw std::domain_error("mixture_cdf: theta must lie in [0,1]");
    return [theta, coarse = std::move(coarse_cdf), opt = std::move(optimal_cdf)](double w) {
        return theta * coarse(w) + (1.0 - theta) * opt(w);
    };
}

// ---------------------------------------------------------------------------
// Multi-digit precision decision (grain ladder)
// ---------------------------------------------------------------------------

struct LadderCosts {
    double tau_100 = 0.0; // step 1000 -> 100
    double tau_10 = 0.0;  // step 100 -> 10
    double tau_1 = 0.0;   // step 10 -> exact
};

struct FirmPrimitives {
    double productivity = 0.0;
    LaborSupply supply = PowerSupply{};
    LadderCosts ladder;
};

enum class Precision { kGrain1000 = 0, kGrain100 = 1, kGrain10 = 2, kExact = 3 };

struct WageDecision {
    Money posted_wage{};
    double fully_optimal_wage = 0.0;
    bool used_coarse = false;
    Precision chosen = Precision::kExact;
    double gain_forgone = 0.0;      // profit at w* minus profit at posted wage
    bool nonpositive_profit = false; // posted wage at or above productivity
};

inline std::optional<Grain> chosen_grain(const WageDecision& d) {
    switch (d.chosen) {
    case Precision::kGrain1000: return Grain::k1000;
    case Precision::kGrain100: return Grain::k100;
    case Precision::kGrain10: return Grain::k10;
    case Precision::kExact: return std::nullopt;
    }
    return std::nullopt;
}

/// Sequential refinement from the coarsest estimate w_1000 toward the exact
/// optimum. The firm advances from the current rounded wage to the next finer
/// one iff profit(finer) * (1 - step cost) >= profit(current), and stops at
/// the first failing step.
inline WageDecision decide_precision(const FirmPrimitives& firm) {
    const double w_star = supply_optimum(firm.supply, firm.productivity);
    if (w_star >= 10000.0) throw std::domain_error("decide_precision: optimum must have at most four digits");

    const Money exact = from_reais(w_star);
    const std::array<Money, 4> rungs = {
        round_to_nearest(exact, Grain::k1000),
        round_to_nearest(exact, Grain::k100),
        round_to_nearest(exact, Grain::k10),
        exact,
    };
    const std::array<double, 3> steps = {firm.ladder.tau_100, firm.ladder.tau_10, firm.ladder.tau_1};

    auto pi = [&](Money w) {
        // A rounded estimate of a small optimum can hit zero; no hires, no profit.
        return w.centavos <= 0 ? 0.0 : profit(to_reais(w), firm.productivity, firm.supply);
    };

    int stop = 0;
    for (int k = 0; k < 3; ++k) {
        if (pi(rungs[k + 1]) * (1.0 - steps[k]) >= pi(rungs[k]))
            stop = k + 1;
        else
            break;
    }

    WageDecision d;
    d.fully_optimal_wage = w_star;
    d.chosen = static_cast<Precision>(stop);
    d.posted_wage = rungs[stop];
    d.used_coarse = stop < 3;
    d.gain_forgone = profit(w_star, firm.productivity, firm.supply) - pi(d.posted_wage);
    d.nonpositive_profit = to_reais(d.posted_wage) >= firm.productivity;
    return d;
}

/// Stopping point maximizing profit net of cumulative step costs, by direct
/// enumeration of the four rungs.
inline WageDecision decide_precision_global(const FirmPrimitives& firm) {
    const double w_star = supply_optimum(firm.supply, firm.productivity);
    if (w_star >= 10000.0) throw std::domain_error("decide_precision_global: optimum must have at most four digits");

    const Money exact = from_reais(w_star);
    const std::array<Money, 4> rungs = {
        round_to_nearest(exact, Grain::k1000),
        round_to_nearest(exact, Grain::k100),
        round_to_nearest(exact, Grain::k10),
        exact,
    };
    const std::array<double, 3> steps = {firm.ladder.tau_100, firm.ladder.tau_10, firm.ladder.tau_1};

    auto pi = [&](Money w) {
        return w.centavos <= 0 ? 0.0 : profit(to_reais(w), firm.productivity, firm.supply);
    };

    int best = 0;
    double best_net = pi(rungs[0]);
    double keep = 1.0;
    for (int k = 0; k < 3; ++k) {
        keep *= 1.0 - steps[k];
        const double net = pi(rungs[k + 1]) * keep;
        if (net > best_net) {
            best_net = net;
            best = k + 1;
        }
    }

    WageDecision d;
    d.fully_optimal_wage = w_star;
    d.chosen = static_cast<Precision>(best);
    d.posted_wage = rungs[best];
    d.used_coarse = best < 3;
    d.gain_forgone = profit(w_star, firm.productivity, firm.supply) - pi(d.posted_wage);
    d.nonpositive_profit = to_reais(d.posted_wage) >= firm.productivity;
    return d;
}

struct PrecisionShares {
    double at_1000 = 0.0;
    double at_100 = 0.0;
    double at_10 = 0.0;
    double exact = 0.0;
};

/// Fraction of decisions stopping at each rung; the four shares sum to 1.
inline PrecisionShares theta_by_grain(const std::vector<WageDecision>& population) {
    if (population.empty()) throw std::invalid_argument("theta_by_grain: empty population");
    PrecisionShares s;
    for (const auto& d : population) {
        switch (d.chosen) {
        case Precision::kGrain1000: s.at_1000 += 1.0; break;
        case Precision::kGrain100: s.at_100 += 1.0; break;
        case Precision::kGrain10: s.at_10 += 1.0; break;
        case Precision::kExact: s.exact += 1.0; break;
        }
    }
    const double n = static_cast<double>(population.size());
    s.at_1000 /= n;
    s.at_100 /= n;
    s.at_10 /= n;
    s.exact /= n;
    return s;
}

} // namespace coarsewage

#endif
