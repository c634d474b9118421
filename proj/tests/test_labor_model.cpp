#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "coarsewage/labor_model.hpp"

using namespace coarsewage;

TEST_CASE("optimal wage formula") {
    CHECK(optimal_wage(1000.0, 1.0) == Catch::Approx(500.0));
    CHECK(optimal_wage(900.0, 2.0) == Catch::Approx(600.0));
    // competitive limit: w* -> p as eta -> infinity
    CHECK(optimal_wage(1234.0, 1e9) == Catch::Approx(1234.0).epsilon(1e-5));
    CHECK_THROWS_AS(optimal_wage(-1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(optimal_wage(100.0, 0.0), std::domain_error);
}

TEST_CASE("optimal wage beats a dense grid") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pdist(100.0, 5000.0);
    std::uniform_real_distribution<double> edist(0.2, 8.0);
    for (int rep = 0; rep < 1000; ++rep) {
        const double p = pdist(rng);
        const double eta = edist(rng);
        const LaborSupply s = PowerSupply{1.0, eta, 1.0};
        const double w_star = optimal_wage(p, eta);
        const double pi_star = profit(w_star, p, s);
        bool dominated = true;
        for (int g = 1; g < 10000 && dominated; ++g) {
            const double w = p * g / 10000.0;
            dominated = pi_star >= profit(w, p, s) - 1e-9 * std::abs(pi_star);
        }
        CHECK(dominated);
    }
}

TEST_CASE("profit values") {
    const LaborSupply linear = LinearSupply{1.0, 0.0}; // l(w) = w
    CHECK(profit(500.0, 1000.0, linear) == Catch::Approx(250000.0));
    CHECK(profit(1000.0, 1000.0, linear) == Catch::Approx(0.0));
    CHECK_THROWS_AS(profit(0.0, 1000.0, linear), std::domain_error);
    // pi(w*) = p/(1+eta) * l(w*)
    const double p = 900.0, eta = 2.0;
    const LaborSupply s = PowerSupply{3.0, eta, 250.0};
    const double w_star = optimal_wage(p, eta);
    CHECK(profit(w_star, p, s) == Catch::Approx(p / (1.0 + eta) * supply_l(s, w_star)));
}

TEST_CASE("gain_exact basics") {
    const LaborSupply linear = LinearSupply{1.0, 0.0};
    CHECK(gain_exact(500.0, 1000.0, linear) == Catch::Approx(0.0));
    CHECK(gain_exact(510.0, 1000.0, linear) == Catch::Approx(100.0));
    CHECK(gain_exact(400.0, 1000.0, linear) == Catch::Approx(10000.0));
    // w* is the maximizer, so the gain is nonnegative everywhere
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> wdist(1.0, 999.0);
    for (int i = 0; i < 1000; ++i) CHECK(gain_exact(wdist(rng), 1000.0, linear) >= 0.0);
}

TEST_CASE("gain_taylor equals gain_exact for linear supply") {
    // eta = 1: l(w) = c*w
    const LaborSupply through_origin = LinearSupply{1.0, 0.0};
    CHECK(gain_taylor(510.0, 1000.0, 1.0, through_origin) == Catch::Approx(100.0));
    CHECK(gain_taylor(500.0, 1000.0, 1.0, through_origin) == Catch::Approx(0.0));

    // linear supplies calibrated to other point elasticities stay exact at any wedge
    for (double eta : {0.5, 1.0, 2.0, 5.0}) {
        const double p = 1000.0;
        const LinearSupply lin = linear_supply_with_elasticity(p, eta);
        const LaborSupply s = lin;
        const double w_star = optimal_wage(p, eta);
        CHECK(supply_optimum(s, p) == Catch::Approx(w_star).epsilon(1e-12));
        CHECK(supply_elasticity(s, w_star) == Catch::Approx(eta).epsilon(1e-12));
        for (double wedge : {-0.2, -0.01, -0.001, 0.001, 0.01, 0.2}) {
            const double w_r = w_star * (1.0 + wedge);
            const double exact = gain_exact(w_r, p, s);
            const double taylor = gain_taylor(w_r, p, eta, s);
            CHECK(taylor == Catch::Approx(exact).epsilon(1e-9));
        }
    }
}

TEST_CASE("coarse probability") {
    CHECK(coarse_probability(1.0, 0.05, CostDistribution::uniform(0.0, 0.01)) == Catch::Approx(0.75));
    CHECK(coarse_probability(3.0, 0.0, CostDistribution::uniform(0.0, 0.01)) == Catch::Approx(1.0));
    CHECK(coarse_probability(2.0, 0.1, CostDistribution::point_mass(0.0)) == Catch::Approx(0.0));

    // nonincreasing in eta and |wedge|; nondecreasing under FOSD cost shifts
    const auto low = CostDistribution::uniform(0.0, 0.01);
    const auto high = CostDistribution::uniform(0.005, 0.02); // first-order dominates `low`
    double prev = 1.1;
    for (double eta : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double th = coarse_probability(eta, 0.03, low);
        CHECK(th <= prev + 1e-12);
        prev = th;
    }
    prev = 1.1;
    for (double wedge : {0.0, 0.01, 0.03, 0.06, 0.12}) {
        const double th = coarse_probability(2.0, wedge, low);
        CHECK(th <= prev + 1e-12);
        CHECK(coarse_probability(2.0, wedge, high) >= th - 1e-12);
        prev = th;
    }
}

TEST_CASE("empirical cost distribution cdf") {
    const auto d = CostDistribution::empirical({0.0, 0.0, 0.01, 0.02});
    CHECK(d.cdf(-0.1) == 0.0);
    CHECK(d.cdf(0.0) == Catch::Approx(0.5));
    CHECK(d.cdf(0.015) == Catch::Approx(0.75));
    CHECK(d.cdf(0.5) == 1.0);
}

TEST_CASE("mixture cdf") {
    const Cdf atom = [](double w) { return w >= 1000.0 ? 1.0 : 0.0; };
    const Cdf unif = [](double w) { return std::clamp((w - 500.0) / 1000.0, 0.0, 1.0); };

    const Cdf zero = mixture_cdf(0.0, atom, unif);
    CHECK(zero(800.0) == Catch::Approx(unif(800.0)));
    const Cdf one = mixture_cdf(1.0, atom, unif);
    CHECK(one(999.0) == 0.0);
    CHECK(one(1000.0) == 1.0);

    const Cdf mixed = mixture_cdf(0.3, atom, unif);
    CHECK(mixed(1000.0) - mixed(1000.0 - 1e-9) == Catch::Approx(0.3).margin(1e-6));
    CHECK_THROWS_AS(mixture_cdf(1.5, atom, unif), std::domain_error);

    // monotone with limits 0 and 1 on a scanned grid
    double last = 0.0;
    for (int i = 0; i <= 300; ++i) {
        const double w = 400.0 + i * 5.0;
        const double v = mixed(w);
        CHECK(v >= last - 1e-12);
        last = v;
    }
    CHECK(mixed(0.0) == 0.0);
    CHECK(mixed(5000.0) == 1.0);
}

namespace {

// Independent transcription of the sequential advance rule: enumerate the
// four stopping points on the centavo grid, walk the ladder by hand.
int oracle_stop(double p, double eta, double t100, double t10, double t1) {
    const double w_star = p * eta / (1.0 + eta);
    const long long wc = std::llround(w_star * 100.0); // posted wages live on the centavo grid
    auto rounded = [&](long long grain_c) {
        return ((wc + grain_c / 2) / grain_c) * grain_c; // floor((w + g/2)/g): ties away from zero
    };
    const long long rung_c[4] = {rounded(100000), rounded(10000), rounded(1000), wc};
    auto pi = [&](long long c) {
        const double w = static_cast<double>(c) / 100.0;
        return c <= 0 ? 0.0 : std::pow(w, eta) * (p - w);
    };
    const double cost[3] = {t100, t10, t1};
    int stop = 0;
    for (int k = 0; k < 3; ++k) {
        if (pi(rung_c[k + 1]) * (1.0 - cost[k]) >= pi(rung_c[k])) stop = k + 1;
        else break;
    }
    return stop;
}

} // namespace

TEST_CASE("decide_precision edge cases") {
    FirmPrimitives firm;
    firm.productivity = 1000.0;
    firm.supply = PowerSupply{1.0, 1.0, 1.0};

    firm.ladder = {0.0, 0.0, 0.0};
    auto d = decide_precision(firm);
    CHECK(d.chosen == Precision::kExact);
    CHECK(d.posted_wage == from_reais(std::int64_t{500}));
    CHECK_FALSE(d.used_coarse);
    CHECK(d.gain_forgone == Catch::Approx(0.0));

    // prohibitive costs: never advances past the coarsest estimate (geometry
    // where the grain-1000 rung keeps positive profit)
    FirmPrimitives big;
    big.productivity = 3519.0;
    big.supply = PowerSupply{1.0, 2.0, 1.0};
    big.ladder = {0.99, 0.99, 0.99};
    d = decide_precision(big);
    CHECK(d.chosen == Precision::kGrain1000);
    CHECK(d.posted_wage == round_to_nearest(from_reais(optimal_wage(3519.0, 2.0)), Grain::k1000));
    CHECK(d.used_coarse);

    // w* = 500 rounds up to R$1000 where profit is zero, so refining one step
    // is worthwhile at any fractional cost
    firm.ladder = {0.99, 0.99, 0.99};
    d = decide_precision(firm);
    CHECK(d.chosen == Precision::kGrain100);
    CHECK(d.posted_wage == from_reais(std::int64_t{500}));

    // the spec's hand example: p=1000, eta=1, all step costs 1e-4
    firm.ladder = {1e-4, 1e-4, 1e-4};
    d = decide_precision(firm);
    const int stop = oracle_stop(1000.0, 1.0, 1e-4, 1e-4, 1e-4);
    CHECK(static_cast<int>(d.chosen) == stop);
}

TEST_CASE("decide_precision equals the brute-force oracle on random firms") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pdist(150.0, 9000.0);
    std::uniform_real_distribution<double> edist(0.5, 5.0);
    std::uniform_real_distribution<double> cdist(0.0, 0.02);
    int agree = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        FirmPrimitives firm;
        const double eta = edist(rng);
        firm.productivity = std::min(pdist(rng), 9999.0 * (1.0 + eta) / eta);
        firm.supply = PowerSupply{1.0, eta, 1.0};
        const double t100 = cdist(rng), t10 = cdist(rng), t1 = cdist(rng);
        firm.ladder = {t100, t10, t1};
        const WageDecision d = decide_precision(firm);
        if (static_cast<int>(d.chosen) == oracle_stop(firm.productivity, eta, t100, t10, t1)) ++agree;

        // the global enumeration never nets less than the greedy stop
        const WageDecision g = decide_precision_global(firm);
        CHECK(g.gain_forgone <= d.gain_forgone + 1e-9);
    }
    CHECK(agree == n);
}

TEST_CASE("theta_by_grain counts stopping points") {
    std::vector<WageDecision> pop(10);
    for (int i = 0; i < 2; ++i) pop[static_cast<std::size_t>(i)].chosen = Precision::kGrain1000;
    for (int i = 2; i < 5; ++i) pop[static_cast<std::size_t>(i)].chosen = Precision::kGrain100;
    pop[5].chosen = Precision::kGrain10;
    for (int i = 6; i < 10; ++i) pop[static_cast<std::size_t>(i)].chosen = Precision::kExact;
    const auto s = theta_by_grain(pop);
    CHECK(s.at_1000 == Catch::Approx(0.2));
    CHECK(s.at_100 == Catch::Approx(0.3));
    CHECK(s.at_10 == Catch::Approx(0.1));
    CHECK(s.exact == Catch::Approx(0.4));

    std::vector<WageDecision> all_exact(5);
    for (auto& d : all_exact) d.chosen = Precision::kExact;
    const auto s2 = theta_by_grain(all_exact);
    CHECK(s2.exact == 1.0);
    CHECK(s2.at_1000 == 0.0);

    CHECK_THROWS_AS(theta_by_grain({}), std::invalid_argument);
}

TEST_CASE("ladder population shares match analytic stopping probabilities") {
    // constant (p, eta); one tau ~ U(0, m) shared by all steps. The advance
    // thresholds t_k = 1 - pi(w_k)/pi(w_{k+1}) are exact, so
    //   P(stop at 1000) = 1 - F(t1), P(stop at 100) = F(t1) - F(min(t1,t2)), ...
    // p chosen so all four rungs are distinct (w* = 2346 -> 2000/2300/2350).
    const double p = 3519.0, eta = 2.0, m = 0.10;
    const double w_star = optimal_wage(p, eta);
    const LaborSupply s = PowerSupply{1.0, eta, 1.0};
    auto pi = [&](double w) { return profit(w, p, s); };
    const long long wc = std::llround(w_star * 100.0);
    auto rounded = [&](long long gc) { return static_cast<double>(((wc + gc / 2) / gc) * gc) / 100.0; };
    const double exact_w = static_cast<double>(wc) / 100.0;
    const double t1 = 1.0 - pi(rounded(100000)) / pi(rounded(10000));
    const double t2 = 1.0 - pi(rounded(10000)) / pi(rounded(1000));
    const double t3 = 1.0 - pi(rounded(1000)) / pi(exact_w);
    auto F = [&](double x) { return std::clamp(x / m, 0.0, 1.0); };
    const double p1000 = 1.0 - F(t1);
    const double p100 = F(t1) - F(std::min(t1, t2));
    const double p10 = F(std::min(t1, t2)) - F(std::min({t1, t2, t3}));
    const double pexact = F(std::min({t1, t2, t3}));

    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> tau(0.0, m);
    std::vector<WageDecision> pop;
    const int n = 100000;
    pop.reserve(n);
    for (int i = 0; i < n; ++i) {
        FirmPrimitives firm;
        firm.productivity = p;
        firm.supply = s;
        const double t = tau(rng);
        firm.ladder = {t, t, t};
        pop.push_back(decide_precision(firm));
    }
    const auto shares = theta_by_grain(pop);
    CHECK(shares.at_1000 == Catch::Approx(p1000).margin(0.01));
    CHECK(shares.at_100 == Catch::Approx(p100).margin(0.01));
    CHECK(shares.at_10 == Catch::Approx(p10).margin(0.01));
    CHECK(shares.exact == Catch::Approx(pexact).margin(0.01));
}
