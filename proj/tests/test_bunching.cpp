#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "coarsewage/bunching.hpp"
#include "coarsewage/histogram.hpp"

using namespace coarsewage;

namespace {

// Histogram fixture over [lo, hi] reais with counts from a generator.
template <class F>
WageHistogram hist_from(std::int64_t lo, std::int64_t hi, F&& count_at) {
    WageHistogram h;
    h.bin_width = from_reais(std::int64_t{1});
    h.support_lo = from_reais(lo);
    h.support_hi = from_reais(hi);
    h.excluded_mw = from_centavos(0);
    for (std::int64_t w = lo; w <= hi; ++w) {
        const std::int64_t c = count_at(w);
        h.counts.push_back(c);
        h.n += c;
    }
    return h;
}

// Mixture cohort: continuous wages uniform on [lo_c, hi_c] centavos, coarse
// share theta at the nearest `grain` multiple. Wedge-independent by design.
std::vector<WageRecord> mixture_records(int n, double theta, Grain grain, std::uint64_t seed,
                                        std::int64_t lo_c = 59000, std::int64_t hi_c = 161000,
                                        int firm_size = 10) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> wage(lo_c, hi_c);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<WageRecord> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        WageRecord r;
        r.worker_id = i + 1;
        r.firm_id = i / firm_size + 1;
        const Money w_star = from_centavos(wage(rng));
        const bool coarse = unif(rng) < theta;
        r.contracted_wage = coarse ? round_to_nearest(w_star, grain) : w_star;
        LatentTruth latent;
        latent.was_coarse = coarse;
        latent.w_star = to_reais(w_star);
        r.latent = latent;
        out.push_back(std::move(r));
    }
    return out;
}

FitSpec default_fit(int degree = 7, int bw = 500) {
    FitSpec s;
    s.degree = degree;
    s.bandwidth_bins = bw;
    return s;
}

} // namespace

TEST_CASE("constant counts are reproduced exactly at every bin") {
    const auto h = hist_from(500, 3500, [](std::int64_t w) {
        return is_divisible(from_reais(w), Grain::k10) ? 100 + 40 : 100; // spikes at rounds
    });
    for (Kernel k : {Kernel::Uniform, Kernel::Triangular, Kernel::Epanechnikov}) {
        FitSpec spec = default_fit();
        spec.kernel = k;
        spec.exclude_top_bin = false;
        const CounterfactualFit fit = fit_counterfactual(h, spec);
        for (std::int64_t b = 0; b < h.n_bins(); ++b)
            REQUIRE(fit.predicted[static_cast<std::size_t>(b)] == Catch::Approx(100.0).epsilon(1e-9));
        CHECK_FALSE(fit.negative_prediction_flag);
    }
}

TEST_CASE("degree-3 counts are reproduced at excluded bins by a degree-7 fit") {
    auto poly = [](std::int64_t w) {
        const double x = static_cast<double>(w - 2000) / 1000.0;
        return 400.0 + 120.0 * x - 60.0 * x * x + 25.0 * x * x * x;
    };
    const auto h = hist_from(1000, 3000, [&](std::int64_t w) {
        const bool round = is_divisible(from_reais(w), Grain::k10);
        return static_cast<std::int64_t>(std::llround(poly(w))) + (round ? 500 : 0);
    });
    FitSpec spec = default_fit();
    spec.exclude_top_bin = false;
    const CounterfactualFit fit = fit_counterfactual(h, spec);
    for (std::int64_t b = 0; b < h.n_bins(); ++b) {
        const std::int64_t w = h.bin_value(b).whole_reais();
        if (!is_divisible(from_reais(w), Grain::k10)) continue;
        // counts were integer-rounded, so allow the half-count rounding slack
        CHECK(fit.predicted[static_cast<std::size_t>(b)] ==
              Catch::Approx(poly(w)).epsilon(1e-6).margin(0.51));
    }
}

TEST_CASE("exact polynomial counts reproduce to 1e-6 relative") {
    // degree-3 polynomial in the integer-valued binomial basis, so counts are
    // exactly polynomial on the grid
    auto poly = [](std::int64_t w) {
        const std::int64_t x = w - 2000;
        return 2000000 + 800 * x - 3 * (x * (x - 1)) / 2 + (x * (x - 1) * (x - 2)) / 6;
    };
    const auto h = hist_from(1800, 2200, [&](std::int64_t w) {
        const bool round = is_divisible(from_reais(w), Grain::k10);
        return poly(w) + (round ? 5000 : 0);
    });
    FitSpec spec = default_fit(7, 200);
    spec.exclude_top_bin = false;
    const CounterfactualFit fit = fit_counterfactual(h, spec);
    for (std::int64_t b = 0; b < h.n_bins(); ++b)
        REQUIRE(fit.predicted[static_cast<std::size_t>(b)] ==
                Catch::Approx(static_cast<double>(poly(h.bin_value(b).whole_reais()))).epsilon(1e-6));
}

TEST_CASE("reweighting identity holds on every fit") {
    std::mt19937_64 rng(31);
    std::poisson_distribution<std::int64_t> noise(80);
    const auto h = hist_from(800, 2600, [&](std::int64_t w) {
        return noise(rng) + (is_divisible(from_reais(w), Grain::k10) ? 200 : 0);
    });
    FitSpec spec = default_fit(7, 300);
    const CounterfactualFit fit = fit_counterfactual(h, spec);
    const double total = std::accumulate(fit.predicted.begin(), fit.predicted.end(), 0.0);
    CHECK(fit.lambda * total == Catch::Approx(static_cast<double>(h.n)).epsilon(1e-9));
}

TEST_CASE("infeasible window and config errors") {
    const auto h = hist_from(1000, 1040, [](std::int64_t) { return 50; });
    FitSpec spec = default_fit(7, 4); // 9-bin windows minus round bins < 8 points
    CHECK_THROWS_AS(fit_counterfactual(h, spec), FitError);
    FitSpec bad;
    bad.degree = -1;
    CHECK_THROWS_AS(fit_counterfactual(h, bad), ConfigError);
}

TEST_CASE("negative predictions flag but do not fail") {
    // steep V shape drives local fits negative near the kink
    const auto h = hist_from(1000, 3000, [](std::int64_t w) {
        return std::max<std::int64_t>(0, 600 - std::llabs(w - 2000) / 2 - 300);
    });
    FitSpec spec = default_fit(7, 500);
    const CounterfactualFit fit = fit_counterfactual(h, spec);
    CHECK(fit.negative_prediction_flag);
}

TEST_CASE("excess mass per round") {
    const auto h = hist_from(500, 3500, [](std::int64_t w) {
        return 100 + (is_divisible(from_reais(w), Grain::k10) ? 50 : 0);
    });
    FitSpec spec = default_fit();
    spec.exclude_top_bin = false;
    const CounterfactualFit fit = fit_counterfactual(h, spec);
    const RoundSet rounds(Grain::k10, h.support_lo, h.support_hi);
    const auto excess = excess_mass(h, fit, rounds);
    REQUIRE(excess.size() == 301);
    double total = 0.0;
    for (const auto& e : excess) total += e.excess;
    // flat 100 reproduced exactly, so lambda = N / (100 * n_bins) and each
    // round's excess is 150 - lambda*100 in closed form
    const double n = static_cast<double>(h.n);
    const double lambda = n / (100.0 * 3001.0);
    const double expected = 301.0 * (150.0 - lambda * 100.0) / n;
    const BunchingEstimate est = theta_hat(excess, h.n);
    CHECK(est.b_hat == Catch::Approx(total));
    CHECK(est.theta == Catch::Approx(expected).epsilon(1e-6));
    CHECK(excess.front().excess == Catch::Approx(150.0 - lambda * 100.0).epsilon(1e-6));
}

TEST_CASE("theta_hat arithmetic and clamping") {
    const BunchingEstimate e = theta_hat({{from_reais(std::int64_t{100}), 50.0}}, 500);
    CHECK(e.theta == Catch::Approx(0.1));
    CHECK(e.b_hat == 50.0);
    const BunchingEstimate zero = theta_hat({{from_reais(std::int64_t{100}), 0.0}}, 500);
    CHECK(zero.theta == 0.0);
    const BunchingEstimate neg = theta_hat({{from_reais(std::int64_t{100}), -20.0}}, 500);
    CHECK(neg.theta == Catch::Approx(-0.04)); // raw value reported
    CHECK(neg.theta_clamped() == 0.0);
    CHECK_THROWS_AS(theta_hat({}, 0), std::invalid_argument);
}

TEST_CASE("missing mass window balances a constructed dip") {
    // spike of 500 at 3000; dip of 25 per bin over the 20 nearest non-round bins
    const auto h = hist_from(2500, 3500, [](std::int64_t w) {
        std::int64_t c = 1000;
        if (w == 3000) c += 500;
        else if (std::llabs(w - 3000) <= 12 && !is_divisible(from_reais(w), Grain::k10)) c -= 25;
        return c;
    });
    FitSpec spec = default_fit(7, 400);
    spec.exclude_top_bin = false;
    const CounterfactualFit fit = fit_counterfactual(h, spec);
    const MissingMassWindow w = missing_mass_window(h, fit, from_reais(std::int64_t{3000}));
    CHECK(w.balanced);
    CHECK(w.lo.whole_reais() >= 2980);
    CHECK(w.hi.whole_reais() <= 3020);

    // zero excess: degenerate window
    const MissingMassWindow z = missing_mass_window(h, fit, from_reais(std::int64_t{2700}));
    CHECK(z.lo == from_reais(std::int64_t{2700}));
    CHECK(z.hi == from_reais(std::int64_t{2700}));
}

TEST_CASE("missing mass window is capped at the Fig-E3 range for grain-1000 anchors") {
    // wide shallow dip: too wide to balance within the cap
    const auto h = hist_from(2500, 3500, [](std::int64_t w) {
        std::int64_t c = 1000;
        if (w == 3000) c += 2000;
        else if (!is_divisible(from_reais(w), Grain::k10)) c -= 4;
        return c;
    });
    FitSpec spec = default_fit(7, 400);
    spec.exclude_top_bin = false;
    const CounterfactualFit fit = fit_counterfactual(h, spec);
    const MissingMassWindow w = missing_mass_window(h, fit, from_reais(std::int64_t{3000}));
    CHECK(w.lo.whole_reais() >= 3000 - 166);
    CHECK(w.hi.whole_reais() <= 3000 + 166);
    if (!w.balanced) {
        CHECK(w.lo.whole_reais() == 3000 - 166);
        CHECK(w.hi.whole_reais() == 3000 + 166);
    }
}

TEST_CASE("estimate_bunching recovers a wedge-independent mixture") {
    const auto records = mixture_records(60000, 0.25, Grain::k1000, 17);
    BunchingSpec spec;
    spec.fit.bandwidth_bins = 200;
    spec.aggregation_grain = Grain::k1000;
    const BunchingEstimate est = estimate_bunching(records, spec);
    CHECK(est.theta == Catch::Approx(0.25).margin(0.012));
}

TEST_CASE("conditional theta: single cell equals unconditional") {
    auto records = mixture_records(30000, 0.3, Grain::k1000, 23);
    for (auto& r : records) r.education = 2; // one shared value -> one cell
    BunchingSpec spec;
    spec.fit.bandwidth_bins = 200;
    spec.aggregation_grain = Grain::k1000;
    CellSpec cells;
    cells.covariates = {"education"};
    const auto out = conditional_theta(records, cells, spec);
    REQUIRE(out.size() == 1);
    CHECK(out[0].theta == estimate_bunching(records, spec).theta);
    CHECK(out[0].n == 30000);
}

TEST_CASE("conditional theta: cells with different true thetas") {
    auto a = mixture_records(50000, 0.2, Grain::k1000, 31);
    auto b = mixture_records(50000, 0.6, Grain::k1000, 32);
    for (auto& r : a) r.education = 0;
    for (auto& r : b) {
        r.education = 1;
        r.worker_id += 1000000;
        r.firm_id += 1000000;
    }
    a.insert(a.end(), b.begin(), b.end());
    BunchingSpec spec;
    spec.fit.bandwidth_bins = 200;
    spec.aggregation_grain = Grain::k1000;
    CellSpec cells;
    cells.covariates = {"education"};
    const auto out = conditional_theta(a, cells, spec);
    REQUIRE(out.size() == 2);
    CHECK(out[0].theta == Catch::Approx(0.2).margin(0.03));
    CHECK(out[1].theta == Catch::Approx(0.6).margin(0.03));
}

TEST_CASE("conditional theta: partition independent of coarse pricing") {
    auto records = mixture_records(60000, 0.3, Grain::k1000, 41);
    std::mt19937_64 rng(5);
    for (auto& r : records) r.education = static_cast<int>(rng() % 2);
    BunchingSpec spec;
    spec.fit.bandwidth_bins = 200;
    spec.aggregation_grain = Grain::k1000;
    CellSpec cells;
    cells.covariates = {"education"};
    const auto out = conditional_theta(records, cells, spec, 40, 9);
    REQUIRE(out.size() == 2);
    const double diff = std::abs(out[0].theta - out[1].theta);
    const double se = std::sqrt(out[0].se * out[0].se + out[1].se * out[1].se);
    CHECK(diff <= 3.0 * se);
}

TEST_CASE("undersized cells follow the policy flag") {
    auto records = mixture_records(20000, 0.3, Grain::k1000, 47);
    for (std::size_t i = 0; i < records.size(); ++i) records[i].education = i < 100 ? 9 : 1;
    BunchingSpec spec;
    spec.fit.bandwidth_bins = 200;
    spec.aggregation_grain = Grain::k1000;
    CellSpec cells;
    cells.covariates = {"education"};
    cells.min_cell_n = 1000;
    const auto out = conditional_theta(records, cells, spec);
    CHECK(out.size() == 1); // the 100-record cell is dropped
    cells.policy = SmallCellPolicy::Error;
    CHECK_THROWS_AS(conditional_theta(records, cells, spec), FitError);
}

TEST_CASE("bootstrap SE: degenerate single-firm data") {
    auto records = mixture_records(5000, 0.3, Grain::k1000, 51, 59000, 161000, /*firm_size=*/5000);
    BunchingSpec spec;
    spec.fit.bandwidth_bins = 200;
    spec.aggregation_grain = Grain::k1000;
    const BootstrapResult b = bootstrap_theta(records, spec, 2, 3);
    CHECK(b.se == 0.0); // resampling one firm always returns the same sample
}

TEST_CASE("bootstrap SE shrinks roughly like sqrt(N)") {
    auto small = mixture_records(20000, 0.3, Grain::k1000, 61);
    auto large = mixture_records(40000, 0.3, Grain::k1000, 61);
    BunchingSpec spec;
    spec.fit.bandwidth_bins = 200;
    spec.aggregation_grain = Grain::k1000;
    const double se_small = bootstrap_theta(small, spec, 60, 5).se;
    const double se_large = bootstrap_theta(large, spec, 60, 5).se;
    const double ratio = se_large / se_small;
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 0.95);
}

TEST_CASE("bootstrap CI covers the true mixture weight") {
    // 100 Monte Carlo repetitions; normal CI from the cluster bootstrap
    const double theta_true = 0.25;
    int covered = 0;
    const int reps = 100;
    for (int mc = 0; mc < reps; ++mc) {
        const auto records = mixture_records(20000, theta_true, Grain::k1000, 1000 + mc);
        BunchingSpec spec;
        spec.fit.bandwidth_bins = 200;
        spec.aggregation_grain = Grain::k1000;
        const BunchingEstimate est = estimate_bunching(records, spec);
        const double se = bootstrap_theta(records, spec, 50, 77 + mc).se;
        if (std::abs(est.theta - theta_true) <= 1.96 * se) ++covered;
    }
    CHECK(covered >= 90);
}
