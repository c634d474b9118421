#ifndef COARSEWAGE_SIMULATE_HPP
#define COARSEWAGE_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coarsewage/errors.hpp"
#include "coarsewage/labor_model.hpp"
#include "coarsewage/money.hpp"
#include "coarsewage/records.hpp"
#include "coarsewage/rng.hpp"

namespace coarsewage {

enum class GrainMode { Single, Ladder };

struct SimConfig {
    // panel dimensions
    int n_firms = 2000;
    double mean_hires_per_firm_year = 5.0;
    int base_year = 2010;
    int n_years = 1;
    int n_regions = 4;

    // worker productivity, lognormal in reais/month
    double prod_median = 1000.0;
    double prod_sigma_log = 0.5;

    // labor supply elasticity (constant across firms)
    double elasticity = 2.0;

    // optimization costs and covariate links (tau_eff multiplies
    // exp(-link_size * log relative size - link_exp * log relative experience))
    CostDistribution cost_dist = CostDistribution::point_mass(0.0);
    double cost_link_size = 0.0;
    double cost_link_exp = 0.0;

    // rounding heuristic
    GrainMode grain_mode = GrainMode::Single;
    Grain grain = Grain::k10;

    // CPI index: base at (base_year, January); per-region annual growth.
    double cpi_base = 100.0;
    std::vector<double> cpi_growth = {0.03, 0.05, 0.07, 0.09};

    // minimum wage by year
    std::map<int, Money> mw_schedule = {{2010, from_reais(std::int64_t{400})},
                                        {2011, from_reais(std::int64_t{400})}};

    // separations
    double separation_rate = 0.10;
    double resignation_rate = 0.05;
    double separation_round_effect = 0.0;
    double resignation_round_effect = 0.0;

    // next-year dynamics
    double stickiness_coarse = 0.4;
    double stickiness_exact = 0.05;
    double coarse_raise_share = 0.5;
    double growth_lo = 0.05;
    double growth_hi = 0.12;
    double reopt_prob = 0.0;

    // firm covariates
    double size_median = 10.0;
    double size_sigma_log = 1.0;
    double size_annual_growth = 0.10;
    double has_hr_prob = 0.2;
    double firm_age_mean = 8.0;

    std::uint64_t seed = 1;
};

struct CohortSummary {
    std::int64_t n = 0;
    double theta_true = 0.0;
    double theta_1000 = 0.0, theta_100 = 0.0, theta_10 = 0.0;
    std::int64_t n_floored = 0;
    std::map<std::int64_t, DivisibilityShare> shares;
};

namespace detail {

inline void validate(const SimConfig& c) {
    auto need = [](bool ok, const char* field) {
        if (!ok) throw ConfigError(std::string("SimConfig: invalid ") + field);
    };
    need(c.n_firms > 0, "n_firms");
    need(c.mean_hires_per_firm_year > 0.0, "mean_hires_per_firm_year");
    need(c.n_years > 0, "n_years");
    need(c.n_regions > 0 && static_cast<std::size_t>(c.n_regions) <= c.cpi_growth.size(), "n_regions/cpi_growth");
    need(c.prod_median > 0.0, "prod_median");
    need(c.prod_sigma_log >= 0.0, "prod_sigma_log");
    need(c.elasticity > 0.0, "elasticity");
    need(c.cpi_base > 0.0, "cpi_base");
    need(c.separation_rate >= 0.0 && c.separation_rate <= 1.0, "separation_rate");
    need(c.resignation_rate >= 0.0 && c.resignation_rate <= 1.0, "resignation_rate");
    need(c.stickiness_coarse >= 0.0 && c.stickiness_coarse <= 1.0, "stickiness_coarse");
    need(c.stickiness_exact >= 0.0 && c.stickiness_exact <= 1.0, "stickiness_exact");
    need(c.coarse_raise_share >= 0.0 && c.coarse_raise_share <= 1.0, "coarse_raise_share");
    need(c.growth_lo >= 0.0 && c.growth_lo <= c.growth_hi, "growth_lo/growth_hi");
    need(c.reopt_prob >= 0.0 && c.reopt_prob <= 1.0, "reopt_prob");
    need(c.size_median > 0.0, "size_median");
    for (int y = c.base_year; y < c.base_year + c.n_years; ++y)
        if (!c.mw_schedule.count(y)) throw ConfigError("SimConfig: mw_schedule missing year " + std::to_string(y));
}

inline double cpi_at(const SimConfig& c, int region, int year, int month) {
    const double t = static_cast<double>(year - c.base_year) + static_cast<double>(month - 1) / 12.0;
    return c.cpi_base * std::pow(1.0 + c.cpi_growth[static_cast<std::size_t>(region)], t);
}

} // namespace detail

struct SimResult {
    std::vector<WageRecord> records;
    CohortSummary summary;
};

/// Generate one hire panel from the frictions model. Deterministic: each firm
/// block derives its own RNG stream from (seed, firm index), and worker ids
/// are assigned in canonical order afterward, so identical configs give
/// byte-identical output.
inline SimResult simulate_hires(const SimConfig& cfg) {
    detail::validate(cfg);

    SimResult out;
    const double mu_p = std::log(cfg.prod_median);
    const double eta = cfg.elasticity;
    const double exp_ref = 1.0 + cfg.mean_hires_per_firm_year * cfg.n_years / 2.0;

    for (int j = 0; j < cfg.n_firms; ++j) {
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(j)));
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        const int region = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.n_regions));
        const double tau_base = cfg.cost_dist.quantile(unif(rng));
        std::lognormal_distribution<double> size_dist(std::log(cfg.size_median), cfg.size_sigma_log);
        const double base_size = size_dist(rng);
        const bool has_hr = unif(rng) < cfg.has_hr_prob;
        std::exponential_distribution<double> age_dist(1.0 / cfg.firm_age_mean);
        const double firm_age = age_dist(rng);

        std::lognormal_distribution<double> prod(mu_p, cfg.prod_sigma_log);
        std::poisson_distribution<int> hires(cfg.mean_hires_per_firm_year);
        std::uniform_int_distribution<int> months(1, 12);
        std::uniform_real_distribution<double> growth(cfg.growth_lo, cfg.growth_hi);

        std::int64_t cum_hires = 0;
        for (int yi = 0; yi < cfg.n_years; ++yi) {
            const int year = cfg.base_year + yi;
            const Money mw = cfg.mw_schedule.at(year);
            const double size_jt = base_size * std::pow(1.0 + cfg.size_annual_growth, yi);
            const int n_hires = hires(rng);
            for (int hIdx = 0; hIdx < n_hires; ++hIdx) {
                WageRecord r;
                r.firm_id = j;
                r.year = year;
                r.month = months(rng);
                r.region = region;
                r.firm_size = size_jt;
                r.hiring_experience = static_cast<double>(cum_hires);
                r.has_hr = has_hr;
                r.firm_age = firm_age + yi;
                r.education = static_cast<int>(rng() % 4);
                r.occupation = static_cast<int>(rng() % 10);

                const double p = prod(rng);
                const double w_star = optimal_wage(p, eta);
                const double cpi = detail::cpi_at(cfg, region, year, r.month);
                r.log_cpi = std::log(cpi);

                const double tau_eff =
                    tau_base *
                    std::exp(-cfg.cost_link_size * std::log(size_jt / cfg.size_median) -
                             cfg.cost_link_exp * std::log((1.0 + static_cast<double>(cum_hires)) / exp_ref));

                LatentTruth latent;
                latent.w_star = w_star;
                Money posted{};
                if (cfg.grain_mode == GrainMode::Single) {
                    const Money anchor = round_to_nearest(from_reais(w_star), cfg.grain);
                    const double wedge = (to_reais(anchor) - w_star) / w_star;
                    const double gain = eta * eta * wedge * wedge * (cfg.cpi_base / cpi);
                    const bool optimizes = gain >= tau_eff;
                    latent.was_coarse = !optimizes;
                    if (optimizes) {
                        posted = from_reais(w_star);
                    } else {
                        posted = anchor;
                        latent.chosen = cfg.grain;
                    }
                } else {
                    FirmPrimitives firm;
                    firm.productivity = p;
                    firm.supply = PowerSupply{1.0, eta, 1.0};
                    firm.ladder = {tau_eff, tau_eff, tau_eff};
                    const WageDecision d = decide_precision(firm);
                    posted = d.posted_wage;
                    latent.was_coarse = d.used_coarse;
                    latent.chosen = chosen_grain(d);
                }

                if (posted < mw) {
                    posted = mw;
                    latent.mw_floored = true;
                }
                r.contracted_wage = posted;
                r.latent = latent;

                const bool round = is_divisible(posted, Grain::k10);
                const double p_res = std::clamp(
                    cfg.resignation_rate + (round ? cfg.resignation_round_effect : 0.0), 0.0, 1.0);
                const double p_sep_extra = std::clamp(
                    cfg.separation_rate + (round ? cfg.separation_round_effect : 0.0), 0.0, 1.0);
                r.resigned = unif(rng) < p_res;
                r.separated = r.resigned || unif(rng) < p_sep_extra;

                out.records.push_back(std::move(r));
                ++cum_hires;
            }
        }
    }

    for (std::size_t i = 0; i < out.records.size(); ++i)
        out.records[i].worker_id = static_cast<std::int64_t>(i) + 1;

    CohortSummary& s = out.summary;
    s.n = static_cast<std::int64_t>(out.records.size());
    for (const auto& r : out.records) {
        if (r.latent->was_coarse) {
            s.theta_true += 1.0;
            if (r.latent->chosen == Grain::k1000) s.theta_1000 += 1.0;
            else if (r.latent->chosen == Grain::k100) s.theta_100 += 1.0;
            else if (r.latent->chosen == Grain::k10) s.theta_10 += 1.0;
        }
        if (r.latent->mw_floored) ++s.n_floored;
    }
    if (s.n > 0) {
        s.theta_true /= static_cast<double>(s.n);
        s.theta_1000 /= static_cast<double>(s.n);
        s.theta_100 /= static_cast<double>(s.n);
        s.theta_10 /= static_cast<double>(s.n);
        s.shares = divisibility_shares(wages_of(out.records), {Grain::k10, Grain::k100, Grain::k1000});
    }
    return out;
}

/// Fill wage_next_year. Every worker follows the sticky / coarse-raise /
/// exact-raise process; coarse-priced workers whose round wage falls below
/// MW_{t+1} re-optimize with probability reopt_prob; everyone is lifted to at
/// least MW_{t+1}. Deterministic per (seed, worker id).
inline std::vector<WageRecord> simulate_next_year(std::vector<WageRecord> records, const SimConfig& cfg) {
    for (auto& r : records) {
        const auto it = cfg.mw_schedule.find(r.year + 1);
        if (it == cfg.mw_schedule.end())
            throw ConfigError("simulate_next_year: mw_schedule missing year " + std::to_string(r.year + 1));
        const Money mw_next = it->second;

        std::mt19937_64 rng(mix_seed(cfg.seed ^ 0x6e657874ULL, static_cast<std::uint64_t>(r.worker_id)));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::uniform_real_distribution<double> growth(cfg.growth_lo, cfg.growth_hi);

        const bool coarse = r.latent ? r.latent->was_coarse : is_divisible(r.contracted_wage, Grain::k10);
        const double w_star = r.latent ? r.latent->w_star : to_reais(r.contracted_wage);

        Money next{};
        if (coarse && r.contracted_wage < mw_next && unif(rng) < cfg.reopt_prob) {
            next = from_reais(w_star * (1.0 + growth(rng)));
        } else {
            const double sticky_p = coarse ? cfg.stickiness_coarse : cfg.stickiness_exact;
            if (unif(rng) < sticky_p) {
                next = r.contracted_wage;
            } else if (coarse && unif(rng) < cfg.coarse_raise_share) {
                Money inc = round_to_nearest(from_reais(to_reais(r.contracted_wage) * growth(rng)), Grain::k10);
                if (inc.centavos <= 0) inc = from_reais(std::int64_t{10});
                next = from_centavos(r.contracted_wage.centavos + inc.centavos);
            } else {
                next = from_reais(to_reais(r.contracted_wage) * (1.0 + growth(rng)));
            }
        }
        if (next < mw_next) next = mw_next;
        r.wage_next_year = next;
    }
    return records;
}

// ---------------------------------------------------------------------------
// Test fixtures: inject a known discontinuity
// ---------------------------------------------------------------------------

enum class InjectMode { Resignation, Separation, Density };
enum class InjectSide { At, Above };

/// Shift outcome probabilities or bin masses at/above r by `jump`.
/// Outcome modes redraw the outcome of affected records at base_rate + jump
/// (unaffected records keep their draws). Density mode duplicates (jump > 0)
/// or thins (jump < 0) affected records with probability |jump|.
inline std::vector<WageRecord> inject_discontinuity(std::vector<WageRecord> records, Money r, double jump,
                                                    InjectSide side, InjectMode mode, double base_rate = 0.0,
                                                    std::uint64_t seed = 7) {
    if (mode != InjectMode::Density && !(base_rate + jump >= 0.0 && base_rate + jump <= 1.0))
        throw std::domain_error("inject_discontinuity: base_rate + jump must be a probability");
    if (mode == InjectMode::Density && std::abs(jump) > 1.0)
        throw std::domain_error("inject_discontinuity: |jump| must be <= 1 for density shifts");
    if (jump == 0.0) return records;

    auto affected = [&](const WageRecord& rec) {
        return side == InjectSide::At ? rec.contracted_wage == r : rec.contracted_wage > r;
    };

    if (mode == InjectMode::Density) {
        std::vector<WageRecord> out;
        out.reserve(records.size());
        std::int64_t next_id = 0;
        for (const auto& rec : records) next_id = std::max(next_id, rec.worker_id);
        for (const auto& rec : records) {
            std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(rec.worker_id)));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            if (!affected(rec)) {
                out.push_back(rec);
                continue;
            }
            if (jump > 0.0) {
                out.push_back(rec);
                if (unif(rng) < jump) {
                    WageRecord dup = rec;
                    dup.worker_id = ++next_id;
                    out.push_back(std::move(dup));
                }
            } else if (unif(rng) >= -jump) {
                out.push_back(rec);
            }
        }
        return out;
    }

    for (auto& rec : records) {
        if (!affected(rec)) continue;
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(rec.worker_id)));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const bool hit = unif(rng) < base_rate + jump;
        if (mode == InjectMode::Resignation) {
            rec.resigned = hit;
            rec.separated = rec.separated || hit;
        } else {
            rec.separated = hit;
            rec.resigned = rec.resigned && hit;
        }
    }
    return records;
}

} // namespace coarsewage

#endif
