#ifndef COARSEWAGE_CLI_HPP
#define COARSEWAGE_CLI_HPP

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coarsewage/bunching.hpp"
#include "coarsewage/csv.hpp"
#include "coarsewage/descriptives.hpp"
#include "coarsewage/errors.hpp"
#include "coarsewage/lpm.hpp"
#include "coarsewage/rd.hpp"
#include "coarsewage/simulate.hpp"
#include "coarsewage/spillover.hpp"

namespace coarsewage {

/// Everything a run needs; the CLI front end maps flags onto this and tests
/// construct it directly.
struct RunConfig {
    std::string command;
    std::string input;
    std::string out_prefix = "out";

    // simulate
    std::string preset = "baseline";
    std::optional<int> n_firms;
    std::optional<double> hires_per_firm_year;
    std::optional<int> n_years;
    std::optional<double> reopt_prob;
    bool with_next_year = false;

    // estimator
    int degree = 7;
    int bandwidth = 500;
    std::string kernel = "uniform";
    std::int64_t grain = 10;
    std::int64_t min_wage_centavos = 0;
    std::map<int, std::int64_t> min_wage_schedule_centavos;
    std::int64_t winsorize_centavos = 1010000;
    int bootstrap_b = 0;
    std::string by_covariate; // conditional theta cells
    int quantile_cells = 4;

    // rd
    std::int64_t rd_target_reais = 0; // 0: every multiple of 100 in range
    double rd_bandwidth = 10.0;
    std::string rd_outcome_name = "resigned"; // resigned | separated | density

    // spillover
    std::int64_t mw_t_centavos = 0;
    std::int64_t mw_t1_centavos = 0;

    std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Simulation presets
// ---------------------------------------------------------------------------

/// Named generative configurations used by the CLI and the test suites.
///   baseline  grain-1000 anchors, empirical F_tau (atom at zero plus a
///             uniform component straddling the gain scale), CPI/size/
///             experience links active
///   null      tau = 0 point mass: the frictionless special case
///   twopoint  wedge-independent coarse decision (exact mixture weight 0.3)
///   spillover grain-10 anchors and an MW increase from R$700 to R$724
///   ladder    varying-precision mode at a fixed productivity
inline SimConfig preset_config(const std::string& name, std::uint64_t seed) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.cpi_growth = {0.03, 0.06, 0.09, 0.12};
    cfg.mw_schedule.clear();

    if (name == "baseline") {
        cfg.n_firms = 2500;
        cfg.mean_hires_per_firm_year = 20.0;
        cfg.base_year = 2010;
        cfg.n_years = 4;
        cfg.prod_median = 1000.0;
        cfg.prod_sigma_log = 0.55;
        cfg.elasticity = 2.0;
        cfg.grain = Grain::k1000;
        std::vector<double> sample(550, 0.0);
        for (int i = 0; i < 450; ++i) sample.push_back(0.02 * (i + 0.5) / 450.0);
        cfg.cost_dist = CostDistribution::empirical(std::move(sample));
        cfg.cost_link_size = 0.5;
        cfg.cost_link_exp = 0.25;
        for (int y = 2010; y <= 2015; ++y) cfg.mw_schedule[y] = from_reais(std::int64_t{400});
    } else if (name == "null") {
        cfg.n_firms = 4000;
        cfg.mean_hires_per_firm_year = 50.0;
        cfg.base_year = 2010;
        cfg.n_years = 1;
        cfg.prod_median = 1000.0;
        cfg.prod_sigma_log = 0.55;
        cfg.elasticity = 2.0;
        cfg.grain = Grain::k10;
        cfg.cost_dist = CostDistribution::point_mass(0.0);
        for (int y = 2010; y <= 2011; ++y) cfg.mw_schedule[y] = from_reais(std::int64_t{400});
    } else if (name == "twopoint") {
        cfg.n_firms = 4000;
        cfg.mean_hires_per_firm_year = 50.0;
        cfg.base_year = 2010;
        cfg.n_years = 1;
        cfg.prod_median = 1000.0;
        cfg.prod_sigma_log = 0.55;
        cfg.elasticity = 2.0;
        cfg.grain = Grain::k10;
        std::vector<double> sample(70, 0.0);
        sample.insert(sample.end(), 30, 0.5); // far above any grain-10 gain
        cfg.cost_dist = CostDistribution::empirical(std::move(sample));
        for (int y = 2010; y <= 2011; ++y) cfg.mw_schedule[y] = from_reais(std::int64_t{400});
    } else if (name == "spillover") {
        cfg.n_firms = 4000;
        cfg.mean_hires_per_firm_year = 50.0;
        cfg.base_year = 2010;
        cfg.n_years = 1;
        cfg.prod_median = 1000.0;
        cfg.prod_sigma_log = 0.6;
        cfg.elasticity = 2.0;
        cfg.grain = Grain::k10;
        std::vector<double> sample(60, 0.0);
        sample.insert(sample.end(), 40, 0.5);
        cfg.cost_dist = CostDistribution::empirical(std::move(sample));
        cfg.mw_schedule[2010] = from_reais(std::int64_t{700});
        cfg.mw_schedule[2011] = from_reais(std::int64_t{724});
        cfg.stickiness_coarse = 0.4;
        cfg.stickiness_exact = 0.05;
        cfg.coarse_raise_share = 0.5;
        cfg.growth_lo = 0.05;
        cfg.growth_hi = 0.12;
        cfg.reopt_prob = 0.5;
    } else if (name == "ladder") {
        cfg.n_firms = 2000;
        cfg.mean_hires_per_firm_year = 50.0;
        cfg.base_year = 2010;
        cfg.n_years = 1;
        cfg.prod_median = 3519.0;
        cfg.prod_sigma_log = 0.0;
        cfg.elasticity = 2.0;
        cfg.grain_mode = GrainMode::Ladder;
        cfg.cost_dist = CostDistribution::uniform(0.0, 0.05);
        for (int y = 2010; y <= 2011; ++y) cfg.mw_schedule[y] = from_reais(std::int64_t{400});
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Manifest and artifact helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string manifest_for(const RunConfig& cfg, const std::string& digest) {
    std::ostringstream m;
    m << "cmd=" << cfg.command << " seed=" << cfg.seed;
    if (!cfg.input.empty()) m << " input_digest=fnv64:" << digest;
    if (cfg.command == "simulate") {
        m << " preset=" << cfg.preset;
        if (cfg.n_firms) m << " n_firms=" << *cfg.n_firms;
        if (cfg.hires_per_firm_year) m << " hires_per_firm_year=" << *cfg.hires_per_firm_year;
        if (cfg.n_years) m << " n_years=" << *cfg.n_years;
        if (cfg.reopt_prob) m << " reopt_prob=" << *cfg.reopt_prob;
        m << " with_next_year=" << (cfg.with_next_year ? 1 : 0);
    }
    if (cfg.command == "estimate") {
        m << " degree=" << cfg.degree << " bandwidth=" << cfg.bandwidth << " kernel=" << cfg.kernel
          << " grain=" << cfg.grain << " min_wage=" << cfg.min_wage_centavos
          << " winsorize=" << cfg.winsorize_centavos << " bootstrap=" << cfg.bootstrap_b;
        if (!cfg.by_covariate.empty()) m << " by=" << cfg.by_covariate << " cells=" << cfg.quantile_cells;
    }
    if (cfg.command == "rd")
        m << " outcome=" << cfg.rd_outcome_name << " bandwidth=" << cfg.rd_bandwidth
          << " target=" << cfg.rd_target_reais << " min_wage=" << cfg.min_wage_centavos;
    if (cfg.command == "spillover") m << " mw_t=" << cfg.mw_t_centavos << " mw_t1=" << cfg.mw_t1_centavos;
    if (cfg.command == "digits" || cfg.command == "classify-firms" || cfg.command == "predict-tests")
        m << " min_wage=" << cfg.min_wage_centavos;
    return m.str();
}

inline std::ofstream open_artifact(const std::string& path, const std::string& manifest) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write artifact: " + path);
    os << "# manifest: " << manifest << "\n";
    return os;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline MwSchedule mw_from(const RunConfig& cfg) {
    if (!cfg.min_wage_schedule_centavos.empty()) {
        std::map<int, Money> m;
        for (const auto& [y, c] : cfg.min_wage_schedule_centavos) m[y] = from_centavos(c);
        MwSchedule s = MwSchedule::yearly(std::move(m));
        s.constant = from_centavos(cfg.min_wage_centavos);
        return s;
    }
    return MwSchedule::fixed(from_centavos(cfg.min_wage_centavos));
}

inline Kernel kernel_from(const std::string& name) {
    if (name == "uniform") return Kernel::Uniform;
    if (name == "triangular") return Kernel::Triangular;
    if (name == "epanechnikov") return Kernel::Epanechnikov;
    throw ConfigError("unknown kernel: " + name);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline void run_simulate(const RunConfig& cfg, const std::string& manifest) {
    SimConfig sim = preset_config(cfg.preset, cfg.seed);
    if (cfg.n_firms) sim.n_firms = *cfg.n_firms;
    if (cfg.hires_per_firm_year) sim.mean_hires_per_firm_year = *cfg.hires_per_firm_year;
    if (cfg.n_years) sim.n_years = *cfg.n_years;
    if (cfg.reopt_prob) sim.reopt_prob = *cfg.reopt_prob;

    SimResult res = simulate_hires(sim);
    if (cfg.with_next_year) res.records = simulate_next_year(std::move(res.records), sim);

    auto os = detail::open_artifact(cfg.out_prefix + "_hires.csv", manifest);
    write_records(os, res.records);

    std::cout << "simulate: n=" << res.summary.n << " theta_true=" << detail::fmt(res.summary.theta_true)
              << " floored=" << res.summary.n_floored << "\n";
}

inline void run_digits(const RunConfig& cfg, const std::vector<WageRecord>& records,
                       const std::string& manifest) {
    const auto shares =
        divisibility_shares(wages_of(records), {Grain::k10, Grain::k100, Grain::k1000});
    auto os = detail::open_artifact(cfg.out_prefix + "_digits.csv", manifest);
    os << "grain,share,uniform_baseline,count\n";
    for (const auto& [g, s] : shares) {
        os << g << ',' << detail::fmt(s.share) << ',' << detail::fmt(s.uniform_baseline) << ',' << s.count
           << "\n";
        std::cout << "digits: grain " << g << " share " << detail::fmt(s.share) << " (uniform "
                  << detail::fmt(s.uniform_baseline) << ")\n";
    }
}

inline void run_estimate(const RunConfig& cfg, const std::vector<WageRecord>& records,
                         const std::string& manifest) {
    BunchingSpec spec;
    spec.hist.support_hi = from_centavos(cfg.winsorize_centavos);
    spec.hist.excluded_mw = from_centavos(cfg.min_wage_centavos);
    spec.fit.degree = cfg.degree;
    spec.fit.bandwidth_bins = cfg.bandwidth;
    spec.fit.kernel = detail::kernel_from(cfg.kernel);
    spec.aggregation_grain = grain_from_int(cfg.grain);
    spec.with_windows = true;

    const WageHistogram hist = build_histogram(records, spec.hist);
    const CounterfactualFit fit = fit_counterfactual(hist, spec.fit);
    const RoundSet rounds(spec.aggregation_grain, hist.support_lo, hist.support_hi);
    BunchingEstimate est = theta_hat(excess_mass(hist, fit, rounds), hist.n);
    for (const auto& re : est.per_round)
        est.windows[re.round.centavos] = missing_mass_window(hist, fit, re.round);
    if (cfg.bootstrap_b >= 2) est.bootstrap_se = bootstrap_theta(records, spec, cfg.bootstrap_b, cfg.seed).se;

    {
        auto os = detail::open_artifact(cfg.out_prefix + "_bins.csv", manifest);
        os << "bin,count,counterfactual,reweighted,is_round,excess\n";
        for (std::int64_t b = 0; b < hist.n_bins(); ++b) {
            const Money w = hist.bin_value(b);
            const bool round = is_divisible(w, spec.aggregation_grain);
            os << w.whole_reais() << ',' << hist.counts[static_cast<std::size_t>(b)] << ','
               << detail::fmt(fit.predicted[static_cast<std::size_t>(b)]) << ','
               << detail::fmt(fit.reweighted(b)) << ',' << (round ? 1 : 0) << ','
               << detail::fmt(static_cast<double>(hist.counts[static_cast<std::size_t>(b)]) -
                              fit.reweighted(b))
               << "\n";
        }
    }
    {
        auto os = detail::open_artifact(cfg.out_prefix + "_estimates.csv", manifest);
        os << "# theta_hat=" << detail::fmt(est.theta) << " b_hat=" << detail::fmt(est.b_hat)
           << " n=" << est.n;
        if (est.bootstrap_se) os << " bootstrap_se=" << detail::fmt(*est.bootstrap_se);
        os << " lambda=" << detail::fmt(fit.lambda)
           << " negative_prediction=" << (fit.negative_prediction_flag ? 1 : 0) << "\n";
        os << "grain,r,B_r,window_lo,window_hi,window_balanced\n";
        for (const auto& re : est.per_round) {
            const auto& w = est.windows.at(re.round.centavos);
            os << cfg.grain << ',' << re.round.whole_reais() << ',' << detail::fmt(re.excess) << ','
               << w.lo.whole_reais() << ',' << w.hi.whole_reais() << ',' << (w.balanced ? 1 : 0) << "\n";
        }
    }
    if (!cfg.by_covariate.empty()) {
        CellSpec cells;
        cells.covariates = {cfg.by_covariate};
        cells.quantile_cells = cfg.quantile_cells;
        const auto theta_cells = conditional_theta(records, cells, spec, cfg.bootstrap_b, cfg.seed);
        auto os = detail::open_artifact(cfg.out_prefix + "_cells.csv", manifest);
        os << "covariate,cell,theta_hat,se,n\n";
        for (const auto& c : theta_cells)
            os << c.covariate << ',' << c.label << ',' << detail::fmt(c.theta) << ',' << detail::fmt(c.se)
               << ',' << c.n << "\n";
    }

    std::cout << "estimate: theta_hat=" << detail::fmt(est.theta) << " b_hat=" << detail::fmt(est.b_hat)
              << " n=" << est.n;
    if (est.bootstrap_se) std::cout << " se=" << detail::fmt(*est.bootstrap_se);
    std::cout << "\n";
}

inline void run_rd(const RunConfig& cfg, const std::vector<WageRecord>& records, const std::string& manifest) {
    auto os = detail::open_artifact(cfg.out_prefix + "_rd.csv", manifest);

    std::vector<Money> targets;
    if (cfg.rd_target_reais > 0) {
        targets.push_back(from_reais(cfg.rd_target_reais));
    } else {
        Money lo = records.front().contracted_wage, hi = lo;
        for (const auto& r : records) {
            lo = std::min(lo, r.contracted_wage);
            hi = std::max(hi, r.contracted_wage);
        }
        for (Money r : RoundSet(Grain::k100, lo, hi).values()) targets.push_back(r);
    }

    if (cfg.rd_outcome_name == "density") {
        HistogramSpec hspec;
        hspec.excluded_mw = from_centavos(cfg.min_wage_centavos);
        hspec.support_hi = from_centavos(cfg.winsorize_centavos);
        const WageHistogram hist = build_histogram(records, hspec);
        os << "r,beta,beta_se,n_bins,window_total\n";
        for (Money r : targets) {
            try {
                const DensityRdFit f = rd_density(hist, r, cfg.rd_bandwidth);
                os << r.whole_reais() << ',' << detail::fmt(f.beta()) << ',' << detail::fmt(f.beta_se())
                   << ',' << f.n_bins << ',' << f.window_total << "\n";
            } catch (const FitError&) {
                if (cfg.rd_target_reais > 0) throw; // explicit target: surface the failure
            }
        }
        return;
    }

    const RdOutcome outcome = cfg.rd_outcome_name == "separated" ? RdOutcome::Separated : RdOutcome::Resigned;
    std::vector<RdFit> fits;
    os << "r,beta,beta_se,gamma,gamma_se,n\n";
    for (Money r : targets) {
        try {
            RdFit f = rd_outcome(records, r, cfg.rd_bandwidth, outcome);
            os << r.whole_reais() << ',' << detail::fmt(f.beta()) << ',' << detail::fmt(f.beta_se()) << ','
               << detail::fmt(f.gamma()) << ',' << detail::fmt(f.gamma_se()) << ',' << f.ols.n_obs << "\n";
            fits.push_back(std::move(f));
        } catch (const FitError&) {
            if (cfg.rd_target_reais > 0) throw;
        }
    }
    if (fits.size() > 1) {
        const WeightedRd avg = weighted_rd_average(fits);
        os << "all," << detail::fmt(avg.beta) << ',' << detail::fmt(avg.beta_se) << ','
           << detail::fmt(avg.gamma) << ',' << detail::fmt(avg.gamma_se) << ",0\n";
    }
}

inline void run_spillover(const RunConfig& cfg, const std::vector<WageRecord>& records,
                          const std::string& manifest) {
    if (cfg.mw_t_centavos <= 0 || cfg.mw_t1_centavos <= 0)
        throw ConfigError("spillover: --mw-t and --mw-t1 are required");
    const TransitionTable tab =
        spillover_table(records, from_centavos(cfg.mw_t_centavos), from_centavos(cfg.mw_t1_centavos));

    auto os = detail::open_artifact(cfg.out_prefix + "_transitions.csv", manifest);
    os << "# did=" << (tab.did ? detail::fmt(*tab.did) : "NA")
       << " ratio_to_benchmark=" << (tab.ratio_to_benchmark ? detail::fmt(*tab.ratio_to_benchmark) : "NA")
       << " excluded_below_mw=" << tab.n_excluded_below_mw << " missing_next=" << tab.n_missing_next << "\n";
    os << "panel,origin,origin_share,at_mw,round,nonround,round_excl_mw,nonround_excl_mw,n\n";
    for (const auto& row : tab.rows)
        os << row.panel << ',' << (row.round_origin ? "round" : "nonround") << ','
           << detail::fmt(row.origin_share) << ',' << detail::fmt(row.at_mw) << ',' << detail::fmt(row.round)
           << ',' << detail::fmt(row.nonround) << ',' << detail::fmt(row.round_excl_mw) << ','
           << detail::fmt(row.nonround_excl_mw) << ',' << row.n << "\n";

    std::cout << "spillover: did=" << (tab.did ? detail::fmt(*tab.did) : "NA") << "\n";
}

inline void run_predict_tests(const RunConfig& cfg, const std::vector<WageRecord>& records,
                              const std::string& manifest) {
    auto os = detail::open_artifact(cfg.out_prefix + "_predictions.csv", manifest);
    os << "design,covariate,statistic,value,se\n";

    BunchingSpec spec;
    spec.hist.support_hi = from_centavos(cfg.winsorize_centavos);
    spec.hist.excluded_mw = from_centavos(cfg.min_wage_centavos);
    spec.fit.degree = cfg.degree;
    spec.fit.bandwidth_bins = cfg.bandwidth;
    spec.aggregation_grain = grain_from_int(cfg.grain);

    for (const std::string cov : {"log_cpi", "firm_size", "hiring_experience"}) {
        CellSpec cells;
        cells.covariates = {cov};
        cells.quantile_cells = cfg.quantile_cells;
        cells.min_cell_n = 2000;
        const auto theta_cells = conditional_theta(records, cells, spec, 0, cfg.seed);

        // correlation between cell theta and the cell's mean covariate value
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, n = 0;
        for (const auto& c : theta_cells) {
            const double x = c.mean_covariate;
            const double y = c.theta;
            sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y; n += 1;
        }
        const double corr = (n * sxy - sx * sy) /
                            std::sqrt(std::max(1e-300, (n * sxx - sx * sx) * (n * syy - sy * sy)));
        os << "bunching," << cov << ",theta_corr," << detail::fmt(corr) << ",\n";
        for (const auto& c : theta_cells)
            os << "bunching," << cov << ",theta[" << c.label << "]," << detail::fmt(c.theta) << ",\n";
    }

    LpmSpec lspec;
    lspec.outcome = cfg.grain == 100 ? "round100" : cfg.grain == 1000 ? "round1000" : "round10";
    const LpmFit fit = lpm_fit(records, lspec);
    for (const auto& c : fit.coefficients)
        os << "regression," << c.name << ",slope," << detail::fmt(c.estimate) << ',' << detail::fmt(c.se)
           << "\n";

    std::cout << "predict-tests: regression slopes";
    for (const auto& c : fit.coefficients) std::cout << ' ' << c.name << '=' << detail::fmt(c.estimate);
    std::cout << "\n";
}

inline void run_classify(const RunConfig& cfg, const std::vector<WageRecord>& records,
                         const std::string& manifest) {
    const auto profiles = classify_firms(records);
    auto os = detail::open_artifact(cfg.out_prefix + "_firms.csv", manifest);
    os << "firm_id,n_hires,share_round,all_round,more_than_half,more_than_two_thirds,all_round100,"
          "all_yearly_round\n";
    for (const auto& f : profiles)
        os << f.firm_id << ',' << f.n_hires << ',' << detail::fmt(f.share_round) << ',' << (f.all_round ? 1 : 0)
           << ',' << (f.more_than_half ? 1 : 0) << ',' << (f.more_than_two_thirds ? 1 : 0) << ','
           << (f.all_round100 ? 1 : 0) << ',' << (f.all_yearly_round ? 1 : 0) << "\n";
}

/// Execute a run. Exit codes: 0 success, 2 input/config error, 3 numerical
/// failure.
inline int run(const RunConfig& cfg) {
    try {
        std::string digest;
        if (!cfg.input.empty()) digest = file_digest(cfg.input);
        const std::string manifest = detail::manifest_for(cfg, digest);

        if (cfg.command == "simulate") {
            run_simulate(cfg, manifest);
            return 0;
        }

        if (cfg.input.empty()) throw ConfigError(cfg.command + ": --in is required");
        IngestResult in = ingest_file(cfg.input, detail::mw_from(cfg));
        std::cerr << "ingest: read=" << in.report.rows_read << " retained=" << in.report.rows_retained
                  << " invalid_id=" << in.report.dropped_invalid_id << " below_mw=" << in.report.dropped_below_mw
                  << " duplicate=" << in.report.dropped_duplicate
                  << " missing_wage=" << in.report.dropped_missing_wage << "\n";
        if (in.records.empty()) throw ConfigError(cfg.command + ": no records retained after ingestion filters");

        if (cfg.command == "digits") run_digits(cfg, in.records, manifest);
        else if (cfg.command == "estimate") run_estimate(cfg, in.records, manifest);
        else if (cfg.command == "rd") run_rd(cfg, in.records, manifest);
        else if (cfg.command == "spillover") run_spillover(cfg, in.records, manifest);
        else if (cfg.command == "predict-tests") run_predict_tests(cfg, in.records, manifest);
        else if (cfg.command == "classify-firms") run_classify(cfg, in.records, manifest);
        else throw ConfigError("unknown command: " + cfg.command);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FitError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace coarsewage

#endif
