// Command-line front end: simulate cohorts, compute digit shares, run the
// bunching estimator, RD tests, spillover tables, prediction tests, and
// firm classification. All estimation logic lives in the headers; this file
// only maps flags onto RunConfig.

#include <CLI11.hpp>

#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "coarsewage/cli.hpp"

namespace {

std::map<int, std::int64_t> parse_schedule(const std::string& text) {
    // "2010:51000,2011:54500" -> year -> centavos
    std::map<int, std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw coarsewage::ConfigError("bad --min-wage-schedule entry: " + item);
        out[std::stoi(item.substr(0, colon))] = std::stoll(item.substr(colon + 1));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coarse wage-setting simulator and bunching toolkit"};
    app.set_config("--config", "", "flat key=value config file; command-line flags win");
    app.require_subcommand(1);

    coarsewage::RunConfig cfg;
    std::string schedule_text;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--out", cfg.out_prefix, "output artifact prefix");
        sub->add_option("--min-wage", cfg.min_wage_centavos, "minimum wage in centavos");
        sub->add_option("--min-wage-schedule", schedule_text, "per-year MW, e.g. 2010:51000,2011:54500");
        sub->add_option("--winsorize", cfg.winsorize_centavos, "right-tail cap in centavos");
    };

    auto* sim = app.add_subcommand("simulate", "generate a hire cohort from the frictions model");
    add_common(sim);
    sim->add_option("--preset", cfg.preset, "baseline | null | twopoint | spillover | ladder");
    int n_firms = 0;
    double hires = 0.0;
    int n_years = 0;
    double reopt = -1.0;
    sim->add_option("--n-firms", n_firms, "override firm count");
    sim->add_option("--hires-per-firm-year", hires, "override mean hires per firm-year");
    sim->add_option("--n-years", n_years, "override year count");
    sim->add_option("--reopt-prob", reopt, "override re-optimization probability");
    sim->add_flag("--with-next-year", cfg.with_next_year, "also draw year t+1 wages");

    auto* digits = app.add_subcommand("digits", "divisibility shares vs uniform baselines");
    add_common(digits);
    digits->add_option("--in", cfg.input, "hire CSV")->required();

    auto* est = app.add_subcommand("estimate", "bunching estimator with counterfactual density");
    add_common(est);
    est->add_option("--in", cfg.input, "hire CSV")->required();
    est->add_option("--degree", cfg.degree, "local polynomial degree");
    est->add_option("--bandwidth", cfg.bandwidth, "window half-width in bins");
    est->add_option("--kernel", cfg.kernel, "uniform | triangular | epanechnikov");
    est->add_option("--grain", cfg.grain, "round-number grain for aggregation");
    est->add_option("--bootstrap", cfg.bootstrap_b, "bootstrap replications for the SE");
    est->add_option("--by", cfg.by_covariate, "conditional theta by this covariate");
    est->add_option("--cells", cfg.quantile_cells, "quantile cells for --by");

    auto* rd = app.add_subcommand("rd", "regression discontinuity at round salaries");
    add_common(rd);
    rd->add_option("--in", cfg.input, "hire CSV")->required();
    rd->add_option("--target", cfg.rd_target_reais, "round salary in reais (0: all multiples of 100)");
    rd->add_option("--bandwidth", cfg.rd_bandwidth, "bandwidth in reais");
    rd->add_option("--outcome", cfg.rd_outcome_name, "resigned | separated | density");

    auto* spill = app.add_subcommand("spillover", "minimum-wage transition table and DiD");
    add_common(spill);
    spill->add_option("--in", cfg.input, "hire CSV with next-year wages")->required();
    spill->add_option("--mw-t", cfg.mw_t_centavos, "year-t minimum wage in centavos")->required();
    spill->add_option("--mw-t1", cfg.mw_t1_centavos, "year-t+1 minimum wage in centavos")->required();

    auto* pred = app.add_subcommand("predict-tests", "bunching-design and regression-design tests");
    add_common(pred);
    pred->add_option("--in", cfg.input, "hire CSV")->required();
    pred->add_option("--degree", cfg.degree, "local polynomial degree");
    pred->add_option("--bandwidth", cfg.bandwidth, "window half-width in bins");
    pred->add_option("--grain", cfg.grain, "round-number grain");
    pred->add_option("--cells", cfg.quantile_cells, "quantile cells per covariate");

    auto* cls = app.add_subcommand("classify-firms", "per-firm round-hiring profiles");
    add_common(cls);
    cls->add_option("--in", cfg.input, "hire CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!schedule_text.empty()) cfg.min_wage_schedule_centavos = parse_schedule(schedule_text);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (sim->parsed()) {
        cfg.command = "simulate";
        if (n_firms > 0) cfg.n_firms = n_firms;
        if (hires > 0.0) cfg.hires_per_firm_year = hires;
        if (n_years > 0) cfg.n_years = n_years;
        if (reopt >= 0.0) cfg.reopt_prob = reopt;
    } else if (digits->parsed()) cfg.command = "digits";
    else if (est->parsed()) cfg.command = "estimate";
    else if (rd->parsed()) cfg.command = "rd";
    else if (spill->parsed()) cfg.command = "spillover";
    else if (pred->parsed()) cfg.command = "predict-tests";
    else if (cls->parsed()) cfg.command = "classify-firms";

    return coarsewage::run(cfg);
}
