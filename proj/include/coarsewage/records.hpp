#ifndef COARSEWAGE_RECORDS_HPP
#define COARSEWAGE_RECORDS_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coarsewage/labor_model.hpp"
#include "coarsewage/money.hpp"

namespace coarsewage {

/// Latent simulation truth carried alongside a generated hire. Absent on
/// ingested external data.
struct LatentTruth {
    bool was_coarse = false;
    double w_star = 0.0;
    std::optional<Grain> chosen;
    bool mw_floored = false;
};

/// One new hire: the unit of observation everywhere downstream.
struct WageRecord {
    std::int64_t worker_id = 0;
    std::int64_t firm_id = 0;
    int year = 0;
    int month = 1;
    int region = 0;
    Money contracted_wage{};
    std::optional<Money> wage_next_year;
    bool separated = false;
    bool resigned = false;

    // covariates
    int education = 0;
    int occupation = 0;
    double firm_size = 0.0;        // employees at hiring
    double hiring_experience = 0.0; // cumulative hires when this one was made
    double log_cpi = 0.0;
    bool has_hr = false;
    double firm_age = 0.0;

    std::optional<LatentTruth> latent;
};

/// Covariate lookup by column name, for cell partitioners and regressions.
inline double covariate_value(const WageRecord& r, const std::string& name) {
    if (name == "education") return static_cast<double>(r.education);
    if (name == "occupation") return static_cast<double>(r.occupation);
    if (name == "firm_size") return r.firm_size;
    if (name == "hiring_experience") return r.hiring_experience;
    if (name == "log_cpi") return r.log_cpi;
    if (name == "has_hr") return r.has_hr ? 1.0 : 0.0;
    if (name == "firm_age") return r.firm_age;
    if (name == "region") return static_cast<double>(r.region);
    if (name == "year") return static_cast<double>(r.year);
    if (name == "wage") return to_reais(r.contracted_wage);
    throw std::invalid_argument("unknown covariate: " + name);
}

inline std::vector<Money> wages_of(const std::vector<WageRecord>& records) {
    std::vector<Money> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.contracted_wage);
    return out;
}

} // namespace coarsewage

#endif
