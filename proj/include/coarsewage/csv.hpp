#ifndef COARSEWAGE_CSV_HPP
#define COARSEWAGE_CSV_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "coarsewage/errors.hpp"
#include "coarsewage/money.hpp"
#include "coarsewage/records.hpp"

namespace coarsewage {

/// Minimum wage lookup: a constant floor or a per-year schedule.
struct MwSchedule {
    std::map<int, Money> by_year;
    std::optional<Money> constant;

    static MwSchedule fixed(Money m) {
        MwSchedule s;
        s.constant = m;
        return s;
    }
    static MwSchedule yearly(std::map<int, Money> m) {
        MwSchedule s;
        s.by_year = std::move(m);
        return s;
    }

    Money at(int year) const {
        const auto it = by_year.find(year);
        if (it != by_year.end()) return it->second;
        if (constant) return *constant;
        throw ConfigError("minimum wage schedule missing year " + std::to_string(year));
    }
};

inline const char* kHireCsvHeader =
    "worker_id,firm_id,year,month,region,wage_centavos,wage_next_centavos,separated,resigned,"
    "education,occupation,firm_size,hiring_experience,log_cpi,has_hr,firm_age,was_coarse,w_star";

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

/// Write records in the canonical hire schema. `manifest`, when nonempty, is
/// emitted as a leading `# manifest: ...` comment line.
inline void write_records(std::ostream& os, const std::vector<WageRecord>& records,
                          const std::string& manifest = "") {
    if (!manifest.empty()) os << "# manifest: " << manifest << "\n";
    os << kHireCsvHeader << "\n";
    for (const auto& r : records) {
        os << r.worker_id << ',' << r.firm_id << ',' << r.year << ',' << r.month << ',' << r.region << ','
           << r.contracted_wage.centavos << ',';
        if (r.wage_next_year) os << r.wage_next_year->centavos;
        os << ',' << (r.separated ? 1 : 0) << ',' << (r.resigned ? 1 : 0) << ',' << r.education << ','
           << r.occupation << ',' << detail::fmt_double(r.firm_size) << ','
           << detail::fmt_double(r.hiring_experience) << ',' << detail::fmt_double(r.log_cpi) << ','
           << (r.has_hr ? 1 : 0) << ',' << detail::fmt_double(r.firm_age) << ',';
        if (r.latent) os << (r.latent->was_coarse ? 1 : 0);
        os << ',';
        if (r.latent) os << detail::fmt_double(r.latent->w_star);
        os << '\n';
    }
}

struct IngestionReport {
    std::int64_t rows_read = 0;
    std::int64_t dropped_invalid_id = 0;
    std::int64_t dropped_non_monthly = 0; // schema carries no contract-type flag; stays 0
    std::int64_t dropped_below_mw = 0;
    std::int64_t dropped_duplicate = 0;
    std::int64_t dropped_missing_wage = 0;
    std::int64_t rows_retained = 0;

    std::int64_t dropped_total() const {
        return dropped_invalid_id + dropped_non_monthly + dropped_below_mw + dropped_duplicate +
               dropped_missing_wage;
    }
};

struct IngestResult {
    std::vector<WageRecord> records;
    IngestionReport report;
};

/// Parse and filter a hire CSV. Filters apply in the sample-restriction
/// order: invalid id, (non-monthly: not representable), wage below the
/// year's MW, duplicate worker-firm-year, missing wage. Rows without a wage
/// never claim a dedup key. Malformed rows raise with their line number.
inline IngestResult ingest(std::istream& is, const MwSchedule& mw) {
    IngestResult out;
    std::string line;
    std::int64_t lineno = 0;

    // header (skipping leading comments)
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '#') continue;
        break;
    }
    {
        std::string header = line;
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header != kHireCsvHeader)
            throw ConfigError("line " + std::to_string(lineno) + ": header does not match the hire schema");
    }

    auto parse_i64 = [&](const std::string& s, const char* field) {
        try {
            std::size_t pos = 0;
            const std::int64_t v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw ConfigError("line " + std::to_string(lineno) + ": malformed " + field + " '" + s + "'");
        }
    };
    auto parse_f64 = [&](const std::string& s, const char* field) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw ConfigError("line " + std::to_string(lineno) + ": malformed " + field + " '" + s + "'");
        }
    };

    std::set<std::tuple<std::int64_t, std::int64_t, int>> seen;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 18)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 18 fields, got " +
                              std::to_string(f.size()));
        ++out.report.rows_read;

        WageRecord r;
        r.worker_id = parse_i64(f[0], "worker_id");
        r.firm_id = parse_i64(f[1], "firm_id");
        r.year = static_cast<int>(parse_i64(f[2], "year"));
        r.month = static_cast<int>(parse_i64(f[3], "month"));
        r.region = static_cast<int>(parse_i64(f[4], "region"));

        if (r.worker_id <= 0 || r.firm_id <= 0) {
            ++out.report.dropped_invalid_id;
            continue;
        }

        const bool wage_missing = f[5].empty();
        if (!wage_missing) {
            r.contracted_wage = from_centavos(parse_i64(f[5], "wage_centavos"));
            if (r.contracted_wage < mw.at(r.year)) {
                ++out.report.dropped_below_mw;
                continue;
            }
            if (!seen.emplace(r.worker_id, r.firm_id, r.year).second) {
                ++out.report.dropped_duplicate;
                continue;
            }
        }
        if (wage_missing) {
            ++out.report.dropped_missing_wage;
            continue;
        }

        if (!f[6].empty()) r.wage_next_year = from_centavos(parse_i64(f[6], "wage_next_centavos"));
        r.separated = parse_i64(f[7], "separated") != 0;
        r.resigned = parse_i64(f[8], "resigned") != 0;
        r.education = static_cast<int>(parse_i64(f[9], "education"));
        r.occupation = static_cast<int>(parse_i64(f[10], "occupation"));
        r.firm_size = parse_f64(f[11], "firm_size");
        r.hiring_experience = parse_f64(f[12], "hiring_experience");
        r.log_cpi = parse_f64(f[13], "log_cpi");
        r.has_hr = parse_i64(f[14], "has_hr") != 0;
        r.firm_age = parse_f64(f[15], "firm_age");
        if (!f[16].empty() || !f[17].empty()) {
            LatentTruth latent;
            latent.was_coarse = !f[16].empty() && parse_i64(f[16], "was_coarse") != 0;
            latent.w_star = f[17].empty() ? 0.0 : parse_f64(f[17], "w_star");
            r.latent = latent;
        }

        ++out.report.rows_retained;
        out.records.push_back(std::move(r));
    }
    return out;
}

inline IngestResult ingest_file(const std::string& path, const MwSchedule& mw) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open input file: " + path);
    return ingest(is, mw);
}

/// FNV-1a 64-bit digest of a file, for the run manifest.
inline std::string file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open input file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 14];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i)
            h = (h ^ static_cast<unsigned char>(buf[i])) * 1099511628211ULL;
        if (!is) break;
    }
    char out[20];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

} // namespace coarsewage

#endif
