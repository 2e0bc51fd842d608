#ifndef EPIWIN_DATA_IO_HPP
#define EPIWIN_DATA_IO_HPP

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epiwin/errors.hpp"

namespace epiwin {

// --- calendar helpers (proleptic Gregorian, days since 1970-01-01) ---

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

inline std::int64_t parse_iso_date(const std::string& s, long line = 0) {
    int y, m, d;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
        d > 31)
        throw parse_error("bad ISO date '" + s + "'", line);
    return days_from_civil(y, m, d);
}

inline std::string iso_date(std::int64_t day) {
    int y, m, d;
    civil_from_days(day, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

// Floats are serialized with 17 significant digits so files round-trip
// bit-exactly.
inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// --- epidemic series ---

struct EpidemicSeries {
    std::string region;
    std::int64_t start_day = 0;  // epoch day of dates[0]; dates are consecutive
    std::vector<double> cum_cases;
    std::vector<double> cum_deaths;

    int size() const { return static_cast<int>(cum_cases.size()); }
    std::string date(int t) const { return iso_date(start_day + t); }
};

struct CsvColumns {
    std::string date = "date";
    std::string region = "region";
    std::string cases = "cum_cases";
    std::string deaths = "cum_deaths";
};

struct RepairLog {
    int filled_gaps = 0;       // missing dates carried forward
    int monotone_fixes = 0;    // downward revisions flattened
    int deaths_clamped = 0;    // deaths reduced to not exceed cases

    int total() const { return filled_gaps + monotone_fixes + deaths_clamped; }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// Backward running minimum: flattens downward revisions while preserving the
// final reported value.
inline int enforce_monotone(std::vector<double>& v) {
    int fixes = 0;
    for (std::size_t t = v.size(); t-- > 1;) {
        if (v[t - 1] > v[t]) {
            v[t - 1] = v[t];
            ++fixes;
        }
    }
    return fixes;
}

}  // namespace detail

// Loads one region's series from CSV, sorts by date, fills date gaps by
// carrying the previous row forward, and repairs non-monotone cumulative
// counts. The returned series always satisfies the EpidemicSeries invariants.
inline EpidemicSeries load_series(const std::string& path, const std::string& region,
                                  const CsvColumns& cols = {}, RepairLog* log = nullptr) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty file " + path, 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = detail::split_csv_line(line);
    long i_date = -1, i_region = -1, i_cases = -1, i_deaths = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == cols.date) i_date = static_cast<long>(k);
        else if (header[k] == cols.region) i_region = static_cast<long>(k);
        else if (header[k] == cols.cases) i_cases = static_cast<long>(k);
        else if (header[k] == cols.deaths) i_deaths = static_cast<long>(k);
    }
    if (i_date < 0 || i_region < 0 || i_cases < 0 || i_deaths < 0)
        throw parse_error("missing required columns in " + path, 1);

    struct Row {
        std::int64_t day;
        double cases, deaths;
    };
    std::vector<Row> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        const long needed = std::max({i_date, i_region, i_cases, i_deaths});
        if (static_cast<long>(f.size()) <= needed)
            throw parse_error("too few fields", lineno);
        if (f[i_region] != region) continue;
        Row r;
        r.day = parse_iso_date(f[i_date], lineno);
        try {
            r.cases = std::stod(f[i_cases]);
            r.deaths = std::stod(f[i_deaths]);
        } catch (const std::exception&) {
            throw parse_error("non-numeric count", lineno);
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw unknown_region_error("region '" + region + "' not found in " + path);

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.day < b.day; });

    RepairLog local;
    EpidemicSeries series;
    series.region = region;
    series.start_day = rows.front().day;
    std::int64_t expected = rows.front().day;
    for (const Row& r : rows) {
        while (expected < r.day) {  // gap: carry last value forward
            series.cum_cases.push_back(series.cum_cases.back());
            series.cum_deaths.push_back(series.cum_deaths.back());
            ++local.filled_gaps;
            ++expected;
        }
        series.cum_cases.push_back(r.cases);
        series.cum_deaths.push_back(r.deaths);
        ++expected;
    }

    local.monotone_fixes += detail::enforce_monotone(series.cum_cases);
    local.monotone_fixes += detail::enforce_monotone(series.cum_deaths);
    for (int t = 0; t < series.size(); ++t) {
        if (series.cum_deaths[t] > series.cum_cases[t]) {
            series.cum_deaths[t] = series.cum_cases[t];
            ++local.deaths_clamped;
        }
    }
    if (log) *log = local;
    return series;
}

inline void write_series_csv(const EpidemicSeries& series, const std::string& path,
                             const CsvColumns& cols = {}) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << cols.date << ',' << cols.region << ',' << cols.cases << ',' << cols.deaths << '\n';
    for (int t = 0; t < series.size(); ++t) {
        out << series.date(t) << ',' << series.region << ',' << fmt_double(series.cum_cases[t])
            << ',' << fmt_double(series.cum_deaths[t]) << '\n';
    }
    if (!out) throw io_error("write failed for " + path);
}

}  // namespace epiwin

#endif
