#include "markup/market.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace markup::market {

std::int64_t Date::serial() const {
    // Howard Hinnant's days-from-civil.
    const int y = year - (month <= 2 ? 1 : 0);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date parse_date(const std::string& text, const std::string& format) {
    Date date;
    std::size_t ti = 0;
    bool saw_any = false;
    for (std::size_t fi = 0; fi < format.size(); ++fi) {
        if (format[fi] == '%' && fi + 1 < format.size()) {
            const char spec = format[++fi];
            int width = spec == 'Y' ? 4 : 2;
            if (ti + width > text.size()) throw Error("date does not match format: " + text);
            int value = 0;
            const auto res = std::from_chars(text.data() + ti, text.data() + ti + width, value);
            if (res.ec != std::errc{} || res.ptr != text.data() + ti + width)
                throw Error("date does not match format: " + text);
            ti += width;
            switch (spec) {
                case 'Y': date.year = value; break;
                case 'm': date.month = value; break;
                case 'd': date.day = value; break;
                default: throw Error(std::string("unsupported date field %") + spec);
            }
            saw_any = true;
        } else {
            if (ti >= text.size() || text[ti] != format[fi])
                throw Error("date does not match format: " + text);
            ++ti;
        }
    }
    if (!saw_any || ti != text.size()) throw Error("date does not match format: " + text);
    if (date.month < 1 || date.month > 12 || date.day < 1 || date.day > 31)
        throw Error("date out of range: " + text);
    return date;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

std::vector<DatedValue> load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw InvalidParams("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw EmptyFile("empty file: " + path.string());
    const auto header = split_csv_row(line);
    std::ptrdiff_t date_idx = -1, value_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == schema.date_column) date_idx = static_cast<std::ptrdiff_t>(i);
        if (header[i] == schema.value_column) value_idx = static_cast<std::ptrdiff_t>(i);
    }
    if (date_idx < 0 || value_idx < 0)
        throw ParseError(1, "header must contain '" + schema.date_column + "' and '" +
                                schema.value_column + "'");

    std::vector<DatedValue> rows;
    std::int64_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_row(line);
        if (fields.size() <= static_cast<std::size_t>(std::max(date_idx, value_idx)))
            throw ParseError(row_no, "expected " + std::to_string(header.size()) + " fields");
        DatedValue dv;
        try {
            dv.date = parse_date(fields[static_cast<std::size_t>(date_idx)], schema.date_format);
        } catch (const Error& e) {
            throw ParseError(row_no, e.what());
        }
        const std::string& value_text = fields[static_cast<std::size_t>(value_idx)];
        const auto res = std::from_chars(value_text.data(), value_text.data() + value_text.size(),
                                         dv.value);
        if (res.ec != std::errc{} || res.ptr != value_text.data() + value_text.size())
            throw ParseError(row_no, "malformed number: '" + value_text + "'");
        if (!std::isfinite(dv.value)) throw ParseError(row_no, "non-finite value");
        rows.push_back(dv);
    }
    if (rows.empty()) throw EmptyFile("no data rows in " + path.string());

    std::stable_sort(rows.begin(), rows.end(),
                     [](const DatedValue& a, const DatedValue& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date == rows[i - 1].date)
            throw DuplicateDate("duplicate date " + rows[i].date.iso() + " in " + path.string());
    return rows;
}

AlignedSeries align(const std::vector<DatedValue>& cpi, const std::vector<DatedValue>& firm,
                    AlignPolicy policy) {
    if (cpi.empty() || firm.empty()) throw NoOverlap("align needs two non-empty series");

    AlignedSeries out;
    if (policy == AlignPolicy::InnerJoin) {
        std::size_t i = 0, k = 0;
        while (i < cpi.size() && k < firm.size()) {
            if (cpi[i].date < firm[k].date) {
                ++i;
            } else if (firm[k].date < cpi[i].date) {
                ++k;
            } else {
                out.dates.push_back(cpi[i].date);
                out.cpi.push_back(cpi[i].value);
                out.firm.push_back(firm[k].value);
                ++i;
                ++k;
            }
        }
    } else {
        std::size_t i = 0;  // index of the next CPI observation
        for (const auto& f : firm) {
            if (f.date < cpi.front().date) continue;
            while (i + 1 < cpi.size() && !(f.date < cpi[i + 1].date)) ++i;
            out.dates.push_back(f.date);
            out.cpi.push_back(cpi[i].value);
            out.firm.push_back(f.value);
        }
    }
    if (out.dates.empty()) throw NoOverlap("series have no overlapping date range");
    return out;
}

DeviationSeries deviation_series(const AlignedSeries& aligned, Date base_date) {
    const auto it = std::find(aligned.dates.begin(), aligned.dates.end(), base_date);
    if (it == aligned.dates.end())
        throw BaseDateMissing("base date " + base_date.iso() + " not present after alignment");
    const auto base = static_cast<std::size_t>(it - aligned.dates.begin());
    const double cpi0 = aligned.cpi[base];
    const double firm0 = aligned.firm[base];
    if (!(cpi0 > 0.0) || !(firm0 > 0.0))
        throw NonPositiveBase("values at the base date must be positive");

    DeviationSeries dev;
    dev.base_date = base_date;
    dev.dates = aligned.dates;
    dev.x_tilde.resize(aligned.dates.size());
    for (std::size_t i = 0; i < aligned.dates.size(); ++i) {
        const double z = aligned.cpi[i] / cpi0;
        const double zhat = aligned.firm[i] / firm0;
        dev.x_tilde[i] = (z - zhat) / z;
    }
    return dev;
}

std::vector<SeriesObservation> to_observations(const DeviationSeries& dev) {
    std::vector<SeriesObservation> obs(dev.dates.size());
    const double t0 = static_cast<double>(dev.dates.front().serial());
    for (std::size_t i = 0; i < dev.dates.size(); ++i) {
        obs[i].s = (static_cast<double>(dev.dates[i].serial()) - t0) / 365.25;
        obs[i].x = dev.x_tilde[i];
    }
    return obs;
}

std::vector<FirmModelRow> firm_report(const std::string& firm, const DeviationSeries& dev,
                                      const std::vector<ModelConfig>& models,
                                      std::optional<double> x_override) {
    if (dev.x_tilde.empty()) throw InsufficientData("firm_report needs a non-empty series");
    double x = 0.0;
    if (x_override) {
        x = *x_override;
    } else {
        for (double v : dev.x_tilde) x += v;
        x /= static_cast<double>(dev.x_tilde.size());
    }

    std::vector<FirmModelRow> rows;
    rows.reserve(models.size());
    for (std::size_t k = 0; k < models.size(); ++k) {
        const auto& mc = models[k];
        try {
            const auto d = drift_derivatives(mc.params, x, 0.0);
            const auto [d1, d2] = control::eval_d1_d2(mc.params, mc.lambda, mc.s, x, d);
            const double m = control::m_star(mc.params, mc.s, x, d1, d2, mc.formula);
            FirmModelRow row;
            row.firm = firm;
            row.model = mc.label;
            row.m_star = m;
            row.m_tilde = control::m_tilde(m);
            row.x_input = x;
            row.s = mc.s;
            row.lambda_mode = mc.lambda.is_zero()
                                  ? "zero"
                                  : (mc.lambda.mode == LambdaSpec::Mode::Constant ? "constant"
                                                                                  : "tabulated");
            rows.push_back(std::move(row));
        } catch (const Error& e) {
            throw Error("model " + std::to_string(k) + " (" + mc.label + "): " + e.what());
        }
    }
    return rows;
}

}  // namespace markup::market
