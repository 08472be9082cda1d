#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "markup/control.hpp"
#include "markup/types.hpp"

namespace markup::market {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    // Days since 1970-01-01 (proleptic Gregorian).
    std::int64_t serial() const;
    auto operator<=>(const Date&) const = default;
    std::string iso() const;
};

Date parse_date(const std::string& text, const std::string& format);

struct DatedValue {
    Date date;
    double value = 0.0;
};

struct CsvSchema {
    std::string date_column = "date";
    std::string value_column = "value";
    std::string date_format = "%Y-%m-%d";
};

// Parses, sorts ascending, rejects duplicate dates and malformed rows
// (ParseError carries the 1-based file row).
std::vector<DatedValue> load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

enum class AlignPolicy { InnerJoin, ForwardFillCpi };

struct AlignedSeries {
    std::vector<Date> dates;
    std::vector<double> cpi;
    std::vector<double> firm;
};

// InnerJoin keeps common dates; ForwardFillCpi carries the latest CPI value
// forward onto every firm date at or after the first CPI date.
AlignedSeries align(const std::vector<DatedValue>& cpi, const std::vector<DatedValue>& firm,
                    AlignPolicy policy);

struct DeviationSeries {
    std::vector<Date> dates;
    std::vector<double> x_tilde;
    Date base_date;
};

// Rebase both series to 1 at base_date, then x = (Z - Zhat) / Z with Z the
// rebased aggregate (CPI) and Zhat the rebased firm price.
DeviationSeries deviation_series(const AlignedSeries& aligned, Date base_date);

// Deviation series as generic observations; time in years from the first date.
std::vector<SeriesObservation> to_observations(const DeviationSeries& dev);

struct ModelConfig {
    std::string label;
    ModelParams params;
    LambdaSpec lambda;
    double s = 1.0;
    control::MStarFormula formula = control::MStarFormula::ClosedForm;
};

struct FirmModelRow {
    std::string firm;
    std::string model;
    double m_tilde = 0.5;
    double m_star = 0.0;
    double x_input = 0.0;
    double s = 1.0;
    std::string lambda_mode;
};

// Evaluate the control pipeline per model at one scalar summary of the
// deviation series (mean of x by default, or an explicit probe value).
std::vector<FirmModelRow> firm_report(const std::string& firm, const DeviationSeries& dev,
                                      const std::vector<ModelConfig>& models,
                                      std::optional<double> x_override = std::nullopt);

}  // namespace markup::market
