#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "markup/market.hpp"
#include "markup/stats.hpp"

using namespace markup;
using namespace markup::market;

namespace {

const std::filesystem::path kData{MARKUP_DATA_DIR};

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("date serials and parsing") {
    CHECK(Date{1970, 1, 1}.serial() == 0);
    CHECK(Date{2022, 1, 3}.serial() - Date{2022, 1, 1}.serial() == 2);
    const auto d = parse_date("2023-07-09", "%Y-%m-%d");
    CHECK(d == Date{2023, 7, 9});
    CHECK(d.iso() == "2023-07-09");
    CHECK_THROWS(parse_date("07/09/2023", "%Y-%m-%d"));
    CHECK(parse_date("09/07/2023", "%d/%m/%Y") == Date{2023, 7, 9});
}

TEST_CASE("load_csv: happy path sorts and parses") {
    const auto path = write_temp("mk_ok.csv",
                                 "date,value\n2022-01-02,101.5\n2022-01-01,100.0\n");
    const auto rows = load_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].date == Date{2022, 1, 1});
    CHECK(rows[0].value == 100.0);
    CHECK(rows[1].value == 101.5);
}

TEST_CASE("load_csv: malformed number carries the row number") {
    const auto path = write_temp("mk_bad.csv",
                                 "date,value\n2022-01-01,1.0\n2022-01-02,oops\n");
    try {
        load_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row == 3);
    }
}

TEST_CASE("load_csv: duplicate dates and empty files are rejected") {
    const auto dup = write_temp("mk_dup.csv",
                                "date,value\n2022-01-01,1.0\n2022-01-01,2.0\n");
    CHECK_THROWS_AS(load_csv(dup), DuplicateDate);
    const auto empty = write_temp("mk_empty.csv", "");
    CHECK_THROWS_AS(load_csv(empty), EmptyFile);
    const auto header_only = write_temp("mk_header.csv", "date,value\n");
    CHECK_THROWS_AS(load_csv(header_only), EmptyFile);
}

TEST_CASE("align: identical date sets are a no-op under both policies") {
    std::vector<DatedValue> a, b;
    for (int d = 1; d <= 5; ++d) {
        a.push_back({Date{2022, 1, d}, 100.0 + d});
        b.push_back({Date{2022, 1, d}, 50.0 + d});
    }
    for (auto policy : {AlignPolicy::InnerJoin, AlignPolicy::ForwardFillCpi}) {
        const auto joined = align(a, b, policy);
        CHECK(joined.dates.size() == 5);
        CHECK(joined.cpi == std::vector<double>{101, 102, 103, 104, 105});
        CHECK(joined.firm == std::vector<double>{51, 52, 53, 54, 55});
    }
}

TEST_CASE("align: forward fill carries monthly CPI onto daily dates") {
    std::vector<DatedValue> cpi{{Date{2022, 1, 1}, 100.0}, {Date{2022, 2, 1}, 110.0}};
    std::vector<DatedValue> firm;
    for (int d = 3; d <= 7; ++d) firm.push_back({Date{2022, 1, d}, 1.0});
    firm.push_back({Date{2022, 2, 2}, 2.0});
    const auto joined = align(cpi, firm, AlignPolicy::ForwardFillCpi);
    REQUIRE(joined.dates.size() == 6);
    for (int i = 0; i < 5; ++i) CHECK(joined.cpi[i] == 100.0);
    CHECK(joined.cpi[5] == 110.0);

    std::vector<DatedValue> early{{Date{2021, 1, 1}, 1.0}};
    CHECK_THROWS_AS(align(cpi, early, AlignPolicy::ForwardFillCpi), NoOverlap);
}

TEST_CASE("deviation_series: definition, rebasing and scale invariance") {
    AlignedSeries a;
    a.dates = {Date{2022, 1, 1}, Date{2022, 1, 2}, Date{2022, 1, 3}};
    a.cpi = {100.0, 110.0, 121.0};
    a.firm = {50.0, 50.0, 60.5};
    const auto dev = deviation_series(a, Date{2022, 1, 1});
    CHECK(dev.x_tilde[0] == 0.0);
    CHECK(dev.x_tilde[1] == doctest::Approx((1.10 - 1.00) / 1.10).epsilon(1e-14));
    CHECK(dev.x_tilde[2] == doctest::Approx(0.0).epsilon(1e-14));

    AlignedSeries scaled = a;
    for (auto& v : scaled.cpi) v *= 3.7;
    for (auto& v : scaled.firm) v *= 0.9;
    const auto dev2 = deviation_series(scaled, Date{2022, 1, 1});
    for (std::size_t i = 0; i < dev.x_tilde.size(); ++i)
        CHECK(dev.x_tilde[i] == doctest::Approx(dev2.x_tilde[i]).epsilon(1e-12));

    CHECK_THROWS_AS(deviation_series(a, Date{2021, 1, 1}), BaseDateMissing);
    AlignedSeries bad = a;
    bad.firm[0] = 0.0;
    CHECK_THROWS_AS(deviation_series(bad, Date{2022, 1, 1}), NonPositiveBase);
}

TEST_CASE("proportional firm series gives identically zero deviation") {
    AlignedSeries a;
    for (int d = 1; d <= 6; ++d) {
        a.dates.push_back(Date{2022, 1, d});
        a.cpi.push_back(100.0 * (1.0 + 0.01 * d));
        a.firm.push_back(40.0 * (1.0 + 0.01 * d));
    }
    const auto dev = deviation_series(a, Date{2022, 1, 1});
    for (double x : dev.x_tilde) CHECK(x == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("firm_report: zero deviation under Zero lambda gives 0.5 for every model") {
    DeviationSeries dev;
    for (int d = 1; d <= 5; ++d) {
        dev.dates.push_back(Date{2022, 1, d});
        dev.x_tilde.push_back(0.0);
    }
    dev.base_date = dev.dates.front();

    std::vector<ModelConfig> models;
    const auto rows_params = control::table2_models(1.0);
    for (int i = 0; i < 3; ++i)
        models.push_back({"model" + std::to_string(i + 1), rows_params[i], LambdaSpec::zero(),
                          1.0, control::MStarFormula::ClosedForm});
    const auto rows = firm_report("probe", dev, models);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.m_tilde == 0.5);
        CHECK(r.x_input == 0.0);
    }
}

TEST_CASE("bundled fixtures load and the palmolive spread dominates") {
    const auto cpi = load_csv(kData / "cpi_2022_2023.csv");
    CHECK(cpi.size() == 24);

    double palmolive_iqr = 0.0, widest_other = 0.0;
    for (const char* firm : {"nestle", "westrock", "dover", "palmolive"}) {
        const auto prices = load_csv(kData / "prices" / (std::string(firm) + ".csv"));
        REQUIRE(prices.size() > 400);
        std::vector<double> values(prices.size());
        for (std::size_t i = 0; i < prices.size(); ++i) values[i] = prices[i].value;
        const double iqr = stats::boxplot_stats(values).iqr;
        if (std::string(firm) == "palmolive")
            palmolive_iqr = iqr;
        else
            widest_other = std::max(widest_other, iqr);
    }
    CHECK(palmolive_iqr > widest_other);
}

TEST_CASE("fixture deviations are positive on average for all four firms") {
    const auto cpi = load_csv(kData / "cpi_2022_2023.csv");
    for (const char* firm : {"nestle", "westrock", "dover", "palmolive"}) {
        const auto prices = load_csv(kData / "prices" / (std::string(firm) + ".csv"));
        const auto aligned = align(cpi, prices, AlignPolicy::ForwardFillCpi);
        const auto dev = deviation_series(aligned, aligned.dates.front());
        double mean = 0.0;
        for (double x : dev.x_tilde) mean += x;
        mean /= static_cast<double>(dev.x_tilde.size());
        CHECK(mean > 0.0);
    }
}
