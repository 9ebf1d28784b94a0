#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srm/data.hpp"
#include "srm/errors.hpp"

namespace srm {
namespace {

LoadedPrices parse(const std::string& text) {
  std::istringstream in(text);
  return parse_prices_csv(in, "Date", "Close", "X", "test.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

TEST(Date, ParsesBothLayouts) {
  EXPECT_EQ(Date::parse("2009-01-02"), (Date{2009, 1, 2}));
  EXPECT_EQ(Date::parse("02/01/2009"), (Date{2009, 1, 2}));
  EXPECT_EQ(Date::parse("2008-02-29").iso(), "2008-02-29");
  EXPECT_THROW(Date::parse("2009-02-29"), InputError);
  EXPECT_THROW(Date::parse("2009-13-01"), InputError);
  EXPECT_THROW(Date::parse("yesterday"), InputError);
  EXPECT_LT(Date::parse("2009-01-02"), Date::parse("2009-01-03"));
}

TEST(Csv, SplitHonoursQuotes) {
  const auto f = split_csv_line(R"(a,"b,c",d)");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[1], "b,c");
}

TEST(LoadPrices, ThreeRows) {
  const auto r = parse("Date,Open,Close\n2020-01-02,1,100\n2020-01-03,1,101\n2020-01-06,1,99.5\n");
  EXPECT_EQ(r.prices.size(), 3);
  EXPECT_EQ(r.report.rows_read, 3);
  EXPECT_EQ(r.report.dropped_rows, 0);
  EXPECT_DOUBLE_EQ(r.prices.closes[2], 99.5);
  EXPECT_EQ(r.prices.instrument, "X");
}

TEST(LoadPrices, BlankCloseDropped) {
  const auto r = parse("Date,Close\n2020-01-02,100\n2020-01-03,\n2020-01-06,99\n");
  EXPECT_EQ(r.prices.size(), 2);
  EXPECT_EQ(r.report.dropped_rows, 1);
  ASSERT_EQ(r.report.dropped_lines.size(), 1u);
  EXPECT_EQ(r.report.dropped_lines[0], 3);
  EXPECT_EQ(parse("Date,Close\n2020-01-02,100\n2020-01-03,NA\n").report.dropped_rows, 1);
}

TEST(LoadPrices, NegativeCloseNamesTheRow) {
  const auto msg = error_of("Date,Close\n2020-01-02,100\n2020-01-03,-5\n");
  EXPECT_NE(msg.find("test.csv:3"), std::string::npos) << msg;
}

TEST(LoadPrices, OtherErrors) {
  EXPECT_NE(error_of("Date,Price\n2020-01-02,100\n").find("missing column 'Close'"), std::string::npos);
  EXPECT_NE(error_of("Date,Close\n2020-01-02,100\n2020-01-02,101\n").find("test.csv:3"), std::string::npos);
  EXPECT_NE(error_of("Date,Close\nnot-a-date,100\n").find("test.csv:2"), std::string::npos);
}

TEST(LoadPrices, SortsAscending) {
  const auto r = parse("Date,Close\n2020-01-06,3\n2020-01-02,1\n2020-01-03,2\n");
  EXPECT_EQ(r.prices.dates.front(), (Date{2020, 1, 2}));
  EXPECT_DOUBLE_EQ(r.prices.closes[0], 1.0);
  EXPECT_DOUBLE_EQ(r.prices.closes[2], 3.0);
}

TEST(LoadPrices, FileStemIsDefaultInstrument) {
  const auto path = std::filesystem::temp_directory_path() / "srm_test_FTSE.csv";
  std::ofstream(path) << "Date,Close\n2020-01-02,100\n2020-01-03,101\n";
  EXPECT_EQ(load_prices_csv(path.string()).prices.instrument, "srm_test_FTSE");
  std::filesystem::remove(path);
  EXPECT_THROW(load_prices_csv("/nonexistent/prices.csv"), InputError);
}

TEST(FilterPeriod, InclusiveBoundaries) {
  const auto r = parse("Date,Close\n2009-01-01,1\n2009-01-02,2\n2015-06-01,3\n2019-01-02,4\n2019-01-03,5\n");
  const auto p = filter_period(r.prices, Date::parse("2009-01-02"), Date::parse("2019-01-02"));
  EXPECT_EQ(p.size(), 3);
  EXPECT_DOUBLE_EQ(p.closes[0], 2.0);
  EXPECT_DOUBLE_EQ(p.closes[2], 4.0);
}

TEST(LogReturns, Examples) {
  auto series = [](std::vector<double> closes) {
    PriceSeries p;
    for (std::size_t i = 0; i < closes.size(); ++i) p.dates.push_back({2020, 1, static_cast<int>(i + 1)});
    p.closes = Eigen::Map<Eigen::VectorXd>(closes.data(), closes.size());
    return p;
  };
  EXPECT_EQ(log_returns(series({100, 100})).values[0], 0.0);
  EXPECT_NEAR(log_returns(series({100, 110})).values[0], 0.0953101798043249, 1e-15);
  const auto r = log_returns(series({100, 110, 99}));
  ASSERT_EQ(r.values.size(), 2);
  EXPECT_NEAR(r.values[1], std::log(0.9), 1e-15);
  EXPECT_NEAR(r.values[1], -0.10536, 1e-5);
  EXPECT_EQ(r.start, (Date{2020, 1, 1}));
  EXPECT_EQ(r.end, (Date{2020, 1, 3}));
  EXPECT_THROW(log_returns(series({100})), InputError);
}

}  // namespace
}  // namespace srm
