#pragma once

#include <Eigen/Dense>

#include <compare>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace srm {

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  /// Accepts YYYY-MM-DD (ISO-8601) and DD/MM/YYYY.
  static Date parse(std::string_view text);
  std::string iso() const;

  friend auto operator<=>(const Date&, const Date&) = default;
};

struct PriceSeries {
  std::vector<Date> dates;  // strictly increasing
  Eigen::VectorXd closes;   // > 0
  std::string instrument;

  Eigen::Index size() const { return closes.size(); }
};

struct LoadReport {
  Eigen::Index rows_read = 0;
  Eigen::Index dropped_rows = 0;
  // 1-based line numbers in the file (the header is line 1).
  std::vector<Eigen::Index> dropped_lines;
};

struct LoadedPrices {
  PriceSeries prices;
  LoadReport report;
};

/// Reads a headered CSV. Rows whose close is blank (or NA/null) are dropped
/// and counted; the rest are sorted ascending by date. Errors name the line.
LoadedPrices load_prices_csv(const std::string& path, const std::string& date_column = "Date",
                             const std::string& close_column = "Close", std::string instrument = "");
LoadedPrices parse_prices_csv(std::istream& in, const std::string& date_column, const std::string& close_column,
                              std::string instrument, const std::string& source = "<stream>");

/// Rows with start <= date <= end.
PriceSeries filter_period(const PriceSeries& prices, const Date& start, const Date& end);

struct ReturnSeries {
  Eigen::VectorXd values;  // raw log returns
  std::string instrument;
  Date start;  // first price date
  Date end;    // last price date
};

/// r_t = ln(close_t / close_{t-1}) over consecutive available rows.
ReturnSeries log_returns(const PriceSeries& prices);

/// Splits one CSV line, honouring double quotes.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace srm
