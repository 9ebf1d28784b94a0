#include "srm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "srm/errors.hpp"

namespace srm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : days[m - 1];
}

bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "N/A" || s == "na" || s == "null" || s == "NULL" || s == "." || s == "-";
}

std::string line_label(const std::string& source, Eigen::Index line) {
  return source + ":" + std::to_string(line);
}

}  // namespace

Date Date::parse(std::string_view text) {
  text = trim(text);
  Date d;
  bool ok = false;
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    ok = parse_int(text.substr(0, 4), d.year) && parse_int(text.substr(5, 2), d.month) &&
         parse_int(text.substr(8, 2), d.day);
  } else if (const auto a = text.find('/'); a != std::string_view::npos) {
    const auto b = text.find('/', a + 1);
    if (b != std::string_view::npos && b + 5 == text.size()) {
      ok = parse_int(text.substr(0, a), d.day) && parse_int(text.substr(a + 1, b - a - 1), d.month) &&
           parse_int(text.substr(b + 1), d.year);
    }
  }
  if (ok) ok = d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
  if (!ok) throw InputError("unparseable date '" + std::string(text) + "' (expected YYYY-MM-DD or DD/MM/YYYY)");
  return d;
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r' && c != '\n') {
      fields.back() += c;
    }
  }
  return fields;
}

LoadedPrices parse_prices_csv(std::istream& in, const std::string& date_column, const std::string& close_column,
                              std::string instrument, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty file (a header row is required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw InputError(source + ": missing column '" + name + "'");
  };
  const std::size_t date_idx = column(date_column);
  const std::size_t close_idx = column(close_column);

  struct Row {
    Date date;
    double close;
    Eigen::Index line;
  };
  std::vector<Row> rows;
  LoadedPrices out;
  Eigen::Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++out.report.rows_read;
    const auto fields = split_csv_line(line);
    if (fields.size() <= std::max(date_idx, close_idx))
      throw InputError(line_label(source, line_no) + ": too few fields");
    std::string close_text(trim(fields[close_idx]));
    close_text.erase(std::remove(close_text.begin(), close_text.end(), ','), close_text.end());
    if (is_missing(close_text)) {
      ++out.report.dropped_rows;
      out.report.dropped_lines.push_back(line_no);
      continue;
    }
    Date date;
    try {
      date = Date::parse(fields[date_idx]);
    } catch (const InputError& e) {
      throw InputError(line_label(source, line_no) + ": " + e.what());
    }
    double close = 0.0;
    const auto [ptr, ec] = std::from_chars(close_text.data(), close_text.data() + close_text.size(), close);
    if (ec != std::errc() || ptr != close_text.data() + close_text.size() || !std::isfinite(close))
      throw InputError(line_label(source, line_no) + ": unparseable close '" + close_text + "'");
    if (!(close > 0.0))
      throw InputError(line_label(source, line_no) + ": nonpositive close " + close_text);
    rows.push_back({date, close, line_no});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].date == rows[i - 1].date)
      throw InputError(line_label(source, rows[i].line) + ": duplicate date " + rows[i].date.iso() + " (also line " +
                       std::to_string(rows[i - 1].line) + ")");

  out.prices.instrument = std::move(instrument);
  out.prices.closes.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.prices.dates.push_back(rows[i].date);
    out.prices.closes[static_cast<Eigen::Index>(i)] = rows[i].close;
  }
  return out;
}

LoadedPrices load_prices_csv(const std::string& path, const std::string& date_column, const std::string& close_column,
                             std::string instrument) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  if (instrument.empty()) {
    const auto slash = path.find_last_of("/\\");
    instrument = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (const auto dot = instrument.rfind('.'); dot != std::string::npos && dot > 0) instrument.erase(dot);
  }
  return parse_prices_csv(in, date_column, close_column, std::move(instrument), path);
}

PriceSeries filter_period(const PriceSeries& prices, const Date& start, const Date& end) {
  if (end < start) throw ParameterError("filter_period: end precedes start");
  PriceSeries out;
  out.instrument = prices.instrument;
  std::vector<double> closes;
  for (std::size_t i = 0; i < prices.dates.size(); ++i) {
    if (prices.dates[i] < start || end < prices.dates[i]) continue;
    out.dates.push_back(prices.dates[i]);
    closes.push_back(prices.closes[static_cast<Eigen::Index>(i)]);
  }
  out.closes = Eigen::Map<Eigen::VectorXd>(closes.data(), static_cast<Eigen::Index>(closes.size()));
  return out;
}

ReturnSeries log_returns(const PriceSeries& prices) {
  const Eigen::Index n = prices.size();
  if (n < 2) throw InputError("log_returns: need at least two prices");
  ReturnSeries out;
  out.instrument = prices.instrument;
  if (!prices.dates.empty()) {
    out.start = prices.dates.front();
    out.end = prices.dates.back();
  }
  out.values.resize(n - 1);
  for (Eigen::Index t = 1; t < n; ++t) out.values[t - 1] = std::log(prices.closes[t] / prices.closes[t - 1]);
  return out;
}

}  // namespace srm
