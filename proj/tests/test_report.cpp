#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "srm/data.hpp"
#include "srm/errors.hpp"
#include "srm/report.hpp"

namespace srm {
namespace {

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

EstimateReport sample_report() {
  EstimateReport r;
  r.estimator = EstimatorKind::Kernel;
  r.point = 1.234567890123456;
  r.sd = 0.0987654321;
  r.ci = ConfidenceInterval{1.01, 1.45, 0.9, "percentile"};
  r.n = 2582;
  r.bandwidth = 0.41234567;
  r.spectrum = RiskSpectrum::exponential(20.0);
  r.sign = SignConvention::Loss;
  r.units = Units::Percent;
  r.provenance.seed = 20240601;
  r.provenance.config = "kernel=gaussian rule=swanepoel";
  r.provenance.config_hash = fnv1a_hex(r.provenance.config);
  r.warnings = {"first, with comma", "second"};
  return r;
}

TEST(Report, EmptyBatchIsHeaderOnly) {
  const auto doc = estimates_document({});
  const std::string text = render(doc, ReportFormat::Tabular);
  int data_lines = 0, header_lines = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    (line.rfind("estimator,", 0) == 0 ? header_lines : data_lines)++;
  }
  EXPECT_EQ(header_lines, 1);
  EXPECT_EQ(data_lines, 0);
}

TEST(Report, SingleEstimateRoundTripsInBothFormats) {
  const auto doc = estimates_document({sample_report()});
  for (auto format : {ReportFormat::Tabular, ReportFormat::Structured}) {
    const auto path = temp_path("srm_test_estimate.txt");
    write_report(doc, path, format);
    const auto back = read_report(path, format);
    std::string why;
    EXPECT_TRUE(documents_equivalent(doc, back, 12, &why)) << why;
    const auto reports = estimates_from_document(back);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_NEAR(reports[0].point, sample_report().point, 1e-11);
    EXPECT_EQ(reports[0].n, 2582);
    EXPECT_EQ(reports[0].units, Units::Percent);
    EXPECT_EQ(reports[0].warnings, sample_report().warnings);
    ASSERT_TRUE(reports[0].ci.has_value());
    EXPECT_EQ(reports[0].ci->method, "percentile");
    std::filesystem::remove(path);
  }
}

TEST(Report, EquivalenceDetectsNumericChange) {
  auto a = estimates_document({sample_report()});
  auto b = a;
  b.rows[0][5] = "1.23456789013";
  std::string why;
  EXPECT_FALSE(documents_equivalent(a, b, 12, &why));
  EXPECT_FALSE(why.empty());
}

TEST(Report, Table2Shape) {
  const std::vector<std::string> instruments = {"FTSE", "DAX", "HSI", "SP500"};
  const std::vector<double> betas = {1, 5, 10, 20, 100, 200};
  std::vector<std::vector<EstimateReport>> cells(4, std::vector<EstimateReport>(6, sample_report()));
  const auto doc = table2_document(instruments, betas, cells, "1991-01-02..2003-12-31");
  ASSERT_EQ(doc.rows.size(), 4u);
  ASSERT_EQ(doc.columns.size(), 7u);
  EXPECT_EQ(doc.columns[1], "beta:1");
  for (const auto& row : doc.rows) {
    ASSERT_EQ(row.size(), 7u);
    for (std::size_t j = 1; j < row.size(); ++j) EXPECT_NE(row[j].find(" ("), std::string::npos);
  }
  ASSERT_FALSE(doc.notes.empty());
  EXPECT_EQ(doc.notes.front(), "Estimates are in daily % return.");
  const auto text = render(doc, ReportFormat::Tabular);
  std::string why;
  EXPECT_TRUE(documents_equivalent(doc, parse_report(text, ReportFormat::Tabular), 12, &why)) << why;
  const auto t3 = table3_document(instruments, betas, cells);
  EXPECT_EQ(t3.rows[0][1], "[1.01 1.45]");
}

TEST(Report, Table1Layout) {
  std::vector<MseRatioReport> cells;
  for (double beta : {1.0, 10.0})
    for (Eigen::Index n : {250, 30}) {
      MseRatioReport r;
      r.model = ModelSpec::normal();
      r.n = n;
      r.beta = beta;
      r.ratio = 0.9;
      r.ratio_se = 0.01;
      cells.push_back(r);
    }
  const auto doc = table1_document(cells);
  ASSERT_EQ(doc.rows.size(), 4u);
  EXPECT_EQ(doc.rows[0][0], "10");
  EXPECT_EQ(doc.rows[0][1], "30");
  EXPECT_EQ(doc.rows[3][0], "1");
  EXPECT_EQ(doc.rows[0].back(), "0.9 (0.01)");
  for (auto format : {ReportFormat::Tabular, ReportFormat::Structured}) {
    std::string why;
    EXPECT_TRUE(documents_equivalent(doc, parse_report(render(doc, format), format), 12, &why)) << why;
  }
}

TEST(Report, PricesToReturnsRoundTrip) {
  std::istringstream in("Date,Close\n2020-01-02,100\n2020-01-03,101.37\n2020-01-06,99.123456\n2020-01-07,99.5\n");
  const auto returns = log_returns(parse_prices_csv(in, "Date", "Close", "X").prices);
  ReportDocument doc;
  doc.kind = "returns";
  doc.columns = {"r"};
  for (double v : returns.values) doc.rows.push_back({format_number(v)});
  const auto path = temp_path("srm_test_returns.txt");
  write_report(doc, path, ReportFormat::Tabular);
  const auto back = read_report(path, ReportFormat::Tabular);
  ASSERT_EQ(back.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(std::stod(back.rows[i][0]), returns.values[i], 5e-12 * std::abs(returns.values[i]));
  std::filesystem::remove(path);
}

TEST(Report, MalformedInputRejected) {
  EXPECT_THROW(parse_report("no header here", ReportFormat::Structured), InputError);
  EXPECT_THROW(parse_report_format("json"), ParameterError);
}

}  // namespace
}  // namespace srm
