#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srm/estimators.hpp"
#include "srm/montecarlo.hpp"

namespace srm {

enum class ReportFormat {
  Tabular,     // comma-separated rows, '#' lines for metadata and notes
  Structured,  // self-describing key=value lines
};

ReportFormat parse_report_format(std::string_view text);

/// Format-neutral report: a table plus metadata and footer notes. Every
/// concrete report converts to this before it is written.
struct ReportDocument {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;

  std::string meta(std::string_view key) const;  // "" when absent
};

/// %.12g
std::string format_number(double x);

std::string render(const ReportDocument& doc, ReportFormat format);
ReportDocument parse_report(std::string_view text, ReportFormat format);

void write_report(const ReportDocument& doc, const std::string& path, ReportFormat format);
ReportDocument read_report(const std::string& path, ReportFormat format);

/// Same structure and text; numbers inside cells and metadata agree to
/// `digits` significant digits. On mismatch `why` names the first difference.
bool documents_equivalent(const ReportDocument& a, const ReportDocument& b, int digits = 12,
                          std::string* why = nullptr);

/// One row per report; an empty batch gives a header-only table.
ReportDocument estimates_document(const std::vector<EstimateReport>& reports);
std::vector<EstimateReport> estimates_from_document(const ReportDocument& doc);

/// Table 1 layout: (beta, n) rows, one column per model, "ratio (se)" cells.
ReportDocument table1_document(const std::vector<MseRatioReport>& cells);

/// Tables 2 and 3 layout: instrument rows, one column per beta.
/// cells[i][j] belongs to instruments[i] and betas[j].
ReportDocument table2_document(const std::vector<std::string>& instruments, const std::vector<double>& betas,
                               const std::vector<std::vector<EstimateReport>>& cells, const std::string& period = "");
ReportDocument table3_document(const std::vector<std::string>& instruments, const std::vector<double>& betas,
                               const std::vector<std::vector<EstimateReport>>& cells, const std::string& period = "");

/// Decay and theory-check summaries.
ReportDocument decay_document(const std::string& kind, const DecayReport& report);
ReportDocument theorem2_document(const TheoremTwoReport& report);

}  // namespace srm
