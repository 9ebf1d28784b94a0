#include "srm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "srm/data.hpp"

namespace srm {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out;
}

void check_text(const std::string& s, const char* what) {
  if (s.find('\n') != std::string::npos) throw ParameterError(std::string("report: newline in ") + what);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::pair<std::string, std::string> split_kv(std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw InputError("report: expected key=value, got '" + std::string(line) + "'");
  return {std::string(line.substr(0, eq)), std::string(line.substr(eq + 1))};
}

const std::regex& number_pattern() {
  static const std::regex re(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?(?:inf|nan))");
  return re;
}

// Splits text into alternating non-number and number tokens.
void tokenize(const std::string& s, std::vector<std::string>& text, std::vector<double>& numbers) {
  auto begin = std::sregex_iterator(s.begin(), s.end(), number_pattern());
  std::size_t pos = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    text.push_back(s.substr(pos, static_cast<std::size_t>(it->position()) - pos));
    numbers.push_back(std::strtod(it->str().c_str(), nullptr));
    pos = static_cast<std::size_t>(it->position() + it->length());
  }
  text.push_back(s.substr(pos));
}

bool close_digits(double a, double b, int digits) {
  if (a == b) return true;
  if (std::isnan(a) && std::isnan(b)) return true;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= 0.5 * std::pow(10.0, 1 - digits) * scale * 1.0000001;
}

bool cells_equivalent(const std::string& a, const std::string& b, int digits) {
  if (a == b) return true;
  std::vector<std::string> ta, tb;
  std::vector<double> na, nb;
  tokenize(a, ta, na);
  tokenize(b, tb, nb);
  if (ta != tb || na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i)
    if (!close_digits(na[i], nb[i], digits)) return false;
  return true;
}

std::string beta_label(double beta) { return "beta:" + format_number(beta); }

std::string units_note(Units units) {
  return units == Units::Percent ? "Estimates are in daily % return." : "Estimates are in raw log return.";
}

ReportDocument instrument_table(const char* kind, const std::vector<std::string>& instruments,
                                const std::vector<double>& betas,
                                const std::vector<std::vector<EstimateReport>>& cells, const std::string& period,
                                std::string (*cell)(const EstimateReport&)) {
  if (cells.size() != instruments.size()) throw ParameterError("table: one row of cells per instrument required");
  ReportDocument doc;
  doc.kind = kind;
  doc.columns.push_back("instrument");
  for (double b : betas) doc.columns.push_back(beta_label(b));
  if (!period.empty()) doc.metadata.emplace_back("period", period);
  doc.metadata.emplace_back("version", kVersion);
  Units units = Units::Raw;
  SignConvention sign = SignConvention::Loss;
  for (std::size_t i = 0; i < instruments.size(); ++i) {
    if (cells[i].size() != betas.size()) throw ParameterError("table: one cell per beta required");
    std::vector<std::string> row{instruments[i]};
    for (const auto& r : cells[i]) {
      row.push_back(cell(r));
      units = r.units;
      sign = r.sign;
    }
    doc.rows.push_back(std::move(row));
    if (!cells[i].empty()) {
      const auto& p = cells[i].front().provenance;
      doc.metadata.emplace_back("config_hash." + instruments[i], p.config_hash);
      doc.metadata.emplace_back("n." + instruments[i], std::to_string(cells[i].front().n));
      if (p.seed) doc.metadata.emplace_back("seed." + instruments[i], std::to_string(*p.seed));
    }
  }
  doc.metadata.emplace_back("sign", to_string(sign));
  doc.metadata.emplace_back("units", to_string(units));
  doc.notes.push_back(units_note(units));
  return doc;
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "tabular") return ReportFormat::Tabular;
  if (text == "structured") return ReportFormat::Structured;
  throw ParameterError("unknown format '" + std::string(text) + "' (expected tabular or structured)");
}

std::string ReportDocument::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return "";
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string render(const ReportDocument& doc, ReportFormat format) {
  check_text(doc.kind, "kind");
  std::ostringstream out;
  if (format == ReportFormat::Tabular) {
    out << "# kind=" << doc.kind << '\n';
    for (const auto& [k, v] : doc.metadata) {
      check_text(k + v, "metadata");
      out << "# " << k << '=' << v << '\n';
    }
    out << csv_row(doc.columns) << '\n';
    for (const auto& row : doc.rows) out << csv_row(row) << '\n';
    for (const auto& note : doc.notes) {
      check_text(note, "note");
      out << "# note: " << note << '\n';
    }
    return out.str();
  }
  out << "format=srm-report\n";
  out << "kind=" << doc.kind << '\n';
  for (const auto& [k, v] : doc.metadata) {
    check_text(k + v, "metadata");
    out << "meta." << k << '=' << v << '\n';
  }
  out << "columns=" << csv_row(doc.columns) << '\n';
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    for (std::size_t c = 0; c < doc.rows[r].size(); ++c) {
      check_text(doc.rows[r][c], "cell");
      const std::string& col = c < doc.columns.size() ? doc.columns[c] : std::to_string(c);
      out << "row." << r << '.' << col << '=' << doc.rows[r][c] << '\n';
    }
  }
  for (const auto& note : doc.notes) out << "note=" << note << '\n';
  return out.str();
}

ReportDocument parse_report(std::string_view text, ReportFormat format) {
  ReportDocument doc;
  const auto lines = lines_of(text);
  if (format == ReportFormat::Tabular) {
    bool header_seen = false;
    for (auto line : lines) {
      if (line.empty()) continue;
      if (line.rfind("# ", 0) == 0) {
        line.remove_prefix(2);
        if (header_seen) {
          if (line.rfind("note: ", 0) != 0) throw InputError("report: unexpected comment after the table");
          doc.notes.emplace_back(line.substr(6));
        } else {
          auto [k, v] = split_kv(line);
          if (k == "kind") doc.kind = v; else doc.metadata.emplace_back(std::move(k), std::move(v));
        }
      } else if (!header_seen) {
        doc.columns = split_csv_line(line);
        header_seen = true;
      } else {
        doc.rows.push_back(split_csv_line(line));
      }
    }
    if (!header_seen) throw InputError("report: no header row");
    return doc;
  }
  std::map<std::size_t, std::vector<std::string>> rows;
  bool tagged = false;
  for (auto line : lines) {
    if (line.empty()) continue;
    auto [k, v] = split_kv(line);
    if (k == "format") {
      if (v != "srm-report") throw InputError("report: unknown structured format '" + v + "'");
      tagged = true;
    } else if (k == "kind") {
      doc.kind = v;
    } else if (k.rfind("meta.", 0) == 0) {
      doc.metadata.emplace_back(k.substr(5), v);
    } else if (k == "columns") {
      doc.columns = split_csv_line(v);
    } else if (k.rfind("row.", 0) == 0) {
      const auto dot = k.find('.', 4);
      if (dot == std::string::npos) throw InputError("report: malformed row key '" + k + "'");
      rows[std::stoul(k.substr(4, dot - 4))].push_back(v);
    } else if (k == "note") {
      doc.notes.push_back(v);
    } else {
      throw InputError("report: unknown key '" + k + "'");
    }
  }
  if (!tagged) throw InputError("report: missing format line");
  for (auto& [index, row] : rows) {
    if (index != doc.rows.size()) throw InputError("report: row indices are not contiguous");
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

void write_report(const ReportDocument& doc, const std::string& path, ReportFormat format) {
  const std::string text = render(doc, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out << text;
  out.close();
  if (!out) throw Error(path + ": write failed");
}

ReportDocument read_report(const std::string& path, ReportFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_report(buf.str(), format);
}

bool documents_equivalent(const ReportDocument& a, const ReportDocument& b, int digits, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.kind != b.kind) return fail("kind differs");
  if (a.columns != b.columns) return fail("columns differ");
  if (a.notes != b.notes) return fail("notes differ");
  if (a.metadata.size() != b.metadata.size()) return fail("metadata size differs");
  for (std::size_t i = 0; i < a.metadata.size(); ++i) {
    if (a.metadata[i].first != b.metadata[i].first) return fail("metadata key " + a.metadata[i].first);
    if (!cells_equivalent(a.metadata[i].second, b.metadata[i].second, digits))
      return fail("metadata value " + a.metadata[i].first);
  }
  if (a.rows.size() != b.rows.size()) return fail("row count differs");
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    if (a.rows[r].size() != b.rows[r].size()) return fail("row " + std::to_string(r) + " width differs");
    for (std::size_t c = 0; c < a.rows[r].size(); ++c)
      if (!cells_equivalent(a.rows[r][c], b.rows[r][c], digits))
        return fail("cell (" + std::to_string(r) + ", " + std::to_string(c) + ") differs");
  }
  return true;
}

// ---- converters -----------------------------------------------------------

namespace {

const std::vector<std::string>& estimate_columns() {
  static const std::vector<std::string> cols{"estimator", "spectrum", "sign",     "units",     "n",
                                             "point",     "sd",       "ci_lo",    "ci_hi",     "ci_level",
                                             "ci_method", "bandwidth", "seed",    "config_hash", "version",
                                             "config",    "warnings"};
  return cols;
}

std::string join_warnings(const std::vector<std::string>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += " | ";
    out += w[i];
  }
  return out;
}

}  // namespace

ReportDocument estimates_document(const std::vector<EstimateReport>& reports) {
  ReportDocument doc;
  doc.kind = "estimate";
  doc.columns = estimate_columns();
  doc.metadata.emplace_back("version", kVersion);
  for (const auto& r : reports) {
    doc.rows.push_back({to_string(r.estimator),
                        to_string(r.spectrum),
                        to_string(r.sign),
                        to_string(r.units),
                        std::to_string(r.n),
                        format_number(r.point),
                        format_number(r.sd),
                        r.ci ? format_number(r.ci->lo) : "",
                        r.ci ? format_number(r.ci->hi) : "",
                        r.ci ? format_number(r.ci->level) : "",
                        r.ci ? r.ci->method : "",
                        r.bandwidth ? format_number(*r.bandwidth) : "",
                        r.provenance.seed ? std::to_string(*r.provenance.seed) : "",
                        r.provenance.config_hash,
                        r.provenance.version,
                        r.provenance.config,
                        join_warnings(r.warnings)});
  }
  if (!reports.empty()) doc.notes.push_back(units_note(reports.front().units));
  return doc;
}

std::vector<EstimateReport> estimates_from_document(const ReportDocument& doc) {
  if (doc.kind != "estimate") throw InputError("report: not an estimate document");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < doc.columns.size(); ++i) col[doc.columns[i]] = i;
  for (const auto& name : estimate_columns())
    if (!col.count(name)) throw InputError("report: estimate document lacks column '" + name + "'");
  std::vector<EstimateReport> out;
  for (const auto& row : doc.rows) {
    auto get = [&](const char* name) -> const std::string& { return row.at(col.at(name)); };
    auto num = [&](const char* name) { return std::stod(get(name)); };
    EstimateReport r;
    r.estimator = parse_estimator(get("estimator"));
    r.spectrum = parse_spectrum(get("spectrum"));
    r.sign = parse_sign(get("sign"));
    r.units = parse_units(get("units"));
    r.n = std::stol(get("n"));
    r.point = num("point");
    r.sd = num("sd");
    if (!get("ci_lo").empty()) r.ci = ConfidenceInterval{num("ci_lo"), num("ci_hi"), num("ci_level"), get("ci_method")};
    if (!get("bandwidth").empty()) r.bandwidth = num("bandwidth");
    if (!get("seed").empty()) r.provenance.seed = std::stoull(get("seed"));
    r.provenance.config_hash = get("config_hash");
    r.provenance.version = get("version");
    r.provenance.config = get("config");
    std::string w = get("warnings");
    for (std::size_t pos = 0; !w.empty();) {
      const auto bar = w.find(" | ", pos);
      r.warnings.push_back(w.substr(pos, bar - pos));
      if (bar == std::string::npos) break;
      pos = bar + 3;
    }
    out.push_back(std::move(r));
  }
  return out;
}

ReportDocument table1_document(const std::vector<MseRatioReport>& cells) {
  static const ModelKind order[] = {ModelKind::GPD, ModelKind::StudentT, ModelKind::Normal, ModelKind::GARCH};
  static const char* names[] = {"GPD", "Student t", "N(0,1)", "GARCH"};
  ReportDocument doc;
  doc.kind = "table1";
  doc.metadata.emplace_back("version", kVersion);
  doc.metadata.emplace_back("quantity", "MSE2/MSE1 (kernel over empirical), delta-method MC standard error in parentheses");

  std::vector<std::size_t> present;
  for (std::size_t m = 0; m < 4; ++m)
    for (const auto& c : cells)
      if (c.model.kind == order[m]) {
        present.push_back(m);
        break;
      }
  doc.columns = {"beta", "n"};
  for (auto m : present) doc.columns.push_back(names[m]);

  std::vector<std::pair<double, Eigen::Index>> keys;
  for (const auto& c : cells)
    if (std::find(keys.begin(), keys.end(), std::make_pair(c.beta, c.n)) == keys.end()) keys.emplace_back(c.beta, c.n);
  // Larger beta first, then ascending n.
  std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (const auto& [beta, n] : keys) {
    std::vector<std::string> row{format_number(beta), std::to_string(n)};
    for (auto m : present) {
      std::string cell;
      for (const auto& c : cells)
        if (c.model.kind == order[m] && c.beta == beta && c.n == n)
          cell = format_number(c.ratio) + " (" + format_number(c.ratio_se) + ")";
      row.push_back(cell);
    }
    doc.rows.push_back(std::move(row));
  }
  for (const auto& c : cells) {
    std::string key = model_name(c.model) + " n:" + std::to_string(c.n) + " beta:" + format_number(c.beta);
    std::replace(key.begin(), key.end(), '=', ':');
    doc.metadata.emplace_back("truth[" + key + "]", format_number(c.truth) + (c.truth_approximate ? " approximate" : ""));
    doc.metadata.emplace_back("truth_source[" + key + "]", c.truth_provenance);
    doc.metadata.emplace_back("cell[" + key + "]", "replicates=" + std::to_string(c.replicates) +
                                                       " seed=" + std::to_string(c.master_seed) +
                                                       " mse1=" + format_number(c.mse1) + " mse2=" + format_number(c.mse2));
  }
  return doc;
}

ReportDocument table2_document(const std::vector<std::string>& instruments, const std::vector<double>& betas,
                               const std::vector<std::vector<EstimateReport>>& cells, const std::string& period) {
  return instrument_table("table2", instruments, betas, cells, period, [](const EstimateReport& r) {
    return format_number(r.point) + " (" + format_number(r.sd) + ")";
  });
}

ReportDocument table3_document(const std::vector<std::string>& instruments, const std::vector<double>& betas,
                               const std::vector<std::vector<EstimateReport>>& cells, const std::string& period) {
  auto doc = instrument_table("table3", instruments, betas, cells, period, [](const EstimateReport& r) {
    if (!r.ci) return std::string();
    return "[" + format_number(r.ci->lo) + " " + format_number(r.ci->hi) + "]";
  });
  if (!cells.empty() && !cells.front().empty() && cells.front().front().ci)
    doc.metadata.emplace_back("ci_level", format_number(cells.front().front().ci->level));
  return doc;
}

ReportDocument decay_document(const std::string& kind, const DecayReport& report) {
  ReportDocument doc;
  doc.kind = kind;
  doc.metadata.emplace_back("version", kVersion);
  doc.metadata.emplace_back("seeds", std::to_string(report.seeds));
  doc.metadata.emplace_back("truth", format_number(report.truth));
  doc.metadata.emplace_back("strictly_decreasing",
                            report.monotonicity_asserted ? (report.strictly_decreasing ? "yes" : "no") : "not asserted");
  doc.columns = {"n", "median"};
  for (std::size_t i = 0; i < report.n_grid.size(); ++i)
    doc.rows.push_back({std::to_string(report.n_grid[i]), format_number(report.medians[i])});
  return doc;
}

ReportDocument theorem2_document(const TheoremTwoReport& report) {
  ReportDocument doc;
  doc.kind = "theorem2";
  doc.metadata = {{"version", kVersion},
                  {"n", std::to_string(report.n)},
                  {"bandwidth", format_number(report.bandwidth)},
                  {"tau1", format_number(report.tau1)},
                  {"tau2", format_number(report.tau2)},
                  {"lambda", format_number(report.lambda)},
                  {"seeds", std::to_string(report.seeds)},
                  {"passing", std::to_string(report.passing)}};
  doc.columns = {"item", "failures", "worst_margin"};
  for (std::size_t k = 0; k < 6; ++k)
    doc.rows.push_back({std::to_string(k + 1), std::to_string(report.item_failures[k]),
                        format_number(report.worst_margin[k])});
  return doc;
}

}  // namespace srm
