#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>

#include "srm/data.hpp"
#include "srm/distributions.hpp"
#include "srm/estimators.hpp"
#include "srm/montecarlo.hpp"
#include "srm/report.hpp"

namespace srm::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

struct Common {
  std::uint64_t seed = kDefaultSeed;
  std::string format = "tabular";
  std::string out;
  std::string sign = "loss";
  std::string config;
  int workers = 0;
};

struct DataArgs {
  std::vector<std::string> inputs;
  std::string date_col = "Date";
  std::string close_col = "Close";
  std::string start;
  std::string end;
  std::string units = "percent";
};

struct KernelArgs {
  std::string estimator = "kernel";
  double bandwidth = 0.0;
  std::string kernel = "gaussian";
  std::string scaling = "verbatim";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed (default from SRM_SEED when set)")->envname("SRM_SEED");
  app->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"tabular", "structured"}));
  app->add_option("--out", c.out, "Report path (stdout when empty)");
  app->add_option("--sign", c.sign, "Sign convention of reported numbers")->check(CLI::IsMember({"loss", "return"}));
  app->add_option("--workers", c.workers, "Worker threads (0 = all cores)");
  app->add_option("--config", c.config, "key=value file; its values override command-line flags");
}

void add_data(CLI::App* app, DataArgs& d, bool repeatable_input) {
  auto* input = app->add_option("--input", d.inputs, "Price CSV (header row required)")->required();
  if (!repeatable_input) input->expected(1);
  app->add_option("--date-col", d.date_col, "Date column name");
  app->add_option("--close-col", d.close_col, "Close column name");
  app->add_option("--start", d.start, "First date kept (inclusive, YYYY-MM-DD)");
  app->add_option("--end", d.end, "Last date kept (inclusive, YYYY-MM-DD)");
  app->add_option("--units", d.units, "Units the returns are estimated and reported in")
      ->check(CLI::IsMember({"percent", "raw"}));
}

void add_kernel(CLI::App* app, KernelArgs& k) {
  app->add_option("--estimator", k.estimator, "Estimator")->check(CLI::IsMember({"empirical", "kernel"}));
  app->add_option("--bandwidth", k.bandwidth, "Fixed bandwidth (0 = Swanepoel rule)")->check(CLI::NonNegativeNumber);
  app->add_option("--kernel", k.kernel, "Kernel")->check(CLI::IsMember({"gaussian", "epanechnikov"}));
  app->add_option("--scaling", k.scaling, "Scale dependence of the bandwidth rule")
      ->check(CLI::IsMember({"verbatim", "equivariant"}));
}

KernelEstimatorConfig kernel_config(const KernelArgs& k, bool experiment) {
  KernelEstimatorConfig c = experiment ? experiment_kernel_config() : KernelEstimatorConfig{};
  c.kernel = k.kernel == "gaussian" ? KernelType::Gaussian : KernelType::Epanechnikov;
  c.scaling = k.scaling == "verbatim" ? BandwidthScaling::Verbatim : BandwidthScaling::ScaleEquivariant;
  if (k.bandwidth > 0.0) {
    c.rule = BandwidthRule::Fixed;
    c.bandwidth = k.bandwidth;
  }
  return c;
}

ReturnSeries load_returns(const std::string& path, const DataArgs& d, std::ostream& err) {
  auto loaded = load_prices_csv(path, d.date_col, d.close_col);
  if (loaded.report.dropped_rows > 0)
    err << path << ": dropped " << loaded.report.dropped_rows << " row(s) with a missing close\n";
  PriceSeries prices = std::move(loaded.prices);
  if (!d.start.empty() || !d.end.empty()) {
    const Date start = d.start.empty() ? Date{1, 1, 1} : Date::parse(d.start);
    const Date end = d.end.empty() ? Date{9999, 12, 31} : Date::parse(d.end);
    prices = filter_period(prices, start, end);
  }
  return log_returns(prices);
}

// Reads key=value lines and feeds each value to the option --key, replacing
// whatever the command line gave.
void apply_config(CLI::App* app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open config file");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "config") continue;
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (opt == nullptr) throw InputError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    opt->clear();
    opt->add_result(value);
    opt->run_callback();
  }
}

std::string resolved_config(const CLI::App* app) {
  std::string text = app->config_to_str(true, false);
  std::string out;
  for (char c : text) {
    if (c == '\n') {
      if (!out.empty() && out.back() != ' ') out += "; ";
    } else {
      out += c;
    }
  }
  while (!out.empty() && (out.back() == ' ' || out.back() == ';')) out.pop_back();
  return std::string(app->get_name()) + " " + out;
}

void emit(const std::vector<ReportDocument>& docs, const Common& c, std::ostream& out) {
  const ReportFormat format = parse_report_format(c.format);
  if (c.out.empty()) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (i) out << '\n';
      out << render(docs[i], format);
    }
    return;
  }
  write_report(docs.front(), c.out, format);
  for (std::size_t i = 1; i < docs.size(); ++i) write_report(docs[i], c.out + "." + docs[i].kind, format);
}

void stamp(ReportDocument& doc, const CLI::App* app, const Common& c) {
  doc.metadata.emplace_back("command", resolved_config(app));
  doc.metadata.emplace_back("seed", std::to_string(c.seed));
}

std::vector<ModelSpec> parse_models(const std::vector<std::string>& specs) {
  std::vector<ModelSpec> models;
  for (const auto& s : specs) {
    if (s == "t") models.push_back(ModelSpec::student_t(4.0));
    else if (s == "gpd") models.push_back(ModelSpec::gpd(1.0 / 3.0));
    else models.push_back(parse_model(s));
  }
  return models;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral risk measure estimation with empirical and kernel estimators", "srm"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  // estimate
  Common est_common;
  DataArgs est_data;
  KernelArgs est_kernel;
  std::string est_spectrum = "exp:1";
  bool est_clt = false;
  double est_level = 0.90;
  auto* estimate = app.add_subcommand("estimate", "Estimate a spectral risk measure from daily closes");
  add_common(estimate, est_common);
  add_data(estimate, est_data, false);
  add_kernel(estimate, est_kernel);
  estimate->add_option("--spectrum", est_spectrum, "Risk spectrum: exp:beta, powlow:gamma, powhigh:gamma, es:p");
  estimate->add_flag("--clt", est_clt, "Attach a plug-in CLT confidence interval");
  estimate->add_option("--ci-level", est_level, "Confidence level")->check(CLI::Range(0.0, 1.0));

  // bootstrap
  Common bs_common;
  DataArgs bs_data;
  KernelArgs bs_kernel;
  std::string bs_spectrum = "exp:1";
  Eigen::Index bs_replicates = 10000;
  double bs_level = 0.90;
  std::string bs_scheme = "iid";
  Eigen::Index bs_block = 20;
  auto* bootstrap = app.add_subcommand("bootstrap", "Resampling SD and percentile interval of an estimate");
  add_common(bootstrap, bs_common);
  add_data(bootstrap, bs_data, false);
  add_kernel(bootstrap, bs_kernel);
  bootstrap->add_option("--spectrum", bs_spectrum, "Risk spectrum: exp:beta, powlow:gamma, powhigh:gamma, es:p");
  bootstrap->add_option("--replicates", bs_replicates, "Resamples")->check(CLI::Range(100, 100000000));
  bootstrap->add_option("--ci-level", bs_level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  bootstrap->add_option("--scheme", bs_scheme, "Resampling scheme")->check(CLI::IsMember({"iid", "block"}));
  bootstrap->add_option("--block-length", bs_block, "Block length for --scheme block")->check(CLI::PositiveNumber);

  // simulate-mse
  Common mse_common;
  std::string mse_model = "normal";
  std::vector<Eigen::Index> mse_n{30};
  std::vector<double> mse_beta{1.0};
  Eigen::Index mse_replicates = 1000;
  KernelArgs mse_kernel;
  Eigen::Index mse_oracle = 10'000'000;
  auto* simulate = app.add_subcommand("simulate-mse", "MSE ratio of the kernel and empirical estimators for one model");
  add_common(simulate, mse_common);
  simulate->add_option("--model", mse_model, "Model: normal[:loc,scale], t:df, gpd:xi[,scale,loc], garch[:a,b,w]");
  simulate->add_option("--n", mse_n, "Sample sizes (repeatable)")->delimiter(',');
  simulate->add_option("--beta", mse_beta, "Exponential spectrum betas (repeatable)")->delimiter(',');
  simulate->add_option("--replicates", mse_replicates, "Monte-Carlo replicates per cell")->check(CLI::Range(2, 100000000));
  simulate->add_option("--bandwidth", mse_kernel.bandwidth, "Fixed bandwidth (0 = Swanepoel rule)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--scaling", mse_kernel.scaling, "Scale dependence of the bandwidth rule")
      ->check(CLI::IsMember({"verbatim", "equivariant"}));
  simulate->add_option("--oracle-size", mse_oracle, "GARCH truth sample size")->check(CLI::Range(1000, 1000000000));

  // table1
  Common t1_common;
  std::vector<std::string> t1_models{"gpd:1/3", "t:4", "normal", "garch"};
  std::vector<Eigen::Index> t1_n{30, 100, 250};
  std::vector<double> t1_beta{10.0, 5.0, 1.0};
  Eigen::Index t1_replicates = 1000;
  KernelArgs t1_kernel;
  Eigen::Index t1_oracle = 10'000'000;
  auto* table1 = app.add_subcommand("table1", "MSE-ratio grid over models, n and beta");
  add_common(table1, t1_common);
  table1->add_option("--models", t1_models, "Models (repeatable or ';'-separated)")->delimiter(';');
  table1->add_option("--n", t1_n, "Sample sizes (repeatable)")->delimiter(',');
  table1->add_option("--beta", t1_beta, "Exponential spectrum betas (repeatable)")->delimiter(',');
  table1->add_option("--replicates", t1_replicates, "Monte-Carlo replicates per cell")->check(CLI::Range(2, 100000000));
  table1->add_option("--bandwidth", t1_kernel.bandwidth, "Fixed bandwidth (0 = Swanepoel rule)")
      ->check(CLI::NonNegativeNumber);
  table1->add_option("--scaling", t1_kernel.scaling, "Scale dependence of the bandwidth rule")
      ->check(CLI::IsMember({"verbatim", "equivariant"}));
  table1->add_option("--oracle-size", t1_oracle, "GARCH truth sample size")->check(CLI::Range(1000, 1000000000));

  // table2
  Common t2_common;
  DataArgs t2_data;
  KernelArgs t2_kernel;
  std::vector<double> t2_beta{1, 5, 10, 20, 100, 200};
  Eigen::Index t2_replicates = 10000;
  double t2_level = 0.90;
  auto* table2 = app.add_subcommand("table2", "Kernel estimates with bootstrap SD and interval per instrument and beta");
  add_common(table2, t2_common);
  add_data(table2, t2_data, true);
  add_kernel(table2, t2_kernel);
  table2->add_option("--beta", t2_beta, "Exponential spectrum betas (repeatable)")->delimiter(',');
  table2->add_option("--replicates", t2_replicates, "Resamples per cell")->check(CLI::Range(100, 100000000));
  table2->add_option("--ci-level", t2_level, "Confidence level")->check(CLI::Range(0.0, 1.0));

  // theory-check
  Common th_common;
  int th_theorem = 1;
  double th_delta = 0.2;
  std::string th_weight = "h";
  std::vector<Eigen::Index> th_n{100, 1000, 10000};
  Eigen::Index th_seeds = 100;
  double th_exponent = -1.0;
  double th_tau1 = 2.0;
  double th_tau2 = 2.0;
  Eigen::Index th_pilots = 20;
  auto* theory = app.add_subcommand("theory-check", "Empirical checks of the weighted-distance and envelope results");
  add_common(theory, th_common);
  theory->add_option("--theorem", th_theorem, "1: d_h decay, 2: nearly-linear bounds")->check(CLI::IsMember({1, 2}));
  theory->add_option("--delta", th_delta, "Weight exponent delta in (0, 2)");
  theory->add_option("--weight", th_weight, "Weight function")->check(CLI::IsMember({"h", "hstar", "unit"}));
  theory->add_option("--n", th_n, "Sample sizes (theorem 2 uses the first)")->delimiter(',');
  theory->add_option("--seeds", th_seeds, "Seeds per sample size")->check(CLI::PositiveNumber);
  theory->add_option("--bandwidth-exponent", th_exponent,
                     "b = n^-a on uniform data (negative: 1/2 for theorem 1, 3/4 for theorem 2)");
  theory->add_option("--tau1", th_tau1, "Theorem 2 tau1 (> 1)");
  theory->add_option("--tau2", th_tau2, "Theorem 2 tau2 (> 1)");
  theory->add_option("--pilot-seeds", th_pilots, "Seeds used to pre-scan lambda")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (estimate->parsed()) {
      if (!est_common.config.empty()) apply_config(estimate, est_common.config);
      const auto returns = load_returns(est_data.inputs.front(), est_data, err);
      const RiskSpectrum spectrum = parse_spectrum(est_spectrum);
      EstimateOptions options;
      options.sign = parse_sign(est_common.sign);
      options.units = parse_units(est_data.units);
      options.clt_interval = est_clt;
      options.ci_level = est_level;
      EstimateReport report = parse_estimator(est_kernel.estimator) == EstimatorKind::Empirical
                                  ? empirical_srm(returns.values, spectrum, options)
                                  : kernel_srm(returns.values, spectrum, kernel_config(est_kernel, false), options);
      report.provenance.seed = est_common.seed;
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      ReportDocument doc = estimates_document({report});
      doc.metadata.emplace_back("instrument", returns.instrument);
      doc.metadata.emplace_back("period", returns.start.iso() + " to " + returns.end.iso());
      stamp(doc, estimate, est_common);
      emit({doc}, est_common, out);
    } else if (bootstrap->parsed()) {
      if (!bs_common.config.empty()) apply_config(bootstrap, bs_common.config);
      const auto returns = load_returns(bs_data.inputs.front(), bs_data, err);
      BootstrapConfig config;
      config.replicates = bs_replicates;
      config.ci_level = bs_level;
      config.master_seed = bs_common.seed;
      config.scheme = bs_scheme == "iid" ? ResampleScheme::IID : ResampleScheme::MovingBlock;
      config.block_length = bs_block;
      config.estimator = parse_estimator(bs_kernel.estimator);
      config.kernel = kernel_config(bs_kernel, true);
      config.sign = parse_sign(bs_common.sign);
      config.units = parse_units(bs_data.units);
      config.workers = bs_common.workers;
      const EstimateReport report = bootstrap_distribution(returns.values, parse_spectrum(bs_spectrum), config);
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      ReportDocument doc = estimates_document({report});
      doc.metadata.emplace_back("instrument", returns.instrument);
      doc.metadata.emplace_back("period", returns.start.iso() + " to " + returns.end.iso());
      stamp(doc, bootstrap, bs_common);
      emit({doc}, bs_common, out);
    } else if (simulate->parsed() || table1->parsed()) {
      const bool single = simulate->parsed();
      CLI::App* sub = single ? simulate : table1;
      Common& common = single ? mse_common : t1_common;
      if (!common.config.empty()) apply_config(sub, common.config);
      const auto models = parse_models(single ? std::vector<std::string>{mse_model} : t1_models);
      const auto& ns = single ? mse_n : t1_n;
      const auto& betas = single ? mse_beta : t1_beta;
      std::vector<MseRatioReport> cells;
      for (const auto& model : models) {
        for (const auto& w : model_warnings(model)) err << "warning: " << w << '\n';
        for (double beta : betas) {
          for (Eigen::Index n : ns) {
            MseExperimentConfig config;
            config.model = model;
            config.n = n;
            config.beta = beta;
            config.replicates = single ? mse_replicates : t1_replicates;
            config.master_seed = common.seed;
            config.kernel = kernel_config(single ? mse_kernel : t1_kernel, true);
            config.oracle.garch_sample_size = single ? mse_oracle : t1_oracle;
            config.workers = common.workers;
            cells.push_back(mse_ratio_experiment(config));
            const auto& c = cells.back();
            err << "cell " << model_name(model) << " n=" << n << " beta=" << beta << ": ratio " << c.ratio
                << " (se " << c.ratio_se << ")\n";
          }
        }
      }
      ReportDocument doc = table1_document(cells);
      stamp(doc, sub, common);
      emit({doc}, common, out);
    } else if (table2->parsed()) {
      if (!t2_common.config.empty()) apply_config(table2, t2_common.config);
      std::vector<std::string> instruments;
      std::vector<std::vector<EstimateReport>> cells;
      std::string period;
      for (const auto& path : t2_data.inputs) {
        const auto returns = load_returns(path, t2_data, err);
        instruments.push_back(returns.instrument);
        if (period.empty()) period = returns.start.iso() + " to " + returns.end.iso();
        std::vector<EstimateReport> row;
        for (double beta : t2_beta) {
          BootstrapConfig config;
          config.replicates = t2_replicates;
          config.ci_level = t2_level;
          config.master_seed = t2_common.seed;
          config.estimator = parse_estimator(t2_kernel.estimator);
          config.kernel = kernel_config(t2_kernel, true);
          config.sign = parse_sign(t2_common.sign);
          config.units = parse_units(t2_data.units);
          config.workers = t2_common.workers;
          row.push_back(bootstrap_distribution(returns.values, RiskSpectrum::exponential(beta), config));
          err << "cell " << returns.instrument << " beta=" << beta << ": " << row.back().point << " (sd "
              << row.back().sd << ")\n";
        }
        cells.push_back(std::move(row));
      }
      ReportDocument t2 = table2_document(instruments, t2_beta, cells, period);
      ReportDocument t3 = table3_document(instruments, t2_beta, cells, period);
      stamp(t2, table2, t2_common);
      stamp(t3, table2, t2_common);
      emit({t2, t3}, t2_common, out);
    } else if (theory->parsed()) {
      if (!th_common.config.empty()) apply_config(theory, th_common.config);
      TheoryCheckOptions options;
      options.master_seed = th_common.seed;
      options.workers = th_common.workers;
      options.bandwidth_exponent = th_exponent > 0.0 ? th_exponent : (th_theorem == 1 ? 0.5 : 0.75);
      ReportDocument doc;
      if (th_theorem == 1) {
        const WeightFunctionH h = th_weight == "h"       ? WeightFunctionH::h(th_delta)
                                  : th_weight == "hstar" ? WeightFunctionH::h_star(th_delta)
                                                         : WeightFunctionH::unit();
        doc = decay_document("theorem1", theory_check_theorem1(h, th_n, th_seeds, options));
        doc.metadata.emplace_back("weight", th_weight);
        doc.metadata.emplace_back("delta", format_number(th_delta));
      } else {
        doc = theorem2_document(theory_check_theorem2(th_n.front(), th_tau1, th_tau2, th_seeds, th_pilots, options));
      }
      doc.metadata.emplace_back("bandwidth_exponent", format_number(options.bandwidth_exponent));
      stamp(doc, theory, th_common);
      emit({doc}, th_common, out);
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kSuccess;
}

}  // namespace srm::cli
