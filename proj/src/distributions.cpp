#include "srm/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "srm/normal.hpp"
#include "srm/quadrature.hpp"

namespace srm {

namespace {

double parse_double(std::string_view text, std::string_view what) {
  // Accept simple fractions such as 1/3 for the GPD shape.
  const auto slash = text.find('/');
  if (slash != std::string_view::npos)
    return parse_double(text.substr(0, slash), what) / parse_double(text.substr(slash + 1), what);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParameterError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? text.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Regularized incomplete beta I_x(a, b) with y = 1 - x supplied separately.
// Continued fraction by modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

double student_t_density(double t, double df) {
  const double log_c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                       0.5 * std::log(df * std::numbers::pi);
  return std::exp(log_c - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

// Closed-form quantile for 4 degrees of freedom (lower-tail probability d <= 1/2).
double student_t4_upper_quantile(double d) {
  const double alpha = 4.0 * d * (1.0 - d);
  const double root = std::sqrt(alpha);
  const double q = std::cos(std::acos(root) / 3.0) / root;
  return 2.0 * std::sqrt(std::max(q - 1.0, 0.0));
}

double standard_quantile_upper(const ModelSpec& model, double d);

double standard_quantile(const ModelSpec& model, double u) {
  switch (model.kind) {
    case ModelKind::Normal:
      return normal_quantile(u);
    case ModelKind::StudentT:
      return u < 0.5 ? -student_t_upper_quantile(u, model.df) : student_t_upper_quantile(1.0 - u, model.df);
    case ModelKind::GPD:
      return std::expm1(-model.shape * std::log1p(-u)) / model.shape;
    case ModelKind::GARCH:
      break;
  }
  throw UnsupportedQuantileError("GARCH(1,1) has no closed-form marginal quantile; use the large-sample oracle");
}

double standard_quantile_upper(const ModelSpec& model, double d) {
  switch (model.kind) {
    case ModelKind::Normal:
      return -normal_quantile(d);
    case ModelKind::StudentT:
      return d <= 0.5 ? student_t_upper_quantile(d, model.df) : -student_t_upper_quantile(1.0 - d, model.df);
    case ModelKind::GPD:
      return std::expm1(-model.shape * std::log(d)) / model.shape;
    case ModelKind::GARCH:
      break;
  }
  throw UnsupportedQuantileError("GARCH(1,1) has no closed-form marginal quantile; use the large-sample oracle");
}

void check_probability(double u) {
  if (!(u > 0.0 && u < 1.0)) throw ParameterError("probability must lie in the open interval (0, 1)");
}

// Loss-side L-statistic of a large sample; used as the GARCH oracle.
double lstatistic(Eigen::VectorXd losses, const RiskSpectrum& spectrum) {
  std::sort(losses.data(), losses.data() + losses.size());
  const auto w = lstat_weights<double>(DistortionFunction{spectrum}, losses.size());
  Eigen::VectorXd terms = w.weights.cwiseProduct(losses);
  return pairwise_sum(terms);
}

}  // namespace

ModelSpec ModelSpec::normal(double location, double scale) {
  ModelSpec m;
  m.kind = ModelKind::Normal;
  m.location = location;
  m.scale = scale;
  m.validate();
  return m;
}

ModelSpec ModelSpec::student_t(double df, double location, double scale) {
  ModelSpec m;
  m.kind = ModelKind::StudentT;
  m.df = df;
  m.location = location;
  m.scale = scale;
  m.validate();
  return m;
}

ModelSpec ModelSpec::gpd(double shape, double scale, double location) {
  ModelSpec m;
  m.kind = ModelKind::GPD;
  m.shape = shape;
  m.scale = scale;
  m.location = location;
  m.validate();
  return m;
}

ModelSpec ModelSpec::garch(double alpha1, double beta1, double omega) {
  ModelSpec m;
  m.kind = ModelKind::GARCH;
  m.garch_alpha1 = alpha1;
  m.garch_beta1 = beta1;
  m.garch_omega = omega;
  m.validate();
  return m;
}

void ModelSpec::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("model scale must be > 0");
  if (!std::isfinite(location)) throw ParameterError("model location must be finite");
  switch (kind) {
    case ModelKind::GPD:
      if (!(shape > 0.0) || !std::isfinite(shape)) throw ParameterError("GPD shape xi must be > 0");
      break;
    case ModelKind::StudentT:
      if (!(df > 2.0) || !std::isfinite(df)) throw ParameterError("Student-t df must be > 2");
      break;
    case ModelKind::Normal:
      break;
    case ModelKind::GARCH:
      if (!(garch_alpha1 >= 0.0 && garch_beta1 >= 0.0 && garch_omega >= 0.0))
        throw ParameterError("GARCH coefficients must be >= 0");
      if (!(garch_alpha1 + garch_beta1 < 1.0))
        throw ParameterError("GARCH alpha1 + beta1 must be < 1 for covariance stationarity");
      if (garch_omega == 0.0 && !(garch_initial_variance > 0.0))
        throw ParameterError("GARCH with omega = 0 needs a positive initial variance");
      break;
  }
}

std::vector<std::string> model_warnings(const ModelSpec& model) {
  std::vector<std::string> out;
  if (model.kind == ModelKind::GARCH && model.garch_omega == 0.0)
    out.emplace_back("GARCH omega = 0: the conditional variance decays geometrically to zero");
  return out;
}

std::string model_name(const ModelSpec& model) {
  std::ostringstream out;
  out.precision(6);
  switch (model.kind) {
    case ModelKind::Normal:
      out << "N(" << model.location << "," << model.scale * model.scale << ")";
      break;
    case ModelKind::StudentT:
      out << "t(" << model.df << ")";
      break;
    case ModelKind::GPD:
      out << "GPD(xi=" << model.shape << ")";
      break;
    case ModelKind::GARCH:
      out << "GARCH(" << model.garch_alpha1 << "," << model.garch_beta1 << "," << model.garch_omega << ")";
      break;
  }
  return out.str();
}

ModelSpec parse_model(std::string_view text) {
  text = trim(text);
  const auto colon = text.find(':');
  const auto family = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string_view::npos)
    for (auto part : split(text.substr(colon + 1), ',')) args.push_back(parse_double(trim(part), "model parameter"));
  auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };
  if (family == "normal" || family == "norm" || family == "n") {
    if (args.size() > 2) throw ParameterError("normal takes at most location,scale");
    return ModelSpec::normal(arg(0, 0.0), arg(1, 1.0));
  }
  if (family == "t" || family == "student" || family == "studentt") {
    if (args.empty() || args.size() > 3) throw ParameterError("t takes df[,location,scale]");
    return ModelSpec::student_t(args[0], arg(1, 0.0), arg(2, 1.0));
  }
  if (family == "gpd") {
    if (args.size() > 3) throw ParameterError("gpd takes xi[,scale,location]");
    return ModelSpec::gpd(arg(0, 1.0 / 3.0), arg(1, 1.0), arg(2, 0.0));
  }
  if (family == "garch") {
    if (args.size() != 0 && args.size() != 3) throw ParameterError("garch takes alpha1,beta1,omega");
    const double a = arg(0, 0.061);
    const double b = arg(1, 0.932);
    return ModelSpec::garch(a, b, arg(2, 1.0 - a - b));
  }
  throw ParameterError("unknown model '" + std::string(family) + "' (normal, t, gpd, garch)");
}

std::string to_config(const ModelSpec& model) {
  std::ostringstream out;
  out.precision(17);
  switch (model.kind) {
    case ModelKind::Normal: out << "kind=normal\n"; break;
    case ModelKind::StudentT: out << "kind=t\n" << "df=" << model.df << "\n"; break;
    case ModelKind::GPD: out << "kind=gpd\n" << "shape=" << model.shape << "\n"; break;
    case ModelKind::GARCH:
      out << "kind=garch\n"
          << "alpha1=" << model.garch_alpha1 << "\n"
          << "beta1=" << model.garch_beta1 << "\n"
          << "omega=" << model.garch_omega << "\n"
          << "initial_variance=" << model.garch_initial_variance << "\n";
      break;
  }
  out << "scale=" << model.scale << "\n" << "location=" << model.location << "\n";
  return out.str();
}

ModelSpec parse_model_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParameterError("model config line without '=': " + std::string(line));
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  const auto kind = kv.find("kind");
  if (kind == kv.end()) throw ParameterError("model config needs kind=");
  ModelSpec m;
  if (kind->second == "normal") m.kind = ModelKind::Normal;
  else if (kind->second == "t") m.kind = ModelKind::StudentT;
  else if (kind->second == "gpd") m.kind = ModelKind::GPD;
  else if (kind->second == "garch") m.kind = ModelKind::GARCH;
  else throw ParameterError("unknown model kind '" + kind->second + "'");
  const std::map<std::string, double*, std::less<>> fields{
      {"shape", &m.shape},          {"df", &m.df},
      {"alpha1", &m.garch_alpha1},  {"beta1", &m.garch_beta1},
      {"omega", &m.garch_omega},    {"initial_variance", &m.garch_initial_variance},
      {"scale", &m.scale},          {"location", &m.location}};
  for (const auto& [key, value] : kv) {
    if (key == "kind") continue;
    const auto field = fields.find(key);
    if (field == fields.end()) throw ParameterError("unknown model config key '" + key + "'");
    *field->second = parse_double(value, key);
  }
  m.validate();
  return m;
}

double student_t_upper_tail(double t, double df) {
  if (t < 0.0) return 1.0 - student_t_upper_tail(-t, df);
  const double t2 = t * t;
  return 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2));
}

double student_t_upper_quantile(double d, double df) {
  if (!(d > 0.0 && d <= 0.5)) throw ParameterError("student_t_upper_quantile: d must lie in (0, 1/2]");
  if (d == 0.5) return 0.0;
  if (df == 4.0) return student_t4_upper_quantile(d);
  // Safeguarded Newton on log tail(t) = log d, monotone decreasing in t.
  const double target = std::log(d);
  const double z = -normal_quantile(d);
  double x = z * (1.0 + (z * z + 1.0) / (4.0 * df));
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * x);
  while (student_t_upper_tail(hi, df) > d) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("student_t_upper_quantile: bracket overflow");
  }
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double tail = student_t_upper_tail(x, df);
    const double residual = std::log(tail) - target;
    if (residual > 0.0) lo = x; else hi = x;
    const double step = residual * tail / student_t_density(x, df);
    double next = x + step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 4e-16 * std::fabs(x) || hi - lo <= 4e-16 * hi) return next;
    x = next;
  }
  throw NumericalError("student_t_upper_quantile did not converge");
}

double cdf(const ModelSpec& model, double x) {
  const double z = (x - model.location) / model.scale;
  switch (model.kind) {
    case ModelKind::Normal:
      return normal_cdf(z);
    case ModelKind::StudentT:
      return 1.0 - student_t_upper_tail(z, model.df);
    case ModelKind::GPD:
      if (z <= 0.0) return 0.0;
      return -std::expm1(-std::log1p(model.shape * z) / model.shape);
    case ModelKind::GARCH:
      break;
  }
  throw UnsupportedQuantileError("GARCH(1,1) has no closed-form marginal distribution");
}

double quantile(const ModelSpec& model, double u) {
  check_probability(u);
  return model.location + model.scale * standard_quantile(model, u);
}

double quantile_upper(const ModelSpec& model, double d) {
  check_probability(d);
  return model.location + model.scale * standard_quantile_upper(model, d);
}

SampleBatch sample(const ModelSpec& model, Eigen::Index n, SeedPath seed_path) {
  if (n < 1) throw ParameterError("sample: n must be >= 1");
  model.validate();
  if (model.kind == ModelKind::GARCH) return simulate_garch(model, n, kDefaultGarchBurnIn, seed_path);
  Substream stream(seed_path);
  Eigen::VectorXd values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = stream.uniform();
    values[i] = u < 0.5 ? quantile(model, u) : quantile_upper(model, 1.0 - u);
  }
  return {std::move(values), seed_path, model};
}

SampleBatch simulate_garch(const ModelSpec& model, Eigen::Index n, Eigen::Index burn_in,
                           SeedPath seed_path) {
  if (model.kind != ModelKind::GARCH) throw ParameterError("simulate_garch: model must be GARCH");
  if (n < 1 || burn_in < 0) throw ParameterError("simulate_garch: need n >= 1 and burn_in >= 0");
  model.validate();
  const double a = model.garch_alpha1;
  const double b = model.garch_beta1;
  const double w = model.garch_omega;
  double variance = w > 0.0 ? w / (1.0 - a - b) : model.garch_initial_variance;
  Substream stream(seed_path);
  Eigen::VectorXd values(n);
  double previous = 0.0;
  for (Eigen::Index i = 0; i < burn_in + n; ++i) {
    if (i > 0) variance = w + a * previous * previous + b * variance;
    const double u = stream.uniform();
    const double z = u < 0.5 ? normal_quantile(u) : -normal_quantile(1.0 - u);
    previous = std::sqrt(variance) * z;
    if (i >= burn_in) values[i - burn_in] = model.location + model.scale * previous;
  }
  return {std::move(values), seed_path, model};
}

TruthValue true_srm(const ModelSpec& model, const RiskSpectrum& spectrum, double tol,
                    const OracleOptions& options) {
  if (!(tol > 0.0)) throw ParameterError("true_srm: tol must be > 0");
  model.validate();

  if (model.kind == ModelKind::GARCH) {
    // One long path is expensive; memoize by everything that determines it.
    using Key = std::tuple<double, double, double, double, double, double, int, double, Eigen::Index,
                           Eigen::Index, std::uint64_t, std::uint64_t>;
    static std::mutex mutex;
    static std::map<Key, double> cache;
    const Key key{model.garch_alpha1, model.garch_beta1, model.garch_omega, model.garch_initial_variance,
                  model.scale, model.location, static_cast<int>(spectrum.kind()), spectrum.parameter(),
                  options.garch_sample_size, options.garch_burn_in, options.garch_seed.master_seed,
                  options.garch_seed.replicate};
    std::ostringstream provenance;
    provenance << "garch-oracle n=" << options.garch_sample_size << " burn_in=" << options.garch_burn_in
               << " seed=" << options.garch_seed.master_seed << ":" << options.garch_seed.replicate
               << " estimator=lstatistic";
    {
      std::lock_guard lock(mutex);
      if (auto it = cache.find(key); it != cache.end()) return {it->second, true, 0.0, provenance.str()};
    }
    const auto path = simulate_garch(model, options.garch_sample_size, options.garch_burn_in, options.garch_seed);
    const double value = lstatistic(path.values, spectrum);
    std::lock_guard lock(mutex);
    cache.emplace(key, value);
    return {value, true, 0.0, provenance.str()};
  }

  std::vector<double> breaks_low;
  std::vector<double> breaks_high;
  for (double x : spectrum.discontinuities()) {
    if (x < 0.5) breaks_low.push_back(x);
    else breaks_high.push_back(1.0 - x);
  }
  constexpr int levels = 120;
  auto integrate = [&](int refine) {
    const double low = graded_integral<double>(
        [&](double u) { return quantile(model, u) * phi(spectrum, u); }, 0.5, levels, 8, refine, breaks_low);
    const double high = graded_integral<double>(
        [&](double d) { return quantile_upper(model, d) * phi_upper(spectrum, d); }, 0.5, levels, 8, refine,
        breaks_high);
    return low + high;
  };
  // Innermost dyadic level near each end: a non-negligible contribution means
  // the integrand is not integrable (or needs more levels than we carry).
  const double edge = 0.5 * std::ldexp(1.0, -(levels - 1));
  const double inner_low = std::fabs(edge * quantile(model, edge * 0.75) * phi(spectrum, edge * 0.75));
  const double inner_high = std::fabs(edge * quantile_upper(model, edge * 0.75) * phi_upper(spectrum, edge * 0.75));
  if (!(inner_low < tol && inner_high < tol))
    throw OracleError("true_srm: integrand mass does not vanish at the endpoints (non-integrable combination)");

  double previous = integrate(0);
  for (int refine = 1; refine <= 8; ++refine) {
    const double current = integrate(refine);
    const double delta = std::fabs(current - previous);
    if (!std::isfinite(current)) break;
    if (delta < tol) {
      std::ostringstream provenance;
      provenance << "graded-gauss-legendre refine=" << refine;
      return {current, false, delta, provenance.str()};
    }
    previous = current;
  }
  throw OracleError("true_srm: quadrature refinement did not converge to the requested tolerance");
}

}  // namespace srm
