#include "spde/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "spde/error.hpp"
#include "spde/stats.hpp"
#include "spde/variance_oracle.hpp"

namespace spde {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::kValidation, what); }

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Tracks which keys of a JSON object were read so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) invalid(context_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      invalid(context_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  T required(const std::string& key) {
    auto v = optional<T>(key);
    if (!v) invalid(context_ + ": missing required key \"" + key + "\"");
    return *v;
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) invalid(context_ + ": unknown key \"" + key + "\"");
    }
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> used_;
};

std::optional<std::size_t> auto_or_count(Reader& r, const std::string& key) {
  if (!r.has(key)) {
    r.optional<int>(key);
    return std::nullopt;
  }
  const json& v = r.raw(key);
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) return std::nullopt;
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    invalid(key + ": expected \"auto\" or a nonnegative integer");
  }
  return v.get<std::size_t>();
}

DriftSpec parse_drift(const json& j) {
  Reader r(j, "model.drift");
  const auto kind = r.required<std::string>("kind");
  const double gain = r.optional<double>("gain").value_or(0.0);
  r.finish();
  if (kind == "zero") return DriftSpec::zero();
  if (kind == "linear") return DriftSpec::linear(gain);
  if (kind == "sine") return DriftSpec::sine(gain);
  if (kind == "arctan") return DriftSpec::arctan(gain);
  invalid("model.drift.kind: expected zero | linear | sine | arctan, got \"" + kind + "\"");
}

NoiseSpec parse_noise(const json& j) {
  Reader r(j, "model.noise");
  const auto kind = r.required<std::string>("kind");
  NoiseSpec spec;
  if (kind == "zero") {
    spec = NoiseSpec::zero();
  } else if (kind == "power_law") {
    spec = NoiseSpec::power_law(r.required<double>("kappa"));
  } else if (kind == "explicit") {
    spec = NoiseSpec::explicit_sequence(r.required<std::vector<double>>("q"));
  } else {
    invalid("model.noise.kind: expected zero | power_law | explicit, got \"" + kind + "\"");
  }
  r.finish();
  return spec;
}

Observable parse_observable(const json& j) {
  Reader r(j, "observable");
  const auto kind = r.required<std::string>("kind");
  SpectralField v(r.required<std::vector<double>>("direction"));
  Observable h;
  if (kind == "linear") {
    h = Observable::linear(std::move(v));
  } else if (kind == "composed") {
    const auto fn = r.required<std::string>("function");
    OuterFunction g;
    if (fn == "sin") g = OuterFunction::kSin;
    else if (fn == "cos") g = OuterFunction::kCos;
    else if (fn == "arctan") g = OuterFunction::kArctan;
    else invalid("observable.function: expected sin | cos | arctan");
    h = Observable::composed(g, std::move(v), r.optional<double>("gain").value_or(1.0),
                             r.optional<double>("scale").value_or(1.0));
  } else {
    invalid("observable.kind: expected linear | composed");
  }
  r.finish();
  return h;
}

Thresholds parse_thresholds(const json& j) {
  Reader r(j, "thresholds");
  Thresholds t;
  t.slope_min = r.optional<double>("slope_min");
  t.slope_max = r.optional<double>("slope_max");
  t.stderr_multiplier = r.optional<double>("stderr_multiplier");
  t.bias_envelope_factor = r.optional<double>("bias_envelope_factor");
  t.allowed_inversions = r.optional<double>("allowed_inversions");
  t.variance_ratio_min = r.optional<double>("variance_ratio_min");
  t.variance_ratio_max = r.optional<double>("variance_ratio_max");
  t.mean_sigma_multiplier = r.optional<double>("mean_sigma_multiplier");
  t.ks_coefficient = r.optional<double>("ks_coefficient");
  t.ks_allowance = r.optional<double>("ks_allowance");
  t.band_level = r.optional<double>("band_level");
  r.finish();
  return t;
}

json units_json() {
  return {{"time", "nondimensional (domain (0,1), lambda_1 = pi^2)"},
          {"length", "unit interval"},
          {"rates", "1/time"}};
}

json drift_json(const DriftSpec& d) {
  switch (d.kind) {
    case DriftKind::kZero: return {{"kind", "zero"}};
    case DriftKind::kLinear: return {{"kind", "linear"}, {"gain", d.gain}};
    case DriftKind::kSine: return {{"kind", "sine"}, {"gain", d.gain}};
    case DriftKind::kArctan: return {{"kind", "arctan"}, {"gain", d.gain}};
  }
  return {};
}

json noise_json(const NoiseSpec& n) {
  switch (n.kind) {
    case NoiseKind::kZero: return {{"kind", "zero"}};
    case NoiseKind::kPowerLaw: return {{"kind", "power_law"}, {"kappa", n.kappa}};
    case NoiseKind::kExplicit: return {{"kind", "explicit"}, {"q", n.explicit_q}};
  }
  return {};
}

json observable_json(const Observable& h) {
  if (h.kind == ObservableKind::kLinear) {
    return {{"kind", "linear"}, {"direction", h.direction.coeffs}};
  }
  return {{"kind", "composed"},
          {"function", to_string(h.outer)},
          {"gain", h.gain},
          {"scale", h.scale},
          {"direction", h.direction.coeffs}};
}

json thresholds_json(const Thresholds& t) {
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("slope_min", t.slope_min);
  put("slope_max", t.slope_max);
  put("stderr_multiplier", t.stderr_multiplier);
  put("bias_envelope_factor", t.bias_envelope_factor);
  put("allowed_inversions", t.allowed_inversions);
  put("variance_ratio_min", t.variance_ratio_min);
  put("variance_ratio_max", t.variance_ratio_max);
  put("mean_sigma_multiplier", t.mean_sigma_multiplier);
  put("ks_coefficient", t.ks_coefficient);
  put("ks_allowance", t.ks_allowance);
  put("band_level", t.band_level);
  return j;
}

bool needs_observable(ExperimentKind k) {
  return k == ExperimentKind::kLln || k == ExperimentKind::kClt ||
         k == ExperimentKind::kDecomposition;
}

std::size_t resolved_burn_in(const ExperimentConfig& c, double tau) {
  return c.burn_in.value_or(default_burn_in(drift_metadata(c.model.drift).K, tau));
}

std::size_t resolved_batch_len(const ExperimentConfig& c, double tau) {
  return c.batch_len.value_or(default_batch_length(drift_metadata(c.model.drift).K, tau));
}

Check range_check(std::string name, double value, double lower, double upper,
                  std::string detail = {}) {
  Check c{std::move(name), value >= lower && value <= upper, value, lower, upper, std::move(detail)};
  if (!std::isfinite(value)) c.passed = false;
  return c;
}

// --- experiments -------------------------------------------------------------

void run_order(const ExperimentConfig& c, const Thresholds& t, ExperimentResult& out,
               bool temporal) {
  std::vector<double> xs, rms;
  json points = json::array();
  std::ostringstream csv, dat;
  csv << (temporal ? "tau" : "N") << ",rms_error,stderr,n_replicas\r\n";
  dat << "# " << (temporal ? "tau" : "N") << " rms_error stderr\n";
  const std::size_t levels = temporal ? c.tau.size() : c.N.size();
  for (std::size_t i = 0; i < levels; ++i) {
    ErrorEstimate e;
    double x = 0.0;
    if (temporal) {
      TemporalErrorRequest req;
      req.model = c.model;
      req.N = c.N.front();
      req.tau = c.tau[i];
      req.refinement = c.refinement;
      req.horizon = c.horizon;
      req.replicas = c.replicas;
      req.master_seed = c.master_seed;
      req.stream = "temporal/" + std::to_string(i);
      req.workers = c.workers;
      e = coupled_temporal_error(req);
      x = req.tau;
    } else {
      SpatialErrorRequest req;
      req.model = c.model;
      req.N = c.N[i];
      req.N_ref = c.N_ref;
      req.tau = c.tau.front();
      req.horizon = c.horizon;
      req.replicas = c.replicas;
      req.master_seed = c.master_seed;
      req.workers = c.workers;
      e = coupled_spatial_error(req);
      x = static_cast<double>(req.N);
    }
    xs.push_back(x);
    rms.push_back(e.rms);
    points.push_back({{temporal ? "tau" : "N", x},
                      {"rms_error", e.rms},
                      {"stderr", e.stderr_rms},
                      {"n_replicas", e.replicas}});
    csv << num(x) << ',' << num(e.rms) << ',' << num(e.stderr_rms) << ',' << e.replicas << "\r\n";
    dat << num(x) << ' ' << num(e.rms) << ' ' << num(e.stderr_rms) << '\n';
  }
  out.records["points"] = points;
  const bool degenerate = std::any_of(rms.begin(), rms.end(), [](double r) { return !(r > 0.0); });
  out.records["degenerate"] = degenerate;
  if (degenerate) {
    out.records["fit"] = nullptr;
    out.checks.push_back({"slope", false, std::nan(""), *t.slope_min, *t.slope_max,
                          "degenerate: zero error at some level, no order fit"});
  } else {
    const auto fit = fit_order(xs, rms);
    out.records["fit"] = {{"slope", fit.slope},
                          {"intercept", fit.intercept},
                          {"r_squared", finite_or_null(fit.r_squared)}};
    out.checks.push_back(range_check("slope", fit.slope, *t.slope_min, *t.slope_max,
                                     temporal ? "log RMS error vs log tau"
                                              : "log RMS error vs log N"));
  }
  out.csv = csv.str();
  out.dat = dat.str();
}

void run_invariant_measure(const ExperimentConfig& c, const Thresholds& t,
                           ExperimentResult& out) {
  const double tau = c.tau.front();
  const std::size_t N = c.N.front();
  const std::size_t burn = resolved_burn_in(c, tau);
  const std::size_t L = resolved_batch_len(c, tau);
  const std::size_t j = c.mode - 1;
  SchemeParams p;
  p.tau = tau;
  p.N = N;
  p.steps = burn + c.steps;
  BatchMeans bm(L);
  double sum = 0.0;
  simulate(c.model, p, SpectralField(N), seed_derivation(c.master_seed, 0, "invariant"),
           [&](std::uint64_t k, const SpectralField& x) {
             if (k < burn || k >= burn + c.steps) return;
             const double v = x[j] * x[j];
             sum += v;
             bm.push(v);
           });
  const double empirical = sum / static_cast<double>(c.steps);
  const auto batch = bm.result(tau);
  const double se = std::sqrt(batch.sigma2 / (static_cast<double>(c.steps) * tau));
  const double lambda = SpectralSpace(c.mode).eigenvalue(c.mode);
  const double q = q_eigenvalues(c.model.noise, c.mode)[j];
  const double cdrift = c.model.drift.linear_coefficient();
  const double discrete = ou_mode_stationary_variance(lambda, q, tau, cdrift);
  const double continuous = ou_mode_stationary_variance(lambda, q, std::nullopt, cdrift);
  const double envelope = *t.bias_envelope_factor * kLambda1 * tau * continuous;

  out.records = {{"tau", tau},
                 {"steps", c.steps},
                 {"burn_in", burn},
                 {"mode", c.mode},
                 {"empirical_second_moment", empirical},
                 {"batch_stderr", se},
                 {"batch_len", L},
                 {"batches", batch.batches},
                 {"discrete_exact", discrete},
                 {"continuous", continuous},
                 {"bias_envelope", envelope}};
  const double k = *t.stderr_multiplier;
  out.checks.push_back(range_check("matches discrete law", empirical - discrete, -k * se, k * se,
                                   "empirical - discrete exact, within stderr band"));
  out.checks.push_back(range_check("within first-order bias envelope", empirical - continuous,
                                   -envelope, envelope, "empirical - continuous law"));
  std::ostringstream csv;
  csv << "tau,steps,empirical_second_moment,batch_stderr,discrete_exact,continuous,batches\r\n";
  csv << num(tau) << ',' << c.steps << ',' << num(empirical) << ',' << num(se) << ','
      << num(discrete) << ',' << num(continuous) << ',' << batch.batches << "\r\n";
  out.csv = csv.str();
  std::ostringstream dat;
  dat << "# label value\n"
      << "empirical " << num(empirical) << "\ndiscrete " << num(discrete) << "\ncontinuous "
      << num(continuous) << '\n';
  out.dat = dat.str();
}

CltRequest clt_request(const ExperimentConfig& c, double tau) {
  CltRequest req;
  req.model = c.model;
  req.observable = *c.observable;
  req.tau = tau;
  req.alpha = c.alpha;
  req.allow_coupling_violation = c.allow_coupling_violation;
  req.replicas = c.replicas;
  req.burn_in = c.burn_in;
  req.master_seed = c.master_seed;
  req.workers = c.workers;
  req.variance_run_steps = c.variance_run_steps;
  req.batch_len = c.batch_len;
  req.ergodic_mean_run_steps = c.variance_run_steps;
  return req;
}

void run_lln(const ExperimentConfig& c, const Thresholds& t, ExperimentResult& out) {
  std::vector<double> taus = c.tau;
  std::sort(taus.begin(), taus.end(), std::greater<>());
  std::vector<double> mean_abs, se;
  json points = json::array();
  std::ostringstream csv, dat;
  csv << "tau,m,N,mean_abs_deviation,stderr,n_replicas\r\n";
  dat << "# tau mean_abs_deviation stderr\n";
  for (std::size_t i = 0; i < taus.size(); ++i) {
    CltRequest req = clt_request(c, taus[i]);
    req.compute_sigma2 = false;
    req.stream = "lln/" + num(taus[i]);
    const auto s = replicate_clt(req);
    std::vector<double> abs_dev;
    for (double Pi : s.time_averages) abs_dev.push_back(std::abs(Pi - s.pi_h_ref));
    const auto mo = sample_moments(abs_dev);
    mean_abs.push_back(mo.mean);
    se.push_back(std::sqrt(mo.variance / static_cast<double>(abs_dev.size())));
    points.push_back({{"tau", taus[i]},
                      {"m", s.coupling.m},
                      {"N", s.coupling.N},
                      {"burn_in", s.burn_in},
                      {"pi_h_ref", s.pi_h_ref},
                      {"mean_abs_deviation", mean_abs.back()},
                      {"stderr", se.back()}});
    csv << num(taus[i]) << ',' << s.coupling.m << ',' << s.coupling.N << ','
        << num(mean_abs.back()) << ',' << num(se.back()) << ',' << s.replicas << "\r\n";
    dat << num(taus[i]) << ' ' << num(mean_abs.back()) << ' ' << num(se.back()) << '\n';
  }
  out.records["points"] = points;
  out.records["observable_class"] = c.observable->observable_class();
  std::size_t inversions = 0;
  bool within = true;
  for (std::size_t i = 0; i + 1 < mean_abs.size(); ++i) {
    if (mean_abs[i + 1] > mean_abs[i]) {
      ++inversions;
      const double tol = std::sqrt(se[i] * se[i] + se[i + 1] * se[i + 1]);
      within = within && (mean_abs[i + 1] - mean_abs[i] <= tol);
    }
  }
  Check chk{"mean |Pi - pi(h)| nonincreasing as tau decreases",
            within && static_cast<double>(inversions) <= *t.allowed_inversions,
            static_cast<double>(inversions), 0.0, *t.allowed_inversions,
            "value = number of inversions; each must lie within 1 combined stderr"};
  out.checks.push_back(chk);
  out.csv = csv.str();
  out.dat = dat.str();
}

void run_clt(const ExperimentConfig& c, const Thresholds& t, ExperimentResult& out) {
  const auto s = replicate_clt(clt_request(c, c.tau.front()));
  const auto mo = sample_moments(s.deviations);
  const double R = static_cast<double>(s.replicas);
  const double sigma = std::sqrt(s.sigma2_ref);
  const auto ks = ks_statistic(s.deviations, 0.0, s.sigma2_ref);
  const double ratio = mo.variance / s.sigma2_ref;
  const double ks_crit = *t.ks_coefficient / std::sqrt(R) + *t.ks_allowance;
  const double mean_bound = *t.mean_sigma_multiplier * sigma / std::sqrt(R);

  out.records = {{"tau", s.tau},
                 {"beta", s.beta},
                 {"alpha", c.alpha},
                 {"m", s.coupling.m},
                 {"N", s.coupling.N},
                 {"coupling_violation", s.coupling.violation},
                 {"burn_in", s.burn_in},
                 {"replicas", s.replicas},
                 {"observable_class", c.observable->observable_class()},
                 {"pi_h_ref", s.pi_h_ref},
                 {"pi_h_source", s.pi_h_source},
                 {"sigma2_ref", s.sigma2_ref},
                 {"sigma2_source", s.sigma2_source},
                 {"sample_mean", mo.mean},
                 {"sample_variance", mo.variance},
                 {"skewness", finite_or_null(mo.skewness)},
                 {"excess_kurtosis", finite_or_null(mo.excess_kurtosis)},
                 {"variance_ratio", ratio},
                 {"ks_D", ks.D},
                 {"ks_p_approx", ks.p_approx},
                 {"ks_critical", ks_crit}};
  if (s.sigma2_batch) {
    out.records["sigma2_batches"] = s.sigma2_batch->batches;
    out.records["sigma2_batch_len"] = s.sigma2_batch->batch_len;
  }
  out.checks.push_back(range_check("variance ratio", ratio, *t.variance_ratio_min,
                                   *t.variance_ratio_max, "sample variance / sigma2_ref"));
  out.checks.push_back(range_check("sample mean", mo.mean, -mean_bound, mean_bound,
                                   "within mean_sigma_multiplier * sigma / sqrt(R)"));
  out.checks.push_back(range_check("KS distance", ks.D, 0.0, ks_crit,
                                   "against N(0, sigma2_ref); p-value approximate"));

  std::ostringstream csv;
  csv << "replica,time_average,normalized_deviation\r\n";
  for (std::size_t r = 0; r < s.replicas; ++r) {
    csv << r << ',' << num(s.time_averages[r]) << ',' << num(s.deviations[r]) << "\r\n";
  }
  out.csv = csv.str();
  std::vector<double> sorted = s.deviations;
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream dat;
  dat << "# deviation empirical_cdf target_cdf\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    dat << num(sorted[i]) << ' ' << num(static_cast<double>(i + 1) / R) << ' '
        << num(normal_cdf(sorted[i] / sigma)) << '\n';
  }
  out.dat = dat.str();
}

void run_decomposition(const ExperimentConfig& c, const Thresholds& t, ExperimentResult& out) {
  std::vector<double> taus = c.tau;
  std::sort(taus.begin(), taus.end(), std::greater<>());
  json points = json::array();
  std::ostringstream csv, dat;
  csv << "tau,replica,deviation,martingale,remainder\r\n";
  dat << "# tau var_martingale closed_form remainder_std\n";
  std::vector<double> rem_std;
  for (double tau : taus) {
    CltRequest req = clt_request(c, tau);
    req.stream = "decomposition/" + num(tau);
    const auto d = decomposition_diagnostic(req);
    const auto band = chi_square_variance_band(d.martingale.size(), *t.band_level);
    const double ratio = d.martingale_moments.variance / d.martingale_variance_closed_form;
    rem_std.push_back(std::sqrt(d.remainder_moments.variance));
    points.push_back({{"tau", tau},
                      {"m", d.coupling.m},
                      {"N", d.coupling.N},
                      {"burn_in", d.burn_in},
                      {"martingale_variance", d.martingale_moments.variance},
                      {"martingale_variance_closed_form", d.martingale_variance_closed_form},
                      {"martingale_mean", d.martingale_moments.mean},
                      {"remainder_std", rem_std.back()},
                      {"remainder_mean", d.remainder_moments.mean},
                      {"sigma2_ref", d.sigma2_ref},
                      {"band", {band.first, band.second}}});
    out.checks.push_back(range_check("Var(M) in chi-square band (tau=" + short_num(tau) + ")", ratio,
                                     band.first, band.second,
                                     "sample Var(M) / closed form"));
    for (std::size_t r = 0; r < d.martingale.size(); ++r) {
      csv << num(tau) << ',' << r << ',' << num(d.deviations[r]) << ',' << num(d.martingale[r])
          << ',' << num(d.remainder[r]) << "\r\n";
    }
    dat << num(tau) << ' ' << num(d.martingale_moments.variance) << ' '
        << num(d.martingale_variance_closed_form) << ' ' << num(rem_std.back()) << '\n';
  }
  out.records["points"] = points;
  out.checks.push_back({"remainder std decreases with tau", rem_std.back() < rem_std.front(),
                        rem_std.back(), 0.0, rem_std.front(),
                        "std(remainder) at smallest tau < at largest tau"});
  out.csv = csv.str();
  out.dat = dat.str();
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kTemporalOrder: return "temporal_order";
    case ExperimentKind::kSpatialOrder: return "spatial_order";
    case ExperimentKind::kInvariantMeasure: return "invariant_measure";
    case ExperimentKind::kLln: return "lln";
    case ExperimentKind::kClt: return "clt";
    case ExperimentKind::kDecomposition: return "decomposition";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::kTemporalOrder, ExperimentKind::kSpatialOrder,
                 ExperimentKind::kInvariantMeasure, ExperimentKind::kLln, ExperimentKind::kClt,
                 ExperimentKind::kDecomposition}) {
    if (name == to_string(k)) return k;
  }
  invalid("experiment: unknown kind \"" + std::string(name) + "\"");
}

ExperimentConfig config_from_json(const json& j) {
  Reader r(j, "config");
  ExperimentConfig c;
  c.schema_version = r.required<int>("schema_version");
  if (c.schema_version != kSchemaVersion) {
    invalid("schema_version " + std::to_string(c.schema_version) + " unsupported (expected 1)");
  }
  c.experiment = parse_experiment_kind(r.required<std::string>("experiment"));
  if (r.has("units")) {
    if (r.raw("units") != units_json()) invalid("units: only the canonical unit block is accepted");
  }
  {
    Reader m(r.raw("model"), "model");
    c.model.drift = parse_drift(m.raw("drift"));
    c.model.noise = parse_noise(m.raw("noise"));
    c.model.beta = m.required<double>("beta");
    m.finish();
  }
  if (r.has("observable")) c.observable = parse_observable(r.raw("observable"));
  c.tau = r.optional<std::vector<double>>("tau").value_or(std::vector<double>{});
  c.N = r.optional<std::vector<std::size_t>>("N").value_or(std::vector<std::size_t>{});
  c.N_ref = r.optional<std::size_t>("N_ref").value_or(c.N_ref);
  c.refinement = r.optional<std::size_t>("refinement").value_or(c.refinement);
  c.horizon = r.optional<double>("horizon").value_or(c.horizon);
  c.mode = r.optional<std::size_t>("mode").value_or(c.mode);
  c.alpha = r.optional<double>("alpha").value_or(c.alpha);
  c.allow_coupling_violation =
      r.optional<bool>("allow_coupling_violation").value_or(c.allow_coupling_violation);
  c.replicas = r.optional<std::size_t>("replicas").value_or(c.replicas);
  c.burn_in = auto_or_count(r, "burn_in");
  c.steps = r.optional<std::size_t>("steps").value_or(c.steps);
  c.batch_len = auto_or_count(r, "batch_len");
  c.variance_run_steps = r.optional<std::size_t>("variance_run_steps").value_or(c.variance_run_steps);
  c.master_seed = r.optional<std::uint64_t>("master_seed").value_or(c.master_seed);
  c.workers = r.optional<std::size_t>("workers").value_or(c.workers);
  c.output = r.optional<std::string>("output").value_or(c.output);
  if (r.has("thresholds")) c.thresholds = parse_thresholds(r.raw("thresholds"));
  r.finish();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j = {{"schema_version", c.schema_version},
            {"experiment", to_string(c.experiment)},
            {"units", units_json()},
            {"model",
             {{"drift", drift_json(c.model.drift)},
              {"noise", noise_json(c.model.noise)},
              {"beta", c.model.beta}}},
            {"tau", c.tau},
            {"N", c.N},
            {"N_ref", c.N_ref},
            {"refinement", c.refinement},
            {"horizon", c.horizon},
            {"mode", c.mode},
            {"alpha", c.alpha},
            {"allow_coupling_violation", c.allow_coupling_violation},
            {"replicas", c.replicas},
            {"burn_in", c.burn_in ? json(*c.burn_in) : json("auto")},
            {"steps", c.steps},
            {"batch_len", c.batch_len ? json(*c.batch_len) : json("auto")},
            {"variance_run_steps", c.variance_run_steps},
            {"master_seed", c.master_seed},
            {"workers", c.workers},
            {"output", c.output},
            {"thresholds", thresholds_json(c.thresholds)}};
  if (c.observable) j["observable"] = observable_json(*c.observable);
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

Thresholds with_default_thresholds(const ExperimentConfig& c) {
  Thresholds t = c.thresholds;
  auto dflt = [](std::optional<double>& slot, double v) {
    if (!slot) slot = v;
  };
  switch (c.experiment) {
    case ExperimentKind::kTemporalOrder: {
      // RMS strong order beta/2
      const double theory = 0.5 * c.model.beta;
      const bool smooth = theory >= 0.5;
      dflt(t.slope_min, smooth ? 0.35 : 0.10);
      dflt(t.slope_max, smooth ? 0.65 : 0.40);
      break;
    }
    case ExperimentKind::kSpatialOrder:
      dflt(t.slope_min, -1.3);
      dflt(t.slope_max, -0.7);
      break;
    case ExperimentKind::kInvariantMeasure:
      dflt(t.stderr_multiplier, 3.0);
      dflt(t.bias_envelope_factor, 2.0);
      break;
    case ExperimentKind::kLln:
      dflt(t.allowed_inversions, 1.0);
      break;
    case ExperimentKind::kClt: {
      const bool linear = c.observable && c.observable->kind == ObservableKind::kLinear;
      dflt(t.variance_ratio_min, linear ? 0.6 : 0.5);
      dflt(t.variance_ratio_max, linear ? 1.5 : 2.0);
      dflt(t.mean_sigma_multiplier, 4.0);
      dflt(t.ks_coefficient, 1.63);
      dflt(t.ks_allowance, 0.04);
      break;
    }
    case ExperimentKind::kDecomposition:
      dflt(t.band_level, 0.99);
      break;
  }
  return t;
}

void validate_config(const ExperimentConfig& c) {
  try {
    const auto k = c.experiment;
    if (c.schema_version != kSchemaVersion) invalid("unsupported schema_version");
    if (c.tau.empty()) invalid("tau: at least one step size required");
    for (double tau : c.tau) {
      if (!(tau > 0.0 && tau < 0.5)) invalid("tau must lie in (0, 1/2), got " + num(tau));
    }
    if (c.replicas < 2) invalid("replicas must be >= 2");
    if (c.workers < 1) invalid("workers must be >= 1");
    validate_drift(c.model.drift);
    admissibility(c.model.noise, c.model.beta);
    if (needs_observable(k)) {
      if (!c.observable) invalid(std::string(to_string(k)) + " needs an observable");
      validate_observable(*c.observable);
    }
    switch (k) {
      case ExperimentKind::kTemporalOrder:
        if (c.N.size() != 1) invalid("temporal_order needs exactly one N");
        if (c.tau.size() < 3) invalid("temporal_order needs >= 3 tau values");
        if (c.refinement < 4) invalid("refinement must be >= 4");
        for (double tau : c.tau) {
          validate_scheme(c.model, tau, c.N.front());
          horizon_steps(c.horizon, tau);
        }
        break;
      case ExperimentKind::kSpatialOrder: {
        if (c.tau.size() != 1) invalid("spatial_order needs exactly one tau");
        if (c.N.size() < 3) invalid("spatial_order needs >= 3 N values");
        const auto max_n = *std::max_element(c.N.begin(), c.N.end());
        if (c.N_ref < 4 * max_n) invalid("N_ref must be >= 4 * max(N)");
        validate_scheme(c.model, c.tau.front(), c.N_ref);
        for (auto n : c.N) validate_scheme(c.model, c.tau.front(), n);
        horizon_steps(c.horizon, c.tau.front());
        break;
      }
      case ExperimentKind::kInvariantMeasure:
        if (c.tau.size() != 1 || c.N.size() != 1) invalid("invariant_measure needs one tau and one N");
        if (!c.model.drift.is_linear()) invalid("invariant_measure needs a linear drift (exact discrete law)");
        if (c.model.noise.kind == NoiseKind::kZero) invalid("invariant_measure needs nonzero noise");
        if (c.mode < 1 || c.mode > c.N.front()) invalid("mode must lie in 1..N");
        validate_scheme(c.model, c.tau.front(), c.N.front());
        if (c.steps / resolved_batch_len(c, c.tau.front()) < 20) {
          invalid("steps too short for >= 20 batches");
        }
        break;
      case ExperimentKind::kLln:
      case ExperimentKind::kClt:
      case ExperimentKind::kDecomposition:
        if (k == ExperimentKind::kLln && c.tau.size() < 2) invalid("lln needs >= 2 tau values");
        if (k == ExperimentKind::kClt && c.tau.size() != 1) invalid("clt needs exactly one tau");
        if (k == ExperimentKind::kDecomposition) {
          if (c.tau.size() < 2) invalid("decomposition needs >= 2 tau values");
          if (!c.model.drift.is_linear()) invalid("decomposition needs a linear drift");
          if (c.observable->kind != ObservableKind::kLinear) {
            invalid("decomposition needs a linear observable");
          }
        }
        for (double tau : c.tau) {
          const auto cp = coupling_params(tau, c.model.beta, c.alpha, c.allow_coupling_violation);
          validate_scheme(c.model, tau, cp.N);
        }
        if (k == ExperimentKind::kClt) {
          const bool analytic = c.model.drift.is_linear() &&
                                c.observable->kind == ObservableKind::kLinear;
          if (!analytic && c.variance_run_steps / resolved_batch_len(c, c.tau.front()) < 20) {
            invalid("variance_run_steps too short for >= 20 batches");
          }
        }
        break;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kValidation) throw;
    throw Error(ErrorKind::kValidation, e.what());
  }
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json ExperimentResult::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) {
    checks_json.push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"value", finite_or_null(c.value)},
                           {"lower", finite_or_null(c.lower)},
                           {"upper", finite_or_null(c.upper)},
                           {"detail", c.detail}});
  }
  ExperimentConfig echo = config;
  echo.thresholds = with_default_thresholds(config);
  return {{"config", config_to_json(echo)},
          {"records", records},
          {"checks", checks_json},
          {"passed", passed()},
          {"provenance",
           {{"master_seed", config.master_seed},
            {"workers", config.workers},
            {"wall_seconds", wall_seconds},
            {"rng", "splitmix64 counter hash over (key, step, mode, lane); Box-Muller"}}}};
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult out;
  out.config = config;
  out.records = json::object();
  const Thresholds t = with_default_thresholds(config);
  switch (config.experiment) {
    case ExperimentKind::kTemporalOrder: run_order(config, t, out, true); break;
    case ExperimentKind::kSpatialOrder: run_order(config, t, out, false); break;
    case ExperimentKind::kInvariantMeasure: run_invariant_measure(config, t, out); break;
    case ExperimentKind::kLln: run_lln(config, t, out); break;
    case ExperimentKind::kClt: run_clt(config, t, out); break;
    case ExperimentKind::kDecomposition: run_decomposition(config, t, out); break;
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void write_result(const ExperimentResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = to_string(result.config.experiment);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::kInvalidArgument, "cannot write " + name + " in " + dir);
    f << body;
  };
  write("result.json", result.to_json().dump(2) + "\n");
  write(stem + ".csv", result.csv);
  write(stem + ".dat", result.dat);
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::kDivergence ? kExitDivergence : kExitValidation;
}

std::vector<Preset> acceptance_presets() {
  std::vector<Preset> out;
  const ModelSpec smooth{DriftSpec::zero(), NoiseSpec::power_law(-1.0), 1.0};
  const ModelSpec rough{DriftSpec::zero(), NoiseSpec::power_law(0.0), 0.45};

  auto base = [](ExperimentKind k, ModelSpec m, std::uint64_t seed) {
    ExperimentConfig c;
    c.experiment = k;
    c.model = std::move(m);
    c.master_seed = seed;
    c.workers = 8;
    return c;
  };
  const std::vector<double> temporal_taus = {0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625,
                                             0.001953125};
  {
    auto c = base(ExperimentKind::kTemporalOrder, smooth, 101);
    c.tau = temporal_taus;
    c.N = {32};
    c.refinement = 16;
    c.horizon = 1.0;
    c.replicas = 64;
    c.output = "out/temporal_order_smooth";
    out.push_back({"temporal_order_smooth",
                   "strong temporal order, kappa=-1, beta=1, N=32, T=1, R=64, ref tau/16", c});
  }
  {
    auto c = base(ExperimentKind::kTemporalOrder, rough, 102);
    c.tau = temporal_taus;
    c.N = {32};
    c.refinement = 16;
    c.horizon = 1.0;
    c.replicas = 64;
    c.output = "out/temporal_order_rough";
    out.push_back({"temporal_order_rough",
                   "strong temporal order, Q=I, beta=0.45, N=32, T=1, R=64, ref tau/16", c});
  }
  {
    auto c = base(ExperimentKind::kSpatialOrder, smooth, 103);
    c.tau = {1e-3};
    c.N = {2, 4, 8, 16};
    c.N_ref = 128;
    c.horizon = 1.0;
    c.replicas = 64;
    c.output = "out/spatial_order";
    out.push_back({"spatial_order", "strong spatial order, kappa=-1, beta=1, tau=1e-3, N_ref=128", c});
  }
  {
    auto c = base(ExperimentKind::kInvariantMeasure, smooth, 104);
    c.tau = {0.05};
    c.N = {8};
    c.mode = 1;
    c.steps = 1'000'000;
    c.replicas = 2;
    c.output = "out/invariant_measure";
    out.push_back({"invariant_measure", "OU mode-1 stationary second moment, 1e6 steps at tau=0.05", c});
  }
  {
    auto c = base(ExperimentKind::kLln, smooth, 105);
    c.observable = Observable::linear(SpectralField::basis(1, 1));
    c.tau = {0.04, 0.02, 0.01};
    c.alpha = 0.4;
    c.replicas = 200;
    c.output = "out/lln";
    out.push_back({"lln", "weak LLN, h=<e1,.>, tau in {0.04,0.02,0.01}, R=200", c});
  }
  {
    auto c = base(ExperimentKind::kClt, smooth, 106);
    c.observable = Observable::linear(SpectralField::basis(1, 1));
    c.tau = {0.02};
    c.alpha = 0.4;
    c.replicas = 400;
    c.output = "out/clt_linear";
    out.push_back({"clt_linear", "CLT, h=<e1,.>, tau=0.02, alpha=0.4, R=400, sigma^2=pi^-6", c});
  }
  {
    auto c = base(ExperimentKind::kClt, smooth, 107);
    c.observable = Observable::composed(OuterFunction::kSin, SpectralField::basis(1, 1), 2.0);
    c.tau = {0.02};
    c.alpha = 0.4;
    c.replicas = 400;
    c.variance_run_steps = 2'000'000;
    c.output = "out/clt_bounded";
    out.push_back({"clt_bounded", "CLT, h=sin(2<e1,.>), batch-means sigma^2 reference, R=400", c});
  }
  {
    auto c = base(ExperimentKind::kDecomposition, smooth, 108);
    c.observable = Observable::linear(SpectralField::basis(1, 1));
    c.tau = {0.02, 0.005};
    c.alpha = 0.4;
    c.replicas = 400;
    c.output = "out/decomposition";
    out.push_back({"decomposition", "martingale/remainder split, tau in {0.02, 0.005}, R=400", c});
  }
  return out;
}

const Preset& find_preset(std::string_view name) {
  static const auto presets = acceptance_presets();
  for (const auto& p : presets) {
    if (p.name == name) return p;
  }
  throw Error(ErrorKind::kValidation, "unknown preset \"" + std::string(name) + "\"");
}

}  // namespace spde
