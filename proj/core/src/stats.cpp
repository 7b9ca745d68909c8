#include "phoneval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

#include "phoneval/errors.hpp"

namespace phoneval {

// ---------------------------------------------------------------------------
// Normal distribution via Cody's erfc
// ---------------------------------------------------------------------------

namespace {

// Rational Chebyshev coefficients from W. J. Cody's SPECFUN CALERF.
constexpr double kErfA[5] = {3.16112374387056560e00, 1.13864154151050156e02,
                             3.77485237685302021e02, 3.20937758913846947e03,
                             1.85777706184603153e-1};
constexpr double kErfB[4] = {2.36012909523441209e01, 2.44024637934444173e02,
                             1.28261652607737228e03, 2.84423683343917062e03};
constexpr double kErfC[9] = {5.64188496988670089e-1, 8.88314979438837594e00,
                             6.61191906371416295e01, 2.98635138197400131e02,
                             8.81952221241769090e02, 1.71204761263407058e03,
                             2.05107837782607147e03, 1.23033935479799725e03,
                             2.15311535474403846e-8};
constexpr double kErfD[8] = {1.57449261107098347e01, 1.17693950891312499e02,
                             5.37181101862009858e02, 1.62138957456669019e03,
                             3.29079923573345963e03, 4.36261909014324716e03,
                             3.43936767414372164e03, 1.23033935480374942e03};
constexpr double kErfP[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                             1.25781726111229246e-1, 1.60837851487422766e-2,
                             6.58749161529837803e-4, 1.63153871373020978e-2};
constexpr double kErfQ[5] = {2.56852019228982242e00, 1.87295284992346047e00,
                             5.27905102951428412e-1, 6.05183413124413191e-2,
                             2.33520497626869185e-3};
constexpr double kInvSqrtPi = 5.6418958354775628695e-1;

// exp(-y^2) with the argument split to limit rounding, as in SPECFUN.
double exp_neg_y2(double y) {
  double ysq = std::trunc(y * 16.0) / 16.0;
  double del = (y - ysq) * (y + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del);
}

double erf_small(double x) {
  double z = x * x;
  double num = kErfA[4] * z;
  double den = z;
  for (int i = 0; i < 3; ++i) {
    num = (num + kErfA[i]) * z;
    den = (den + kErfB[i]) * z;
  }
  return x * (num + kErfA[3]) / (den + kErfB[3]);
}

double erfc_mid(double y) {  // 0.46875 <= y <= 4
  double num = kErfC[8] * y;
  double den = y;
  for (int i = 0; i < 7; ++i) {
    num = (num + kErfC[i]) * y;
    den = (den + kErfD[i]) * y;
  }
  return exp_neg_y2(y) * (num + kErfC[7]) / (den + kErfD[7]);
}

double erfc_tail(double y) {  // y > 4
  double z = 1.0 / (y * y);
  double num = kErfP[5] * z;
  double den = z;
  for (int i = 0; i < 4; ++i) {
    num = (num + kErfP[i]) * z;
    den = (den + kErfQ[i]) * z;
  }
  double r = z * (num + kErfP[4]) / (den + kErfQ[4]);
  return exp_neg_y2(y) * (kInvSqrtPi - r) / y;
}

}  // namespace

double erfc_rational(double x) {
  double y = std::abs(x);
  double result;
  if (y <= 0.46875) {
    result = 1.0 - erf_small(x);
    return result;  // already signed through erf
  }
  if (y <= 4.0) {
    result = erfc_mid(y);
  } else if (y < 26.6) {
    result = erfc_tail(y);
  } else {
    result = 0.0;
  }
  return x < 0.0 ? 2.0 - result : result;
}

double normal_cdf(double z) {
  return 0.5 * erfc_rational(-z / std::numbers::sqrt2);
}

double two_sided_p(double z) {
  return erfc_rational(std::abs(z) / std::numbers::sqrt2);
}

// ---------------------------------------------------------------------------
// Proportion test
// ---------------------------------------------------------------------------

StatResult two_proportion_test(std::int64_t k1, std::int64_t n1,
                               std::int64_t k2, std::int64_t n2) {
  if (n1 < 1 || n2 < 1 || k1 < 0 || k2 < 0 || k1 > n1 || k2 > n2)
    throw std::invalid_argument("two_proportion_test: need 0 <= k <= n, n >= 1");
  double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  double p2 = static_cast<double>(k2) / static_cast<double>(n2);

  StatResult r;
  r.estimate = p1 - p2;
  r.effect_size = 2.0 * std::asin(std::sqrt(p1)) - 2.0 * std::asin(std::sqrt(p2));

  double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  if (pooled <= 0.0 || pooled >= 1.0) {
    r.degenerate = true;
    return r;
  }
  r.se = std::sqrt(pooled * (1.0 - pooled) *
                   (1.0 / static_cast<double>(n1) +
                    1.0 / static_cast<double>(n2)));
  r.z = r.estimate / r.se;
  r.p_two_sided = two_sided_p(*r.z);
  return r;
}

// ---------------------------------------------------------------------------
// Descriptive statistics
// ---------------------------------------------------------------------------

std::map<GroupKey, GroupStat> descriptive(const ScoreTable& table,
                                          const Manifest& manifest) {
  std::map<GroupKey, std::vector<double>> rates;
  for (const auto& [key, tally] : table.cells) {
    const Speaker* speaker = manifest.speaker(key.speaker_id);
    if (!speaker)
      throw DataError("score table references unknown speaker \"" +
                      key.speaker_id + "\"");
    rates[{speaker->ethnicity_label, key.system_id, key.metric}].push_back(
        tally.rate);
  }
  std::map<GroupKey, GroupStat> out;
  for (const auto& [key, values] : rates) {
    GroupStat stat;
    stat.n = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    stat.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
      double ss = 0.0;
      for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
      stat.se = std::sqrt(ss / static_cast<double>(values.size() - 1)) /
                std::sqrt(static_cast<double>(values.size()));
    }
    out[key] = stat;
  }
  return out;
}

// ---------------------------------------------------------------------------
// REML random-intercept model
// ---------------------------------------------------------------------------

struct RemlProfile::Impl {
  // Per-speaker sufficient statistics; each lambda evaluation is then
  // O(groups * p^2) regardless of n.
  std::vector<Eigen::MatrixXd> xtx;
  std::vector<Eigen::VectorXd> xty;
  std::vector<Eigen::VectorXd> sx;
  std::vector<double> sy;
  std::vector<double> yty;
  std::vector<double> m;
  std::size_t n = 0;
  std::size_t p = 0;

  struct Eval {
    Eigen::VectorXd beta;
    Eigen::MatrixXd a_inverse;
    double sigma_e2 = 0.0;
    double loglik = 0.0;
  };

  Eval evaluate(double lambda) const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
    double q = 0.0;
    double logdet_v = 0.0;
    for (std::size_t g = 0; g < m.size(); ++g) {
      double w = lambda / (1.0 + lambda * m[g]);
      a += xtx[g] - w * (sx[g] * sx[g].transpose());
      u += xty[g] - w * sx[g] * sy[g];
      q += yty[g] - w * sy[g] * sy[g];
      logdet_v += std::log1p(lambda * m[g]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    Eval eval;
    eval.beta = ldlt.solve(u);
    double rss = q - u.dot(eval.beta);
    if (rss < 1e-300) rss = 1e-300;
    double dof = static_cast<double>(n - p);
    eval.sigma_e2 = rss / dof;
    double logdet_a = ldlt.vectorD().array().log().sum();
    eval.loglik = -0.5 * (dof * std::log(2.0 * std::numbers::pi *
                                         eval.sigma_e2) +
                          logdet_v + logdet_a + dof);
    eval.a_inverse = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return eval;
  }
};

RemlProfile::RemlProfile(const LmmDesign& design)
    : impl_(std::make_unique<Impl>()) {
  const std::size_t n = design.rows();
  const std::size_t p = design.cols();
  if (design.design.size() != n * p || design.speaker.size() != n)
    throw std::invalid_argument("fit_lmm: inconsistent design dimensions");
  if (n <= p)
    throw std::invalid_argument("fit_lmm: need more observations than columns");

  std::map<std::string, std::size_t> group_index;
  for (const std::string& s : design.speaker)
    group_index.emplace(s, group_index.size());
  const std::size_t groups = group_index.size();
  if (groups < 2) throw std::invalid_argument("fit_lmm: need >= 2 speakers");

  impl_->n = n;
  impl_->p = p;
  impl_->xtx.assign(groups, Eigen::MatrixXd::Zero(p, p));
  impl_->xty.assign(groups, Eigen::VectorXd::Zero(p));
  impl_->sx.assign(groups, Eigen::VectorXd::Zero(p));
  impl_->sy.assign(groups, 0.0);
  impl_->yty.assign(groups, 0.0);
  impl_->m.assign(groups, 0.0);

  Eigen::MatrixXd x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t g = group_index.at(design.speaker[i]);
    Eigen::VectorXd row(p);
    for (std::size_t j = 0; j < p; ++j) row(j) = design.x(i, j);
    x.row(i) = row;
    impl_->xtx[g] += row * row.transpose();
    impl_->xty[g] += row * design.response[i];
    impl_->sx[g] += row;
    impl_->sy[g] += design.response[i];
    impl_->yty[g] += design.response[i] * design.response[i];
    impl_->m[g] += 1.0;
  }

  if (std::none_of(impl_->m.begin(), impl_->m.end(),
                   [](double m) { return m >= 2.0; }))
    throw std::invalid_argument(
        "fit_lmm: variance components unidentifiable, no speaker has >= 2 "
        "observations");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (static_cast<std::size_t>(qr.rank()) < p)
    throw std::invalid_argument("fit_lmm: design matrix is rank deficient");
}

RemlProfile::~RemlProfile() = default;
RemlProfile::RemlProfile(RemlProfile&&) noexcept = default;
RemlProfile& RemlProfile::operator=(RemlProfile&&) noexcept = default;

std::size_t RemlProfile::n_groups() const { return impl_->m.size(); }

double RemlProfile::loglik(double lambda) const {
  return impl_->evaluate(lambda).loglik;
}

LmmFit RemlProfile::fit_at(double lambda) const {
  Impl::Eval eval = impl_->evaluate(lambda);
  LmmFit fit;
  fit.lambda = lambda;
  fit.sigma_e2 = eval.sigma_e2;
  fit.sigma_b2 = std::max(0.0, lambda * eval.sigma_e2);
  fit.reml_loglik = eval.loglik;
  fit.beta.assign(eval.beta.data(), eval.beta.data() + eval.beta.size());
  fit.se.resize(impl_->p);
  for (std::size_t j = 0; j < impl_->p; ++j)
    fit.se[j] = std::sqrt(eval.sigma_e2 * eval.a_inverse(j, j));
  fit.converged = std::isfinite(eval.loglik);
  return fit;
}

namespace {

constexpr double kLogLambdaLow = -12.0;
constexpr double kLogLambdaHigh = 12.0;
constexpr double kGoldenTolerance = 1e-9;

}  // namespace

LmmFit fit_lmm(const LmmDesign& design) {
  RemlProfile profile(design);

  auto f = [&profile](double t) { return profile.loglik(std::exp(t)); };

  // Golden-section maximization on log lambda.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kLogLambdaLow, b = kLogLambdaHigh;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  bool finite = std::isfinite(fc) && std::isfinite(fd);
  while (b - a > kGoldenTolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
    finite = finite && std::isfinite(fc) && std::isfinite(fd);
  }
  double best_lambda = std::exp(0.5 * (a + b));

  // The boundary is a legitimate solution (no speaker effect); take it
  // whenever it beats the interior optimum.
  double interior = profile.loglik(best_lambda);
  double boundary = profile.loglik(0.0);
  if (!(interior > boundary)) best_lambda = 0.0;

  LmmFit fit = profile.fit_at(best_lambda);
  fit.column_names = design.column_names;
  fit.converged = fit.converged && finite;
  return fit;
}

LmmDesign build_lmm_design(const ScoreTable& table, MetricKind metric,
                           const Manifest& manifest,
                           const std::string& ref_group,
                           const std::string& ref_system) {
  std::set<std::string> groups, systems;
  for (const auto& [key, tally] : table.cells) {
    if (key.metric != metric) continue;
    const Speaker* speaker = manifest.speaker(key.speaker_id);
    if (!speaker)
      throw DataError("score table references unknown speaker \"" +
                      key.speaker_id + "\"");
    groups.insert(speaker->ethnicity_label);
    systems.insert(key.system_id);
  }
  if (groups.empty())
    throw std::invalid_argument("build_lmm_design: no cells for metric");

  std::string base_group = ref_group;
  if (base_group.empty())
    base_group = groups.count("CA") ? "CA" : *groups.begin();
  if (!groups.count(base_group))
    throw std::invalid_argument("build_lmm_design: reference group \"" +
                                base_group + "\" has no observations");
  std::string base_system = ref_system.empty() ? *systems.begin() : ref_system;
  if (!systems.count(base_system))
    throw std::invalid_argument("build_lmm_design: reference system \"" +
                                base_system + "\" has no observations");

  LmmDesign design;
  design.column_names.push_back("(intercept)");
  std::vector<std::string> group_cols, system_cols;
  for (const std::string& g : groups)
    if (g != base_group) {
      group_cols.push_back(g);
      design.column_names.push_back("ethnicity:" + g);
    }
  for (const std::string& s : systems)
    if (s != base_system) {
      system_cols.push_back(s);
      design.column_names.push_back("system:" + s);
    }

  for (const auto& [key, tally] : table.cells) {
    if (key.metric != metric) continue;
    if (!std::isfinite(tally.rate)) continue;  // degenerate speakers excluded
    const Speaker* speaker = manifest.speaker(key.speaker_id);
    design.response.push_back(tally.rate);
    design.speaker.push_back(key.speaker_id);
    design.design.push_back(1.0);
    for (const std::string& g : group_cols)
      design.design.push_back(speaker->ethnicity_label == g ? 1.0 : 0.0);
    for (const std::string& s : system_cols)
      design.design.push_back(key.system_id == s ? 1.0 : 0.0);
  }
  return design;
}

StatResult wald_test(const LmmFit& fit, std::size_t coefficient) {
  if (!fit.converged)
    throw std::invalid_argument("wald_test: fit did not converge");
  if (coefficient >= fit.beta.size())
    throw std::invalid_argument("wald_test: coefficient index out of range");
  if (fit.se[coefficient] <= 0.0)
    throw std::invalid_argument("wald_test: degenerate test, se = 0");
  StatResult r;
  r.estimate = fit.beta[coefficient];
  r.se = fit.se[coefficient];
  r.z = r.estimate / r.se;
  r.p_two_sided = two_sided_p(*r.z);
  return r;
}

// ---------------------------------------------------------------------------
// The full battery
// ---------------------------------------------------------------------------

StatsArtifact compute_stats(const ScoreTable& table,
                            const CooccurrenceTable* cooc,
                            const Manifest& manifest,
                            const StatsOptions& options) {
  StatsArtifact out;
  out.manifest_digest = table.manifest_digest;
  out.alpha = options.alpha;
  out.descriptive = descriptive(table, manifest);

  auto run_lmm = [&](MetricKind metric) {
    bool any = false;
    for (const auto& [key, _] : table.cells)
      if (key.metric == metric) any = true;
    if (!any) {
      out.notes.push_back(std::string("lmm skipped for ") +
                          std::string(metric_name(metric)) + ": no cells");
      return;
    }
    try {
      LmmDesign design = build_lmm_design(table, metric, manifest,
                                          options.ref_group,
                                          options.ref_system);
      LmmReport report;
      report.metric = metric;
      report.fit = fit_lmm(design);
      for (std::size_t j = 0; j < report.fit.column_names.size(); ++j) {
        if (report.fit.column_names[j].rfind("ethnicity:", 0) != 0) continue;
        WaldRow row;
        row.coefficient = report.fit.column_names[j];
        row.result = wald_test(report.fit, j);
        row.significant = row.result.p_two_sided &&
                          *row.result.p_two_sided < options.alpha;
        report.tests.push_back(std::move(row));
      }
      out.lmm.push_back(std::move(report));
    } catch (const std::invalid_argument& e) {
      out.notes.push_back(std::string("lmm skipped for ") +
                          std::string(metric_name(metric)) + ": " + e.what());
    }
  };
  if (options.lmm_wer) run_lmm(MetricKind::WER);
  if (options.lmm_per) run_lmm(MetricKind::PER);

  if (cooc) {
    std::set<std::string> groups, systems;
    for (const auto& [key, _] : cooc->cells) {
      groups.insert(key.group);
      systems.insert(key.system_id);
    }
    std::string ref = options.ref_group;
    if (ref.empty()) ref = groups.count("CA") ? "CA" : *groups.begin();
    if (!groups.count(ref)) {
      out.notes.push_back("proportion tests skipped: reference group \"" +
                          ref + "\" absent");
      return out;
    }
    for (const std::string& system : systems) {
      for (Marker marker : kAllMarkers) {
        auto ref_it = cooc->cells.find({ref, system, marker});
        if (ref_it == cooc->cells.end() || ref_it->second.contexts == 0)
          continue;
        for (const std::string& group : groups) {
          if (group == ref) continue;
          auto it = cooc->cells.find({group, system, marker});
          if (it == cooc->cells.end() || it->second.contexts == 0) continue;
          ProportionRow row;
          row.system_id = system;
          row.marker = marker;
          row.group = group;
          row.ref_group = ref;
          row.k1 = it->second.overlap;
          row.n1 = it->second.contexts;
          row.k2 = ref_it->second.overlap;
          row.n2 = ref_it->second.contexts;
          row.result = two_proportion_test(row.k1, row.n1, row.k2, row.n2);
          row.significant = row.result.p_two_sided &&
                            *row.result.p_two_sided < options.alpha;
          out.proportions.push_back(std::move(row));
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json stat_result_to_json(const StatResult& r) {
  nlohmann::json j;
  j["estimate"] = r.estimate;
  j["se"] = r.se;
  j["z"] = r.z ? nlohmann::json(*r.z) : nlohmann::json(nullptr);
  j["p"] = r.p_two_sided ? nlohmann::json(*r.p_two_sided)
                         : nlohmann::json(nullptr);
  j["effect_size"] = r.effect_size ? nlohmann::json(*r.effect_size)
                                   : nlohmann::json(nullptr);
  j["degenerate"] = r.degenerate;
  return j;
}

StatResult stat_result_from_json(const nlohmann::json& j) {
  StatResult r;
  r.estimate = j.at("estimate").get<double>();
  r.se = j.at("se").get<double>();
  if (!j.at("z").is_null()) r.z = j.at("z").get<double>();
  if (!j.at("p").is_null()) r.p_two_sided = j.at("p").get<double>();
  if (!j.at("effect_size").is_null())
    r.effect_size = j.at("effect_size").get<double>();
  r.degenerate = j.at("degenerate").get<bool>();
  return r;
}

}  // namespace

std::string to_json_string(const StatsArtifact& artifact) {
  nlohmann::json j;
  j["manifest_digest"] = artifact.manifest_digest;
  j["alpha"] = artifact.alpha;

  nlohmann::json desc = nlohmann::json::object();
  for (const auto& [key, stat] : artifact.descriptive) {
    nlohmann::json g = {{"mean", stat.mean}, {"n", stat.n}};
    if (stat.se) g["se"] = *stat.se;
    desc[key.group + "/" + key.system_id + "/" +
         std::string(metric_name(key.metric))] = std::move(g);
  }
  j["descriptive"] = std::move(desc);

  nlohmann::json lmm = nlohmann::json::array();
  for (const LmmReport& report : artifact.lmm) {
    nlohmann::json r;
    r["metric"] = metric_name(report.metric);
    r["beta"] = report.fit.beta;
    r["se"] = report.fit.se;
    r["columns"] = report.fit.column_names;
    r["sigma_b2"] = report.fit.sigma_b2;
    r["sigma_e2"] = report.fit.sigma_e2;
    r["lambda"] = report.fit.lambda;
    r["reml_loglik"] = report.fit.reml_loglik;
    r["converged"] = report.fit.converged;
    nlohmann::json tests = nlohmann::json::array();
    for (const WaldRow& row : report.tests) {
      nlohmann::json t = stat_result_to_json(row.result);
      t["coefficient"] = row.coefficient;
      t["significant"] = row.significant;
      tests.push_back(std::move(t));
    }
    r["tests"] = std::move(tests);
    lmm.push_back(std::move(r));
  }
  j["lmm"] = std::move(lmm);

  nlohmann::json props = nlohmann::json::array();
  for (const ProportionRow& row : artifact.proportions) {
    nlohmann::json p = stat_result_to_json(row.result);
    p["system"] = row.system_id;
    p["marker"] = marker_code(row.marker);
    p["group"] = row.group;
    p["ref_group"] = row.ref_group;
    p["k1"] = row.k1;
    p["n1"] = row.n1;
    p["k2"] = row.k2;
    p["n2"] = row.n2;
    p["significant"] = row.significant;
    props.push_back(std::move(p));
  }
  j["proportion_tests"] = std::move(props);
  j["notes"] = artifact.notes;
  return j.dump(2) + "\n";
}

StatsArtifact stats_from_json(std::string_view json) {
  nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed stats JSON");
  StatsArtifact out;
  try {
    out.manifest_digest = j.at("manifest_digest").get<std::string>();
    out.alpha = j.at("alpha").get<double>();
    for (const auto& [key, value] : j.at("descriptive").items()) {
      std::size_t second = key.rfind('/');
      std::size_t first = key.rfind('/', second - 1);
      GroupStat stat;
      stat.mean = value.at("mean").get<double>();
      stat.n = value.at("n").get<int>();
      if (value.contains("se")) stat.se = value.at("se").get<double>();
      std::string metric = key.substr(second + 1);
      out.descriptive[{key.substr(0, first),
                       key.substr(first + 1, second - first - 1),
                       metric == "WER" ? MetricKind::WER : MetricKind::PER}] =
          stat;
    }
    for (const auto& r : j.at("lmm")) {
      LmmReport report;
      report.metric = r.at("metric").get<std::string>() == "WER"
                          ? MetricKind::WER
                          : MetricKind::PER;
      report.fit.beta = r.at("beta").get<std::vector<double>>();
      report.fit.se = r.at("se").get<std::vector<double>>();
      report.fit.column_names =
          r.at("columns").get<std::vector<std::string>>();
      report.fit.sigma_b2 = r.at("sigma_b2").get<double>();
      report.fit.sigma_e2 = r.at("sigma_e2").get<double>();
      report.fit.lambda = r.at("lambda").get<double>();
      report.fit.reml_loglik = r.at("reml_loglik").get<double>();
      report.fit.converged = r.at("converged").get<bool>();
      for (const auto& t : r.at("tests")) {
        WaldRow row;
        row.coefficient = t.at("coefficient").get<std::string>();
        row.significant = t.at("significant").get<bool>();
        row.result = stat_result_from_json(t);
        report.tests.push_back(std::move(row));
      }
      out.lmm.push_back(std::move(report));
    }
    for (const auto& p : j.at("proportion_tests")) {
      ProportionRow row;
      row.system_id = p.at("system").get<std::string>();
      row.marker = *parse_marker(p.at("marker").get<std::string>());
      row.group = p.at("group").get<std::string>();
      row.ref_group = p.at("ref_group").get<std::string>();
      row.k1 = p.at("k1").get<std::int64_t>();
      row.n1 = p.at("n1").get<std::int64_t>();
      row.k2 = p.at("k2").get<std::int64_t>();
      row.n2 = p.at("n2").get<std::int64_t>();
      row.significant = p.at("significant").get<bool>();
      row.result = stat_result_from_json(p);
      out.proportions.push_back(std::move(row));
    }
    out.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stats JSON: ") + e.what());
  }
  return out;
}

}  // namespace phoneval
