#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phoneval/markers.hpp"
#include "phoneval/scoring.hpp"

namespace phoneval {

/// Complementary error function via Cody's rational Chebyshev
/// approximations (the SPECFUN coefficient set); absolute error below
/// 1e-12 across the real line, which keeps small two-sided p-values stable.
double erfc_rational(double x);

/// Standard normal CDF, Phi(z) = erfc(-z / sqrt(2)) / 2.
double normal_cdf(double z);

/// Two-sided p-value for a standard-normal statistic.
double two_sided_p(double z);

struct StatResult {
  double estimate = 0.0;
  double se = 0.0;
  std::optional<double> z;
  std::optional<double> p_two_sided;
  std::optional<double> effect_size;
  bool degenerate = false;

  bool operator==(const StatResult&) const = default;
};

/// Pooled two-proportion z-test with Cohen's h as the effect size.
/// A pooled proportion of exactly 0 or 1 makes z undefined; the result is
/// flagged degenerate and h is still computed.
StatResult two_proportion_test(std::int64_t k1, std::int64_t n1,
                               std::int64_t k2, std::int64_t n2);

/// Mean, standard error and speaker count per (group, system, metric),
/// recomputed from the per-speaker cells.
std::map<GroupKey, GroupStat> descriptive(const ScoreTable& table,
                                          const Manifest& manifest);

/// Fixed-effect design for the random-intercept model
/// y = X beta + Z b + eps, with one random intercept per speaker.
struct LmmDesign {
  std::vector<double> response;           // n
  std::vector<std::string> column_names;  // p
  std::vector<double> design;             // row-major n x p
  std::vector<std::string> speaker;       // n

  std::size_t rows() const { return response.size(); }
  std::size_t cols() const { return column_names.size(); }
  double x(std::size_t i, std::size_t j) const {
    return design[i * cols() + j];
  }
};

/// Intercept + ethnicity indicators + system indicators (reference levels
/// dropped). ref_group defaults to "CA" when present, else the first label.
LmmDesign build_lmm_design(const ScoreTable& table, MetricKind metric,
                           const Manifest& manifest,
                           const std::string& ref_group = "",
                           const std::string& ref_system = "");

struct LmmFit {
  std::vector<double> beta;
  std::vector<double> se;
  std::vector<std::string> column_names;
  double sigma_b2 = 0.0;   // between-speaker variance
  double sigma_e2 = 0.0;   // residual variance
  double lambda = 0.0;     // sigma_b2 / sigma_e2
  double reml_loglik = 0.0;
  bool converged = false;

  bool operator==(const LmmFit&) const = default;
};

/// Profiled REML criterion for the variance ratio lambda = sigma_b^2 /
/// sigma_e^2: with V(lambda) = I + lambda Z Z^T block-diagonal per speaker,
/// beta and sigma_e^2 have closed GLS forms, so the likelihood is a
/// one-dimensional function of lambda. Shared by the fitter and by
/// grid-search oracles in tests.
class RemlProfile {
 public:
  explicit RemlProfile(const LmmDesign& design);
  ~RemlProfile();
  RemlProfile(RemlProfile&&) noexcept;
  RemlProfile& operator=(RemlProfile&&) noexcept;

  double loglik(double lambda) const;
  LmmFit fit_at(double lambda) const;  // beta, se, variances at this lambda

  std::size_t n_groups() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// REML fit of the random-intercept model. lambda is maximized by
/// golden-section search on log lambda in [-12, 12] to 1e-9, with the
/// lambda = 0 boundary checked explicitly; sigma_b^2 is clamped at zero.
/// Preconditions (full-rank X, >= 2 speakers, at least one speaker with
/// >= 2 observations, n > p) are reported via std::invalid_argument.
LmmFit fit_lmm(const LmmDesign& design);

/// Wald z-test for one fixed-effect coefficient of a converged fit.
StatResult wald_test(const LmmFit& fit, std::size_t coefficient);

struct WaldRow {
  std::string coefficient;
  StatResult result;
  bool significant = false;

  bool operator==(const WaldRow&) const = default;
};

struct LmmReport {
  MetricKind metric = MetricKind::WER;
  LmmFit fit;
  std::vector<WaldRow> tests;

  bool operator==(const LmmReport&) const = default;
};

struct ProportionRow {
  std::string system_id;
  Marker marker = Marker::LowBackMerger;
  std::string group;
  std::string ref_group;
  std::int64_t k1 = 0, n1 = 0, k2 = 0, n2 = 0;
  StatResult result;
  bool significant = false;

  bool operator==(const ProportionRow&) const = default;
};

struct StatsOptions {
  double alpha = 0.05;
  bool lmm_wer = true;
  bool lmm_per = true;
  std::string ref_group;   // empty = auto ("CA" when present)
  std::string ref_system;  // empty = first system
};

struct StatsArtifact {
  std::string manifest_digest;
  std::map<GroupKey, GroupStat> descriptive;
  std::vector<LmmReport> lmm;
  std::vector<ProportionRow> proportions;
  std::vector<std::string> notes;
  double alpha = 0.05;

  bool operator==(const StatsArtifact&) const = default;
};

/// The full battery: descriptive stats, one LMM per requested metric with a
/// Wald test per non-reference ethnicity coefficient, and per (system,
/// marker) two-proportion tests of each group's normalized error overlap
/// against the reference group. Metrics or cells that cannot support a test
/// are skipped with a note.
StatsArtifact compute_stats(const ScoreTable& table,
                            const CooccurrenceTable* cooc,
                            const Manifest& manifest,
                            const StatsOptions& options);

std::string to_json_string(const StatsArtifact& artifact);
StatsArtifact stats_from_json(std::string_view json);

}  // namespace phoneval
