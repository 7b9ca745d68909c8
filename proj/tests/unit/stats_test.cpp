#include "phoneval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include <Eigen/Dense>

#include "../support/oracles.hpp"

using namespace phoneval;

namespace {

// Balanced speakers x systems design: intercept + one group indicator +
// (systems-1) system indicators.
LmmDesign simulate(std::mt19937& rng, int speakers, int systems,
                   double intercept, double group_effect, double sigma_b,
                   double sigma_e) {
  std::normal_distribution<double> b_dist(0.0, sigma_b);
  std::normal_distribution<double> e_dist(0.0, sigma_e);
  LmmDesign design;
  design.column_names = {"(intercept)", "ethnicity:AA"};
  for (int s = 1; s < systems; ++s)
    design.column_names.push_back("system:sys" + std::to_string(s));
  const std::size_t p = design.column_names.size();
  for (int spk = 0; spk < speakers; ++spk) {
    bool is_aa = spk % 2 == 0;
    double b = b_dist(rng);
    for (int sys = 0; sys < systems; ++sys) {
      double y = intercept + (is_aa ? group_effect : 0.0) + b + e_dist(rng);
      design.response.push_back(y);
      design.speaker.push_back("spk" + std::to_string(spk));
      std::vector<double> row(p, 0.0);
      row[0] = 1.0;
      row[1] = is_aa ? 1.0 : 0.0;
      if (sys > 0) row[1 + static_cast<std::size_t>(sys)] = 1.0;
      design.design.insert(design.design.end(), row.begin(), row.end());
    }
  }
  return design;
}

std::vector<double> ols(const LmmDesign& design) {
  const auto n = static_cast<Eigen::Index>(design.rows());
  const auto p = static_cast<Eigen::Index>(design.cols());
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = design.response[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j)
      x(i, j) = design.x(static_cast<std::size_t>(i),
                         static_cast<std::size_t>(j));
  }
  Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  return {beta.data(), beta.data() + beta.size()};
}

}  // namespace

TEST_CASE("normal CDF matches the series oracle to 1e-10 on |z| <= 6") {
  for (double z = -6.0; z <= 6.0 + 1e-12; z += 0.01) {
    double expected = static_cast<double>(testing::normal_cdf_series(z));
    CHECK(std::abs(normal_cdf(z) - expected) < 1e-10);
  }
}

TEST_CASE("erfc agrees with the C library implementation") {
  for (double x = -6.0; x <= 6.0 + 1e-12; x += 0.0137) {
    double mine = erfc_rational(x);
    double libm = std::erfc(x);
    double scale = std::max(std::abs(libm), 1e-300);
    CHECK(std::abs(mine - libm) / scale < 1e-12);
  }
  CHECK(erfc_rational(0.0) == 1.0);
  CHECK(erfc_rational(30.0) == 0.0);
  CHECK(erfc_rational(-30.0) == 2.0);
}

TEST_CASE("wald test recovers the textbook p-values") {
  LmmFit fit;
  fit.beta = {0.0, 1.96, 3.29};
  fit.se = {1.0, 1.0, 1.0};
  fit.column_names = {"a", "b", "c"};
  fit.converged = true;

  CHECK(*wald_test(fit, 0).p_two_sided == doctest::Approx(1.0));
  CHECK(*wald_test(fit, 1).p_two_sided == doctest::Approx(0.05).epsilon(0.02));
  CHECK(std::abs(*wald_test(fit, 1).p_two_sided - 0.05) < 0.001);
  CHECK(std::abs(*wald_test(fit, 2).p_two_sided - 0.001) < 0.0005);

  fit.se[0] = 0.0;
  CHECK_THROWS_AS(wald_test(fit, 0), std::invalid_argument);
  fit.converged = false;
  CHECK_THROWS_AS(wald_test(fit, 1), std::invalid_argument);
}

TEST_CASE("two-proportion test on the worked example") {
  StatResult equal = two_proportion_test(50, 100, 50, 100);
  CHECK(*equal.z == 0.0);
  CHECK(*equal.p_two_sided == doctest::Approx(1.0));
  CHECK(*equal.effect_size == 0.0);

  StatResult r = two_proportion_test(60, 100, 40, 100);
  CHECK(std::abs(*r.z - 2.828) < 0.001);
  CHECK(std::abs(*r.p_two_sided - 0.0047) < 0.0005);

  StatResult degenerate = two_proportion_test(100, 100, 0, 100);
  CHECK(degenerate.degenerate);
  CHECK_FALSE(degenerate.z.has_value());
  CHECK(*degenerate.effect_size == doctest::Approx(std::numbers::pi));

  CHECK_THROWS_AS(two_proportion_test(5, 4, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(two_proportion_test(0, 0, 0, 4), std::invalid_argument);
}

TEST_CASE("two-proportion z is exactly antisymmetric, h bounded") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::int64_t n1 = 1 + rng() % 50, n2 = 1 + rng() % 50;
    std::int64_t k1 = rng() % (n1 + 1), k2 = rng() % (n2 + 1);
    StatResult ab = two_proportion_test(k1, n1, k2, n2);
    StatResult ba = two_proportion_test(k2, n2, k1, n1);
    if (ab.z) {
      CHECK(*ab.z == -*ba.z);
      CHECK(*ab.p_two_sided == *ba.p_two_sided);
    } else {
      CHECK(ba.degenerate);
    }
    CHECK(*ab.effect_size == -*ba.effect_size);
    CHECK(std::abs(*ab.effect_size) <= std::numbers::pi + 1e-12);
  }
}

TEST_CASE("descriptive statistics per group") {
  Manifest manifest;
  for (const char* id : {"s1", "s2", "s3"}) {
    Speaker s;
    s.id = id;
    s.ethnicity_label = std::string(id) == "s3" ? "CA" : "AA";
    s.age = 30;
    manifest.speakers.push_back(s);
  }
  ScoreTable table;
  auto rate_cell = [](double rate) {
    Tally t;
    t.N = 100;
    t.S = static_cast<std::int64_t>(rate * 100);
    t.C = t.N - t.S;
    t.finish();
    return t;
  };
  table.cells[{"s1", "sys", MetricKind::WER}] = rate_cell(0.10);
  table.cells[{"s2", "sys", MetricKind::WER}] = rate_cell(0.20);
  table.cells[{"s3", "sys", MetricKind::WER}] = rate_cell(0.30);

  auto stats = descriptive(table, manifest);
  const GroupStat& aa = stats.at({"AA", "sys", MetricKind::WER});
  CHECK(aa.mean == doctest::Approx(0.15));
  CHECK(*aa.se == doctest::Approx(0.05));
  CHECK(aa.n == 2);
  const GroupStat& ca = stats.at({"CA", "sys", MetricKind::WER});
  CHECK(ca.mean == doctest::Approx(0.30));
  CHECK_FALSE(ca.se.has_value());  // single speaker: SE undefined
  CHECK(ca.n == 1);
}

TEST_CASE("a fully populated 4x4 design yields 16 cells per metric") {
  Manifest manifest;
  ScoreTable table;
  const char* groups[] = {"AA", "CA", "CX", "YA"};
  for (int g = 0; g < 4; ++g)
    for (int k = 0; k < 2; ++k) {
      Speaker s;
      s.id = std::string(groups[g]) + std::to_string(k);
      s.ethnicity_label = groups[g];
      s.age = 30;
      manifest.speakers.push_back(s);
      for (const char* sys : {"a", "b", "c", "d"}) {
        Tally t;
        t.N = 10;
        t.S = (g + k) % 3;
        t.C = t.N - t.S;
        t.finish();
        table.cells[{s.id, sys, MetricKind::WER}] = t;
      }
    }
  CHECK(descriptive(table, manifest).size() == 16);
}

TEST_CASE("suffstat REML criterion equals the dense-matrix route") {
  std::mt19937 rng(8080);
  LmmDesign design = simulate(rng, 12, 4, 0.15, 0.05, 0.02, 0.01);
  RemlProfile profile(design);
  for (double lambda : {0.0, 0.01, 0.5, 1.0, 4.0, 100.0}) {
    CHECK(profile.loglik(lambda) ==
          doctest::Approx(testing::dense_reml_loglik(design, lambda))
              .epsilon(1e-9));
  }
}

TEST_CASE("with no speaker effect the fit collapses to OLS") {
  std::mt19937 rng(2024);
  LmmDesign design = simulate(rng, 24, 4, 0.15, 0.05, /*sigma_b=*/0.0,
                              /*sigma_e=*/0.01);
  LmmFit fit = fit_lmm(design);
  std::vector<double> reference = ols(design);
  REQUIRE(fit.beta.size() == reference.size());
  for (std::size_t j = 0; j < reference.size(); ++j)
    CHECK(std::abs(fit.beta[j] - reference[j]) < 1e-8);
  CHECK(fit.sigma_b2 >= 0.0);
  CHECK(fit.converged);
}

TEST_CASE("golden-section optimum matches an exhaustive grid") {
  std::mt19937 rng(515);
  LmmDesign design = simulate(rng, 16, 4, 0.15, 0.05, 0.02, 0.01);
  // Unbalance the design a little: drop the last observation.
  design.response.pop_back();
  design.speaker.pop_back();
  design.design.resize(design.design.size() - design.cols());

  LmmFit fit = fit_lmm(design);
  RemlProfile profile(design);
  double best_grid = profile.loglik(0.0);
  for (double t = -12.0; t <= 12.0 + 1e-9; t += 1e-3) {
    best_grid = std::max(best_grid, profile.loglik(std::exp(t)));
    // Returned optimum dominates every grid point.
    CHECK(fit.reml_loglik >= profile.loglik(std::exp(t)) - 1e-9);
  }
  CHECK(std::abs(fit.reml_loglik - best_grid) < 1e-6);
}

TEST_CASE("simulation with known effects recovers beta within 3 Ses") {
  std::mt19937 rng(7);
  LmmDesign design = simulate(rng, 200, 4, 0.15, 0.05, 0.02, 0.01);
  LmmFit fit = fit_lmm(design);
  REQUIRE(fit.converged);
  CHECK(std::abs(fit.beta[0] - 0.15) <= 3.0 * fit.se[0]);
  CHECK(std::abs(fit.beta[1] - 0.05) <= 3.0 * fit.se[1]);
  // Variance components land in the right order of magnitude.
  CHECK(fit.sigma_b2 == doctest::Approx(0.02 * 0.02).epsilon(0.5));
  CHECK(fit.sigma_e2 == doctest::Approx(0.01 * 0.01).epsilon(0.5));
}

TEST_CASE("fit is invariant to observation order") {
  std::mt19937 rng(99);
  LmmDesign design = simulate(rng, 10, 3, 0.2, 0.03, 0.05, 0.02);
  LmmFit fit = fit_lmm(design);

  // Reverse all observation rows.
  LmmDesign reversed;
  reversed.column_names = design.column_names;
  const std::size_t n = design.rows(), p = design.cols();
  for (std::size_t i = n; i-- > 0;) {
    reversed.response.push_back(design.response[i]);
    reversed.speaker.push_back(design.speaker[i]);
    for (std::size_t j = 0; j < p; ++j)
      reversed.design.push_back(design.x(i, j));
  }
  LmmFit fit2 = fit_lmm(reversed);
  for (std::size_t j = 0; j < p; ++j) {
    CHECK(fit.beta[j] == doctest::Approx(fit2.beta[j]).epsilon(1e-10));
    CHECK(fit.se[j] == doctest::Approx(fit2.se[j]).epsilon(1e-10));
  }
  CHECK(fit.sigma_b2 == doctest::Approx(fit2.sigma_b2).epsilon(1e-8));
}

TEST_CASE("degenerate designs are rejected") {
  LmmDesign design;
  design.column_names = {"(intercept)"};
  design.response = {1.0, 2.0};
  design.design = {1.0, 1.0};
  design.speaker = {"s1", "s1"};
  CHECK_THROWS_AS(fit_lmm(design), std::invalid_argument);  // one speaker

  LmmDesign singletons;
  singletons.column_names = {"(intercept)"};
  singletons.response = {1.0, 2.0, 3.0};
  singletons.design = {1.0, 1.0, 1.0};
  singletons.speaker = {"a", "b", "c"};
  CHECK_THROWS_AS(fit_lmm(singletons), std::invalid_argument);  // no repeats

  std::mt19937 rng(3);
  LmmDesign rank_deficient = simulate(rng, 8, 2, 0.1, 0.0, 0.01, 0.01);
  // Duplicate the group column to break full rank.
  LmmDesign broken;
  broken.column_names = rank_deficient.column_names;
  broken.column_names.push_back("dup");
  for (std::size_t i = 0; i < rank_deficient.rows(); ++i) {
    broken.response.push_back(rank_deficient.response[i]);
    broken.speaker.push_back(rank_deficient.speaker[i]);
    for (std::size_t j = 0; j < rank_deficient.cols(); ++j)
      broken.design.push_back(rank_deficient.x(i, j));
    broken.design.push_back(rank_deficient.x(i, 1));
  }
  CHECK_THROWS_AS(fit_lmm(broken), std::invalid_argument);
}

TEST_CASE("build_lmm_design drops reference levels and stays full rank") {
  Manifest manifest;
  const char* groups[] = {"AA", "CA"};
  ScoreTable table;
  for (int g = 0; g < 2; ++g)
    for (int k = 0; k < 3; ++k) {
      Speaker s;
      s.id = std::string(groups[g]) + std::to_string(k);
      s.ethnicity_label = groups[g];
      s.age = 30;
      manifest.speakers.push_back(s);
      for (const char* sys : {"apple", "google"}) {
        Tally t;
        t.N = 10;
        t.S = (g * 3 + k) % 4;
        t.C = t.N - t.S;
        t.finish();
        table.cells[{s.id, sys, MetricKind::WER}] = t;
      }
    }
  LmmDesign design = build_lmm_design(table, MetricKind::WER, manifest);
  CHECK(design.column_names ==
        std::vector<std::string>{"(intercept)", "ethnicity:AA",
                                 "system:google"});
  CHECK(design.rows() == 12);
  LmmFit fit = fit_lmm(design);
  CHECK(fit.converged);
}

TEST_CASE("compute_stats assembles the battery and round-trips as JSON") {
  Manifest manifest;
  const char* groups[] = {"AA", "CA"};
  ScoreTable table;
  table.manifest_digest = "d1";
  std::mt19937 rng(55);
  for (int g = 0; g < 2; ++g)
    for (int k = 0; k < 4; ++k) {
      Speaker s;
      s.id = std::string(groups[g]) + std::to_string(k);
      s.ethnicity_label = groups[g];
      s.age = 30;
      manifest.speakers.push_back(s);
      for (const char* sys : {"apple", "google"}) {
        Tally t;
        t.N = 50;
        t.S = static_cast<std::int64_t>(rng() % 12) + (g == 0 ? 5 : 0);
        t.C = t.N - t.S;
        t.finish();
        table.cells[{s.id, sys, MetricKind::WER}] = t;
      }
    }

  CooccurrenceTable cooc;
  cooc.manifest_digest = "d1";
  cooc.cells[{"AA", "apple", Marker::LowBackMerger}] = {6, 103, 13, 1854};
  cooc.cells[{"CA", "apple", Marker::LowBackMerger}] = {5, 96, 12, 1218};
  cooc.cells[{"AA", "apple", Marker::PreLateralFront}] = {0, 0, 0, 1854};
  cooc.cells[{"CA", "apple", Marker::PreLateralFront}] = {0, 0, 0, 1218};

  StatsOptions options;
  options.lmm_per = false;
  StatsArtifact stats = compute_stats(table, &cooc, manifest, options);

  CHECK(stats.descriptive.size() == 4);
  REQUIRE(stats.lmm.size() == 1);
  CHECK(stats.lmm[0].metric == MetricKind::WER);
  REQUIRE(stats.lmm[0].tests.size() == 1);
  CHECK(stats.lmm[0].tests[0].coefficient == "ethnicity:AA");

  // Proportion tests only where both sides have contexts.
  REQUIRE(stats.proportions.size() == 1);
  CHECK(stats.proportions[0].marker == Marker::LowBackMerger);
  CHECK(stats.proportions[0].k1 == 6);
  CHECK(stats.proportions[0].n2 == 96);

  StatsArtifact parsed = stats_from_json(to_json_string(stats));
  CHECK(parsed == stats);
}
