#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "finmwe/econ.hpp"
#include "testutil.hpp"

using namespace finmwe;

namespace {

// Synthetic 3-class data from known coefficients.
struct Synthetic {
  Eigen::MatrixXd x;
  Eigen::VectorXi y;
};

Synthetic make_synthetic(std::mt19937_64& rng, int n, int p,
                         const Eigen::VectorXd& theta) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Synthetic s;
  s.x.resize(n, p);
  s.y.resize(n);
  const int d = p + 1;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xt(d);
    xt(0) = 1.0;
    for (int j = 0; j < p; ++j) {
      s.x(i, j) = normal(rng);
      xt(j + 1) = s.x(i, j);
    }
    double en = xt.dot(theta.segment(0, d));
    double ep = xt.dot(theta.segment(d, d));
    double zn = std::exp(en), zp = std::exp(ep);
    double z = 1.0 + zn + zp;
    double u = unif(rng);
    s.y(i) = u < zn / z ? -1 : (u < (zn + zp) / z ? 1 : 0);
  }
  return s;
}

const char* kEarningsCsv =
    "company_id,fiscal_year,earnings,lag_sue,bm,roe,accruals,size,dividend,"
    "z_score,asset_growth\n"
    "acme,1996,1.0,0.1,0.5,0.12,0.0,5.1,0.02,2.5,0.04\n"
    "acme,1997,2.0,0.2,0.5,0.13,0.1,5.2,0.02,2.6,0.05\n"
    "acme,1998,4.0,0.3,0.4,0.14,0.1,5.3,0.02,2.7,0.06\n"
    "acme,1999,3.0,-0.4,0.4,0.10,0.0,5.4,0.02,2.4,0.02\n"
    "bolt,1996,2.0,0.0,0.7,0.08,0.0,4.1,0.00,1.9,0.01\n"
    "bolt,1997,2.5,0.1,0.7,0.09,0.1,4.2,0.00,2.0,0.02\n"
    "bolt,1998,1.5,0.1,0.6,0.07,0.1,4.3,0.00,,0.01\n"
    "bolt,1999,3.5,0.2,0.6,0.11,0.0,4.4,0.00,2.1,0.03\n";

}  // namespace

TEST_SUITE("econ") {

TEST_CASE("compute_sue matches the hand calculation") {
  auto sue = econ::compute_sue({1, 2, 4, 3});
  REQUIRE(sue.size() == 4);
  CHECK_FALSE(sue[0].has_value());
  CHECK(*sue[3] == doctest::Approx(-1.0911).epsilon(1e-4));
  // mu = 2/3, sd = sqrt(21/9)
  CHECK(*sue[1] == doctest::Approx((1.0 - 2.0 / 3.0) / std::sqrt(21.0 / 9.0)));
}

TEST_CASE("constant-increment series is degenerate") {
  CHECK_THROWS_AS(econ::compute_sue({1, 2, 3, 4}), econ::DegenerateSeries);
  CHECK_THROWS_AS(econ::compute_sue({1, 2}), econ::DegenerateSeries);
}

TEST_CASE("compute_sue is shift invariant and scale equivariant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> e;
    for (int k = 0; k < 6; ++k) e.push_back(normal(rng));
    std::vector<double> shifted, scaled;
    for (double v : e) shifted.push_back(v + 17.5);
    for (double v : e) scaled.push_back(v * 3.25);
    std::vector<std::optional<double>> a, b, c;
    try {
      a = econ::compute_sue(e);
    } catch (const econ::DegenerateSeries&) {
      continue;
    }
    b = econ::compute_sue(shifted);
    c = econ::compute_sue(scaled);
    for (std::size_t t = 1; t < e.size(); ++t) {
      CHECK(*b[t] == doctest::Approx(*a[t]).epsilon(1e-10));
      CHECK(*c[t] == doctest::Approx(*a[t]).epsilon(1e-10));
    }
  }
}

TEST_CASE("categorize uses strict thresholds") {
  CHECK(econ::categorize(1.2, 0.5) == 1);
  CHECK(econ::categorize(0.5, 0.5) == 0);
  CHECK(econ::categorize(-0.5, 0.5) == 0);
  CHECK(econ::categorize(-0.7, 1.0) == 0);
  CHECK(econ::categorize(-0.51, 0.5) == -1);
  CHECK_THROWS_AS(econ::categorize(0.0, 0.0), Error);
}

TEST_CASE("earnings CSV loads with missing values and rejects duplicates") {
  std::istringstream in(kEarningsCsv);
  auto rows = econ::load_earnings_csv(in);
  REQUIRE(rows.size() == 8);
  CHECK_FALSE(rows[6].controls.at("z_score").has_value());
  CHECK(*rows[0].controls.at("bm") == doctest::Approx(0.5));

  std::string dup = std::string(kEarningsCsv) +
                    "acme,1996,9,0,0,0,0,0,0,0,0\n";
  std::istringstream in2(dup);
  CHECK_THROWS_AS(econ::load_earnings_csv(in2), econ::DuplicateKey);
}

TEST_CASE("merge joins filings with earnings and drops missing rows") {
  std::istringstream in(kEarningsCsv);
  auto rows = econ::load_earnings_csv(in);
  std::vector<std::pair<std::string, int>> filings = {
      {"acme", 1998}, {"acme", 1999}, {"bolt", 1998},
      {"bolt", 1999}, {"cork", 1998},
  };
  econ::MergeStats stats;
  auto panel = econ::merge_firm_years(filings, rows, &stats);
  // acme 1998/1999 fine; bolt 1998 misses z_score; bolt 1999 fine;
  // cork unmatched.
  REQUIRE(panel.size() == 3);
  CHECK(stats.matched == 3);
  CHECK(stats.dropped_missing_controls == 1);
  CHECK(stats.unmatched_filings == 1);
  CHECK(panel[0].company_id == "acme");
  CHECK(panel[0].sue == doctest::Approx(1.0911).epsilon(1e-4));
}

TEST_CASE("design matrix stacks controls then MWE weights") {
  std::istringstream in(kEarningsCsv);
  auto rows = econ::load_earnings_csv(in);
  std::vector<std::pair<std::string, int>> filings = {{"acme", 1998},
                                                      {"acme", 1999}};
  auto panel = econ::merge_firm_years(filings, rows);
  econ::WeightMatrix w;
  w.mwe_names = {"could be adversely", "will be successful"};
  w.rows["acme_1998"] = {0.4, 0.0};
  w.rows["acme_1999"] = {0.1, 0.9};

  SUBCASE("no MWEs selected leaves controls only") {
    auto d = econ::design_matrix(panel, w, {}, 0.5);
    CHECK(d.x.cols() == 8);
    CHECK(d.column_names.size() == 8);
  }
  SUBCASE("selected MWEs append columns in order") {
    auto d = econ::design_matrix(panel, w, {"will be successful"}, 0.5);
    CHECK(d.x.cols() == 9);
    CHECK(d.column_names.back() == "will be successful");
    CHECK(d.x(0, 8) == doctest::Approx(0.0));
    CHECK(d.x(1, 8) == doctest::Approx(0.9));
    CHECK(d.y(0) == 1);
    CHECK(d.y(1) == -1);
  }
  SUBCASE("absent document raises AlignmentError") {
    econ::WeightMatrix partial;
    partial.mwe_names = {"x"};
    partial.rows["acme_1998"] = {0.0};
    CHECK_THROWS_AS(econ::design_matrix(panel, partial, {"x"}, 0.5),
                    econ::AlignmentError);
  }
  SUBCASE("unknown MWE raises AlignmentError") {
    CHECK_THROWS_AS(econ::design_matrix(panel, w, {"missing"}, 0.5),
                    econ::AlignmentError);
  }
}

TEST_CASE("intercept-only balanced fit returns zero intercepts") {
  Eigen::MatrixXd x(30, 0);
  Eigen::VectorXi y(30);
  for (int i = 0; i < 30; ++i) y(i) = (i % 3) - 1;
  auto fit = econ::fit_mlogit(x, y);
  CHECK(std::abs(fit.beta_neg(0)) < 1e-10);
  CHECK(std::abs(fit.beta_pos(0)) < 1e-10);
  CHECK(fit.gradient_norm < 1e-8);
  // Unbalanced intercept-only fit has the closed form ln(n_c / n_0).
  Eigen::VectorXi y2(40);
  for (int i = 0; i < 40; ++i) y2(i) = i < 20 ? 0 : (i < 30 ? -1 : 1);
  auto fit2 = econ::fit_mlogit(Eigen::MatrixXd(40, 0), y2);
  CHECK(fit2.beta_neg(0) == doctest::Approx(std::log(10.0 / 20.0)).epsilon(1e-8));
  CHECK(fit2.beta_pos(0) == doctest::Approx(std::log(10.0 / 20.0)).epsilon(1e-8));
}

TEST_CASE("probabilities sum to one and the gradient vanishes") {
  std::mt19937_64 rng(21);
  Eigen::VectorXd theta(6);
  theta << 0.2, -0.8, 0.5, -0.3, 0.6, -0.9;
  auto data = make_synthetic(rng, 200, 2, theta);
  auto fit = econ::fit_mlogit(data.x, data.y);
  CHECK(fit.gradient_norm < 1e-8);
  auto probs = econ::mlogit_probabilities(fit, data.x);
  for (int i = 0; i < probs.rows(); ++i)
    CHECK(std::abs(probs.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("coefficients match the slow gradient-ascent oracle") {
  std::mt19937_64 rng(22);
  Eigen::VectorXd theta(6);
  theta << 0.1, 0.7, -0.5, -0.2, -0.6, 0.8;
  auto data = make_synthetic(rng, 300, 2, theta);
  auto fit = econ::fit_mlogit(data.x, data.y);
  Eigen::VectorXd slow = testutil::slow_mlogit(data.x, data.y, 1e-3, 400000);
  Eigen::VectorXd newton(6);
  newton << fit.beta_neg, fit.beta_pos;
  CHECK((newton - slow).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("relabeling the base category leaves probabilities unchanged") {
  // Transform: with base 0 parameters (t_n, t_p), the same distribution with
  // base -1 has equations 0: -t_n and +1: t_p - t_n.
  std::mt19937_64 rng(23);
  Eigen::VectorXd theta(6);
  theta << 0.3, -0.4, 0.2, 0.1, 0.5, -0.7;
  auto data = make_synthetic(rng, 400, 2, theta);
  auto fit = econ::fit_mlogit(data.x, data.y);

  // Refit with labels renamed so category -1 plays the base.
  Eigen::VectorXi y2(data.y.size());
  for (int i = 0; i < data.y.size(); ++i) {
    // old -1 -> new 0, old 0 -> new -1, old +1 stays.
    y2(i) = data.y(i) == -1 ? 0 : data.y(i) == 0 ? -1 : 1;
  }
  auto fit2 = econ::fit_mlogit(data.x, y2);
  Eigen::VectorXd neg_expected = -fit.beta_neg;
  Eigen::VectorXd pos_expected = fit.beta_pos - fit.beta_neg;
  CHECK((fit2.beta_neg - neg_expected).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK((fit2.beta_pos - pos_expected).lpNorm<Eigen::Infinity>() < 1e-6);

  auto p1 = econ::mlogit_probabilities(fit, data.x);
  auto p2 = econ::mlogit_probabilities(fit2, data.x);
  for (int i = 0; i < p1.rows(); ++i) {
    CHECK(std::abs(p1(i, 0) - p2(i, 1)) < 1e-10);  // old -1 is new base 0
    CHECK(std::abs(p1(i, 1) - p2(i, 0)) < 1e-10);
    CHECK(std::abs(p1(i, 2) - p2(i, 2)) < 1e-10);
  }
}

TEST_CASE("rank deficiency and degenerate layouts are rejected") {
  Eigen::MatrixXd x(12, 2);
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;  // collinear
  }
  Eigen::VectorXi y(12);
  for (int i = 0; i < 12; ++i) y(i) = (i % 3) - 1;
  CHECK_THROWS_AS(econ::fit_mlogit(x, y), econ::RankDeficient);

  // One observation per class cannot support 2(p+1) parameters.
  Eigen::MatrixXd x2(3, 2);
  x2 << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  Eigen::VectorXi y2(3);
  y2 << -1, 0, 1;
  CHECK_THROWS_AS(econ::fit_mlogit(x2, y2), econ::RankDeficient);
}

TEST_CASE("separated data is reported as such") {
  Eigen::MatrixXd x(30, 1);
  Eigen::VectorXi y(30);
  for (int i = 0; i < 30; ++i) {
    double v = (i - 15) / 4.0;
    x(i, 0) = v;
    y(i) = v > 0 ? 1 : (v < -1.0 ? -1 : 0);
  }
  CHECK_THROWS_AS(econ::fit_mlogit(x, y), econ::Separation);
}

TEST_CASE("sandwich covariance matches the direct matrix oracle") {
  // Ten-row fixture.
  Eigen::MatrixXd x(10, 1);
  x << -1.2, -0.8, -0.4, -0.1, 0.0, 0.2, 0.5, 0.7, 1.1, 1.4;
  Eigen::VectorXi y(10);
  y << -1, 0, 0, -1, 1, 0, 1, 0, -1, 1;
  auto fit = econ::fit_mlogit(x, y);

  // Oracle: rebuild probabilities, scores, A and B from scratch.
  const int d = 2;
  Eigen::MatrixXd xt(10, d);
  xt.col(0).setOnes();
  xt.col(1) = x.col(0);
  Eigen::VectorXd theta(2 * d);
  theta << fit.beta_neg, fit.beta_pos;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  for (int i = 0; i < 10; ++i) {
    double en = xt.row(i).dot(theta.segment(0, d));
    double ep = xt.row(i).dot(theta.segment(d, d));
    double z = 1 + std::exp(en) + std::exp(ep);
    double pn = std::exp(en) / z, pp = std::exp(ep) / z;
    Eigen::MatrixXd outer = xt.row(i).transpose() * xt.row(i);
    a.block(0, 0, d, d) += pn * (1 - pn) * outer;
    a.block(d, d, d, d) += pp * (1 - pp) * outer;
    a.block(0, d, d, d) -= pn * pp * outer;
    a.block(d, 0, d, d) -= pn * pp * outer;
    Eigen::VectorXd s(2 * d);
    s.segment(0, d) = ((y(i) == -1 ? 1.0 : 0.0) - pn) * xt.row(i).transpose();
    s.segment(d, d) = ((y(i) == 1 ? 1.0 : 0.0) - pp) * xt.row(i).transpose();
    b += s * s.transpose();
  }
  Eigen::MatrixXd oracle = a.inverse() * b * a.inverse();
  CHECK((fit.cov_sandwich - oracle).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((econ::sandwich_cov(fit, x, y) - oracle).lpNorm<Eigen::Infinity>() <
        1e-10);
}

TEST_CASE("sandwich approaches the model covariance when well specified") {
  std::mt19937_64 rng(24);
  Eigen::VectorXd theta(4);
  theta << 0.2, 0.6, -0.1, -0.5;
  auto data = make_synthetic(rng, 5000, 1, theta);
  auto fit = econ::fit_mlogit(data.x, data.y);
  double rel = (fit.cov_sandwich - fit.cov_model).norm() / fit.cov_model.norm();
  CHECK(rel < 0.1);
}

TEST_CASE("wald p-values from both covariance flavors") {
  std::mt19937_64 rng(25);
  Eigen::VectorXd theta(4);
  theta << 0.4, 0.9, -0.2, -0.8;
  auto data = make_synthetic(rng, 500, 1, theta);
  auto fit = econ::fit_mlogit(data.x, data.y);
  for (auto flavor : {econ::CovFlavor::Model, econ::CovFlavor::Sandwich}) {
    auto p = econ::wald_p(fit, flavor);
    const Eigen::MatrixXd& cov = flavor == econ::CovFlavor::Model
                                     ? fit.cov_model
                                     : fit.cov_sandwich;
    Eigen::VectorXd th(4);
    th << fit.beta_neg, fit.beta_pos;
    for (int k = 0; k < 4; ++k) {
      double z = th(k) / std::sqrt(cov(k, k));
      CHECK(p(k) == doctest::Approx(testutil::two_sided_p_oracle(z))
                        .epsilon(1e-9));
      CHECK(p(k) >= 0.0);
      CHECK(p(k) <= 1.0);
    }
  }
}

TEST_CASE("normal p-value reference points") {
  CHECK(econ::normal_two_sided_p(0.0) == doctest::Approx(1.0));
  CHECK(econ::normal_two_sided_p(1.96) == doctest::Approx(0.05).epsilon(0.02));
  CHECK(econ::normal_two_sided_p(1.959964) ==
        doctest::Approx(0.05).epsilon(1e-4));
}

TEST_CASE("rank table is total over all nine combinations") {
  using econ::Rank;
  using econ::Sig;
  struct Row {
    Sig neg, pos;
    Rank want;
  };
  const Row rows[] = {
      {Sig::Plus, Sig::Minus, Rank::First},
      {Sig::Minus, Sig::Plus, Rank::First},
      {Sig::Plus, Sig::NSS, Rank::Second},
      {Sig::NSS, Sig::Plus, Rank::Second},
      {Sig::Minus, Sig::NSS, Rank::Third},
      {Sig::NSS, Sig::Minus, Rank::Third},
      {Sig::Plus, Sig::Plus, Rank::Fourth},
      {Sig::Minus, Sig::Minus, Rank::Fourth},
      {Sig::NSS, Sig::NSS, Rank::Fifth},
  };
  int covered = 0;
  for (const auto& r : rows) {
    CHECK(econ::rank_from_sig(r.neg, r.pos) == r.want);
    ++covered;
  }
  CHECK(covered == 9);
}

TEST_CASE("rank_mwe reproduces the published example rows") {
  CHECK(econ::rank_mwe(11.19, 0.015, -1.931, 0.708) == econ::Rank::Second);
  CHECK(econ::rank_mwe(-3.568, 0.325, -10.53, 0.020) == econ::Rank::Third);
  CHECK(econ::rank_mwe(-0.984, 0.712, 2.222, 0.314) == econ::Rank::Fifth);
  CHECK(std::string(econ::rank_name(econ::Rank::Second)) == "2nd");
}

}  // TEST_SUITE
