#include "finmwe/econ.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace finmwe::econ {

const std::vector<std::string>& control_names() {
  static const std::vector<std::string> names = {
      "lag_sue", "bm",       "roe",     "accruals",
      "size",    "dividend", "z_score", "asset_growth"};
  return names;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<EarningsRow> load_earnings_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw BadEarningsFile("empty earnings file");
  auto header = split_csv_line(line);
  std::map<std::string, int> col;
  for (int k = 0; k < static_cast<int>(header.size()); ++k) col[header[k]] = k;
  for (const char* required : {"company_id", "fiscal_year", "earnings"})
    if (!col.count(required))
      throw BadEarningsFile(std::string("missing column: ") + required);
  for (const auto& c : control_names())
    if (!col.count(c)) throw BadEarningsFile("missing control column: " + c);

  std::vector<EarningsRow> rows;
  std::set<std::pair<std::string, int>> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw BadEarningsFile("line " + std::to_string(lineno) +
                            ": wrong field count");
    EarningsRow r;
    r.company_id = f[col["company_id"]];
    try {
      r.fiscal_year = std::stoi(f[col["fiscal_year"]]);
      r.earnings = std::stod(f[col["earnings"]]);
    } catch (...) {
      throw BadEarningsFile("line " + std::to_string(lineno) +
                            ": bad numeric field");
    }
    if (!seen.insert({r.company_id, r.fiscal_year}).second)
      throw DuplicateKey(r.company_id + "/" + std::to_string(r.fiscal_year));
    for (const auto& c : control_names()) {
      const std::string& v = f[col[c]];
      if (v.empty())
        r.controls[c] = std::nullopt;
      else
        try {
          r.controls[c] = std::stod(v);
        } catch (...) {
          throw BadEarningsFile("line " + std::to_string(lineno) + ": bad " +
                                c);
        }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<EarningsRow> load_earnings_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open earnings file: " + path);
  return load_earnings_csv(in);
}

std::vector<std::optional<double>> compute_sue(
    const std::vector<double>& earnings) {
  const std::size_t t_count = earnings.size();
  if (t_count < 3)
    throw DegenerateSeries("need at least 3 years of earnings");
  std::vector<double> ue(t_count - 1);
  for (std::size_t t = 1; t < t_count; ++t) ue[t - 1] = earnings[t] - earnings[t - 1];
  double mean = 0;
  for (double u : ue) mean += u;
  mean /= static_cast<double>(ue.size());
  double ss = 0;
  for (double u : ue) ss += (u - mean) * (u - mean);
  double sd = std::sqrt(ss / static_cast<double>(ue.size() - 1));
  if (sd == 0.0) throw DegenerateSeries("unexpected earnings have zero variance");

  std::vector<std::optional<double>> sue(t_count);
  for (std::size_t t = 1; t < t_count; ++t)
    sue[t] = (ue[t - 1] - mean) / sd;
  return sue;
}

int categorize(double sue, double tau) {
  if (!(tau > 0)) throw Error("tau must be positive");
  if (sue > tau) return 1;
  if (sue < -tau) return -1;
  return 0;
}

std::vector<FirmYear> merge_firm_years(
    const std::vector<std::pair<std::string, int>>& filing_keys,
    const std::vector<EarningsRow>& earnings, MergeStats* stats,
    const std::vector<std::string>& controls) {
  std::map<std::pair<std::string, int>, const EarningsRow*> by_key;
  std::map<std::string, std::vector<const EarningsRow*>> by_firm;
  for (const auto& r : earnings) {
    auto key = std::make_pair(r.company_id, r.fiscal_year);
    if (!by_key.emplace(key, &r).second)
      throw DuplicateKey(r.company_id + "/" + std::to_string(r.fiscal_year));
    by_firm[r.company_id].push_back(&r);
  }
  // SUE per firm from its year-ordered earnings series.
  std::map<std::pair<std::string, int>, double> sue_by_key;
  for (auto& [firm, rows] : by_firm) {
    std::sort(rows.begin(), rows.end(),
              [](const EarningsRow* a, const EarningsRow* b) {
                return a->fiscal_year < b->fiscal_year;
              });
    std::vector<double> series;
    for (const auto* r : rows) series.push_back(r->earnings);
    try {
      auto sue = compute_sue(series);
      for (std::size_t k = 0; k < rows.size(); ++k)
        if (sue[k]) sue_by_key[{firm, rows[k]->fiscal_year}] = *sue[k];
    } catch (const DegenerateSeries&) {
      // whole firm marked missing
    }
  }

  MergeStats local;
  std::vector<FirmYear> panel;
  for (const auto& [company, year] : filing_keys) {
    auto it = by_key.find({company, year});
    if (it == by_key.end()) {
      ++local.unmatched_filings;
      continue;
    }
    const EarningsRow& row = *it->second;
    auto sue_it = sue_by_key.find({company, year});
    if (sue_it == sue_by_key.end()) {
      ++local.dropped_missing_sue;
      continue;
    }
    FirmYear fy;
    fy.company_id = company;
    fy.fiscal_year = year;
    fy.earnings = row.earnings;
    fy.sue = sue_it->second;
    bool missing = false;
    for (const auto& c : controls) {
      auto cit = row.controls.find(c);
      if (cit == row.controls.end() || !cit->second) {
        missing = true;
        break;
      }
      fy.controls[c] = *cit->second;
    }
    if (missing) {
      ++local.dropped_missing_controls;
      continue;
    }
    ++local.matched;
    panel.push_back(std::move(fy));
  }
  if (stats) *stats = local;
  return panel;
}

Design design_matrix(const std::vector<FirmYear>& panel,
                     const WeightMatrix& weights,
                     const std::vector<std::string>& selected_mwes,
                     double tau, const std::vector<std::string>& controls) {
  std::vector<int> mwe_cols;
  for (const auto& name : selected_mwes) {
    auto it = std::find(weights.mwe_names.begin(), weights.mwe_names.end(),
                        name);
    if (it == weights.mwe_names.end())
      throw AlignmentError("selected MWE absent from weight matrix: " + name);
    mwe_cols.push_back(static_cast<int>(it - weights.mwe_names.begin()));
  }

  Design d;
  const int n = static_cast<int>(panel.size());
  const int p = static_cast<int>(controls.size() + selected_mwes.size());
  d.x.resize(n, p);
  d.y.resize(n);
  d.column_names = controls;
  d.column_names.insert(d.column_names.end(), selected_mwes.begin(),
                        selected_mwes.end());

  for (int i = 0; i < n; ++i) {
    const FirmYear& fy = panel[i];
    int c = 0;
    for (const auto& name : controls) d.x(i, c++) = fy.controls.at(name);
    if (!mwe_cols.empty()) {
      std::string doc = fy.company_id + "_" + std::to_string(fy.fiscal_year);
      auto it = weights.rows.find(doc);
      if (it == weights.rows.end())
        throw AlignmentError("document absent from weight matrix: " + doc);
      for (int mc : mwe_cols) d.x(i, c++) = it->second[mc];
    }
    d.y(i) = categorize(fy.sue, tau);
  }
  return d;
}

namespace {

// eta columns: 0 -> Y=-1, 1 -> Y=+1; probabilities vs the base category 0.
Eigen::MatrixXd probabilities(const Eigen::MatrixXd& xt,
                              const Eigen::VectorXd& theta) {
  const int n = static_cast<int>(xt.rows());
  const int d = static_cast<int>(xt.cols());
  Eigen::MatrixXd probs(n, 3);
  for (int i = 0; i < n; ++i) {
    double eta_neg = xt.row(i).dot(theta.segment(0, d));
    double eta_pos = xt.row(i).dot(theta.segment(d, d));
    double m = std::max({0.0, eta_neg, eta_pos});
    double z0 = std::exp(0.0 - m);
    double zn = std::exp(eta_neg - m);
    double zp = std::exp(eta_pos - m);
    double z = z0 + zn + zp;
    probs(i, 0) = zn / z;
    probs(i, 1) = z0 / z;
    probs(i, 2) = zp / z;
  }
  return probs;
}

double log_likelihood(const Eigen::MatrixXd& probs, const Eigen::VectorXi& y) {
  double ll = 0;
  for (int i = 0; i < y.size(); ++i) {
    int cls = y(i) < 0 ? 0 : y(i) == 0 ? 1 : 2;
    ll += std::log(probs(i, cls));
  }
  return ll;
}

// Score vector (gradient of the log-likelihood) per observation, stacked
// [neg-equation, pos-equation].
Eigen::VectorXd observation_score(const Eigen::MatrixXd& xt,
                                  const Eigen::MatrixXd& probs,
                                  const Eigen::VectorXi& y, int i) {
  const int d = static_cast<int>(xt.cols());
  Eigen::VectorXd s(2 * d);
  double ind_neg = y(i) == -1 ? 1.0 : 0.0;
  double ind_pos = y(i) == 1 ? 1.0 : 0.0;
  s.segment(0, d) = (ind_neg - probs(i, 0)) * xt.row(i).transpose();
  s.segment(d, d) = (ind_pos - probs(i, 2)) * xt.row(i).transpose();
  return s;
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& xt,
                         const Eigen::MatrixXd& probs,
                         const Eigen::VectorXi& y) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * xt.cols());
  for (int i = 0; i < y.size(); ++i) g += observation_score(xt, probs, y, i);
  return g;
}

// Observed information A = -Hessian of the log-likelihood.
Eigen::MatrixXd information(const Eigen::MatrixXd& xt,
                            const Eigen::MatrixXd& probs) {
  const int d = static_cast<int>(xt.cols());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  for (int i = 0; i < xt.rows(); ++i) {
    Eigen::MatrixXd outer = xt.row(i).transpose() * xt.row(i);
    double pn = probs(i, 0), pp = probs(i, 2);
    a.block(0, 0, d, d) += pn * (1 - pn) * outer;
    a.block(d, d, d, d) += pp * (1 - pp) * outer;
    a.block(0, d, d, d) += -pn * pp * outer;
    a.block(d, 0, d, d) += -pn * pp * outer;
  }
  return a;
}

}  // namespace

MlogitFit fit_mlogit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                     int max_iterations) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  if (y.size() != n) throw AlignmentError("x and y row counts differ");
  for (int i = 0; i < n; ++i)
    if (y(i) < -1 || y(i) > 1) throw Error("y must be in {-1, 0, +1}");

  Eigen::MatrixXd xt(n, p + 1);
  xt.col(0).setOnes();
  if (p > 0) xt.rightCols(p) = x;
  const int d = p + 1;
  if (n <= 2 * d) throw RankDeficient("need more rows than parameters");
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xt);
    if (qr.rank() < d)
      throw RankDeficient("design matrix is rank deficient");
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2 * d);
  Eigen::MatrixXd probs = probabilities(xt, theta);
  double ll = log_likelihood(probs, y);

  MlogitFit fit;
  constexpr double kTol = 1e-8;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    Eigen::VectorXd g = gradient(xt, probs, y);
    if (g.lpNorm<Eigen::Infinity>() < kTol) break;
    Eigen::MatrixXd a = information(xt, probs);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success)
      throw SingularInformation("information matrix not factorizable");
    Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite())
      throw SingularInformation("singular information matrix");

    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      Eigen::VectorXd cand = theta + scale * step;
      Eigen::MatrixXd cand_probs = probabilities(xt, cand);
      double cand_ll = log_likelihood(cand_probs, y);
      if (std::isfinite(cand_ll) && cand_ll >= ll - 1e-12) {
        theta = cand;
        probs = cand_probs;
        ll = cand_ll;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }

  Eigen::VectorXd g = gradient(xt, probs, y);
  double gnorm = g.lpNorm<Eigen::Infinity>();
  // Under separation the coefficients diverge while the gradient saturates
  // toward zero, so the magnitude check comes first.
  int worst = 0;
  theta.cwiseAbs().maxCoeff(&worst);
  if (theta.cwiseAbs().maxCoeff() > 30.0) {
    int col = worst % d;
    throw Separation("likelihood appears unbounded in column " +
                     std::to_string(col) + (col == 0 ? " (intercept)" : ""));
  }
  if (gnorm >= kTol)
    throw Error("mlogit did not converge (gradient norm " +
                std::to_string(gnorm) + ")");

  fit.beta_neg = theta.segment(0, d);
  fit.beta_pos = theta.segment(d, d);
  fit.loglik = ll;
  fit.iterations = iter;
  fit.gradient_norm = gnorm;

  Eigen::MatrixXd a = information(xt, probs);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw SingularInformation("information matrix not factorizable");
  Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2 * d, 2 * d);
  fit.cov_model = ldlt.solve(identity);
  if (!fit.cov_model.allFinite())
    throw SingularInformation("information matrix not invertible");

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s = observation_score(xt, probs, y, i);
    b += s * s.transpose();
  }
  fit.cov_sandwich = fit.cov_model * b * fit.cov_model;
  return fit;
}

Eigen::MatrixXd mlogit_probabilities(const MlogitFit& fit,
                                     const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  const int d = fit.dim();
  Eigen::MatrixXd xt(n, d);
  xt.col(0).setOnes();
  if (d > 1) xt.rightCols(d - 1) = x;
  Eigen::VectorXd theta(2 * d);
  theta << fit.beta_neg, fit.beta_pos;
  return probabilities(xt, theta);
}

Eigen::MatrixXd sandwich_cov(const MlogitFit& fit, const Eigen::MatrixXd& x,
                             const Eigen::VectorXi& y) {
  const int n = static_cast<int>(x.rows());
  const int d = fit.dim();
  Eigen::MatrixXd xt(n, d);
  xt.col(0).setOnes();
  if (d > 1) xt.rightCols(d - 1) = x;
  Eigen::VectorXd theta(2 * d);
  theta << fit.beta_neg, fit.beta_pos;
  Eigen::MatrixXd probs = probabilities(xt, theta);

  Eigen::MatrixXd a = information(xt, probs);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw SingularInformation("information matrix not factorizable");
  Eigen::MatrixXd ainv =
      ldlt.solve(Eigen::MatrixXd::Identity(2 * d, 2 * d));
  if (!ainv.allFinite())
    throw SingularInformation("information matrix not invertible");
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s = observation_score(xt, probs, y, i);
    b += s * s.transpose();
  }
  return ainv * b * ainv;
}

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

Eigen::VectorXd wald_p(const MlogitFit& fit, CovFlavor flavor) {
  const Eigen::MatrixXd& cov =
      flavor == CovFlavor::Model ? fit.cov_model : fit.cov_sandwich;
  const int d = fit.dim();
  Eigen::VectorXd theta(2 * d);
  theta << fit.beta_neg, fit.beta_pos;
  Eigen::VectorXd p(2 * d);
  for (int k = 0; k < 2 * d; ++k) {
    double var = cov(k, k);
    if (!(var > 0))
      throw SingularInformation("non-positive variance for coefficient " +
                                std::to_string(k));
    p(k) = normal_two_sided_p(theta(k) / std::sqrt(var));
  }
  return p;
}

Sig significance(double coef, double p, double sig_level) {
  if (p < sig_level) return coef > 0 ? Sig::Plus : Sig::Minus;
  return Sig::NSS;
}

Rank rank_from_sig(Sig neg, Sig pos) {
  if (neg == Sig::NSS && pos == Sig::NSS) return Rank::Fifth;
  if (neg == Sig::NSS || pos == Sig::NSS) {
    Sig other = neg == Sig::NSS ? pos : neg;
    return other == Sig::Plus ? Rank::Second : Rank::Third;
  }
  if (neg == pos) return Rank::Fourth;
  return Rank::First;
}

Rank rank_mwe(double coef_neg, double p_neg, double coef_pos, double p_pos,
              double sig_level) {
  return rank_from_sig(significance(coef_neg, p_neg, sig_level),
                       significance(coef_pos, p_pos, sig_level));
}

const char* rank_name(Rank r) {
  switch (r) {
    case Rank::First: return "1st";
    case Rank::Second: return "2nd";
    case Rank::Third: return "3rd";
    case Rank::Fourth: return "4th";
    default: return "5th";
  }
}

}  // namespace finmwe::econ
