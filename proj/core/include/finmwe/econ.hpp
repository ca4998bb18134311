#ifndef FINMWE_ECON_HPP
#define FINMWE_ECON_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finmwe/errors.hpp"

namespace finmwe::econ {

FINMWE_DEFINE_ERROR(DegenerateSeries);
FINMWE_DEFINE_ERROR(MissingSue);
FINMWE_DEFINE_ERROR(DuplicateKey);
FINMWE_DEFINE_ERROR(AlignmentError);
FINMWE_DEFINE_ERROR(Separation);
FINMWE_DEFINE_ERROR(RankDeficient);
FINMWE_DEFINE_ERROR(SingularInformation);
FINMWE_DEFINE_ERROR(BadEarningsFile);

/// Control-variable column order of the earnings CSV.
const std::vector<std::string>& control_names();

/// One firm-year row of the earnings table.
struct EarningsRow {
  std::string company_id;
  int fiscal_year = 0;
  double earnings = 0;
  std::map<std::string, std::optional<double>> controls;
};

/// Parses the earnings CSV (header: company_id, fiscal_year, earnings, then
/// the control columns; empty fields are missing). Throws DuplicateKey and
/// BadEarningsFile.
std::vector<EarningsRow> load_earnings_csv(std::istream& in);
std::vector<EarningsRow> load_earnings_csv_file(const std::string& path);

/// Per-year standardized unexpected earnings for one firm's series
/// E_1..E_T (year order). Index 0 has no UE and stays empty. Throws
/// DegenerateSeries when T < 3 or the UE standard deviation is 0.
std::vector<std::optional<double>> compute_sue(
    const std::vector<double>& earnings);

/// Y = +1 when sue > tau, -1 when sue < -tau, else 0. tau > 0.
int categorize(double sue, double tau);

/// One merged panel row.
struct FirmYear {
  std::string company_id;
  int fiscal_year = 0;
  double earnings = 0;
  std::map<std::string, double> controls;
  double sue = 0;
  int outcome = 0;  // valid after categorize_panel
};

struct MergeStats {
  long matched = 0;
  long dropped_missing_controls = 0;
  long dropped_missing_sue = 0;
  long unmatched_filings = 0;
};

/// Inner join of filing documents (doc id "<company>_<year>") with the
/// earnings table; SUE computed per firm from its earnings series; rows with
/// any missing control or SUE are dropped and counted.
std::vector<FirmYear> merge_firm_years(
    const std::vector<std::pair<std::string, int>>& filing_keys,
    const std::vector<EarningsRow>& earnings, MergeStats* stats = nullptr,
    const std::vector<std::string>& controls = control_names());

/// Document weight matrix: rows keyed by doc id, one column per MWE.
struct WeightMatrix {
  std::vector<std::string> mwe_names;
  std::map<std::string, std::vector<double>> rows;
};

/// X columns: [controls..., selected MWE weights]; y: categorized outcomes.
struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXi y;
  std::vector<std::string> column_names;
};

Design design_matrix(const std::vector<FirmYear>& panel,
                     const WeightMatrix& weights,
                     const std::vector<std::string>& selected_mwes,
                     double tau,
                     const std::vector<std::string>& controls = control_names());

/// Multinomial logit fit: categories (-1, +1) against base 0. Coefficient
/// vectors include the intercept at position 0. Fitted by Newton iterations
/// with step halving; converged when the gradient max-norm is < 1e-8.
struct MlogitFit {
  Eigen::VectorXd beta_neg;  // Y = -1 equation, [intercept, coefs...]
  Eigen::VectorXd beta_pos;  // Y = +1 equation
  Eigen::MatrixXd cov_model;     // inverse observed information, 2(p+1) sq.
  Eigen::MatrixXd cov_sandwich;  // A^-1 B A^-1
  double loglik = 0;
  int iterations = 0;
  double gradient_norm = 0;
  std::vector<std::string> column_names;  // without intercept

  int dim() const { return static_cast<int>(beta_neg.size()); }
};

MlogitFit fit_mlogit(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                     int max_iterations = 200);

/// Class probabilities (columns: Y=-1, Y=0, Y=+1) under the fit.
Eigen::MatrixXd mlogit_probabilities(const MlogitFit& fit,
                                     const Eigen::MatrixXd& x);

/// Huber-White covariance A^-1 B A^-1 at the optimum. Kept callable on its
/// own so the fit can be re-evaluated against an oracle.
Eigen::MatrixXd sandwich_cov(const MlogitFit& fit, const Eigen::MatrixXd& x,
                             const Eigen::VectorXi& y);

enum class CovFlavor { Model, Sandwich };

/// Two-sided normal Wald p-values per coefficient, ordered
/// [neg equation..., pos equation...].
Eigen::VectorXd wald_p(const MlogitFit& fit, CovFlavor flavor);

/// Two-sided p-value from a z statistic.
double normal_two_sided_p(double z);

/// Significance mark of one coefficient: '+', '-' or NSS.
enum class Sig { Plus, Minus, NSS };
Sig significance(double coef, double p, double sig_level);

/// Five-level discriminative rank of an MWE from the sign/significance of
/// its two equation coefficients.
enum class Rank { First = 1, Second, Third, Fourth, Fifth };
Rank rank_mwe(double coef_neg, double p_neg, double coef_pos, double p_pos,
              double sig_level = 0.05);
Rank rank_from_sig(Sig neg, Sig pos);
const char* rank_name(Rank r);  // "1st".."5th"

}  // namespace finmwe::econ

#endif
