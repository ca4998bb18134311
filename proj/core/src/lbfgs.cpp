#include "finmwe/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace finmwe::opt {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LbfgsResult lbfgs_minimize(
    std::vector<double> x,
    const std::function<double(const std::vector<double>&,
                               std::vector<double>&)>& value_and_grad,
    const LbfgsOptions& opts) {
  const std::size_t n = x.size();
  std::vector<double> g(n, 0.0), g_new(n, 0.0), x_new(n, 0.0), dir(n, 0.0);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  double f = value_and_grad(x, g);
  if (!std::isfinite(f)) throw NonFiniteObjective("objective not finite at start");

  LbfgsResult res;
  res.stop_reason = "max_iterations";

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    if (inf_norm(g) < opts.gradient_tolerance) {
      res.stop_reason = "gradient_tolerance";
      break;
    }

    // Two-loop recursion for the search direction -H*g.
    dir = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      double gamma = dot(s, y) / std::max(dot(y, y), 1e-300);
      for (double& d : dir) d *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t i = 0; i < n; ++i)
        dir[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    for (double& d : dir) d = -d;

    double dg = dot(dir, g);
    if (dg >= 0) {  // not a descent direction; reset to steepest descent
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      dg = -dot(g, g);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Backtracking Armijo line search.
    double step = (iter == 0) ? 1.0 / std::max(1.0, inf_norm(g)) : 1.0;
    constexpr double c1 = 1e-4;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_line_search; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
      f_new = value_and_grad(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + c1 * step * dg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(f_new))
        throw NonFiniteObjective("line search diverged");
      res.stop_reason = "line_search_failure";
      break;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    double sy = dot(s, y);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
  }

  res.x = std::move(x);
  res.value = f;
  res.iterations = iter;
  return res;
}

}  // namespace finmwe::opt
