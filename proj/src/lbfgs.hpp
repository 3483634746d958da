#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

namespace triblock::detail {

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 2000;
  double gradient_tolerance = 1e-12;  ///< on the max-norm of the gradient
  double relative_decrease = 1e-15;   ///< stop after several steps decreasing f by less than this
  /// Called with (iteration, f, max-norm of the gradient) at the start and after every accepted step.
  std::function<void(int, double, double)> on_iteration;
};

struct LbfgsResult {
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// fg(x, g) returns f(x) and writes the gradient into g.
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

/// Limited-memory BFGS with an Armijo backtracking line search.
inline LbfgsResult lbfgs(const Objective& fg, std::vector<double>& x, const LbfgsOptions& opt = {}) {
  const std::size_t n = x.size();
  LbfgsResult res;
  std::vector<double> g(n), xn(n), gn(n), d(n);
  double f = fg(x, g);
  res.f = f;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  int stall = 0;
  auto maxabs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double t : v) m = std::max(m, std::abs(t));
    return m;
  };
  if (opt.on_iteration) opt.on_iteration(0, f, maxabs(g));
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    if (maxabs(g) <= opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    // two-loop recursion
    d = g;
    std::vector<double> alpha(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) a += S[k][i] * d[i];
      a *= rho[k];
      alpha[k] = a;
      for (std::size_t i = 0; i < n; ++i) d[i] -= a * Y[k][i];
    }
    if (!S.empty()) {
      double sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sy += S.back()[i] * Y.back()[i];
        yy += Y.back()[i] * Y.back()[i];
      }
      const double gamma = sy / yy;
      for (double& t : d) t *= gamma;
    } else {
      // first step: unit max-norm move
      const double s = 1.0 / std::max(maxabs(g), 1e-300);
      for (double& t : d) t *= std::min(1.0, s);
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      double b = 0.0;
      for (std::size_t i = 0; i < n; ++i) b += Y[k][i] * d[i];
      b *= rho[k];
      for (std::size_t i = 0; i < n; ++i) d[i] += S[k][i] * (alpha[k] - b);
    }
    for (double& t : d) t = -t;
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
    if (!(slope < 0.0)) {
      // lost descent: restart from steepest descent
      S.clear();
      Y.clear();
      rho.clear();
      const double s = 1.0 / std::max(maxabs(g), 1e-300);
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = -g[i] * std::min(1.0, s);
        slope += g[i] * d[i];
      }
    }
    double step = 1.0;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * d[i];
      fn = fg(xn, gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope &&
          std::all_of(gn.begin(), gn.end(), [](double v) { return std::isfinite(v); })) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> s(n), y(n);
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
      sy += s[i] * y[i];
    }
    if (sy > 1e-300) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const double decrease = f - fn;
    x.swap(xn);
    g.swap(gn);
    f = fn;
    if (opt.on_iteration) opt.on_iteration(it + 1, f, maxabs(g));
    if (decrease <= opt.relative_decrease * std::max(1.0, std::abs(f))) {
      if (++stall >= 5) break;
    } else {
      stall = 0;
    }
  }
  res.f = f;
  return res;
}

}  // namespace triblock::detail
