#include "rvparc/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace rvparc {

namespace {

struct Probe {
  double a, f, d;  // step, value, directional derivative
};

// Minimiser of the cubic through two probes, or bisection when it is unusable.
double cubic_step(const Probe& lo, const Probe& hi) {
  const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.d * hi.d;
  const double mid = 0.5 * (lo.a + hi.a);
  if (disc < 0.0) return mid;
  const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
  const double t = hi.a - (hi.a - lo.a) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
  const double a = std::min(lo.a, hi.a), b = std::max(lo.a, hi.a);
  const double margin = 0.1 * (b - a);
  if (!std::isfinite(t) || t < a + margin || t > b - margin) return mid;
  return t;
}

class LineSearch {
 public:
  LineSearch(const Objective& fn, const LbfgsOptions& opt, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
             double f0, double d0)
      : fn_(fn), opt_(opt), x_(x), p_(p), f0_(f0), d0_(d0) {}

  // Returns true with the accepted step in (x_new, f_new, g_new).
  bool run(double a1, Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new, int& evals) {
    Probe prev{0.0, f0_, d0_};
    double a = a1;
    for (int i = 0; i < opt_.max_line_search; ++i) {
      const Probe cur = eval(a, x_new, f_new, g_new, evals);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * a * d0_ || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur, x_new, f_new, g_new, evals);
      }
      if (std::abs(cur.d) <= -opt_.c2 * d0_) return true;
      if (cur.d >= 0.0) return zoom(cur, prev, x_new, f_new, g_new, evals);
      prev = cur;
      a *= 2.0;
    }
    return false;
  }

 private:
  Probe eval(double a, Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new, int& evals) {
    x_new = x_ + a * p_;
    f_new = fn_(x_new, g_new);
    ++evals;
    const double d = std::isfinite(f_new) ? g_new.dot(p_) : std::numeric_limits<double>::infinity();
    return {a, std::isfinite(f_new) ? f_new : std::numeric_limits<double>::infinity(), d};
  }

  bool zoom(Probe lo, Probe hi, Eigen::VectorXd& x_new, double& f_new, Eigen::VectorXd& g_new, int& evals) {
    for (int i = 0; i < opt_.max_line_search; ++i) {
      const double a = std::isfinite(hi.f) ? cubic_step(lo, hi) : 0.5 * (lo.a + hi.a);
      const Probe cur = eval(a, x_new, f_new, g_new, evals);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * a * d0_ || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.d) <= -opt_.c2 * d0_) return true;
        if (cur.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = cur;
      }
      if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, lo.a)) break;
    }
    // Fall back to the best sufficient-decrease point if it improves on the start.
    if (lo.a > 0.0 && lo.f < f0_) {
      eval(lo.a, x_new, f_new, g_new, evals);
      return true;
    }
    return false;
  }

  const Objective& fn_;
  const LbfgsOptions& opt_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& p_;
  double f0_, d0_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const LbfgsOptions& opt) {
  LbfgsResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(r.x.size());
  r.f = fn(r.x, g);
  r.evaluations = 1;
  if (!std::isfinite(r.f)) {
    r.message = "objective is not finite at the initial point";
    return r;
  }
  r.initial_gradient_inf = r.gradient_inf = g.lpNorm<Eigen::Infinity>();
  const double tol = std::max(opt.relative_gradient_tol * r.initial_gradient_inf, opt.absolute_gradient_tol);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd x_new, g_new(r.x.size()), p;
  std::vector<double> alpha;

  while (true) {
    if (r.gradient_inf <= tol) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    if (r.iterations >= opt.max_iterations) {
      r.message = "iteration limit reached";
      return r;
    }

    // Two-loop recursion.
    p = -g;
    alpha.assign(s_hist.size(), 0.0);
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(p);
      p -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) p *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(p);
      p += (alpha[i] - beta) * s_hist[i];
    }
    double d0 = g.dot(p);
    if (!(d0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      p = -g;
      d0 = g.dot(p);
    }
    const double a1 = s_hist.empty() ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;

    double f_new = r.f;
    LineSearch ls(fn, opt, r.x, p, r.f, d0);
    if (!ls.run(a1, x_new, f_new, g_new, r.evaluations)) {
      r.message = "line search failed";
      return r;
    }
    Eigen::VectorXd s = x_new - r.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    r.x.swap(x_new);
    g.swap(g_new);
    r.f = f_new;
    r.gradient_inf = g.lpNorm<Eigen::Infinity>();
    ++r.iterations;
    if (sy > 1e-16 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
}

}  // namespace rvparc
