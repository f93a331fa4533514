#include "finfuel/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace finfuel {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_lambda(double lambda) {
  require(std::isfinite(lambda) && lambda > 0, "lambda must be positive");
}

void check_c(double c) {
  require(std::isfinite(c) && c >= 0 && c <= 1, "inventory level outside [0, 1]");
}

// Bisection on [lo, hi] for a function with f(lo) and f(hi) of opposite sign.
// Interval width 1e-12 is enough: every caller follows up with closed-form
// quantities that are locally Lipschitz in the root.
double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0) return mid;
    if ((flo < 0) == (fmid < 0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Model Model::quadratic(double lambda, double a) {
  check_lambda(lambda);
  require(std::isfinite(a) && a > 0 && a < 1, "quadratic coefficient a must lie in (0, 1)");

  Model m;
  m.lambda_ = lambda;
  m.a_ = a;
  m.sqrt2lam_ = std::sqrt(2 * lambda);
  m.c_hat_ = 0.5 * (1 + a);
  m.c_o_ = a;
  m.r_hat_ = 0.25 * (1 - a) * (1 - a);
  m.gamma_o_ = -1 / m.sqrt2lam_;
  m.curve_.value = [a](double c) { return (a + (1 - c)) * (1 - c); };
  m.curve_.slope = [a](double c) { return -a - 2 * (1 - c); };
  m.curve_.curvature = [](double) { return 2.0; };
  return m;
}

Model Model::from_curve(double lambda, PhiCurve curve) {
  check_lambda(lambda);
  require(curve.value && curve.slope && curve.curvature, "curve callables must all be set");

  Model m;
  m.lambda_ = lambda;
  m.a_ = std::nan("");
  m.sqrt2lam_ = std::sqrt(2 * lambda);
  m.gamma_o_ = -1 / m.sqrt2lam_;
  m.curve_ = std::move(curve);

  require(std::abs(m.curve_.value(1.0)) <= 1e-12, "fill cost must vanish at full inventory");
  for (int i = 0; i <= 100; ++i) {
    const double c = i / 100.0;
    require(std::isfinite(m.curve_.value(c)), "fill cost must be finite on [0, 1]");
    require(m.curve_.slope(c) < 0, "fill cost must be strictly decreasing");
    require(m.curve_.curvature(c) >= 0, "fill cost must be convex");
  }

  // c_hat is the root of 1 + slope; the slope is increasing by convexity, so
  // a sign change over (0, 1) pins a unique root.
  const auto excess = [&m](double c) { return 1 + m.curve_.slope(c); };
  require(excess(0.0) < 0 && excess(1.0) > 0,
          "degenerate curve: 1 + slope has no sign change on (0, 1)");
  m.c_hat_ = bisect(excess, 0.0, 1.0);

  // c_o is the lower root of r; r is concave with maximum at c_hat, so a sign
  // change over (0, c_hat) pins it.
  const auto net = [&m](double c) { return 1 - c - m.curve_.value(c); };
  require(net(0.0) < 0 && net(m.c_hat_) > 0,
          "degenerate curve: net saving has no sign change below c_hat");
  m.c_o_ = bisect(net, 0.0, m.c_hat_);
  m.r_hat_ = net(m.c_hat_);
  return m;
}

PhiValue Model::phi(double c) const {
  check_c(c);
  return {curve_.value(c), curve_.slope(c), curve_.curvature(c)};
}

RunningTerms Model::running(double c) const {
  check_c(c);
  return {1 - c - curve_.value(c), lambda_ * (1 + curve_.slope(c))};
}

double Model::r_slope(double c) const {
  check_c(c);
  return -1 - curve_.slope(c);
}

}  // namespace finfuel
