// SPDX-License-Identifier: Apache-2.0
#include "finsler/bounds.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace finsler {

namespace {

constexpr double kPi = std::numbers::pi;

double ds_K(double K, double r) {
  if (K > 0) return std::cos(std::sqrt(K) * r);
  if (K < 0) return std::cosh(std::sqrt(-K) * r);
  return 1.0;
}

struct ZeroReached {};

// True when the shooting solution has a zero in (0, r].
bool has_zero(double N, double K, double r, double lambda) {
  using State = std::array<double, 2>;
  namespace odeint = boost::numeric::odeint;
  const double eps = std::min(1e-6, 1e-3 * r);
  State x{1.0 - lambda * eps * eps / (2.0 * N), -lambda * eps / N};
  auto rhs = [&](const State& s, State& dsdt, double t) {
    dsdt[0] = s[1];
    dsdt[1] = -(N - 1.0) * ds_K(K, t) / s_K(K, t) * s[1] - lambda * s[0];
  };
  auto stepper = odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_adaptive(stepper, rhs, x, eps, r, 1e-3 * r, [](const State& s, double) {
      if (s[0] <= 0.0) throw ZeroReached{};
    });
  } catch (const ZeroReached&) {
    return true;
  }
  return x[0] <= 0.0;
}

}  // namespace

double s_K(double K, double r) {
  if (K > 0) return std::sin(std::sqrt(K) * r) / std::sqrt(K);
  if (K < 0) return std::sinh(std::sqrt(-K) * r) / std::sqrt(-K);
  return r;
}

double unit_sphere_volume(int n) {
  if (n < 1) throw InvalidArgument("unit_sphere_volume: n must be >= 1");
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

double A_nK(int n, double K, double r) {
  if (r < 0) throw InvalidArgument("A_nK: r must be >= 0");
  return unit_sphere_volume(n) * std::pow(s_K(K, r), n - 1);
}

double V_nK(int n, double K, double r) {
  if (r < 0) throw InvalidArgument("V_nK: r must be >= 0");
  if (r == 0) return 0.0;
  auto f = [&](double t) { return std::pow(s_K(K, t), n - 1); };
  return unit_sphere_volume(n) * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, r, 15, 1e-14);
}

double spaceform_ball_eigen(double N, double K, double r) {
  if (!(N >= 1.0) || !std::isfinite(N)) throw InvalidArgument("spaceform_ball_eigen: N must be >= 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("spaceform_ball_eigen: r must be positive");
  if (K > 0 && r >= kPi / std::sqrt(K))
    throw InvalidArgument("spaceform_ball_eigen: r must be below pi / sqrt(K)");
  double lo = 0.0, hi = 1.0 / (r * r);
  int grow = 0;
  while (!has_zero(N, K, r, hi)) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 200) throw NumericFailure("spaceform_ball_eigen: bracket failure");
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (has_zero(N, K, r, mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

void CurvatureAssumption::validate() const {
  if (n < 1) throw InvalidArgument("assumption: n must be >= 1");
  if (!(N >= n)) throw InvalidArgument("assumption: N must be >= n");
  if (!(d > 0)) throw InvalidArgument("assumption: diameter must be positive");
  if (!(Theta >= 1.0)) throw InvalidArgument("assumption: Theta must be >= 1");
  if (!(Lambda >= 1.0)) throw InvalidArgument("assumption: Lambda must be >= 1");
  if (injectivity && !(*injectivity > 0)) throw InvalidArgument("assumption: injectivity radius must be positive");
}

double cheng_bound(const CurvatureAssumption& assumption, int k) {
  assumption.validate();
  if (k < 1) throw InvalidArgument("cheng_bound: k must be >= 1");
  if (assumption.N != std::floor(assumption.N)) throw InvalidArgument("cheng_bound: N must be an integer");
  return spaceform_ball_eigen(assumption.N, assumption.K, assumption.d / (2.0 * k));
}

double cheeger_lower_expression(double h, double Lambda, double Theta, int n) {
  if (!(h >= 0)) throw InvalidArgument("cheeger_lower_expression: h must be >= 0");
  if (!(Lambda >= 1.0) || !(Theta >= 1.0)) throw InvalidArgument("cheeger_lower_expression: Lambda, Theta must be >= 1");
  if (n < 1) throw InvalidArgument("cheeger_lower_expression: n must be >= 1");
  return h * h / (4.0 * std::pow(Lambda, 1 + n) * Theta * Theta);
}

bool BoundReport::all_satisfied() const {
  for (const auto& r : records)
    if (!r.satisfied) return false;
  return true;
}

BoundReport check_bounds(const std::vector<double>& positive_lambdas, const CurvatureAssumption& assumption,
                         int k_max, double slack, const std::optional<LowerIndication>& lower) {
  assumption.validate();
  if (!(slack >= 0)) throw InvalidArgument("check_bounds: slack must be >= 0");
  BoundReport report;
  report.slack = slack;
  if (lower) report.continuum_factor = lower->continuum_factor;
  char buf[256];
  std::snprintf(buf, sizeof buf, "ball bound N=%g K=%g d=%.12g; upper slack %g (multiplicative); lower factor %g",
                assumption.N, assumption.K, assumption.d, slack, report.continuum_factor);
  report.provenance = buf;
  const int kk = std::min<int>(k_max, static_cast<int>(positive_lambdas.size()));
  for (int k = 1; k <= kk; ++k) {
    BoundRecord rec;
    rec.k = k;
    rec.computed_lambda = positive_lambdas[k - 1];
    rec.upper_bound = cheng_bound(assumption, k);
    rec.upper_ok = rec.computed_lambda <= (1.0 + slack) * rec.upper_bound;
    rec.lower_bound_expression = std::numeric_limits<double>::quiet_NaN();
    if (lower && lower->index == k) {
      rec.lower_bound_expression = lower->value;
      rec.lower_ok = lower->value <= lower->continuum_factor * rec.computed_lambda;
    }
    rec.satisfied = rec.upper_ok && rec.lower_ok;
    report.records.push_back(rec);
  }
  return report;
}

BoundReport check_bounds(const SpectrumReport& report, const CurvatureAssumption& assumption, int k_max,
                         double slack, const std::optional<LowerIndication>& lower) {
  // Skip the zero eigenvalue of a closed manifold (k = 1 with constant field).
  std::vector<double> positive;
  bool skipped = false;
  for (const auto& e : report.entries) {
    if (!skipped && e.k == 1 && std::abs(e.lambda) <= 1e-9) {
      skipped = true;
      continue;
    }
    positive.push_back(e.lambda);
  }
  return check_bounds(positive, assumption, k_max, slack, lower);
}

void write_bound_csv(std::ostream& out, const BoundReport& report) {
  out << "k,computed_lambda,upper_bound,lower_bound_expression,satisfied\n";
  char buf[200];
  for (const auto& r : report.records) {
    if (std::isnan(r.lower_bound_expression))
      std::snprintf(buf, sizeof buf, "%d,%.15g,%.15g,,%d\n", r.k, r.computed_lambda, r.upper_bound, r.satisfied ? 1 : 0);
    else
      std::snprintf(buf, sizeof buf, "%d,%.15g,%.15g,%.15g,%d\n", r.k, r.computed_lambda, r.upper_bound,
                    r.lower_bound_expression, r.satisfied ? 1 : 0);
    out << buf;
  }
}

}  // namespace finsler
