#include "ulab/flows.hpp"

#include <cmath>
#include <stdexcept>

#include "ulab/rng.hpp"

namespace ulab {

QuotientPoint flow_u(const QuotientPoint& x, double t) {
  const Fixture& f = fixture(x.lift.tag);
  return reduce(gmul(f.u_flow(t), x.lift));
}

QuotientPoint flow_ubar(const QuotientPoint& x, double s) {
  const Fixture& f = fixture(x.lift.tag);
  return reduce(gmul(f.ubar_flow(s), x.lift));
}

QuotientPoint flow_a(const QuotientPoint& x, double p) {
  const Fixture& f = fixture(x.lift.tag);
  QuotientPoint cur = x;
  double done = 0.0;
  while (std::abs(p - done) > 1e-15) {
    double step = std::clamp(p - done, -0.5, 0.5);
    cur = reduce(gmul(f.a_flow(step), cur.lift));
    done += step;
  }
  return cur;
}

namespace {

// 2x2 and 3x3 theta sums with the v = 0 term included, plus the directional
// derivative under t -> u_t x.  Cutoff from the smallest singular value.
struct ThetaVal {
  double value = 0.0;
  double deriv = 0.0;
};

ThetaVal theta_block(const Mat& x, const Mat& gen) {
  const int n = static_cast<int>(x.rows());
  const double inv_sigma = x.inverse().norm();  // >= 1/sigma_min
  const int c = static_cast<int>(std::ceil(3.64 * inv_sigma)) + 1;
  const Mat sym = gen + gen.transpose();  // d/dt ||exp(t gen) w||^2 = w . sym w
  ThetaVal out;
  out.value = 1.0;  // v = 0
  Vec v(n), w(n);
  std::vector<int> e(static_cast<size_t>(n), -c);
  while (true) {
    bool zero = true;
    long n2 = 0;
    for (int i = 0; i < n; ++i) {
      zero = zero && e[static_cast<size_t>(i)] == 0;
      n2 += static_cast<long>(e[static_cast<size_t>(i)]) * e[static_cast<size_t>(i)];
    }
    if (!zero && n2 <= static_cast<long>(c) * c) {
      for (int i = 0; i < n; ++i) v[i] = e[static_cast<size_t>(i)];
      w = x * v;
      double q = w.squaredNorm();
      if (q < 42.0 / M_PI) {
        double term = std::exp(-M_PI * q);
        out.value += term;
        out.deriv += term * (-M_PI) * w.dot(sym * w);
      }
    }
    int k = 0;
    while (k < n && e[static_cast<size_t>(k)] == c) e[static_cast<size_t>(k++)] = -c;
    if (k == n) break;
    ++e[static_cast<size_t>(k)];
  }
  return out;
}

// Per-tag value and flow derivative of the product theta sum minus 1.
ThetaVal invariant_parts(const GroupElement& x) {
  const Fixture& f = fixture(x.tag);
  if (x.tag == GroupTag::SL2xSL2) {
    Mat x1 = x.m.topLeftCorner(2, 2), x2 = x.m.bottomRightCorner(2, 2);
    Mat u1 = f.triplet.u.m.topLeftCorner(2, 2), u2 = f.triplet.u.m.bottomRightCorner(2, 2);
    ThetaVal a = theta_block(x1, u1);
    ThetaVal b = theta_block(x2, u2);
    return {a.value * b.value - 1.0, a.deriv * b.value + a.value * b.deriv};
  }
  ThetaVal t = theta_block(x.m, f.triplet.u.m);
  return {t.value - 1.0, t.deriv};
}

}  // namespace

double invariant_function(const GroupElement& x) { return invariant_parts(x).value; }

double invariant_function_flow_derivative(const GroupElement& x) {
  return invariant_parts(x).deriv;
}

double TimeChange::alpha(const QuotientPoint& x) const {
  if (kind == Kind::Coboundary)
    return 1.0 + amplitude * invariant_function_flow_derivative(x.lift);
  return 1.0 + amplitude * (invariant_function(x.lift) - center) / scale;
}

double TimeChange::beta(const QuotientPoint& x) const {
  if (kind != Kind::Coboundary)
    throw std::logic_error("beta: only the coboundary kind has a transfer function");
  return amplitude * invariant_function(x.lift);
}

TimeChange make_time_change(GroupTag tag, TimeChange::Kind kind, double target_dev) {
  TimeChange tc;
  tc.kind = kind;
  tc.tag = tag;
  tc.amplitude = 1.0;
  tc.center = 0.0;
  tc.scale = 1.0;

  // Deterministic sample of the quotient: random wanderings off the identity.
  const Fixture& f = fixture(tag);
  CounterRng rng(20260815, "time-change-normalization");
  double sup_dev = 0.0, mean_inv = 0.0;
  const int N = 400;
  std::vector<QuotientPoint> pts;
  for (int i = 0; i < N; ++i) {
    GroupElement g = f.u_flow(rng.uniform(-2.0, 2.0));
    g = gmul(g, f.ubar_flow(rng.uniform(-2.0, 2.0)));
    g = gmul(g, f.a_flow(rng.uniform(-1.0, 1.0)));
    pts.push_back(reduce(g));
    mean_inv += invariant_function(pts.back().lift) / N;
  }
  tc.center = mean_inv;
  for (const auto& p : pts) sup_dev = std::max(sup_dev, std::abs(tc.alpha(p) - 1.0));
  if (sup_dev > 0) tc.amplitude = target_dev / sup_dev;
  if (tc.amplitude > 2.0) tc.amplitude = 2.0;
  return tc;
}

namespace {

double simpson(const std::function<double(double)>& g, double a, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = g(lm), frm = g(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& g, double a, double b, double tol) {
  double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(g, a, b, fa, fm, fb, whole, tol, 28);
}

}  // namespace

double orbit_integral(const TimeChange& tc, const QuotientPoint& x, double T,
                      double abs_tol) {
  auto g = [&](double s) { return tc.alpha(flow_u(x, s)) - 1.0; };
  if (T == 0.0) return 0.0;
  // split into unit windows so the adaptive rule sees bounded oscillation
  double total = 0.0;
  double s0 = 0.0;
  double dir = (T > 0) ? 1.0 : -1.0;
  while (std::abs(T - s0) > 1e-15) {
    double s1 = s0 + dir * std::min(1.0, std::abs(T - s0));
    total += integrate(g, s0, s1, abs_tol / (std::abs(T) + 1.0));
    s0 = s1;
  }
  return total;
}

double time_changed_time(const TimeChange& tc, const QuotientPoint& x, double T,
                         double step) {
  auto f = [&](double tau) { return tc.alpha(flow_u(x, tau)); };
  double tau = 0.0;
  double t = 0.0;
  double dir = (T >= 0) ? 1.0 : -1.0;
  while (std::abs(T - t) > 1e-15) {
    double h = dir * std::min(step, std::abs(T - t));
    double k1 = f(tau);
    double k2 = f(tau + 0.5 * h * k1);
    double k3 = f(tau + 0.5 * h * k2);
    double k4 = f(tau + h * k3);
    tau += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return tau;
}

}  // namespace ulab
