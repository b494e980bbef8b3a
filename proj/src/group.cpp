#include "ulab/group.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace ulab {

int tag_dim(GroupTag tag) {
  switch (tag) {
    case GroupTag::SL2: return 2;
    case GroupTag::SL2xSL2: return 4;
    case GroupTag::SL3: return 3;
  }
  return 2;
}

int tag_alg_dim(GroupTag tag) {
  switch (tag) {
    case GroupTag::SL2: return 3;
    case GroupTag::SL2xSL2: return 6;
    case GroupTag::SL3: return 8;
  }
  return 3;
}

GroupElement gid(GroupTag tag) { return {ident(tag_dim(tag)), tag}; }

GroupElement gmul(const GroupElement& a, const GroupElement& b) {
  if (a.tag != b.tag) throw std::invalid_argument("gmul: mixed group tags");
  return {a.m * b.m, a.tag};
}

GroupElement ginv(const GroupElement& a) {
  return {a.m.inverse(), a.tag};
}

Mat mat_exp(const Mat& x) {
  if (!finite(x)) throw std::invalid_argument("mat_exp: non-finite input");
  return x.exp();
}

namespace {

// log(I + e) by the alternating series; requires ||e|| well inside 1.
Mat log_series(const Mat& e) {
  Mat term = e;
  Mat acc = e;
  for (int k = 2; k <= 64; ++k) {
    term = term * e;
    Mat delta = term / static_cast<double>(k);
    acc += (k % 2 == 0) ? Mat(-delta) : delta;
    if (term.norm() / k < 1e-18 * (1.0 + acc.norm())) return acc;
  }
  return acc;
}

}  // namespace

Mat mat_log(const Mat& q) {
  if (!finite(q)) throw chart_error("mat_log: non-finite input");
  const int n = static_cast<int>(q.rows());
  const Mat e = q - ident(n);
  if (e.norm() < calib().chart_series_gate) return log_series(e);
  // General case: Schur-based solver, then certify the branch by round trip.
  Mat l = q.log();
  if (!finite(l)) throw chart_error("mat_log: no principal real logarithm");
  if ((l.exp() - q).norm() > 1e-9 * (1.0 + q.norm()))
    throw chart_error("mat_log: principal logarithm not certified");
  return l;
}

GroupElement exp_alg(const AlgebraElement& x) { return {mat_exp(x.m), x.tag}; }

AlgebraElement log_grp(const GroupElement& g) {
  Mat l = mat_log(g.m);
  if (l.norm() > calib().chart_radius)
    throw chart_error("log_grp: outside chart radius");
  return {l, g.tag};
}

namespace {

double chart_dist(const Mat& q) {
  const auto& c = calib();
  const int n = static_cast<int>(q.rows());
  const Mat qi = q.inverse();
  const double coarse = 0.5 * ((q - ident(n)).norm() + (qi - ident(n)).norm());
  // Cheap reject: ||log q|| >= ||q - I|| - small correction, so a large coarse
  // value cannot come back inside the chart.
  if (coarse > 4.0 * c.chart_radius) return std::max(c.chart_radius, coarse);
  try {
    Mat l = mat_log(q);
    double d = l.norm();
    if (d <= c.chart_radius) return d;
  } catch (const chart_error&) {
  }
  return std::max(c.chart_radius, coarse);
}

}  // namespace

double dist(const GroupElement& g, const GroupElement& h, const Metric& m) {
  if (g.tag != h.tag) throw std::invalid_argument("dist: mixed group tags");
  if (m.kind == Metric::Kind::HilbertSchmidt) return (g.m - h.m).norm();
  return chart_dist(g.m * h.m.inverse());
}

double dist_id(const GroupElement& g, const Metric& m) {
  if (m.kind == Metric::Kind::HilbertSchmidt)
    return (g.m - ident(static_cast<int>(g.m.rows()))).norm();
  return chart_dist(g.m);
}

double norm_metric_bound(double r) {
  const auto& c = calib();
  if (r < 0) r = 0;
  return c.C2 * std::exp(r / c.delta1);
}

double bch_defect(const Mat& x, const Mat& y) {
  Mat q = mat_exp(x) * mat_exp(y);
  Mat l = mat_log(q);
  return (l - (x + y)).norm();
}

double bch_bound(double norm_x, double norm_y) {
  return calib().C_bch * norm_x * norm_y;
}

}  // namespace ulab
