#include "ulab/poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ulab/constants.hpp"
#include "ulab/fixtures.hpp"
#include "ulab/group.hpp"
#include "ulab/kak.hpp"
#include "ulab/rng.hpp"

namespace ulab {

namespace {

// Admissible-bracket and sublevel thresholds for the matched-time cover, as
// multiples of delta.  kappa_cap must dominate the u-time reach of 4*delta
// closeness (|t theta_ubar| stays under ~20 delta); kappa_level must dominate
// the coordinate inflation of a 4*delta displacement (basis vectors of norm
// down to 1/2 inflate metric balls by 2, plus commutator slack).
constexpr double kKappaCap = 24.0;
constexpr double kKappaLevel = 10.0;

int trimmed_degree(const Vec& c) {
  double scale = c.cwiseAbs().maxCoeff();
  if (scale <= 0.0) return 0;
  int d = 0;
  for (int k = 0; k < c.size(); ++k)
    if (std::abs(c[k]) > 1e-14 * scale) d = k;
  return d;
}

}  // namespace

Vec ChainPolynomial::eval(double t) const {
  Vec acc = coeffs.col(coeffs.cols() - 1);
  for (int k = static_cast<int>(coeffs.cols()) - 2; k >= 0; --k)
    acc = acc * t + coeffs.col(k);
  return acc;
}

Vec ChainPolynomial::coord_poly(int m) const {
  Vec row = coeffs.row(m).transpose();
  return row.head(trimmed_degree(row) + 1);
}

int ChainPolynomial::degree(int m) const {
  Vec row = coeffs.row(m).transpose();
  return trimmed_degree(row);
}

ChainPolynomial ad_unipotent_poly(const AlgebraElement& x, const ChainBasis& cb) {
  if (x.tag != cb.tag) throw std::invalid_argument("ad_unipotent_poly: tag mismatch");
  const Mat& u = cb.triplet.u.m;
  std::vector<Vec> cols;
  Mat z = x.m;
  double fact = 1.0;
  for (int k = 0; k <= 12; ++k) {
    cols.push_back(cb.coords(z) / fact);
    z = u * z - z * u;  // ad_u is nilpotent, so the expansion terminates
    if (z.cwiseAbs().maxCoeff() == 0.0) break;
    fact *= k + 1.0;
    if (k == 12) throw std::logic_error("ad_unipotent_poly: conjugation did not terminate");
  }
  ChainPolynomial p;
  p.tag = cb.tag;
  p.coeffs.resize(cb.n_coords(), static_cast<int>(cols.size()));
  for (int k = 0; k < static_cast<int>(cols.size()); ++k) p.coeffs.col(k) = cols[k];
  return p;
}

// --- scalar polynomial utilities --------------------------------------------

double poly_eval(const Vec& coeffs, double t) {
  double acc = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) acc = acc * t + coeffs[k];
  return acc;
}

Vec poly_derivative(const Vec& coeffs) {
  if (coeffs.size() <= 1) return Vec::Zero(1);
  Vec d(coeffs.size() - 1);
  for (int k = 1; k < coeffs.size(); ++k) d[k - 1] = k * coeffs[k];
  return d;
}

std::vector<double> poly_real_roots(const Vec& coeffs, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("poly_real_roots: empty interval");
  const double span = hi - lo;
  const double edge_tol = 1e-9 * (1.0 + span + std::abs(lo) + std::abs(hi));
  int d = trimmed_degree(coeffs);
  std::vector<double> roots;
  if (d == 0) return roots;  // constants (including zero) have no isolated roots
  Vec c = coeffs.head(d + 1);
  if (d == 1) {
    roots.push_back(-c[0] / c[1]);
  } else {
    Mat comp = Mat::Zero(d, d);
    for (int k = 0; k < d; ++k) comp(k, d - 1) = -c[k] / c[d];
    for (int k = 1; k < d; ++k) comp(k, k - 1) = 1.0;
    Eigen::EigenSolver<Mat> es(comp);
    for (int k = 0; k < d; ++k) {
      std::complex<double> ev = es.eigenvalues()[k];
      // Even-order real roots surface as near-real conjugate pairs; keep the
      // loose candidates and let the residual filter below reject impostors.
      if (std::abs(ev.imag()) > 1e-5 * (1.0 + std::abs(ev.real()))) continue;
      roots.push_back(ev.real());
    }
  }

  // Polish: prefer a bracketing bisection (robust near simple roots), fall
  // back to guarded Newton when no sign change is visible (even-order roots).
  std::vector<double> out;
  Vec dc = poly_derivative(c);
  for (double r : roots) {
    if (r < lo - edge_tol || r > hi + edge_tol) continue;
    double scale = 1.0 + std::abs(r);
    bool bracketed = false;
    for (double h = 1e-9 * scale; h <= 1e-2 * scale; h *= 10.0) {
      double a = r - h, b = r + h;
      double fa = poly_eval(c, a), fb = poly_eval(c, b);
      if (fa == 0.0) { r = a; bracketed = true; break; }
      if (fb == 0.0) { r = b; bracketed = true; break; }
      if ((fa < 0.0) != (fb < 0.0)) {
        for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
          double mid = 0.5 * (a + b);
          double fm = poly_eval(c, mid);
          if (fm == 0.0) { a = b = mid; break; }
          if ((fa < 0.0) != (fm < 0.0)) { b = mid; } else { a = mid; fa = fm; }
        }
        r = 0.5 * (a + b);
        bracketed = true;
        break;
      }
    }
    if (!bracketed) {
      for (int it = 0; it < 30; ++it) {
        double f = poly_eval(c, r), df = poly_eval(dc, r);
        if (std::abs(df) < 1e-14) break;
        double step = f / df;
        if (std::abs(step) > 0.1 * scale) break;
        r -= step;
        if (std::abs(step) < 1e-12 * scale) break;
      }
    }
    if (r < lo - edge_tol || r > hi + edge_tol) continue;
    // Residual filter: a genuine (possibly multiple) real root polishes to a
    // tiny residual, while a complex pair near the axis bottoms out at the
    // pair's offset squared times the curvature.
    double mag = 0.0, rk = 1.0;
    for (int k = 0; k <= d; ++k) {
      mag += std::abs(c[k]) * rk;
      rk *= std::max(1.0, std::abs(r));
    }
    if (std::abs(poly_eval(c, r)) > 1e-8 * mag) continue;
    out.push_back(std::clamp(r, lo, hi));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [&](double a, double b) { return std::abs(a - b) < 1e-9 * (1.0 + span); }),
            out.end());
  return out;
}

double poly_sup_abs(const Vec& coeffs, double lo, double hi) {
  double best = std::max(std::abs(poly_eval(coeffs, lo)), std::abs(poly_eval(coeffs, hi)));
  for (double r : poly_real_roots(poly_derivative(coeffs), lo, hi))
    best = std::max(best, std::abs(poly_eval(coeffs, r)));
  // Backup Chebyshev grid guards against a critical point lost to a multiple
  // root of the derivative; the critical-point list stays the certifier.
  for (int m = 0; m <= 64; ++m) {
    double t = lo + 0.5 * (hi - lo) * (1.0 + std::cos(m * M_PI / 64));
    best = std::max(best, std::abs(poly_eval(coeffs, t)));
  }
  return best;
}

std::vector<std::pair<double, double>> poly_sublevel_intervals(const Vec& coeffs, double level,
                                                               double lo, double hi) {
  if (level < 0.0) throw std::invalid_argument("poly_sublevel_intervals: negative level");
  Vec up = coeffs, dn = coeffs;
  up[0] -= level;
  dn[0] += level;
  std::vector<double> cuts{lo, hi};
  for (double r : poly_real_roots(up, lo, hi)) cuts.push_back(r);
  for (double r : poly_real_roots(dn, lo, hi)) cuts.push_back(r);
  std::sort(cuts.begin(), cuts.end());

  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    if (b <= a) continue;
    // A segment counts when its interior sits below the level; endpoints on
    // the level surface are kept by closing the intervals afterwards.
    double mid = 0.5 * (a + b);
    if (std::abs(poly_eval(coeffs, mid)) > level * (1.0 + 1e-12) + 1e-300) continue;
    if (!out.empty() && a <= out.back().second + 1e-9 * (1.0 + hi - lo)) {
      out.back().second = b;
    } else {
      out.emplace_back(a, b);
    }
  }
  return out;
}

Vec chebyshev_coeffs(int d, double lo, double hi) {
  if (d < 0) throw std::invalid_argument("chebyshev_coeffs: negative degree");
  if (!(hi > lo)) throw std::invalid_argument("chebyshev_coeffs: empty interval");
  // T_d on [-1,1] via the recurrence, then substitute x = (2t - lo - hi)/(hi - lo).
  auto mul_affine = [](const Vec& p, double a0, double a1) {
    Vec q = Vec::Zero(p.size() + 1);
    for (int k = 0; k < p.size(); ++k) {
      q[k] += a0 * p[k];
      q[k + 1] += a1 * p[k];
    }
    return q;
  };
  const double a1 = 2.0 / (hi - lo);
  const double a0 = -(lo + hi) / (hi - lo);
  Vec prev = Vec::Ones(1);                    // T_0
  if (d == 0) return prev;
  Vec cur(2);
  cur << a0, a1;                              // T_1 of the mapped variable
  for (int n = 2; n <= d; ++n) {
    Vec next = 2.0 * mul_affine(cur, a0, a1);
    next.head(prev.size()) -= prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// --- coefficient <-> sup bounds ----------------------------------------------

CoeffBoundCheck coeff_bounds(const Vec& coeffs, double T, double eps) {
  if (!(T > 0.0)) throw std::invalid_argument("coeff_bounds: T must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("coeff_bounds: eps must be positive");
  int d = trimmed_degree(coeffs);
  if (d > 8) throw std::invalid_argument("coeff_bounds: degree above the configured maximum 8");

  CoeffBoundCheck out;
  out.c1 = c1_constant(d);

  // Chebyshev extrema of T_d mapped to [0, T] (a single point when d = 0).
  out.grid_sup = 0.0;
  for (int m = 0; m <= d; ++m) {
    double node = d == 0 ? 0.5 * T : 0.5 * T * (1.0 + std::cos(m * M_PI / d));
    out.grid_sup = std::max(out.grid_sup, std::abs(poly_eval(coeffs, node)));
  }
  out.sup_exact = poly_sup_abs(coeffs, 0.0, T);

  out.max_scaled_coeff = 0.0;
  double tk = 1.0;
  for (int k = 0; k <= d; ++k) {
    out.max_scaled_coeff = std::max(out.max_scaled_coeff, std::abs(coeffs[k]) * tk);
    tk *= T;
  }

  const double slack = 1.0 + 1e-12;
  out.forward_premise = out.grid_sup <= eps;
  out.forward_holds = !out.forward_premise || out.max_scaled_coeff <= out.c1 * eps * slack;
  out.converse_premise = out.max_scaled_coeff <= eps / out.c1;
  out.converse_holds = !out.converse_premise || out.sup_exact <= eps * slack;
  return out;
}

// --- matched-time interval cover ----------------------------------------------

namespace {

std::vector<std::pair<double, double>> intersect_interval_lists(
    const std::vector<std::pair<double, double>>& a,
    const std::vector<std::pair<double, double>>& b) {
  std::vector<std::pair<double, double>> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double lo = std::max(a[i].first, b[j].first);
    double hi = std::min(a[i].second, b[j].second);
    if (hi >= lo) out.emplace_back(lo, hi);
    if (a[i].second < b[j].second) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

}  // namespace

IntervalCover matching_interval_cover(const GroupElement& x_lift, const GroupElement& y_lift,
                                      const std::function<double(double)>& h, double delta,
                                      double R, const ChainBasis& cb, int n_grid) {
  if (!(R > 0.0)) throw std::invalid_argument("matching_interval_cover: R must be positive");
  if (!(delta > 0.0) || kKappaCap * delta > calib().eps14)
    throw std::invalid_argument("matching_interval_cover: delta outside (0, eps14/24]");
  if (!(dist(x_lift, y_lift) < delta))
    throw std::invalid_argument("matching_interval_cover: lifts are not delta-close");
  if (std::abs(h(0.0)) > 1e-9)
    throw std::invalid_argument("matching_interval_cover: matching must fix time zero");

  const Fixture& f = fixture(cb.tag);
  GroupElement g = gmul(x_lift, ginv(y_lift));
  KakCoordinates kc = decompose(g, cb);

  BestMatchParams phi{kc.theta_ubar, kc.theta_a};

  IntervalCover cover;
  cover.cap = R;
  if (std::abs(kc.theta_ubar) > 0.0)
    cover.cap = std::min(R, kKappaCap * delta / std::abs(kc.theta_ubar));

  // Conjugated central + transversal displacement: its chain coordinates are
  // polynomials in t; the admissible times keep them all below the level.
  Mat zt = mat_log(gmul(kc.z_part, kc.tr_part).m);
  ChainPolynomial bundle = ad_unipotent_poly(AlgebraElement{zt, cb.tag}, cb);

  std::vector<std::pair<double, double>> admissible{{0.0, cover.cap}};
  const double level = kKappaLevel * delta;
  for (int m = 3; m < cb.n_coords(); ++m) {
    Vec pm = bundle.coord_poly(m);
    admissible = intersect_interval_lists(admissible, poly_sublevel_intervals(pm, level, 0.0, cover.cap));
    if (admissible.empty()) break;
  }

  const int dim = tag_alg_dim(cb.tag);
  if (static_cast<int>(admissible.size()) > 3 * dim * dim)
    throw std::logic_error("matching_interval_cover: component bound exceeded");

  for (auto [lo, hi_t] : admissible) cover.pieces.push_back({lo, hi_t, phi});

  // Verification: every grid time matched by h within 4*delta must fall in a
  // piece, and on piece grids the best-matching flow shadows within C52*delta.
  cover.check.n_grid = std::max(2, n_grid);
  const double tol = 1e-9 * (1.0 + R);
  for (int i = 0; i < cover.check.n_grid; ++i) {
    double t = R * i / (cover.check.n_grid - 1.0);
    double dmatch = dist(gmul(f.u_flow(h(t)), x_lift), gmul(f.u_flow(t), y_lift));
    if (dmatch >= 4.0 * delta) continue;
    ++cover.check.matched_points;
    bool covered = false;
    for (const auto& p : cover.pieces)
      if (t >= p.lo - tol && t <= p.hi + tol) { covered = true; break; }
    if (!covered) ++cover.check.uncovered;
  }
  for (const auto& p : cover.pieces) {
    int n = 33;
    for (int i = 0; i < n; ++i) {
      double t = p.lo + (p.hi - p.lo) * i / (n - 1.0);
      double v = best_match_eval(p.phi, t).phi;
      double d = dist(gmul(f.u_flow(v), x_lift), gmul(f.u_flow(t), y_lift));
      cover.check.max_matched_dist = std::max(cover.check.max_matched_dist, d);
    }
  }
  return cover;
}

// --- one-dimensional Remez spot check ----------------------------------------

double chebyshev_comparison_bound(int k, double lam) {
  if (k < 0 || k > 8) throw std::invalid_argument("chebyshev_comparison_bound: degree outside 0..8");
  if (!(lam > 0.0) || lam > 1.0)
    throw std::invalid_argument("chebyshev_comparison_bound: lam outside (0, 1]");
  double z = (2.0 - lam) / lam;
  if (z <= 1.0) return 1.0;
  return std::cosh(k * std::acosh(z));
}

RemezCheck remez_spot_check(int k, double lam, int trials, std::uint64_t seed) {
  if (k < 0 || k > 8) throw std::invalid_argument("remez_spot_check: degree outside 0..8");
  if (!(lam > 0.0) || lam > 1.0)
    throw std::invalid_argument("remez_spot_check: lam outside (0, 1]");
  if (trials < 1) throw std::invalid_argument("remez_spot_check: need at least one trial");

  RemezCheck out;
  out.bound = chebyshev_comparison_bound(k, lam);
  out.trials = trials;

  CounterRng rng(seed, "remez/" + std::to_string(k) + "/" + std::to_string(lam));
  for (int trial = 0; trial < trials; ++trial) {
    Vec p;
    std::vector<std::pair<double, double>> w;
    if (trial == 0) {
      // Extremal configuration: the Chebyshev polynomial of [0, lam] on W = [0, lam].
      p = chebyshev_coeffs(k, 0.0, lam);
      w = {{0.0, lam}};
    } else {
      p = Vec::Zero(k + 1);
      for (int m = 0; m <= k; ++m) p[m] = rng.normal();
      // W = union of m subintervals of total length exactly lam, placed by
      // exponential stick-breaking of the complementary gaps.
      int m = rng.uniform_int(1, 4);
      std::vector<double> gaps(m + 1), lens(m);
      double gs = 0.0, ls = 0.0;
      for (double& v : gaps) { v = -std::log(1.0 - rng.uniform()); gs += v; }
      for (double& v : lens) { v = 1e-3 - std::log(1.0 - rng.uniform()); ls += v; }
      double t = 0.0;
      for (int i = 0; i < m; ++i) {
        t += gaps[i] / gs * (1.0 - lam);
        double len = lens[i] / ls * lam;
        w.emplace_back(t, t + len);
        t += len;
      }
    }
    // Exact sups via the critical points of p, shared across subintervals.
    std::vector<double> crit = poly_real_roots(poly_derivative(p), 0.0, 1.0);
    auto sup_on = [&](double lo, double hi) {
      double best = std::max(std::abs(poly_eval(p, lo)), std::abs(poly_eval(p, hi)));
      for (double r : crit)
        if (r >= lo && r <= hi) best = std::max(best, std::abs(poly_eval(p, r)));
      return best;
    };
    double sup_b = sup_on(0.0, 1.0);
    double sup_w = 0.0;
    for (auto [lo, hi] : w) sup_w = std::max(sup_w, sup_on(lo, hi));
    if (sup_w < 1e-300) continue;
    out.max_ratio = std::max(out.max_ratio, sup_b / sup_w);
  }
  return out;
}

}  // namespace ulab
