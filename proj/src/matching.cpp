#include "ulab/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ulab/constants.hpp"
#include "ulab/flows.hpp"
#include "ulab/group.hpp"

namespace ulab {

BestMatchValue best_match_eval(const BestMatchParams& w, double t) {
  const double ep = std::exp(w.p);
  const double em = std::exp(-w.p);
  const double denom = em - t * w.s * ep;
  if (denom < 1e-9) throw std::domain_error("best_match_eval: matching-time singularity");
  BestMatchValue v;
  v.phi = t * ep / denom;
  v.s_t = w.s * ep * denom;
  v.p_t = -std::log(denom);
  v.dphi = 1.0 / (denom * denom);
  return v;
}

bool best_match_derivative_bound(const BestMatchParams& w, double eps, int n_grid) {
  if (!(eps > 0.0) || eps > calib().eps14 || std::abs(w.p) >= eps)
    throw std::domain_error("best_match_derivative_bound: needs |p| < eps <= eps14");
  const double tol = std::sqrt(eps);
  if (w.s == 0.0) return std::abs(std::exp(2.0 * w.p) - 1.0) < tol;
  const double t_max = eps / std::abs(w.s);
  if (n_grid < 2) n_grid = 2;
  for (int k = 0; k < n_grid; ++k) {
    const double t = t_max * double(k) / double(n_grid - 1);
    if (std::abs(best_match_eval(w, t).dphi - 1.0) >= tol) return false;
  }
  return true;
}

namespace {

// ---------------------------------------------------------------------------
// Mollifier machinery: the normalized bump rho(q) = exp(-1/(1-q^2)) / Z on
// (-1, 1), its CDF F and first moment M(q) = int_{-1}^{q} s rho(s) ds.  Both
// are evaluated on demand by composite Gauss-Legendre quadrature from -1 to q
// (the integrand is smooth with compact support, so the fixed panel count is
// far below double rounding).  Evaluating the integral up to a moving
// endpoint keeps F and M smooth functions of q, which makes the stored slope
// of a mollified function the true derivative of its stored value.

double bump_raw(double q) {
  const double d = 1.0 - q * q;
  return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
}

struct GaussPanel {
  // 8-point Gauss-Legendre nodes/weights on [-1, 1].
  static constexpr int n = 8;
  static constexpr double xs[8] = {-0.9602898564975362, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975362};
  static constexpr double ws[8] = {0.1012285362903763, 0.2223810344533745,
                                   0.3137066458778873, 0.3626837833783620,
                                   0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
};

// Integrates f over [a, b] with `panels` composite Gauss-Legendre panels.
template <class F>
double gauss_integrate(F f, double a, double b, int panels) {
  double total = 0.0;
  const double hp = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * hp;
    const double mid = lo + hp / 2;
    double acc = 0.0;
    for (int j = 0; j < GaussPanel::n; ++j) acc += GaussPanel::ws[j] * f(mid + hp / 2 * GaussPanel::xs[j]);
    total += acc * hp / 2;
  }
  return total;
}

double bump_mass() {
  static const double z = gauss_integrate(bump_raw, -1.0, 1.0, 64);
  return z;
}

double bump_density(double q) { return bump_raw(q) / bump_mass(); }

// CDF of the normalized bump; exactly 0 / 1 outside (-1, 1).
double bump_cdf(double q) {
  if (q <= -1.0) return 0.0;
  if (q >= 1.0) return 1.0;
  return gauss_integrate(bump_raw, -1.0, q, 32) / bump_mass();
}

// First moment int_{-1}^{min(q,1)} s rho(s) ds; exactly 0 outside (-1, 1)
// (the full integral vanishes by symmetry).
double bump_moment(double q) {
  if (q <= -1.0 || q >= 1.0) return 0.0;
  return gauss_integrate([](double s) { return s * bump_raw(s); }, -1.0, q, 32) / bump_mass();
}

// ---------------------------------------------------------------------------
// Piecewise-linear alignments are handled through their deviation from the
// identity, g(t) = h(t) - t: every quantity of interest (slopes near 1,
// values within a few delta of t) stays small in that form, so mollification
// and blending arithmetic below never subtracts numbers of size R.

struct PwlDeviation {
  std::vector<double> t;   // strictly increasing knots
  std::vector<double> g;   // h - id at the knots
  std::vector<double> m;   // g-slope on [t_k, t_{k+1}); empty when single knot
};

PwlDeviation make_deviation(const std::vector<double>& kt, const std::vector<double>& kh) {
  PwlDeviation d;
  d.t = kt;
  d.g.resize(kt.size());
  for (size_t k = 0; k < kt.size(); ++k) d.g[k] = kh[k] - kt[k];
  if (kt.size() >= 2) {
    d.m.resize(kt.size() - 1);
    for (size_t k = 0; k + 1 < kt.size(); ++k)
      d.m[k] = (d.g[k + 1] - d.g[k]) / (kt[k + 1] - kt[k]);
  }
  return d;
}

// Segment index so that t in [t_k, t_{k+1}); clamps to the end segments.
size_t segment_of(const std::vector<double>& knots, double t) {
  if (knots.size() < 2 || t < knots.front()) return 0;
  size_t k = size_t(std::upper_bound(knots.begin(), knots.end(), t) - knots.begin());
  if (k > 0) --k;
  if (k + 1 >= knots.size()) k = knots.size() - 2;
  return k;
}

// g extended by constants beyond the knot range (slope-1 extension of h).
double pwl_g(const PwlDeviation& d, double t) {
  if (d.t.empty()) return 0.0;
  if (t <= d.t.front()) return d.g.front();
  if (t >= d.t.back()) return d.g.back();
  const size_t k = segment_of(d.t, t);
  return d.g[k] + (t - d.t[k]) * d.m[k];
}

double pwl_m(const PwlDeviation& d, double t) {
  if (d.m.empty() || t < d.t.front() || t >= d.t.back()) return 0.0;
  return d.m[segment_of(d.t, t)];
}

// Mollification of a piecewise-linear g by the bump of half width w, in
// closed form: smoothing only bends g within w of its knots,
//   g_w(t)  = g(t) + sum_k dm_k psi(t - t_k),   dm_k = m_k - m_{k-1},
//   psi(u)  = u (F(u/w) - step(u)) - w M(u/w),  psi'(u) = F(u/w) - step(u),
// with step(u) = 1 for u >= 0 (matching the right-continuous segment slope).
struct MollifiedValue {
  double g = 0.0;
  double dg = 0.0;
};

MollifiedValue mollified_eval(const PwlDeviation& d, double w, double t) {
  MollifiedValue v{pwl_g(d, t), pwl_m(d, t)};
  if (d.t.empty() || w <= 0.0) return v;
  // Knots within (t - w, t + w) contribute; locate them by binary search.
  const auto lo = std::lower_bound(d.t.begin(), d.t.end(), t - w);
  const auto hi = std::upper_bound(d.t.begin(), d.t.end(), t + w);
  for (auto it = lo; it != hi; ++it) {
    const size_t k = size_t(it - d.t.begin());
    const double m_before = k == 0 ? 0.0 : d.m[k - 1];
    const double m_after = k < d.m.size() ? d.m[k] : 0.0;
    const double dm = m_after - m_before;
    if (dm == 0.0) continue;
    const double u = t - d.t[k];
    const double step = u >= 0.0 ? 1.0 : 0.0;
    const double fq = bump_cdf(u / w) - step;
    v.g += dm * (u * fq - w * bump_moment(u / w));
    v.dg += dm * fq;
  }
  return v;
}

// Blend switches of the smoothed form: s1 ramps 0 -> 1 across
// [-3 gs, -gs], s2 across [gs, 3 gs] (bump CDFs of half width gs centered at
// -2 gs and +2 gs).
struct BlendState {
  double s1 = 0.0, s2 = 0.0;    // switch values
  double ds1 = 0.0, ds2 = 0.0;  // their derivatives
};

BlendState blend_state(double gs, double t) {
  BlendState b;
  b.s1 = bump_cdf((t + 2 * gs) / gs);
  b.s2 = bump_cdf((t - 2 * gs) / gs);
  b.ds1 = bump_density((t + 2 * gs) / gs) / gs;
  b.ds2 = bump_density((t - 2 * gs) / gs) / gs;
  return b;
}

struct SmoothValue {
  double h = 0.0;
  double dh = 0.0;
};

// h(t) = t + (1 - s1) g_neg(t) + s2 g_pos(t) where g_± are the mollified
// half deviations; this is the blend (1-s1) h_neg + (s1-s2) id + s2 h_pos
// rearranged so only small quantities are combined.  h(0) = 0 exactly since
// s1(0) = 1 and s2(0) = 0.
SmoothValue smooth_eval(const MatchingResult& m, double t) {
  const PwlDeviation neg = make_deviation(m.neg_knots_t, m.neg_knots_h);
  const PwlDeviation pos = make_deviation(m.pos_knots_t, m.pos_knots_h);
  const BlendState b = blend_state(m.glue_scale, t);
  SmoothValue v;
  v.h = t;
  v.dh = 1.0;
  if (b.s1 < 1.0 || b.ds1 != 0.0) {
    const MollifiedValue gn = mollified_eval(neg, m.mollify_width, t);
    v.h += (1.0 - b.s1) * gn.g;
    v.dh += (1.0 - b.s1) * gn.dg - b.ds1 * gn.g;
  }
  if (b.s2 > 0.0 || b.ds2 != 0.0) {
    const MollifiedValue gp = mollified_eval(pos, m.mollify_width, t);
    v.h += b.s2 * gp.g;
    v.dh += b.s2 * gp.dg + b.ds2 * gp.g;
  }
  return v;
}

double pwl_eval(const std::vector<double>& kt, const std::vector<double>& kh, double t) {
  if (kt.empty()) return t;
  if (kt.size() == 1) return kh.front() + (t - kt.front());
  const size_t k = segment_of(kt, t);
  const double m = (kh[k + 1] - kh[k]) / (kt[k + 1] - kt[k]);
  return kh[k] + (t - kt[k]) * m;
}

double pwl_slope(const std::vector<double>& kt, const std::vector<double>& kh, double t) {
  if (kt.size() < 2) return 1.0;
  const size_t k = segment_of(kt, t);
  return (kh[k + 1] - kh[k]) / (kt[k + 1] - kt[k]);
}

}  // namespace

double matching_eval(const MatchingResult& m, double t) {
  if (!m.smoothed) return pwl_eval(m.knots_t, m.knots_h, t);
  return smooth_eval(m, t).h;
}

double matching_slope(const MatchingResult& m, double t) {
  if (!m.smoothed) return pwl_slope(m.knots_t, m.knots_h, t);
  return smooth_eval(m, t).dh;
}

double matched_length(const MatchingResult& m) {
  double total = 0.0;
  for (const auto& iv : m.A) total += iv.second - iv.first;
  return total;
}

std::string matching_to_json(const MatchingResult& m) {
  nlohmann::json j;
  j["delta"] = m.delta;
  j["eps"] = m.eps;
  j["R"] = m.R;
  j["zero_anchored"] = m.zero_anchored;
  j["smoothed"] = m.smoothed;
  j["matched_length"] = matched_length(m);
  nlohmann::json a = nlohmann::json::array();
  for (const auto& iv : m.A) a.push_back({iv.first, iv.second});
  j["A"] = a;
  j["knots_t"] = m.knots_t;
  j["knots_h"] = m.knots_h;
  if (m.smoothed) {
    j["pos_knots_t"] = m.pos_knots_t;
    j["pos_knots_h"] = m.pos_knots_h;
    j["neg_knots_t"] = m.neg_knots_t;
    j["neg_knots_h"] = m.neg_knots_h;
    j["mollify_width"] = m.mollify_width;
    j["glue_scale"] = m.glue_scale;
    j["sample_t"] = m.sample_t;
    j["sample_h"] = m.sample_h;
    j["sample_dh"] = m.sample_dh;
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Finder: dynamic programming over (time index, offset index) states.

namespace {

struct DpOutcome {
  std::vector<int> offset;  // offset index per absolute grid index over the run
  int max_abs_offset = 0;
};

// Runs the one-sided DP from the anchor outward (dir = +1 to the right,
// -1 to the left).  States are offset indices k in [-K, K]; a step advances
// one time cell and changes k by at most one quantum.  The score per step is
// one point for a matched cell (constant-offset step whose two endpoints are
// both within delta) minus the capped arrival distance scaled by 1/(10 delta).
// Blending the two terms keeps the path pressed against the distance valley:
// a pure matched-count objective would let the path coast anywhere inside the
// delta-tube, drifting O(delta) away from the true matched-time curve, while
// the distance term alone would never sacrifice proximity for coverage.
template <class DistFn>
DpOutcome dp_side(int steps, int K, double delta, DistFn&& dist_at) {
  const int W = 2 * K + 1;
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> score(W, -kInf);
  std::vector<int8_t> parent(size_t(steps) * W, int8_t(-9));
  score[K] = 0.0;
  std::vector<double> nscore(W);
  for (int s = 0; s < steps; ++s) {
    std::fill(nscore.begin(), nscore.end(), -kInf);
    for (int kk = 0; kk < W; ++kk) {
      double arrive = -1.0;  // evaluated lazily once a live parent shows up
      // Parent preference order: constant offset, then +1, then -1.
      static constexpr int dks[3] = {0, 1, -1};
      for (int dk : dks) {
        const int pk = kk - dk;
        if (pk < 0 || pk >= W) continue;
        if (score[pk] == -kInf) continue;
        if (arrive < 0.0) arrive = std::min(dist_at(s + 1, kk - K), 10.0 * delta);
        double gain = 0.0;
        if (dk == 0 && dist_at(s, pk - K) < delta && dist_at(s + 1, kk - K) < delta) gain = 1.0;
        const double cs = score[pk] + gain - arrive / (10.0 * delta);
        if (cs > nscore[kk]) {
          nscore[kk] = cs;
          parent[size_t(s) * W + kk] = int8_t(dk);
        }
      }
    }
    score.swap(nscore);
  }
  // Final state: best score, then smallest |k|, then smallest k.
  int best = -1;
  for (int kk = 0; kk < W; ++kk) {
    if (score[kk] == -kInf) continue;
    if (best < 0 || score[kk] > score[best] ||
        (score[kk] == score[best] && std::abs(kk - K) < std::abs(best - K)))
      best = kk;
  }
  DpOutcome out;
  out.offset.assign(size_t(steps) + 1, 0);
  int kk = best;
  for (int s = steps - 1; s >= 0; --s) {
    out.offset[size_t(s) + 1] = kk - K;
    kk -= parent[size_t(s) * W + kk];
  }
  out.offset[0] = kk - K;  // anchor; equals 0 by construction
  for (int v : out.offset) out.max_abs_offset = std::max(out.max_abs_offset, std::abs(v));
  return out;
}

}  // namespace

std::optional<MatchingResult> find_matching(const QuotientPoint& x, const QuotientPoint& y,
                                            double delta, double eps, double R,
                                            double grid_step) {
  if (!(delta > 0.0) || !(grid_step > 0.0) || grid_step > delta / 10.0 * (1 + 1e-12))
    throw std::invalid_argument("find_matching: needs 0 < grid_step <= delta/10");
  if (!(eps > 0.0) || eps >= 1.0) throw std::invalid_argument("find_matching: needs eps in (0,1)");
  if (!(R >= grid_step)) throw std::invalid_argument("find_matching: needs R >= grid_step");

  const int nh = int(std::ceil(R / grid_step - 1e-12));
  const double step = R / nh;   // time cell size, <= grid_step
  const double lam = step / 2;  // offset quantum
  // The grid carries a padding margin beyond [-R, R].  Without it the final
  // cells of the window have no future to amortize an offset change against,
  // so the alignment coasts off the distance valley near +-R (a standard
  // dynamic-programming end effect).  With the margin that coasting happens
  // in discarded padding cells and the alignment stays on the valley inside
  // [-R, R].  Padding cells never enter A.
  const int P = std::max(12, (3 * nh) / 20);
  const int N = 2 * nh + 2 * P;  // grid indices 0..N, anchor in the middle
  const int ia = nh + P;
  const int iLo = P, iHi = 2 * nh + P;  // indices of -R and +R
  auto t_at = [&](int i) { return (i - ia) * step; };

  // Lazy distance table d(i, k) = quotient_dist(u_{t_i + k lam} x, u_{t_i} y).
  std::vector<std::optional<QuotientPoint>> uy(size_t(N) + 1);
  std::unordered_map<int64_t, double> memo;
  auto dist_at = [&](int i, int k) -> double {
    const int64_t key = int64_t(i) * 8000011 + k;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    if (!uy[size_t(i)]) uy[size_t(i)] = flow_u(y, t_at(i));
    const QuotientPoint ux = flow_u(x, t_at(i) + k * lam);
    const double d = quotient_dist(ux, *uy[size_t(i)]);
    memo.emplace(key, d);
    return d;
  };

  // Window growth: start near the local search width, stop at the drift
  // capacity the slope budget allows over the padded range.
  const double Rpad = R + P * step;
  const int k_cap = int(std::ceil((2.0 * Rpad * eps + 10.0 * delta) / lam)) + 4;
  int K = std::min(k_cap, 8 + int(std::ceil(delta / lam)));
  std::vector<int> offs(size_t(N) + 1, 0);
  for (;;) {
    const DpOutcome right = dp_side(N - ia, K, delta, [&](int s, int k) { return dist_at(ia + s, k); });
    const DpOutcome left = dp_side(ia, K, delta, [&](int s, int k) { return dist_at(ia - s, k); });
    for (int s = 0; s <= N - ia; ++s) offs[size_t(ia + s)] = right.offset[size_t(s)];
    for (int s = 0; s <= ia; ++s) offs[size_t(ia - s)] = left.offset[size_t(s)];
    const int used = std::max(right.max_abs_offset, left.max_abs_offset);
    if (used < K || K >= k_cap) break;
    K = std::min(2 * K, k_cap);
  }

  // Matched cells within [-R, R]: constant offset, both endpoints within delta.
  std::vector<bool> matched(size_t(N), false);
  for (int i = iLo; i < iHi; ++i)
    matched[size_t(i)] = offs[size_t(i)] == offs[size_t(i) + 1] &&
                         dist_at(i, offs[size_t(i)]) < delta &&
                         dist_at(i + 1, offs[size_t(i) + 1]) < delta;

  MatchingResult m;
  m.delta = delta;
  m.eps = eps;
  m.R = R;
  m.zero_anchored = true;
  m.smoothed = false;
  for (int i = iLo; i < iHi;) {
    if (!matched[size_t(i)]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < iHi && matched[size_t(j)]) ++j;
    m.A.emplace_back(std::max(t_at(i), -R), std::min(t_at(j), R));
    i = j;
  }
  if (m.A.empty()) return std::nullopt;
  bool zero_in = false;
  for (const auto& iv : m.A) zero_in = zero_in || (iv.first <= 0.0 && 0.0 <= iv.second);
  if (!zero_in) return std::nullopt;
  if (!(matched_length(m) > (1.0 - eps) * 2.0 * R)) return std::nullopt;

  // Knots: path vertices where the offset step changes, the ends of [-R, R],
  // and the anchor itself so that h(0) = 0 is represented exactly.
  for (int i = iLo; i <= iHi; ++i) {
    const bool end = i == iLo || i == iHi;
    const bool bend = !end && (offs[size_t(i)] - offs[size_t(i) - 1]) !=
                                  (offs[size_t(i) + 1] - offs[size_t(i)]);
    if (end || bend || i == ia) {
      m.knots_t.push_back(t_at(i));
      m.knots_h.push_back(t_at(i) + offs[size_t(i)] * lam);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Good cover: inflate-and-merge replay.

namespace {

struct Cluster {
  double lo = 0.0, hi = 0.0;    // current interval
  double sumw = 0.0;            // total member weight
  std::vector<int> members;
};

}  // namespace

GoodCover good_cover(const std::vector<WeightedOpen>& opens, double eps, double R) {
  if (!(eps > 0.0) || eps > 1.0 / 400.0)
    throw std::invalid_argument("good_cover: needs 0 < eps <= 1/400");
  if (!(R > 10.0)) throw std::invalid_argument("good_cover: needs R > 10");
  double total = 0.0;
  for (const auto& o : opens) {
    if (!(o.lo >= 0.0 && o.lo < o.hi && o.hi <= R))
      throw std::invalid_argument("good_cover: opens must be nonempty intervals inside [0,R]");
    if (!(o.weight >= (o.hi - o.lo) * (1 - 1e-12)))
      throw std::invalid_argument("good_cover: weight below interval length");
    total += o.weight;
  }
  if (!(total < 20.0 * eps * R))
    throw std::invalid_argument("good_cover: total weight must be < 20 eps R");
  std::vector<int> order(opens.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return opens[size_t(a)].lo < opens[size_t(b)].lo; });
  for (size_t i = 0; i + 1 < order.size(); ++i)
    if (opens[size_t(order[i])].hi > opens[size_t(order[i + 1])].lo + 1e-12)
      throw std::invalid_argument("good_cover: opens must be disjoint");

  const double rt = std::sqrt(eps);
  std::vector<Cluster> act;
  for (size_t idx = 0; idx < opens.size(); ++idx) {
    Cluster nc;
    nc.lo = opens[idx].lo;
    nc.hi = opens[idx].hi;
    nc.sumw = opens[idx].weight;
    nc.members = {int(idx)};
    // Absorb any active cluster the placed interval touches, re-placing the
    // union until nothing overlaps.
    for (;;) {
      const double len = nc.sumw / rt;
      double slack = len - (nc.hi - nc.lo);
      double lo = nc.lo - slack / 2;
      if (lo < 0.0) lo = 0.0;
      if (lo + len > R) lo = R - len;
      nc.lo = lo;
      nc.hi = lo + len;
      bool grew = false;
      for (size_t c = 0; c < act.size(); ++c) {
        if (act[c].hi < nc.lo || act[c].lo > nc.hi) continue;
        nc.lo = std::min(nc.lo, act[c].lo);
        nc.hi = std::max(nc.hi, act[c].hi);
        nc.sumw += act[c].sumw;
        nc.members.insert(nc.members.end(), act[c].members.begin(), act[c].members.end());
        act.erase(act.begin() + long(c));
        grew = true;
        break;
      }
      if (!grew) break;
    }
    act.push_back(nc);
  }

  std::sort(act.begin(), act.end(), [](const Cluster& a, const Cluster& b) { return a.lo < b.lo; });
  GoodCover gc;
  gc.assignment.assign(opens.size(), -1);
  for (size_t c = 0; c < act.size(); ++c) {
    gc.covers.emplace_back(act[c].lo, act[c].hi);
    for (int i : act[c].members) gc.assignment[size_t(i)] = int(c);
  }
  return gc;
}

// ---------------------------------------------------------------------------
// Smoothing pipeline.

namespace {

// Defect gaps of the matched set inside [0, R]; weights carry the larger of
// the gap's length and the alignment's variation across it.
std::vector<WeightedOpen> half_gaps(const MatchingResult& m,
                                    const std::vector<std::pair<double, double>>& half_A,
                                    double R) {
  std::vector<WeightedOpen> gaps;
  double pos = 0.0;
  auto add_gap = [&](double lo, double hi) {
    if (!(hi - lo > 0.0)) return;
    WeightedOpen o;
    o.lo = lo;
    o.hi = hi;
    o.weight = std::max(hi - lo, matching_eval(m, hi) - matching_eval(m, lo));
    gaps.push_back(o);
  };
  for (const auto& iv : half_A) {
    add_gap(pos, iv.first);
    pos = iv.second;
  }
  add_gap(pos, R);
  return gaps;
}

// Straightened half on [0, R]: h with the chord substituted across each cover
// interval.  Returns the knot list (t, h) of the result.
struct StraightHalf {
  std::vector<double> kt, kh;
  std::vector<std::pair<double, double>> covers;
};

StraightHalf straighten_half(const MatchingResult& m,
                             const std::vector<std::pair<double, double>>& half_A, double R) {
  const std::vector<WeightedOpen> gaps = half_gaps(m, half_A, R);
  GoodCover gc;
  if (!gaps.empty()) gc = good_cover(gaps, m.eps, R);
  StraightHalf out;
  out.covers = gc.covers;
  std::vector<double> ts = {0.0, R};
  for (const auto& q : gc.covers) {
    ts.push_back(q.first);
    ts.push_back(q.second);
  }
  for (double kt : m.knots_t) {
    if (kt <= 0.0 || kt >= R) continue;
    bool inside = false;
    for (const auto& q : gc.covers) inside = inside || (kt > q.first && kt < q.second);
    if (!inside) ts.push_back(kt);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-13; }),
           ts.end());
  for (double t : ts) {
    out.kt.push_back(t);
    out.kh.push_back(matching_eval(m, t));
  }
  return out;
}

// Mirror a matching's data through t -> -t, h -> -h so the negative half can
// reuse the [0, R] construction verbatim.
MatchingResult mirrored(const MatchingResult& m) {
  MatchingResult r = m;
  r.A.clear();
  for (auto it = m.A.rbegin(); it != m.A.rend(); ++it) r.A.emplace_back(-it->second, -it->first);
  r.knots_t.clear();
  r.knots_h.clear();
  for (size_t k = m.knots_t.size(); k-- > 0;) {
    r.knots_t.push_back(-m.knots_t[k]);
    r.knots_h.push_back(-m.knots_h[k]);
  }
  return r;
}

std::vector<std::pair<double, double>> clip_intervals(
    const std::vector<std::pair<double, double>>& ivs, double lo, double hi) {
  std::vector<std::pair<double, double>> out;
  for (const auto& iv : ivs) {
    const double a = std::max(iv.first, lo);
    const double b = std::min(iv.second, hi);
    if (a < b) out.emplace_back(a, b);
  }
  return out;
}

// Remove the inflated covers from the interval list.
std::vector<std::pair<double, double>> subtract_covers(
    std::vector<std::pair<double, double>> ivs,
    const std::vector<std::pair<double, double>>& covers, double fringe) {
  for (const auto& q : covers) {
    const double qa = q.first - fringe;
    const double qb = q.second + fringe;
    std::vector<std::pair<double, double>> next;
    for (const auto& iv : ivs) {
      if (iv.second <= qa || iv.first >= qb) {
        next.push_back(iv);
        continue;
      }
      if (iv.first < qa) next.emplace_back(iv.first, qa);
      if (iv.second > qb) next.emplace_back(qb, iv.second);
    }
    ivs = std::move(next);
  }
  return ivs;
}

void validate_matching_input(const MatchingResult& m) {
  const auto fail = [](const char* msg) { throw std::domain_error(std::string("smooth_matching: ") + msg); };
  if (m.smoothed) fail("input must be a finder-form matching");
  if (!m.zero_anchored) fail("input must be zero-anchored");
  if (!(m.R >= 100.0)) fail("needs R >= 100");
  if (!(m.eps > 0.0) || m.eps > calib().smooth_eps_gate) fail("eps outside the smoothing gate");
  if (!(m.delta >= 50.0 * m.eps * (m.eps + std::sqrt(m.eps))))
    fail("delta too small against the blend-window deviation budget");
  if (m.knots_t.size() < 2 || m.knots_t.size() != m.knots_h.size()) fail("malformed knots");
  for (size_t k = 0; k + 1 < m.knots_t.size(); ++k) {
    if (!(m.knots_t[k] < m.knots_t[k + 1])) fail("knots_t must increase strictly");
    if (!(m.knots_h[k] < m.knots_h[k + 1])) fail("h must increase strictly");
  }
  if (std::abs(matching_eval(m, 0.0)) > 1e-9) fail("h(0) must vanish");
  if (m.A.empty()) fail("empty matched set");
  double prev = -m.R - 1e-9;
  bool zero_in = false;
  for (const auto& iv : m.A) {
    if (!(iv.first >= prev && iv.second >= iv.first)) fail("A must be disjoint and ordered");
    if (!(iv.first >= -m.R - 1e-9 && iv.second <= m.R + 1e-9)) fail("A must lie in [-R, R]");
    zero_in = zero_in || (iv.first <= 0.0 && 0.0 <= iv.second);
    prev = iv.second;
  }
  if (!zero_in) fail("0 must belong to A");
  if (!(matched_length(m) > (1.0 - m.eps) * 2.0 * m.R)) fail("matched length below (1-eps)2R");
  // Slope check on A: every linear piece meeting the interior of A must have
  // slope within (1 - eps, 1 + eps).
  for (size_t k = 0; k + 1 < m.knots_t.size(); ++k) {
    const double a = m.knots_t[k], b = m.knots_t[k + 1];
    const double slope = (m.knots_h[k + 1] - m.knots_h[k]) / (b - a);
    for (const auto& iv : m.A) {
      const double lo = std::max(a, iv.first), hi = std::min(b, iv.second);
      if (hi - lo > 1e-12 && !(std::abs(slope - 1.0) < m.eps)) fail("slope off (1-eps,1+eps) on A");
    }
  }
}

}  // namespace

MatchingResult smooth_matching(const MatchingResult& m) {
  validate_matching_input(m);
  const double R = m.R;
  const double eps = m.eps;
  const double gs = 10.0 * eps;
  const double w = std::min(10.0 * eps * std::sqrt(eps), m.delta / 4.0);

  // Positive half on [0, R]; negative half via mirroring.
  const std::vector<std::pair<double, double>> a_pos = clip_intervals(m.A, 0.0, R);
  const StraightHalf pos = straighten_half(m, a_pos, R);
  const MatchingResult rm = mirrored(m);
  const std::vector<std::pair<double, double>> a_negm = clip_intervals(rm.A, 0.0, R);
  const StraightHalf negm = straighten_half(rm, a_negm, R);

  MatchingResult out;
  out.delta = 2.0 * m.delta;
  out.eps = calib().C_smooth * std::sqrt(eps);
  out.R = R;
  out.zero_anchored = true;
  out.smoothed = true;
  out.mollify_width = w;
  out.glue_scale = gs;
  out.pos_knots_t = pos.kt;
  out.pos_knots_h = pos.kh;
  for (size_t k = negm.kt.size(); k-- > 0;) {
    out.neg_knots_t.push_back(-negm.kt[k]);
    out.neg_knots_h.push_back(-negm.kh[k]);
  }

  // Matched set: per half, the old matched set minus the covers (with a
  // mollifier-width fringe), clipped away from the blend window.
  std::vector<std::pair<double, double>> at_pos =
      clip_intervals(subtract_covers(a_pos, pos.covers, w), 2.0 * gs, R);
  std::vector<std::pair<double, double>> at_negm =
      clip_intervals(subtract_covers(a_negm, negm.covers, w), 2.0 * gs, R);
  for (auto it = at_negm.rbegin(); it != at_negm.rend(); ++it)
    out.A.emplace_back(-it->second, -it->first);
  out.A.emplace_back(0.0, 0.0);
  out.A.insert(out.A.end(), at_pos.begin(), at_pos.end());

  if (!(matched_length(out) > (1.0 - out.eps) * 2.0 * R))
    throw std::logic_error("smooth_matching: matched-set accounting failed");

  // Dense diagnostic samples of the closed-form value and derivative.
  const int n = 4096;
  out.sample_t.reserve(size_t(n) + 1);
  out.sample_h.reserve(size_t(n) + 1);
  out.sample_dh.reserve(size_t(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = -R + 2.0 * R * double(i) / double(n);
    const SmoothValue v = smooth_eval(out, t);
    out.sample_t.push_back(t);
    out.sample_h.push_back(v.h);
    out.sample_dh.push_back(v.dh);
  }
  return out;
}

}  // namespace ulab
