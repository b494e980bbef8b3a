#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ulab/lattice.hpp"
#include "ulab/linalg.hpp"

namespace ulab {

// Horocycle-side displacement w = ubar_s a_p whose matched u-orbit shadowing
// admits closed forms.
struct BestMatchParams {
  double s = 0.0;  // ubar coordinate
  double p = 0.0;  // diagonal coordinate; needs |p| < eps14 for the bounds
};

struct BestMatchValue {
  double phi = 0.0;   // matched time
  double s_t = 0.0;   // ubar coordinate of u_{phi(t)} w u_{-t}
  double p_t = 0.0;   // diagonal coordinate of the same
  double dphi = 1.0;  // phi'(t)
};

// Closed forms for the exact 2x2 identity u_{phi(t)} ubar_s a_p u_{-t} = ubar_{s_t} a_{p_t}:
//   phi(t) = t e^p / (e^{-p} - t s e^p)      s_t   = s e^p (e^{-p} - s e^p t)
//   p_t    = -log(e^{-p} - s e^p t)          phi'  = (e^{-p} - t s e^p)^{-2}.
// The identity lives on the chart where the denominator stays positive;
// denominators below 1e-9 throw std::domain_error.
BestMatchValue best_match_eval(const BestMatchParams& w, double t);

// Grid scan of |phi'(t) - 1| < sqrt(eps) over t in [0, eps/|s|] (a single
// evaluation when s = 0, where phi' == e^{2p}).  Requires |p| < eps <= eps14;
// violations throw std::domain_error.
bool best_match_derivative_bound(const BestMatchParams& w, double eps, int n_grid = 1024);

// A two-sided orbit matching: an increasing time-alignment h on [-R, R]
// together with the matched set A where the aligned orbits stay delta-close
// and the slope stays within (1 - eps, 1 + eps).
//
// Two representations share the struct, selected by `smoothed`:
//   * finder form: h is globally piecewise linear through (knots_t, knots_h);
//     on A the slope is exactly 1, between matched runs it ramps monotonically.
//   * smoothed form: h is the C^infinity function obtained by straightening h
//     across its defect intervals, mollifying each half with a bump of half
//     width `mollify_width`, and blending the halves across 0 with bump-CDF
//     switches of half width `glue_scale` centered at -2*glue_scale and
//     +2*glue_scale.  The half data (pos/neg knot lists) plus the two widths
//     determine h in closed form; `sample_*` hold dense diagnostic samples.
struct MatchingResult {
  std::vector<std::pair<double, double>> A;  // disjoint closed intervals in [-R, R]
  std::vector<double> knots_t, knots_h;      // piecewise-linear h (finder form)
  double delta = 0.0;
  double eps = 0.0;
  double R = 0.0;
  bool zero_anchored = true;  // h(0) = 0 and 0 in A
  bool smoothed = false;
  // Smoothed form: straightened halves on [0, R] and [-R, 0] (slope-1
  // extension beyond their ends), mollifier half width, glue switch scale.
  std::vector<double> pos_knots_t, pos_knots_h;
  std::vector<double> neg_knots_t, neg_knots_h;
  double mollify_width = 0.0;
  double glue_scale = 0.0;
  std::vector<double> sample_t, sample_h, sample_dh;  // dense diagnostics
};

// Evaluate h (and its slope) for either representation.  The smoothed form is
// evaluated in closed form: mollification of a piecewise-linear function by a
// compact bump has an exact expression through the bump's CDF and first
// moment, so matching_slope is the true derivative of matching_eval.
double matching_eval(const MatchingResult& m, double t);
double matching_slope(const MatchingResult& m, double t);

// Total length of the matched set A.
double matched_length(const MatchingResult& m);

std::string matching_to_json(const MatchingResult& m);

// Slope-constrained monotone alignment of the two u-orbit segments over
// [-R, R].  Dynamic programming on a (time, offset)-grid: time steps of size
// ~grid_step, offset steps of half that size, per-step offset change in
// {-1, 0, +1} quanta.  The score awards one point per matched cell (a cell
// whose endpoints stay within quotient distance delta at constant offset)
// minus the capped endpoint distance scaled by 1/(10 delta), which presses
// the alignment against the distance valley instead of letting it coast
// anywhere inside the delta-tube; remaining ties resolve toward slope 1.
// The grid extends a discarded margin beyond +-R so end-of-window effects
// cannot pull the alignment off the valley inside [-R, R].
// h(0) = 0 is enforced exactly; the result is the maximal-run
// matched set A, or nullopt when 0 is unmatched or l(A) <= (1 - eps) 2R.
// Deterministic in its inputs.  Requires 0 < grid_step <= delta / 10 and
// R >= grid_step; throws std::invalid_argument otherwise.
std::optional<MatchingResult> find_matching(const QuotientPoint& x, const QuotientPoint& y,
                                            double delta, double eps, double R,
                                            double grid_step);

// Open interval with an assigned weight >= its length (the weight also
// accounts for the alignment's variation across the interval).
struct WeightedOpen {
  double lo = 0.0;
  double hi = 0.0;
  double weight = 0.0;
};

struct GoodCover {
  std::vector<std::pair<double, double>> covers;  // disjoint, within [0, R]
  std::vector<int> assignment;                    // opens[i] inside covers[f[i]]
};

// Inflate disjoint weighted opens of [0, R] into disjoint cover intervals:
// each cover's length is exactly (sum of its members' weights) / sqrt(eps),
// built by the greedy inflate-and-merge loop (place an interval of the
// prescribed length around each open, merging with any cover it touches and
// re-placing until disjoint, clamped into [0, R]).  Preconditions: R > 10,
// 0 < eps <= 1/400 (so the inflated total fits in [0, R]), opens disjoint
// inside [0, R], weight_i >= length(O_i), sum of weights < 20 eps R; violations
// throw std::invalid_argument.
GoodCover good_cover(const std::vector<WeightedOpen>& opens, double eps, double R);

// Regularize a matching into a globally smooth one.  Per half of [-R, R]:
// cover the defect gaps of A with good_cover intervals (weights = max of gap
// length and h-variation), replace h by the straight chord across each cover
// interval (slope then within eps + sqrt(eps) of 1 everywhere), mollify with a
// compact bump, and blend the two halves across 0 so that h(0) = 0 holds
// exactly.  The result is a (2 delta, C sqrt(eps), R)-matching with C from
// calibration (C_smooth); its matched set excises the covers, their mollified
// fringe, and the blend window (-2 glue_scale, 2 glue_scale) apart from {0}.
//
// Domain guards (std::domain_error): the input must satisfy the matching
// invariants with zero_anchored = true and smoothed = false, R >= 100,
// eps <= the calibrated smooth_eps_gate, and delta >= 50 eps (eps + sqrt(eps))
// so the blend window's deviation from h stays inside the distance budget.
// The gate replaces an impractically tiny theoretical threshold whose widths
// underflow double rounding at R ~ 100 scale; within the gate every produced
// bound is checked, not assumed.
MatchingResult smooth_matching(const MatchingResult& m);

}  // namespace ulab
