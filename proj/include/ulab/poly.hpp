#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ulab/chain_basis.hpp"
#include "ulab/linalg.hpp"
#include "ulab/matching.hpp"

namespace ulab {

// Coordinates of u_t X u_{-t} as polynomials in t.  Conjugation by the
// unipotent flow is polynomial because ad_u is nilpotent: column k of coeffs
// holds the t^k coefficient vector (ad_u^k X) / k! in chain-basis coordinates.
// The chain coordinate (i,j) has degree <= q_j - i and its t^k coefficient is
// (-1)^k theta_{i+k,j} / k!; the u/a/ubar coordinates have degree <= 2.
struct ChainPolynomial {
  GroupTag tag = GroupTag::SL2;
  Eigen::MatrixXd coeffs;  // n_coords x (degree+1)

  Vec eval(double t) const;          // coordinate vector at time t
  Vec coord_poly(int m) const;       // ascending coefficients of coordinate m, trimmed
  int degree(int m) const;           // trimmed degree of coordinate m
};

ChainPolynomial ad_unipotent_poly(const AlgebraElement& x, const ChainBasis& cb);

// --- scalar polynomial utilities (ascending coefficients) ------------------

double poly_eval(const Vec& coeffs, double t);
Vec poly_derivative(const Vec& coeffs);

// Real roots in [lo, hi]: companion-matrix eigenvalues polished by bisection
// (bracketing sign change when one exists, Newton otherwise) to width 1e-10.
std::vector<double> poly_real_roots(const Vec& coeffs, double lo, double hi);

// Exact sup of |p| over [lo, hi] via the critical points of p.
double poly_sup_abs(const Vec& coeffs, double lo, double hi);

// Connected components of { t in [lo, hi] : |p(t)| <= level }.
std::vector<std::pair<double, double>> poly_sublevel_intervals(const Vec& coeffs,
                                                               double level, double lo,
                                                               double hi);

// Ascending coefficients of the Chebyshev polynomial T_d mapped to [lo, hi].
Vec chebyshev_coeffs(int d, double lo, double hi);

// --- coefficient <-> sup bounds --------------------------------------------

// Certificate for the two-way bound between sup_{[0,T]} |p| and the scaled
// coefficients |a_k| T^k with the shipped constant C1(d):
//   forward:  max |p| over the d+1 Chebyshev extrema of [0,T] <= eps
//             implies |a_k| T^k <= C1(d) eps for all k;
//   converse: |a_k| T^k <= eps / C1(d) for all k implies sup |p| <= eps.
// Each *_holds flag is the implication (vacuously true when the premise fails).
struct CoeffBoundCheck {
  bool forward_holds = true;
  bool converse_holds = true;
  bool forward_premise = false;   // extrema-grid sup <= eps
  bool converse_premise = false;  // scaled coefficients <= eps / C1(d)
  double grid_sup = 0.0;          // max |p| over the degree-adapted extrema grid
  double sup_exact = 0.0;         // exact sup of |p| over [0, T]
  double max_scaled_coeff = 0.0;  // max_k |a_k| T^k
  double c1 = 1.0;                // the constant used
};

CoeffBoundCheck coeff_bounds(const Vec& coeffs, double T, double eps);

// --- matched-time interval cover --------------------------------------------

struct CoverPiece {
  double lo = 0.0;
  double hi = 0.0;
  BestMatchParams phi;  // best-matching parameters of the displacement
};

struct CoverVerification {
  int n_grid = 0;
  int matched_points = 0;       // grid times where the given matching stays < 4 delta
  int uncovered = 0;            // matched grid times missed by every piece
  double max_matched_dist = 0.0;  // max over piece grids of d(u_{phi(t)} x, u_t y)
};

struct IntervalCover {
  std::vector<CoverPiece> pieces;
  double cap = 0.0;  // right end of the admissible bracket [0, kappa delta / |theta_ubar|]
  CoverVerification check;
};

// Covers { t in [0, R] : d(u_{h(t)} x, u_t y) < 4 delta } by at most
// 3 (dim g)^2 closed intervals on which the best-matching flow of g = x y^{-1}
// shadows within the calibrated multiple of delta.  h must fix 0 and have
// slope within eps of 1; dist(x, y) < delta is required.
IntervalCover matching_interval_cover(const GroupElement& x_lift, const GroupElement& y_lift,
                                      const std::function<double(double)>& h, double delta,
                                      double R, const ChainBasis& cb, int n_grid = 1001);

// --- one-dimensional Remez spot check ---------------------------------------

// T_k((2 - lam) / lam): the sup ratio attained by the Chebyshev polynomial of
// the length-lam subinterval, extremal among degree-k polynomials and
// measurable W with |W| >= lam |B|.
double chebyshev_comparison_bound(int k, double lam);

struct RemezCheck {
  double max_ratio = 0.0;
  double bound = 0.0;
  int trials = 0;
};

// Over random degree-k polynomials and random unions of subintervals W with
// |W| = lam (trial 0 is the extremal configuration), returns the maximum of
// sup_B |p| / sup_W |p| with both sups evaluated exactly via critical points.
RemezCheck remez_spot_check(int k, double lam, int trials, std::uint64_t seed = 2026);

}  // namespace ulab
