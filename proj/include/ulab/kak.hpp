#pragma once

#include <string>
#include <utility>

#include "ulab/chain_basis.hpp"
#include "ulab/group.hpp"
#include "ulab/lattice.hpp"
#include "ulab/rng.hpp"

namespace ulab {

// Coordinates of the near-identity factorization g = g^h g^z g^tr with
// g^h = u_{theta_u} ubar_{theta_ubar} a_{theta_a}, g^z = exp(central part),
// g^tr = exp(chain-transversal part).
struct KakCoordinates {
  GroupTag tag = GroupTag::SL2;
  double theta_u = 0.0;
  double theta_a = 0.0;
  double theta_ubar = 0.0;
  Vec z_coords;   // one entry per central chain, in chain order
  Vec tr_coords;  // (i,j) entries of non-central chains, flattened in chain order
  GroupElement z_part;
  GroupElement tr_part;
  double residual = 0.0;  // ||reconstruct - g||_F of the solved factorization
};

// Unique nearby factorization, solved by damped Gauss-Newton from the zero
// initial guess (step halving on residual increase).  Requires dist(g,e) < eps6;
// that failing, or no convergence within 50 iterations, throws chart_error.
KakCoordinates decompose(const GroupElement& g, const ChainBasis& cb);

// u_{theta_u} ubar_{theta_ubar} a_{theta_a} (the g^h factor alone).
GroupElement h_part(const KakCoordinates& kc);

// g^h g^z g^tr.
GroupElement reconstruct(const KakCoordinates& kc);

std::string kak_coordinates_to_json(const KakCoordinates& kc, const ChainBasis& cb);

// Certified range for sup_{|t|<=R} d(u_t g u_{-t}, e).  Because u^2 = 0 in every
// built-in fixture, u_t log(g) u_{-t} is a matrix quadratic in t and the squared
// distance is a quartic polynomial; a 177-point grid bounds its sup within a
// Markov-inequality factor 1.1, so sup lies in [lo, hi].
struct BowenCertificate {
  double lo = 0.0;  // max over the grid (a witness lower bound)
  double hi = 0.0;  // certified upper bound for the continuum sup
  int n_grid = 0;
};
BowenCertificate bowen_sup(const GroupElement& g, double R, const ChainBasis& cb, int n_grid = 0);

// d(u_t g u_{-t}, e) < eps for all |t| <= R, certified through bowen_sup
// (conservative: returns true only when the 1.1-slack upper bound clears eps).
bool bowen_member(const GroupElement& g, double R, double eps, const ChainBasis& cb, int n_grid = 0);

// Membership in the Kakutani-Bowen ball: |theta_ubar| < eps/R, |theta_a| < eps,
// |theta_u| < eps, and g^z g^tr in the certified Bowen ball.
bool kak_member(const GroupElement& g, double R, double eps, const ChainBasis& cb);

// Draw a member by sampling each factor coordinate in a box small enough that
// membership is guaranteed; the result is nevertheless re-checked and a failure
// throws std::logic_error.  |theta_{i,j}| scale: margin*eps/(e*sqrt(2)*n*R^i).
GroupElement sample_kak(const ChainBasis& cb, double R, double eps, CounterRng& rng,
                        double margin = 0.5);

// max over a (2*t_grid+1)-point grid of [-R,R] of d(u_{phi_g(t)} g u_{-t}, e),
// with phi_g(t) = t e^{theta_a} / (e^{-theta_a} - t theta_ubar e^{theta_a}).
// Requires kak_member(g,R,delta) and delta <= delta12; the stay-close bound
// asserts the returned value <= 10*delta.  A matching-time singularity inside
// the window (impossible for true members) throws std::runtime_error.
double kak_stay_close(const GroupElement& g, double R, double delta, int t_grid,
                      const ChainBasis& cb);

// Interval-matching upgrade: given d(u_{phi_g(t)} g u_{-t}, e) < eps on [a,b]
// with [a,b] inside [0, eps/|theta_ubar|], each time slice lands back in a
// Kakutani-Bowen ball: kak_member(u_{phi_g(t)} g u_{-t}, b-a, C12*eps) for grid
// t.  Returns the conjunction; precondition failures throw std::domain_error.
bool match_to_kak(const GroupElement& g, double a, double b, double eps,
                  const ChainBasis& cb, int t_grid = 33);

// Coordinates of a_{-p} g a_p for p = (1/2) log R.  Requires kak_member(g,R,delta)
// (else std::invalid_argument).  Conclusion bounds, asserted by callers: h and z
// parts within 4*delta, tr part within delta*dim(alg)/sqrt(R).
KakCoordinates rescale_by_diag(const GroupElement& g, double R, double delta,
                               const ChainBasis& cb);

// z1 := u_r g (g^h)^{-1} u_{-r} (g^z)^{-1}, so that u_r g = z1 g^z u_r g^h holds
// exactly by construction.  Preconditions (std::invalid_argument): g^h, g^z in
// delta-balls, g^tr in a (delta/R)-ball, |r| <= R^{w14}.  Returns (z1, dist(z1,e));
// the commutation estimate asserts certificate < delta/R^{0.9}.
std::pair<GroupElement, double> commute_past_unipotent(const KakCoordinates& kc, double r,
                                                       double R, double delta);

// Quotient-level membership: enumerate lattice lifts gamma with
// x = (lift_x gamma lift_y^{-1}) . y near identity, test each, and flag
// ambiguity when more than one lift qualifies.
struct QuotientKakResult {
  bool member = false;
  bool ambiguous = false;
  int n_qualifying = 0;
};
QuotientKakResult kak_member_quotient(const QuotientPoint& x, const QuotientPoint& y,
                                      double R, double eps, const ChainBasis& cb);

}  // namespace ulab
