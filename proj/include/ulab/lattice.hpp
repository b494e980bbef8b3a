#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulab/group.hpp"
#include "ulab/linalg.hpp"

namespace ulab {

// Integer lattice of the ambient group, presented by generators.
// `center_in_lattice` records whether the ambient group's center lies in the
// lattice (true for the SL2 factors, where -I is a lattice element); translate
// identification is then unique only modulo the center, and comparisons work
// on center-normalized representatives.
struct LatticeSpec {
  GroupTag tag;
  std::string name;
  std::vector<Mat> gens;
  bool center_in_lattice = false;
};

const LatticeSpec& lattice(GroupTag tag);

// Integer entries (within tol), unit determinant, and the block structure of
// the ambient group.
bool is_lattice_element(const LatticeSpec& spec, const Mat& m, double tol = 1e-9);

// All lattice elements with Frobenius norm <= radius, sorted by (norm, entries).
// Generator-closure search with margin; cross-checked against brute force in tests.
std::vector<Mat> lattice_ball(const LatticeSpec& spec, double radius);

// Lattice elements within `window` (Frobenius) of an arbitrary matrix; the
// nearest-rounding candidate plus ambiguous-entry perturbations.
std::vector<Mat> nearby_lattice(const LatticeSpec& spec, const Mat& target, double window);

// Every lattice element g with ||a*g - b||_F <= window, enumerated exactly:
// per-column integer boxes around a^{-1} b sized by the window, assembled per
// determinant block.  Exhaustive within the window (unlike nearby_lattice's
// rounding heuristic); meant for small windows around well-conditioned a,
// throws std::runtime_error when the implied search box is unreasonably large.
// Output is sorted by entries for determinism.
std::vector<Mat> lattice_near_product(const LatticeSpec& spec, const Mat& a, const Mat& b,
                                      double window);

// Representative of g modulo the lattice's central elements: the sign of each
// determinant block is flipped so its first nonzero entry (column-major scan)
// is positive.  Identity map when the center is not in the lattice.
GroupElement center_canonical(const LatticeSpec& spec, const GroupElement& g);

// Lattice-translate identification was ambiguous: two candidates (distinct
// modulo the center when the center lies in the lattice) fell inside the
// uniqueness window, so the requested scale exceeds the local injectivity
// radius.
struct injectivity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The unique lattice element gamma with dist(u_t x_lift, u_s y_lift gamma) < eps,
// or nullopt when no translate is that close.  Uniqueness is certified by an
// exhaustive candidate scan at twice the scale: a second candidate within
// 2 eps (distinct modulo the center) raises injectivity_error.  Both flowed
// lifts are re-reduced internally and the bookkeeping is closed in integer
// arithmetic, so the identification stays exact arbitrarily far along the
// orbits.  Requires the right-invariant chart metric (the reduction trick
// needs right invariance) and 0 < 2 eps <= chart_radius; the caller arranges
// base closeness of the lifts per the relation being tracked.
std::optional<GroupElement> track_gamma(const GroupElement& x_lift, const GroupElement& y_lift,
                                        double t, double s,
                                        const std::function<GroupElement(double)>& u_flow,
                                        double eps, const Metric& m = Metric{});

// Point of the quotient space: a distinguished (reduced) lift of g * lattice.
struct QuotientPoint {
  GroupElement lift;
};

// Right-multiply by a lattice element to shrink the lift: exact two-dimensional
// lattice-basis reduction per block, improvement search in the rank-two case.
QuotientPoint reduce(const GroupElement& g);

// min over rounding-derived lattice candidates of dist(x_lift, y_lift * gamma).
// Never underestimates the true quotient distance, and equals it whenever
// quotient_dist_certified holds for the returned value (always the case in the
// small-distance regime the experiments compare against).
double quotient_dist(const QuotientPoint& x, const QuotientPoint& y,
                     const Metric& m = Metric{});
bool quotient_dist_certified(const QuotientPoint& x, const QuotientPoint& y, double d,
                             const Metric& m = Metric{});

// Largest radius on the grid such that no enumerated gamma != e brings the
// conjugated displacement x.lift gamma x.lift^{-1} within distance 2 r of the
// identity; 0.0 when even the smallest grid radius fails.  A certified lower
// bound on the injectivity radius at x: the candidate enumeration is
// exhaustive for every scale on the grid.  Grid radii must be positive and at
// most chart_radius / 2 (beyond the chart the distance floor makes the
// certificate vacuous); throws std::invalid_argument otherwise.
double injectivity_probe(const QuotientPoint& x, const std::vector<double>& radius_grid);

}  // namespace ulab
