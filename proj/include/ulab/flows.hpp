#pragma once

#include <functional>

#include "ulab/fixtures.hpp"
#include "ulab/lattice.hpp"

namespace ulab {

// Quotient-space flow maps.  Each applies the one-parameter subgroup on the
// left and re-reduces the lift; the diagonal flow splits long times into unit
// steps with reduction in between so intermediate lifts stay representable.
QuotientPoint flow_u(const QuotientPoint& x, double t);
QuotientPoint flow_a(const QuotientPoint& x, double p);
QuotientPoint flow_ubar(const QuotientPoint& x, double s);

// Lattice-invariant positive smooth function on the quotient (theta sum
// sum_{v in Z^n} exp(-pi ||x v||^2), product over blocks, minus the v = 0 term).
// Invariant under right lattice translations of the lift, smooth along orbits.
double invariant_function(const GroupElement& x);
// Derivative of t -> invariant_function(u_t x) at t = 0 (analytic, not FD).
double invariant_function_flow_derivative(const GroupElement& x);

// Smooth positive time change of the horocycle flow with unit mean speed.
//   Coboundary: alpha = 1 + d/dt beta(u_t x)|_0 with beta = amplitude * theta
//     sum; its transfer function is known exactly.
//   Generic: alpha = 1 + amplitude * (theta sum - center) / scale, a function
//     with no smooth transfer along the flow.
struct TimeChange {
  enum class Kind { Coboundary, Generic };
  Kind kind = Kind::Coboundary;
  GroupTag tag = GroupTag::SL2;
  double amplitude = 0.1;
  double center = 0.0;  // generic kind: subtracted before scaling
  double scale = 1.0;

  double alpha(const QuotientPoint& x) const;  // speed factor, positive
  double beta(const QuotientPoint& x) const;   // transfer function (coboundary kind)
};

// amplitude is rescaled so that sup |alpha - 1| is about target_dev (sampled
// deterministically); the generic kind is centered to near-zero mean.
TimeChange make_time_change(GroupTag tag, TimeChange::Kind kind, double target_dev);

// integral_0^T (alpha(u_s x) - 1) ds, adaptive Simpson to abs_tol.
double orbit_integral(const TimeChange& tc, const QuotientPoint& x, double T,
                      double abs_tol = 1e-10);

// Time-changed horocycle flow: tau'(t) = alpha(u_tau x), tau(0) = 0; returns
// tau(T).  The moved point is flow_u(x, tau).
double time_changed_time(const TimeChange& tc, const QuotientPoint& x, double T,
                         double step = 0.02);

}  // namespace ulab
