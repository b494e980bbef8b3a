#pragma once

#include "ulab/constants.hpp"
#include "ulab/linalg.hpp"

namespace ulab {

int tag_dim(GroupTag tag);      // ambient matrix size (2, 4, 3)
int tag_alg_dim(GroupTag tag);  // Lie algebra dimension (3, 6, 8)

GroupElement gid(GroupTag tag);
GroupElement gmul(const GroupElement& a, const GroupElement& b);
GroupElement ginv(const GroupElement& a);

// Matrix exponential (entire; scaling-and-squaring).
Mat mat_exp(const Mat& x);

// Principal matrix logarithm.  Near-identity inputs use a direct series; other
// inputs go through a general solver whose output is round-trip verified.
// Throws chart_error when no principal real logarithm can be certified.
Mat mat_log(const Mat& q);

GroupElement exp_alg(const AlgebraElement& x);

// Inverse chart map; throws chart_error if g lies outside the log chart
// (||log g|| > chart_radius) or has no certified principal logarithm.
AlgebraElement log_grp(const GroupElement& g);

// Metric on the group.  RightInvariantChart: ||log(g h^{-1})|| while that stays
// inside the chart; outside it, the symmetric coarse surrogate
// max(chart_radius, (||q - I|| + ||q^{-1} - I||)/2) with q = g h^{-1}.
// HilbertSchmidt: plain ||g - h||_F.
double dist(const GroupElement& g, const GroupElement& h, const Metric& m = Metric{});
double dist_id(const GroupElement& g, const Metric& m = Metric{});

// Calibrated norm bound: dist(g, e) < r implies ||g||_F < norm_metric_bound(r).
double norm_metric_bound(double r);

// Actual defect ||log(exp x exp y) - (x + y)|| and its calibrated quadratic bound.
double bch_defect(const Mat& x, const Mat& y);
double bch_bound(double norm_x, double norm_y);

}  // namespace ulab
