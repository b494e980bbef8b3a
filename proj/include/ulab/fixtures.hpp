#pragma once

#include <string>
#include <vector>

#include "ulab/group.hpp"
#include "ulab/linalg.hpp"

namespace ulab {

// Distinguished horocycle triple: [a,u] = 2u, [a,ubar] = -2ubar, [u,ubar] = a.
struct Sl2Triplet {
  AlgebraElement u, a, ubar;
};

// One of the built-in homogeneous-space setups: ambient group, an ordered
// orthogonal basis of its Lie algebra, the flow triple, and lattice generators.
struct Fixture {
  GroupTag tag;
  std::string name;
  int dim;      // ambient matrix size
  int alg_dim;  // Lie algebra dimension

  std::vector<AlgebraElement> basis;
  std::vector<std::string> basis_names;
  Sl2Triplet triplet;

  std::vector<Mat> lattice_gens;  // integer generators of the lattice

  // Closed-form one-parameter subgroups for the triple.
  GroupElement u_flow(double t) const;
  GroupElement a_flow(double p) const;
  GroupElement ubar_flow(double s) const;

  // Coordinates of x in `basis` (orthogonal w.r.t. the trace inner product).
  Vec coords(const Mat& x) const;
  Mat from_coords(const Vec& c) const;
};

const Fixture& fixture(GroupTag tag);
const Fixture& fixture(const std::string& name);
std::vector<std::string> fixture_names();

}  // namespace ulab
