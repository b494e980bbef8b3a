#pragma once

#include <string>
#include <vector>

#include "ulab/fixtures.hpp"
#include "ulab/linalg.hpp"

namespace ulab {

// One irreducible piece of the algebra complement under the flow triple:
// vectors x[0..q] with [x^k, u] = x^{k-1}, [x^k, a] = (2k-q) x^k, and
// [x^k, ubar] = (k+1)(q-k) x^{k+1} (indices outside the range read as 0).
struct Chain {
  int q = 0;                // top weight; the chain has q+1 vectors
  std::vector<Mat> x;       // x[i] has diagonal-conjugation weight q - 2i
  bool central = false;     // q == 0: commutes with the whole triple
};

// Adapted basis of the Lie algebra: the flow triple plus the chain complement.
struct ChainBasis {
  GroupTag tag = GroupTag::SL2;
  Sl2Triplet triplet;
  std::vector<Chain> chains;      // ordered by descending q, then discovery
  bool loosely_kronecker = true;  // no chains at all

  std::vector<Mat> full_basis;       // [u, a, ubar, x(0,0)..x(q0,0), x(0,1)..]
  std::vector<std::string> names;    // "u","a","ubar","x(i,j)"
  Mat coord_pinv;                    // coords = coord_pinv * vec(y)

  int n_coords() const { return static_cast<int>(full_basis.size()); }
  int chain_offset(int j) const;     // coordinate index of x(0,j)
  Vec coords(const Mat& y) const;
  Mat from_coords(const Vec& c) const;
};

ChainBasis build_chain_basis(const Fixture& f);
const ChainBasis& chain_basis(GroupTag tag);  // cached per fixture

// x^k = (q-k)!/(k! q!) * ad_ubar^k(top); exposed for oracle tests.
Chain build_chain_from_top(const Mat& top, int q, const Sl2Triplet& t);

double lowering_coeff(int q, int k);  // (k+1)(q-k)

// Max residual over the triple relations and every chain relation.
double chain_relation_residual(const ChainBasis& cb);

// Diagonal-conjugation weight of each coordinate: conjugating the argument of
// coords() by a_p on the right (a_{-p} y a_p) multiplies coordinate i by
// exp(weight[i] * p).  Weight is 2i - q_j on x(i,j), -2 on u, 0 on a, +2 on ubar.
Vec coord_conj_weights(const ChainBasis& cb);

// Expanding / neutral / contracting splitting under a_p-conjugation, plus the
// distinguished expanding set (u together with the positive-weight chain tops).
struct GradedSpaces {
  std::vector<Mat> plus, zero, minus;
  std::vector<Mat> v_plus;
};
GradedSpaces graded_spaces(const ChainBasis& cb);

}  // namespace ulab
